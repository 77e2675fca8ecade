use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform partition of `[0, tau]` into `segments` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    tau: f64,
    segments: usize,
}

impl UniformGrid {
    pub fn new(tau: f64, segments: usize) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidGrid(format!("tau must be finite and > 0, got {tau}")));
        }
        if segments == 0 {
            return Err(Error::InvalidGrid("segment count must be >= 1".into()));
        }
        Ok(UniformGrid { tau, segments })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn nodes_len(&self) -> usize {
        self.segments + 1
    }

    pub fn step(&self) -> f64 {
        self.tau / self.segments as f64
    }

    /// Node time `i * tau / M`; the last node is exactly `tau`.
    pub fn node(&self, i: usize) -> f64 {
        if i == self.segments {
            self.tau
        } else {
            self.tau * i as f64 / self.segments as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.segments).map(move |i| self.node(i))
    }

    /// Index of the segment containing `t`, clamped to `[0, M-1]`.
    pub fn segment_of(&self, t: f64) -> usize {
        let k = (t / self.step()).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.segments - 1)
        }
    }

    pub fn refine(&self, factor: usize) -> Result<Self> {
        UniformGrid::new(self.tau, self.segments * factor)
    }

    pub fn same_tau(&self, other: &UniformGrid) -> bool {
        (self.tau - other.tau).abs() <= 1e-12 * self.tau.max(other.tau)
    }
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Sorted union of the nodes of several grids over a common `tau`.
///
/// Nodes are merged on exact integer keys (multiples of `tau / lcm(M_k)`), so
/// coincident nodes of different grids are never duplicated.
pub fn merged_breakpoints(grids: &[UniformGrid]) -> Result<Vec<f64>> {
    let first = grids
        .first()
        .ok_or_else(|| Error::InvalidGrid("no grids to merge".into()))?;
    if let Some(g) = grids.iter().find(|g| !first.same_tau(g)) {
        return Err(Error::DimensionMismatch(format!(
            "grids cover different horizons: tau = {} vs {}",
            first.tau,
            g.tau
        )));
    }
    let lcm = grids.iter().fold(1u128, |acc, g| {
        let m = g.segments as u128;
        acc / gcd(acc, m) * m
    });
    let mut keys: Vec<u128> = grids
        .iter()
        .flat_map(|g| {
            let stride = lcm / g.segments as u128;
            (0..=g.segments as u128).map(move |i| i * stride)
        })
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let tau = first.tau;
    Ok(keys
        .into_iter()
        .map(|k| {
            if k == lcm {
                tau
            } else {
                tau * (k as f64) / (lcm as f64)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(UniformGrid::new(0.0, 4).is_err());
        assert!(UniformGrid::new(-1.0, 4).is_err());
        assert!(UniformGrid::new(1.0, 0).is_err());
        assert!(UniformGrid::new(f64::NAN, 4).is_err());
    }

    #[test]
    fn nodes_are_equally_spaced() {
        let g = UniformGrid::new(2.0, 4).unwrap();
        let nodes: Vec<f64> = g.nodes().collect();
        assert_eq!(nodes, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(g.segment_of(2.0), 3);
        assert_eq!(g.segment_of(0.74), 1);
    }

    #[test]
    fn merge_of_nested_and_coprime_grids() {
        let a = UniformGrid::new(1.0, 2).unwrap();
        let b = UniformGrid::new(1.0, 3).unwrap();
        let m = merged_breakpoints(&[a, b]).unwrap();
        assert_eq!(m.len(), 5);
        assert!((m[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((m[2] - 0.5).abs() < 1e-15);

        let c = UniformGrid::new(1.0, 4).unwrap();
        assert_eq!(merged_breakpoints(&[a, c]).unwrap().len(), 5);
    }
}
