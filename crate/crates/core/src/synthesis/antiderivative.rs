use crate::signals::Signal;

/// First and second antiderivatives of a signal, `F1(t) = int_0^t f` and
/// `F2(t) = int_0^t F1`, exact and piecewise polynomial on the signal grid.
#[derive(Debug, Clone)]
pub struct Antiderivative {
    signal: Signal,
    f1: Vec<f64>,
    f2: Vec<f64>,
}

impl Antiderivative {
    pub fn new(signal: &Signal) -> Self {
        let dim = signal.dim();
        let grid = signal.grid();
        let h = grid.step();
        let nodes = grid.nodes_len();
        let mut f1 = vec![0.0; nodes * dim];
        let mut f2 = vec![0.0; nodes * dim];
        for seg in 0..grid.segments() {
            for k in 0..dim {
                let (a, b) = signal.segment_coeffs(seg, k);
                let p1 = f1[seg * dim + k];
                let p2 = f2[seg * dim + k];
                f1[(seg + 1) * dim + k] = p1 + a * h + b * h * h / 2.0;
                f2[(seg + 1) * dim + k] = p2 + p1 * h + a * h * h / 2.0 + b * h * h * h / 6.0;
            }
        }
        Antiderivative {
            signal: signal.clone(),
            f1,
            f2,
        }
    }

    pub fn signal(&self) -> &Signal {
        &self.signal
    }

    pub fn dim(&self) -> usize {
        self.signal.dim()
    }

    pub fn tau(&self) -> f64 {
        self.signal.tau()
    }

    /// `F1(tau)`.
    pub fn total(&self) -> &[f64] {
        let d = self.dim();
        let last = self.signal.grid().segments();
        &self.f1[last * d..(last + 1) * d]
    }

    fn total2(&self, k: usize) -> f64 {
        let last = self.signal.grid().segments();
        self.f2[last * self.dim() + k]
    }

    /// `F1(t)` using the polynomial piece of segment `seg`.
    #[inline]
    pub fn f1_in_segment(&self, seg: usize, t: f64, out: &mut [f64]) {
        let d = self.dim();
        let s = t - self.signal.grid().node(seg);
        for k in 0..d {
            let (a, b) = self.signal.segment_coeffs(seg, k);
            out[k] = self.f1[seg * d + k] + a * s + b * s * s / 2.0;
        }
    }

    /// `F2(t)` using the polynomial piece of segment `seg`.
    #[inline]
    pub fn f2_in_segment(&self, seg: usize, t: f64, out: &mut [f64]) {
        let d = self.dim();
        let s = t - self.signal.grid().node(seg);
        for k in 0..d {
            let (a, b) = self.signal.segment_coeffs(seg, k);
            out[k] = self.f2[seg * d + k]
                + self.f1[seg * d + k] * s
                + a * s * s / 2.0
                + b * s * s * s / 6.0;
        }
    }

    /// `H(t) = int_0^tau G(t, s) f(s) ds`, the solution of `H'' = -f` with
    /// `H(0) = H(tau) = 0`. Column `k` of `T*` evaluated at `t`.
    #[inline]
    pub fn green_in_segment(&self, seg: usize, t: f64, out: &mut [f64]) {
        self.f2_in_segment(seg, t, out);
        let r = t / self.tau();
        for (k, o) in out.iter_mut().enumerate() {
            *o = -*o + r * self.total2(k);
        }
    }

    /// `D(t) = -F1(t) + (t / tau) F1(tau)`. Column `k` of `T_d*` at `t`.
    #[inline]
    pub fn diff_adjoint_in_segment(&self, seg: usize, t: f64, out: &mut [f64]) {
        self.f1_in_segment(seg, t, out);
        let r = t / self.tau();
        let d = self.dim();
        let last = self.signal.grid().segments();
        for (k, o) in out.iter_mut().enumerate() {
            *o = -*o + r * self.f1[last * d + k];
        }
    }

    pub fn segment_of(&self, t: f64) -> usize {
        self.signal.grid().segment_of(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::UniformGrid;

    #[test]
    fn constant_signal_green_function() {
        let g = UniformGrid::new(2.0, 3).unwrap();
        let f = Signal::sample_nodes(g, 1, |_| vec![1.0]).unwrap();
        let ad = Antiderivative::new(&f);
        let mut out = [0.0];
        for &t in &[0.0, 0.4, 1.0, 1.9, 2.0] {
            ad.green_in_segment(ad.segment_of(t), t, &mut out);
            let exact = t * (2.0 - t) / 2.0;
            assert!((out[0] - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn ramp_integrals() {
        let g = UniformGrid::new(1.0, 4).unwrap();
        let f = Signal::sample_nodes(g, 1, |t| vec![t]).unwrap();
        let ad = Antiderivative::new(&f);
        assert!((ad.total()[0] - 0.5).abs() < 1e-15);
        let mut out = [0.0];
        ad.f2_in_segment(2, 0.6, &mut out);
        assert!((out[0] - 0.6f64.powi(3) / 6.0).abs() < 1e-15);
    }
}
