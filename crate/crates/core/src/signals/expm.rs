use nalgebra::DMatrix;

use crate::error::Result;
use crate::linalg::{check_finite, check_square};

/// Matrix exponential by scaling and squaring with Pade approximants.
pub fn matrix_exponential(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(m, "matrix exponential argument")?;
    check_finite(m, "matrix exponential argument")?;
    if m.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    Ok(m.clone().exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn taylor(m: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
        let n = m.nrows();
        let mut acc = DMatrix::identity(n, n);
        let mut term = DMatrix::identity(n, n);
        for k in 1..terms {
            term = &term * m / k as f64;
            acc += &term;
        }
        acc
    }

    #[test]
    fn zero_gives_identity() {
        let e = matrix_exponential(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e, DMatrix::identity(3, 3));
    }

    #[test]
    fn diagonal_closed_form() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
        let e = matrix_exponential(&m).unwrap();
        let e1 = std::f64::consts::E;
        assert!((e[(0, 0)] - e1).abs() <= 1e-12 * e1);
        assert!((e[(1, 1)] - 1.0 / e1).abs() <= 1e-12);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn small_random_matches_taylor() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut m = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let norm = m.norm();
            m *= 0.1 / norm;
            let e = matrix_exponential(&m).unwrap();
            let reference = taylor(&m, 20);
            assert!((&e - &reference).amax() <= 1e-12 * reference.amax());
        }
    }

    #[test]
    fn non_square_rejected() {
        assert!(matrix_exponential(&DMatrix::zeros(2, 3)).is_err());
    }
}
