use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::operators::{DenseMatrix, LinearOp};

/// A dense Gaussian sensing matrix `Ψ ∈ R^{m×n}` with i.i.d. `N(0, 1/m)`
/// entries, drawn row by row from a ChaCha8 stream seeded with `seed`.
#[derive(Debug, Clone)]
pub struct SensingOp {
    seed: u64,
    matrix: DenseMatrix,
}

pub fn make_sensing(seed: u64, m: usize, n: usize) -> Result<SensingOp> {
    if m == 0 || m > n {
        return Err(Error::Config(format!(
            "sensing needs 0 < m <= n, got m = {m}, n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (m as f64).sqrt();
    let data = (0..m * n)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(SensingOp {
        seed,
        matrix: DenseMatrix::from_row_major(m, n, data)?,
    })
}

impl SensingOp {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn m(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }
}

impl LinearOp for SensingOp {
    fn in_dim(&self) -> usize {
        self.matrix.cols()
    }
    fn out_dim(&self) -> usize {
        self.matrix.rows()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.matrix.apply_into(x, out)
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.matrix.adjoint_into(y, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_matrix() {
        let a = make_sensing(7, 4, 16).unwrap();
        let b = make_sensing(7, 4, 16).unwrap();
        let x: Vec<f64> = (0..16).map(|i| i as f64 - 7.5).collect();
        let (ya, yb) = (a.forward(&x).unwrap(), b.forward(&x).unwrap());
        assert!(ya.iter().zip(&yb).all(|(p, q)| p.to_bits() == q.to_bits()));
        assert_ne!(make_sensing(8, 4, 16).unwrap().matrix(), a.matrix());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(make_sensing(1, 0, 4).is_err());
        assert!(make_sensing(1, 5, 4).is_err());
        assert!(make_sensing(1, 4, 4).is_ok());
    }

    #[test]
    fn entry_mean_within_three_standard_errors() {
        let (m, n) = (64usize, 256usize);
        let s = make_sensing(7, m, n).unwrap();
        let mean = s.matrix().as_slice().iter().sum::<f64>() / (m * n) as f64;
        let bound = 3.0 / ((m * n * m) as f64).sqrt();
        assert!(mean.abs() <= bound, "mean {mean} exceeds {bound}");
        let var = s.matrix().as_slice().iter().map(|v| v * v).sum::<f64>() / (m * n) as f64;
        assert!((var * m as f64 - 1.0).abs() < 0.02, "variance {var}");
    }
}
