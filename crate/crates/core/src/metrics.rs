//! Reconstruction quality in decibels.
//!
//! `snr_db(r, e) = 10 log10(‖r̄‖² / ‖r̄ − ē‖²)` where bars denote mean
//! removal. Removing the mean makes the score blind to the additive constant
//! that gradient integration cannot recover. A perfect estimate scores
//! `+∞`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid::{mean, GradientField, SurfaceGrid};
use crate::operators::make_diff_ops;
use crate::poisson::{align_mean, integrate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    #[serde(with = "crate::float_repr")]
    pub snr_surface_db: f64,
    #[serde(with = "crate::float_repr")]
    pub snr_gradient_db: f64,
    pub rmse: f64,
}

fn centered(v: &[f64]) -> Vec<f64> {
    // a computed mean of equal entries can be off by an ulp; keep constants exact
    if v.iter().all(|x| *x == v[0]) {
        return vec![0.0; v.len()];
    }
    let mu = mean(v);
    v.iter().map(|x| x - mu).collect()
}

pub fn snr_db(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    check_len("snr estimate", reference.len(), estimate.len())?;
    let r = centered(reference);
    let e = centered(estimate);
    let signal: f64 = r.iter().map(|x| x * x).sum();
    if signal == 0.0 {
        return Err(Error::UndefinedMetric(
            "reference has zero energy after mean removal".into(),
        ));
    }
    let err: f64 = r.iter().zip(&e).map(|(a, b)| (a - b) * (a - b)).sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / err).log10())
}

/// Mean of the per-axis gradient SNRs, skipping an axis along which the
/// reference has no variation. Errors only if both axes are degenerate.
fn gradient_snr(reference: &GradientField, estimate: &GradientField) -> Result<f64> {
    let sx = snr_db(reference.zx(), estimate.zx());
    let sy = snr_db(reference.zy(), estimate.zy());
    match (sx, sy) {
        (Ok(a), Ok(b)) => Ok(0.5 * (a + b)),
        (Ok(a), Err(_)) | (Err(_), Ok(a)) => Ok(a),
        (Err(e), Err(_)) => Err(e),
    }
}

/// Integrates `recon_gradients`, aligns its mean to `reference`, and scores
/// both the surface and the gradients.
pub fn score(reference: &SurfaceGrid, recon_gradients: &GradientField) -> Result<Score> {
    if reference.dims() != recon_gradients.dims() {
        return Err(Error::Contract(format!(
            "reference is {}, gradients are {}",
            reference.dims(),
            recon_gradients.dims()
        )));
    }
    let surface = align_mean(&integrate(recon_gradients)?, reference)?;
    let snr_surface_db = snr_db(reference.heights(), surface.heights())?;
    let true_grad = make_diff_ops(reference.dims()).gradient(reference)?;
    let snr_gradient_db = gradient_snr(&true_grad, recon_gradients)?;
    let n = reference.heights().len() as f64;
    let rmse = (reference
        .heights()
        .iter()
        .zip(surface.heights())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(Score {
        snr_surface_db,
        snr_gradient_db,
        rmse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDims;

    #[test]
    fn perfect_and_offset_estimates_are_infinite() {
        let r = [1.0, 2.0, -4.0, 0.5];
        assert_eq!(snr_db(&r, &r).unwrap(), f64::INFINITY);
        let shifted: Vec<f64> = r.iter().map(|v| v + 3.0).collect();
        assert_eq!(snr_db(&r, &shifted).unwrap(), f64::INFINITY);
    }

    #[test]
    fn zero_estimate_is_zero_db() {
        assert_eq!(snr_db(&[1.0, -1.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn flat_reference_is_undefined() {
        assert!(matches!(
            snr_db(&[2.0, 2.0], &[0.0, 1.0]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(snr_db(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn zero_gradients_score_zero_db() {
        let d = GridDims::square(8).unwrap();
        let z = (0..64).map(|i| ((i * 13 % 17) as f64).sqrt()).collect();
        let s = SurfaceGrid::new(d, z, "s").unwrap();
        let sc = score(&s, &GradientField::zeros(d)).unwrap();
        assert_eq!(sc.snr_surface_db, 0.0);
    }
}
