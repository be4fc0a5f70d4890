mod common;

use common::*;
use dcs_core::grid::{GradientField, SurfaceGrid};
use dcs_core::metrics::{score, snr_db};
use dcs_core::operators::make_diff_ops;
use dcs_core::poisson::{align_mean, integrate};
use dcs_core::surfaces::{gen_surface, SurfaceKind};
use nalgebra::DVector;
use proptest::prelude::*;

/// Independent SNR: mean removal and energies through nalgebra.
fn oracle_snr(r: &[f64], e: &[f64]) -> f64 {
    let r = DVector::from_column_slice(r);
    let e = DVector::from_column_slice(e);
    let rc = r.add_scalar(-r.mean());
    let ec = e.add_scalar(-e.mean());
    10.0 * (rc.norm_squared() / (&rc - &ec).norm_squared()).log10()
}

#[test]
fn exact_gradients_score_above_120_db() {
    for kind in SurfaceKind::ALL {
        let z = gen_surface(kind, dims(32, 32));
        let g = make_diff_ops(z.dims()).gradient(&z).unwrap();
        let s = score(&z, &g).unwrap();
        assert!(s.snr_surface_db >= 120.0, "{kind:?}: {}", s.snr_surface_db);
        assert_eq!(s.snr_gradient_db, f64::INFINITY);
        assert!(s.rmse < 1e-5);
    }
}

#[test]
fn zero_gradients_score_exactly_zero() {
    for kind in SurfaceKind::ALL {
        let z = gen_surface(kind, dims(16, 16));
        let s = score(&z, &GradientField::zeros(z.dims())).unwrap();
        assert_eq!(s.snr_surface_db, 0.0);
        assert_eq!(s.snr_gradient_db, 0.0);
    }
}

#[test]
fn noisy_gradient_score_matches_dense_recomputation() {
    let d = dims(8, 8);
    let z = gen_surface(SurfaceKind::RampPeak, d);
    let g0 = make_diff_ops(d).gradient(&z).unwrap();
    let mut r = rng(23);
    let noisy = |v: &[f64], r: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        let e = gaussian_vec(r, v.len());
        v.iter().zip(e).map(|(a, b)| a + 0.1 * b).collect()
    };
    let g = GradientField::new(d, noisy(g0.zx(), &mut r), noisy(g0.zy(), &mut r)).unwrap();
    let s = score(&z, &g).unwrap();

    let surf = align_mean(&integrate(&g).unwrap(), &z).unwrap();
    assert!((s.snr_surface_db - oracle_snr(z.heights(), surf.heights())).abs() <= 1e-9);
    let grad = 0.5 * (oracle_snr(g0.zx(), g.zx()) + oracle_snr(g0.zy(), g.zy()));
    assert!((s.snr_gradient_db - grad).abs() <= 1e-9);
    let rmse = (z.heights().iter().zip(surf.heights()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 64.0).sqrt();
    assert!((s.rmse - rmse).abs() <= 1e-12);
}

#[test]
fn twenty_db_per_decade() {
    let mut g = rng(31);
    let r = gaussian_vec(&mut g, 1000);
    let w = {
        let w = gaussian_vec(&mut g, 1000);
        let mu = w.iter().sum::<f64>() / 1000.0;
        w.into_iter().map(|v| v - mu).collect::<Vec<_>>()
    };
    let at = |eps: f64| {
        let e: Vec<f64> = r.iter().zip(&w).map(|(a, b)| a + eps * b).collect();
        snr_db(&r, &e).unwrap()
    };
    for eps in [1.0, 0.1, 1e-2, 1e-3] {
        let step = at(eps / 10.0) - at(eps);
        assert!((step - 20.0).abs() <= 0.01, "eps {eps}: {step}");
    }
}

#[test]
fn one_axis_without_variation_is_skipped() {
    // heights vary along x only, so the y-derivative is identically zero
    let d = dims(8, 8);
    let z = SurfaceGrid::new(d, (0..64).map(|i| ((i % 8) as f64).powi(2)).collect(), "ramp").unwrap();
    let g = make_diff_ops(d).gradient(&z).unwrap();
    let half: Vec<f64> = g.zx().iter().map(|v| 0.5 * v).collect();
    let est = GradientField::new(d, half.clone(), vec![0.0; 64]).unwrap();
    let s = score(&z, &est).unwrap();
    assert!((s.snr_gradient_db - oracle_snr(g.zx(), &half)).abs() < 1e-12);
}

proptest! {
    #[test]
    fn offsets_do_not_change_the_score(
        seed in 0u64..1000,
        k in -1e3f64..1e3,
    ) {
        let mut g = rng(seed);
        let r = gaussian_vec(&mut g, 64);
        let e: Vec<f64> = r.iter().zip(gaussian_vec(&mut g, 64)).map(|(a, b)| a + 0.3 * b).collect();
        let shifted: Vec<f64> = e.iter().map(|v| v + k).collect();
        let a = snr_db(&r, &e).unwrap();
        let b = snr_db(&r, &shifted).unwrap();
        prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
    }
}
