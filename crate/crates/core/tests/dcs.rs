mod common;

use std::sync::Arc;

use common::*;
use dcs_core::dcs::*;
use dcs_core::grid::GradientField;
use dcs_core::noise::NoiseSpec;
use dcs_core::operators::*;
use dcs_core::sparse_solver::fista_solve;
use dcs_core::surfaces::{gen_surface, SurfaceKind};

fn system(kind: SurfaceKind, side: usize, m: usize, noise: NoiseSpec) -> StackedSystem {
    let z = gen_surface(kind, dims(side, side));
    assemble_system(&z, 101, 202, m, &noise, 303).unwrap()
}

#[test]
fn noiseless_full_rank_recovery() {
    let sys = system(SurfaceKind::Sphere, 8, 64, NoiseSpec::none());
    let params = DcsParams::default().with_hyper(1e-6, 2.0);
    let (c, state, _) = dcs_solve(&sys, &params).unwrap();
    let c_true = sys.true_coefficients().unwrap();
    let rel = dist(c.as_slice(), &c_true) / norm(&c_true);
    assert!(rel <= 1e-3, "coefficient error {rel:e}");
    let bc = sys.b_op.forward(c.as_slice()).unwrap();
    assert!(norm(&bc) <= 1e-4 * norm(c.as_slice()));
    assert_eq!(state.constraint_norm, norm(&bc));

    let g = recover_gradients(&c, &sys).unwrap();
    let t = &sys.true_gradients;
    assert!(dist(g.zx(), t.zx()) <= 1e-3 * norm(t.zx()));
    assert!(dist(g.zy(), t.zy()) <= 1e-3 * norm(t.zy()));
}

#[test]
fn zero_constraint_reduces_to_plain_fista() {
    for (lambda, noise) in [(1e-4, NoiseSpec::none()), (1e-2, NoiseSpec::gaussian(0.05).relative())] {
        let base = system(SurfaceKind::PeakValley, 8, 32, noise);
        let n = base.n();
        let sys = base.with_constraint(Arc::new(ZeroOp { in_dim: 2 * n, out_dim: n })).unwrap();
        let params = DcsParams::default().with_hyper(lambda, 2.0);
        let (c, state, _) = dcs_solve(&sys, &params).unwrap();
        let (plain, _) = fista_solve(sys.phi.as_ref(), &sys.y, &params.inner.with_lambda(lambda), None).unwrap();
        assert!(dist(c.as_slice(), &plain) <= 1e-10 * (1.0 + norm(&plain)));
        assert!(state.p.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn zero_data_gives_zero_solution_in_one_step() {
    let mut sys = system(SurfaceKind::RampPeak, 8, 32, NoiseSpec::none());
    sys.y.iter_mut().for_each(|v| *v = 0.0);
    let params = DcsParams::default().with_hyper(1e-3, 1.0);
    let mut al = AugmentedLagrangian::new(sys.phi.clone(), sys.b_op.clone(), &sys.y, &params).unwrap();
    al.step().unwrap();
    assert!(al.state().c.iter().all(|v| *v == 0.0));
    assert!(al.state().p.iter().all(|v| *v == 0.0));
    assert_eq!(al.state().t, 1);
}

#[test]
fn multiplier_update_is_exactly_the_constraint_image() {
    let sys = system(SurfaceKind::PeakValley, 8, 32, NoiseSpec::gaussian(0.05).relative());
    let params = DcsParams::default().with_hyper(1e-3, 1.0);
    let mut al = AugmentedLagrangian::new(sys.phi.clone(), sys.b_op.clone(), &sys.y, &params).unwrap();
    for _ in 0..5 {
        let before = al.state().p.clone();
        al.step().unwrap();
        let bc = sys.b_op.forward(&al.state().c).unwrap();
        for ((after, prev), b) in al.state().p.iter().zip(&before).zip(&bc) {
            assert_eq!(*after, prev + b);
        }
    }
}

#[test]
fn inner_data_encodes_the_multipliers() {
    let sys = system(SurfaceKind::Sphere, 8, 32, NoiseSpec::none());
    let delta = 5.0;
    let params = DcsParams::default().with_hyper(1e-3, delta);
    let mut al = AugmentedLagrangian::new(sys.phi.clone(), sys.b_op.clone(), &sys.y, &params).unwrap();
    al.step().unwrap();
    let d = al.inner_data();
    assert_eq!(&d[..sys.y.len()], &sys.y[..]);
    for (v, p) in d[sys.y.len()..].iter().zip(&al.state().p) {
        assert_eq!(*v, -delta.sqrt() * p);
    }
}

#[test]
fn stacked_objective_equals_penalized_objective() {
    let sys = system(SurfaceKind::PeakValley, 8, 32, NoiseSpec::none());
    let mut g = rng(9);
    for &delta in &[0.1, 1.0, 2.0, 10.0] {
        let params = DcsParams::default().with_hyper(1e-3, delta);
        let mut al = AugmentedLagrangian::new(sys.phi.clone(), sys.b_op.clone(), &sys.y, &params).unwrap();
        al.step().unwrap();
        al.step().unwrap();
        let p = al.state().p.clone();
        let c = gaussian_vec(&mut g, 2 * sys.n());
        let stacked = al.inner_operator().forward(&c).unwrap();
        let data = al.inner_data();
        let lhs = 0.5 * dist(&stacked, &data).powi(2);

        let fit = 0.5 * dist(&sys.phi.forward(&c).unwrap(), &sys.y).powi(2);
        let bc = sys.b_op.forward(&c).unwrap();
        let pen: f64 = bc.iter().zip(&p).map(|(b, q)| (b + q) * (b + q)).sum();
        let rhs = fit + 0.5 * delta * pen;
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0), "delta {delta}: {lhs} vs {rhs}");
    }
}

#[test]
fn constraint_residual_ends_no_worse_than_it_starts() {
    for kind in SurfaceKind::ALL {
        for &delta in &[0.1, 1.0, 10.0] {
            let sys = system(kind, 8, 32, NoiseSpec::gaussian(0.05).relative());
            let params = DcsParams {
                constraint_tol: 1e-12,
                outer_iters: 8,
                ..DcsParams::default().with_hyper(1e-3, delta)
            };
            let (_, state, _) = dcs_solve(&sys, &params).unwrap();
            let first = state.trace.first().unwrap().constraint_norm;
            let last = state.trace.last().unwrap().constraint_norm;
            assert!(last <= first, "{kind:?} delta {delta}: {first} -> {last}");
        }
    }
}

#[test]
fn early_stop_on_feasibility() {
    let sys = system(SurfaceKind::Sphere, 8, 64, NoiseSpec::none());
    let params = DcsParams {
        constraint_tol: 1e-1,
        ..DcsParams::default().with_hyper(1e-6, 2.0)
    };
    let (_, state, report) = dcs_solve(&sys, &params).unwrap();
    assert!(state.t < params.outer_iters);
    assert!(report.converged);
    assert_eq!(state.trace.len(), state.t);
}

#[test]
fn recover_gradients_inverts_the_coefficient_map() {
    let sys = system(SurfaceKind::RampPeak, 16, 128, NoiseSpec::none());
    let c = CoeffVector::new(sys.true_coefficients().unwrap(), sys.dims).unwrap();
    let g = recover_gradients(&c, &sys).unwrap();
    let t = &sys.true_gradients;
    assert!(dist(g.zx(), t.zx()) <= 1e-10 * (1.0 + norm(t.zx())));
    assert!(dist(g.zy(), t.zy()) <= 1e-10 * (1.0 + norm(t.zy())));

    let zero = CoeffVector::new(vec![0.0; 2 * sys.n()], sys.dims).unwrap();
    assert_eq!(recover_gradients(&zero, &sys).unwrap(), GradientField::zeros(sys.dims));
}

#[test]
fn mismatched_inputs_are_rejected() {
    let sys = system(SurfaceKind::Sphere, 8, 32, NoiseSpec::none());
    assert!(CoeffVector::new(vec![0.0; 10], sys.dims).is_err());
    let other = CoeffVector::new(vec![0.0; 2 * 256], dims(16, 16)).unwrap();
    assert!(recover_gradients(&other, &sys).is_err());
    let bad = DcsParams {
        delta: 0.0,
        ..DcsParams::default()
    };
    assert!(dcs_solve(&sys, &bad).is_err());
    assert!(AugmentedLagrangian::new(sys.phi.clone(), sys.b_op.clone(), &sys.y[1..], &DcsParams::default()).is_err());
}
