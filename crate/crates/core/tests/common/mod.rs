//! Helpers shared by the integration tests: seeded random data, the surface
//! corpus, and dense reference implementations built independently of the
//! library's matrix-free code.
#![allow(dead_code)]

use dcs_core::grid::{GridDims, SurfaceGrid};
use dcs_core::surfaces::{gen_surface, SurfaceKind};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dims(rows: usize, cols: usize) -> GridDims {
    GridDims::new(rows, cols).unwrap()
}

/// Synthetic surfaces at several sizes plus seeded random fields.
pub fn corpus() -> Vec<SurfaceGrid> {
    let mut out = Vec::new();
    for &(r, c) in &[(8, 8), (16, 16), (32, 32), (8, 16), (16, 4)] {
        for kind in SurfaceKind::ALL {
            out.push(gen_surface(kind, dims(r, c)));
        }
    }
    let mut g = rng(0xC0_4B05);
    for &(r, c) in &[(8, 8), (16, 32)] {
        let d = dims(r, c);
        out.push(SurfaceGrid::new(d, gaussian_vec(&mut g, d.n()), "random").unwrap());
    }
    out
}

/// One orthonormal Haar analysis level on a line of `len` samples:
/// sums in the first half, differences in the second.
pub fn haar_level_1d(len: usize) -> DMatrix<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut a = DMatrix::zeros(len, len);
    if len == 1 {
        a[(0, 0)] = 1.0;
        return a;
    }
    let half = len / 2;
    for i in 0..half {
        a[(i, 2 * i)] = s;
        a[(i, 2 * i + 1)] = s;
        a[(half + i, 2 * i)] = s;
        a[(half + i, 2 * i + 1)] = -s;
    }
    a
}

/// Dense analysis matrix of the full-depth pyramid Haar transform on a
/// row-major grid, built as a product of per-level Kronecker factors that act
/// on the shrinking top-left low-pass block.
pub fn haar_analysis_matrix(d: GridDims) -> DMatrix<f64> {
    let (rows, cols) = (d.rows(), d.cols());
    let n = d.n();
    let mut total = DMatrix::<f64>::identity(n, n);
    let (mut h, mut w) = (rows, cols);
    while h > 1 || w > 1 {
        let ah = haar_level_1d(h);
        let aw = haar_level_1d(w);
        let mut level = DMatrix::<f64>::identity(n, n);
        for r in 0..h {
            for c in 0..w {
                let out = r * cols + c;
                level[(out, out)] = 0.0;
                for r2 in 0..h {
                    for c2 in 0..w {
                        level[(out, r2 * cols + c2)] = ah[(r, r2)] * aw[(c, c2)];
                    }
                }
            }
        }
        total = level * total;
        h = (h / 2).max(1);
        w = (w / 2).max(1);
    }
    total
}

/// Forward difference with a zero last row (Neumann boundary).
pub fn diff_1d(len: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(len, len);
    for i in 0..len.saturating_sub(1) {
        s[(i, i)] = -1.0;
        s[(i, i + 1)] = 1.0;
    }
    s
}

/// Dense `(D_x, D_y)` as Kronecker products on a row-major grid.
pub fn diff_matrices(d: GridDims) -> (DMatrix<f64>, DMatrix<f64>) {
    let ir = DMatrix::<f64>::identity(d.rows(), d.rows());
    let ic = DMatrix::<f64>::identity(d.cols(), d.cols());
    (ir.kronecker(&diff_1d(d.cols())), diff_1d(d.rows()).kronecker(&ic))
}

pub fn to_dmatrix(m: &dcs_core::operators::DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).abs().max()
}

/// A small random Lasso problem with a planted sparse solution.
pub struct LassoInstance {
    pub a: DMatrix<f64>,
    pub y: Vec<f64>,
    pub support: Vec<usize>,
    pub lambda: f64,
}

impl LassoInstance {
    pub fn op(&self) -> dcs_core::operators::DenseMatrix {
        let (m, n) = self.a.shape();
        let row_major: Vec<f64> = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.a[(i, j)])
            .collect();
        dcs_core::operators::DenseMatrix::from_row_major(m, n, row_major).unwrap()
    }
}

/// `n ≤ 12`, `m ≥ n/2`, sparsity 1 or 2, Gaussian entries with variance 1/m,
/// y = A c_true + noise well below λ, so the optimal support stays small.
pub fn lasso_instance(seed: u64, lambda: f64) -> LassoInstance {
    let mut g = rng(seed);
    let n = g.random_range(6..=12usize);
    let m = g.random_range(n.div_ceil(2)..=n);
    let k = g.random_range(1..=2usize);
    let scale = 1.0 / (m as f64).sqrt();
    let a = DMatrix::from_fn(m, n, |_, _| scale * g.sample::<f64, _>(StandardNormal));
    let mut support: Vec<usize> = Vec::new();
    while support.len() < k {
        let j = g.random_range(0..n);
        if !support.contains(&j) {
            support.push(j);
        }
    }
    support.sort_unstable();
    let mut c = DVector::zeros(n);
    for &j in &support {
        let mag = g.random_range(0.5..2.0);
        c[j] = if g.random::<bool>() { mag } else { -mag };
    }
    let mut y = &a * c;
    for v in y.iter_mut() {
        *v += 1e-5 * g.sample::<f64, _>(StandardNormal);
    }
    LassoInstance {
        a,
        y: y.iter().copied().collect(),
        support,
        lambda,
    }
}

pub fn lasso_objective(a: &DMatrix<f64>, y: &[f64], c: &[f64], lambda: f64) -> f64 {
    let r = a * DVector::from_column_slice(c) - DVector::from_column_slice(y);
    0.5 * r.norm_squared() + lambda * c.iter().map(|v| v.abs()).sum::<f64>()
}

fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for j in start..n {
            cur.push(j);
            if rec(j + 1, n, k, cur, f) {
                return true;
            }
            cur.pop();
        }
        false
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f)
}

/// Global Lasso minimizer found by enumerating supports and sign patterns.
///
/// For each candidate `(S, s)` the restricted stationarity condition
/// `A_Sᵀ(A_S c_S − y) + λ s = 0` is solved exactly; the candidate is accepted
/// only if its signs agree with `s` and every off-support correlation obeys
/// `|a_jᵀ r| ≤ λ`. Those subgradient conditions certify a global optimum of
/// the convex problem. Supports up to `max_support` are searched, smallest
/// first; the accepted point is finally checked to be a fixed point of the
/// proximal-gradient map.
pub fn lasso_oracle(a: &DMatrix<f64>, y: &[f64], lambda: f64, max_support: usize) -> Option<(Vec<f64>, f64)> {
    let (m, n) = a.shape();
    let yv = DVector::from_column_slice(y);
    let mut found: Option<Vec<f64>> = None;
    for k in 0..=max_support.min(m).min(n) {
        let done = for_each_subset(n, k, &mut |s: &[usize]| {
            let a_s = a.select_columns(s);
            let gram = a_s.transpose() * &a_s;
            let Some(inv) = gram.clone().try_inverse() else {
                return false;
            };
            let aty = a_s.transpose() * &yv;
            for pattern in 0..(1u32 << k) {
                let signs = DVector::from_fn(k, |i, _| if pattern >> i & 1 == 1 { -1.0 } else { 1.0 });
                let cs = &inv * (&aty - lambda * &signs);
                if (0..k).any(|i| cs[i] * signs[i] <= 0.0) {
                    continue;
                }
                let mut c = vec![0.0; n];
                for (i, &j) in s.iter().enumerate() {
                    c[j] = cs[i];
                }
                let r = a * DVector::from_column_slice(&c) - &yv;
                let g = a.transpose() * r;
                let slack = 1e-12 * (1.0 + lambda);
                if (0..n).filter(|j| !s.contains(j)).all(|j| g[j].abs() <= lambda + slack) {
                    found = Some(c);
                    return true;
                }
            }
            false
        });
        if done {
            break;
        }
    }
    let c = found?;
    // polishing prox check: c = soft(c − ∇f(c)/L, λ/L)
    let lip = (a.transpose() * a).symmetric_eigenvalues().max();
    let g = a.transpose() * (a * DVector::from_column_slice(&c) - &yv);
    for j in 0..n {
        let v = c[j] - g[j] / lip;
        let p = v.signum() * (v.abs() - lambda / lip).max(0.0);
        assert!((p - c[j]).abs() <= 1e-9 * (1.0 + c[j].abs()), "oracle point is not a prox fixed point");
    }
    let obj = lasso_objective(a, y, &c, lambda);
    Some((c, obj))
}
