//! Brute-force search over the hyperparameter grid `(λ, δ)`.
//!
//! Every cell runs `trials` independent reconstructions. Each trial draws
//! fresh sensing matrices and fresh noise from a seed derived from
//! `(base_seed, surface label, λ index, δ index, trial index)`, so the whole
//! result is a pure function of the configuration, independent of worker
//! count and scheduling order. Trials that fail numerically are counted and
//! left out of the cell mean.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dcs::{dcs_solve, recover_gradients, DcsParams};
use crate::error::{Error, Result};
use crate::grid::{GridDims, SurfaceGrid};
use crate::metrics::score;
use crate::noise::{NoiseKind, NoiseSpec};
use crate::operators::assemble_system;
use crate::seed::{derive_seed, substream, SeedPart};
use crate::surfaces::{gen_surface, load_surface, SurfaceKind, SURFACE_FORMULA_VERSION};

/// Default λ values: one per decade from 1e-5 to 10.
pub const DEFAULT_LAMBDAS: [f64; 7] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0];
/// Default δ values.
pub const DEFAULT_DELTAS: [f64; 5] = [0.1, 1.0, 2.0, 5.0, 10.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperGrid {
    pub lambdas: Vec<f64>,
    pub deltas: Vec<f64>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            deltas: DEFAULT_DELTAS.to_vec(),
        }
    }
}

impl HyperGrid {
    pub fn new(lambdas: Vec<f64>, deltas: Vec<f64>) -> Result<Self> {
        let g = HyperGrid { lambdas, deltas };
        g.validate()?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.lambdas.len() * self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        fn check(name: &str, v: &[f64], positive: bool) -> Result<()> {
            if v.is_empty() {
                return Err(Error::Config(format!("grid.{name} must not be empty")));
            }
            for x in v {
                if !x.is_finite() || *x < 0.0 || (positive && *x == 0.0) {
                    let bound = if positive { "> 0" } else { ">= 0" };
                    return Err(Error::Config(format!("grid.{name} value {x} must be {bound}")));
                }
            }
            if v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(format!(
                    "grid.{name} must be strictly increasing without duplicates"
                )));
            }
            Ok(())
        }
        check("lambdas", &self.lambdas, false)?;
        check("deltas", &self.deltas, true)
    }
}

/// Where a sweep surface comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SurfaceSource {
    Synthetic {
        synthetic: SurfaceKind,
        rows: usize,
        cols: usize,
    },
    File {
        file: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

impl SurfaceSource {
    pub fn load(&self) -> Result<SurfaceGrid> {
        match self {
            SurfaceSource::Synthetic {
                synthetic,
                rows,
                cols,
            } => Ok(gen_surface(*synthetic, GridDims::new(*rows, *cols)?)),
            SurfaceSource::File { file, label } => {
                let s = load_surface(file)?;
                Ok(match label {
                    Some(l) => s.with_label(l.clone()),
                    None => s,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectMode {
    /// Average SNR over trials per cell, then take the best cell.
    #[default]
    MeanSnr,
    /// Take the best cell of each trial, then average the winning `(λ, δ)`.
    PerTrialAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub surfaces: Vec<SurfaceSource>,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub grid: HyperGrid,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_m_ratio")]
    pub m_ratio: f64,
    #[serde(default)]
    pub base_seed: u64,
    /// Template; `lambda` and `delta` are filled in per cell.
    #[serde(default)]
    pub dcs: DcsParams,
    #[serde(default)]
    pub select_mode: SelectMode,
    /// Reuse one pair of sensing matrices per surface and trial index
    /// instead of drawing new ones for every cell.
    #[serde(default)]
    pub fix_sensing: bool,
}

fn default_trials() -> usize {
    10
}

fn default_m_ratio() -> f64 {
    0.5
}

impl SweepConfig {
    pub fn new(surfaces: Vec<SurfaceSource>, noise: NoiseSpec) -> Self {
        SweepConfig {
            surfaces,
            noise,
            grid: HyperGrid::default(),
            trials: default_trials(),
            m_ratio: default_m_ratio(),
            base_seed: 0,
            dcs: DcsParams::default(),
            select_mode: SelectMode::default(),
            fix_sensing: false,
        }
    }

    /// Checks everything except the surface list, which [`run_grid`] does not use.
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.noise.validate()?;
        self.dcs.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if !(self.m_ratio > 0.0 && self.m_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "m_ratio must lie in (0, 1], got {}",
                self.m_ratio
            )));
        }
        Ok(())
    }

    /// Measurements per gradient axis: `ceil(m_ratio · n)`.
    pub fn measurements(&self, n: usize) -> usize {
        ((self.m_ratio * n as f64).ceil() as usize).clamp(1, n)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Per-trial seed for one cell.
pub fn trial_seed(base_seed: u64, label: &str, li: usize, di: usize, trial: usize) -> u64 {
    derive_seed(&[
        SeedPart::U64(base_seed),
        SeedPart::Str(label),
        SeedPart::U64(li as u64),
        SeedPart::U64(di as u64),
        SeedPart::U64(trial as u64),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub lambda_index: usize,
    pub delta_index: usize,
    pub lambda: f64,
    pub delta: f64,
    #[serde(with = "crate::float_repr")]
    pub mean_snr_db: f64,
    #[serde(with = "crate::float_repr")]
    pub std_snr_db: f64,
    /// SNR of each successful trial, in trial order.
    #[serde(with = "crate::float_repr::vec")]
    pub trial_snrs: Vec<f64>,
    pub trials: usize,
    pub failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CellRecord {
    pub fn failed(&self) -> bool {
        self.trial_snrs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestCell {
    pub lambda_star: f64,
    pub delta_star: f64,
    #[serde(with = "crate::float_repr")]
    pub mean_snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    /// Trial seeds in record order, `trials` per cell.
    pub seeds: Vec<u64>,
    pub code_version: String,
    pub surface_formula_version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub surface: String,
    pub noise: NoiseKind,
    pub noise_spec: NoiseSpec,
    pub select_mode: SelectMode,
    /// Sorted by `(lambda_index, delta_index)`.
    pub records: Vec<CellRecord>,
    pub best: Option<BestCell>,
    pub provenance: Provenance,
}

/// Seeds of `(Ψ_x, Ψ_y)` for one trial. With `fix_sensing` they depend only
/// on the surface label and the trial index, so every cell sees the same
/// matrices.
pub fn sensing_seeds(cfg: &SweepConfig, label: &str, li: usize, di: usize, trial: usize) -> (u64, u64) {
    let s = if cfg.fix_sensing {
        derive_seed(&[
            SeedPart::U64(cfg.base_seed),
            SeedPart::Str(label),
            SeedPart::Str("fixed_sensing"),
            SeedPart::U64(trial as u64),
        ])
    } else {
        trial_seed(cfg.base_seed, label, li, di, trial)
    };
    (substream(s, "psi_x"), substream(s, "psi_y"))
}

fn run_trial(
    surface: &SurfaceGrid,
    cfg: &SweepConfig,
    params: &DcsParams,
    (li, di, trial): (usize, usize, usize),
) -> Result<f64> {
    let seed = trial_seed(cfg.base_seed, surface.label(), li, di, trial);
    let (sx, sy) = sensing_seeds(cfg, surface.label(), li, di, trial);
    let m = cfg.measurements(surface.dims().n());
    let sys = assemble_system(surface, sx, sy, m, &cfg.noise, substream(seed, "noise"))?;
    let (c, _, _) = dcs_solve(&sys, params)?;
    let grads = recover_gradients(&c, &sys)?;
    let sc = score(surface, &grads)?;
    if sc.snr_surface_db.is_nan() {
        return Err(Error::numerical(0, "surface SNR is NaN"));
    }
    Ok(sc.snr_surface_db)
}

fn summarize(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.iter().all(|v| *v == values[0]) {
        return (mean, 0.0);
    }
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

fn assemble_record(
    cfg: &SweepConfig,
    li: usize,
    di: usize,
    outcomes: Vec<Result<f64>>,
) -> CellRecord {
    let mut snrs = Vec::with_capacity(outcomes.len());
    let mut failures = 0;
    let mut first_error = None;
    for o in outcomes {
        match o {
            Ok(v) => snrs.push(v),
            Err(e) => {
                failures += 1;
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let (mean, std) = summarize(&snrs);
    CellRecord {
        lambda_index: li,
        delta_index: di,
        lambda: cfg.grid.lambdas[li],
        delta: cfg.grid.deltas[di],
        mean_snr_db: mean,
        std_snr_db: std,
        error: if snrs.is_empty() { first_error } else { None },
        trial_snrs: snrs,
        trials: cfg.trials,
        failures,
    }
}

fn cell_params(cfg: &SweepConfig, li: usize, di: usize) -> DcsParams {
    cfg.dcs.with_hyper(cfg.grid.lambdas[li], cfg.grid.deltas[di])
}

/// Runs every trial of one cell sequentially.
pub fn run_cell(surface: &SurfaceGrid, cfg: &SweepConfig, li: usize, di: usize) -> Result<CellRecord> {
    cfg.validate()?;
    if li >= cfg.grid.lambdas.len() || di >= cfg.grid.deltas.len() {
        return Err(Error::Contract(format!("cell ({li}, {di}) outside the grid")));
    }
    let params = cell_params(cfg, li, di);
    let outcomes = (0..cfg.trials)
        .map(|k| run_trial(surface, cfg, &params, (li, di, k)))
        .collect();
    Ok(assemble_record(cfg, li, di, outcomes))
}

/// Evaluates the whole grid on the current rayon pool.
pub fn run_grid(surface: &SurfaceGrid, cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let energy: f64 = {
        let mu = surface.mean();
        surface.heights().iter().map(|v| (v - mu).powi(2)).sum()
    };
    if energy == 0.0 {
        return Err(Error::Config(format!(
            "surface {:?} is flat; SNR is undefined",
            surface.label()
        )));
    }
    let nd = cfg.grid.deltas.len();
    let cells = cfg.grid.len();
    let label = surface.label();

    let outcomes: Vec<Result<f64>> = (0..cells * cfg.trials)
        .into_par_iter()
        .map(|task| {
            let (cell, k) = (task / cfg.trials, task % cfg.trials);
            let (li, di) = (cell / nd, cell % nd);
            run_trial(surface, cfg, &cell_params(cfg, li, di), (li, di, k))
        })
        .collect();

    let mut outcomes = outcomes.into_iter();
    let mut records = Vec::with_capacity(cells);
    let mut seeds = Vec::with_capacity(cells * cfg.trials);
    for cell in 0..cells {
        let (li, di) = (cell / nd, cell % nd);
        let cell_outcomes: Vec<_> = outcomes.by_ref().take(cfg.trials).collect();
        seeds.extend((0..cfg.trials).map(|k| trial_seed(cfg.base_seed, label, li, di, k)));
        records.push(assemble_record(cfg, li, di, cell_outcomes));
    }

    let mut result = SweepResult {
        surface: label.to_string(),
        noise: cfg.noise.kind,
        noise_spec: cfg.noise,
        select_mode: cfg.select_mode,
        records,
        best: None,
        provenance: Provenance {
            config_hash: cfg.hash(),
            seeds,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            surface_formula_version: SURFACE_FORMULA_VERSION,
        },
    };
    result.best = match cfg.select_mode {
        SelectMode::MeanSnr => select_best_cell(&result).ok(),
        SelectMode::PerTrialAverage => per_trial_average(&result),
    };
    Ok(result)
}

/// [`run_grid`] on a dedicated pool of `workers` threads.
pub fn run_grid_with_workers(
    surface: &SurfaceGrid,
    cfg: &SweepConfig,
    workers: usize,
) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| run_grid(surface, cfg))
}

/// Orders candidate cells: higher SNR first, then smaller λ, then smaller δ.
fn better(a: (f64, f64, f64), b: (f64, f64, f64)) -> bool {
    let (sa, la, da) = a;
    let (sb, lb, db) = b;
    sa > sb || (sa == sb && (la < lb || (la == lb && da < db)))
}

fn select_best_cell(result: &SweepResult) -> Result<BestCell> {
    let mut best: Option<&CellRecord> = None;
    for r in result.records.iter().filter(|r| !r.failed()) {
        let take = match best {
            None => true,
            Some(b) => better(
                (r.mean_snr_db, r.lambda, r.delta),
                (b.mean_snr_db, b.lambda, b.delta),
            ),
        };
        if take {
            best = Some(r);
        }
    }
    best.map(|b| BestCell {
        lambda_star: b.lambda,
        delta_star: b.delta,
        mean_snr_db: b.mean_snr_db,
    })
    .ok_or(Error::EmptyResult)
}

/// Best `(λ, δ)` by mean SNR, ties going to smaller λ and then smaller δ.
pub fn select_optimal(result: &SweepResult) -> Result<(f64, f64)> {
    select_best_cell(result).map(|b| (b.lambda_star, b.delta_star))
}

fn per_trial_average(result: &SweepResult) -> Option<BestCell> {
    let trials = result.records.first()?.trials;
    let (mut sl, mut sd, mut ss, mut count) = (0.0, 0.0, 0.0, 0usize);
    for k in 0..trials {
        let mut best: Option<(f64, f64, f64)> = None;
        for r in &result.records {
            // trial_snrs only holds successes; a cell counts for trial k only
            // if none of its trials failed, so indices line up
            if r.failures > 0 {
                continue;
            }
            let cand = (r.trial_snrs[k], r.lambda, r.delta);
            if best.is_none_or(|b| better(cand, b)) {
                best = Some(cand);
            }
        }
        if let Some((s, l, d)) = best {
            sl += l;
            sd += d;
            ss += s;
            count += 1;
        }
    }
    (count > 0).then(|| {
        let c = count as f64;
        BestCell {
            lambda_star: sl / c,
            delta_star: sd / c,
            mean_snr_db: ss / c,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(li: usize, di: usize, lambda: f64, delta: f64, snr: f64) -> CellRecord {
        CellRecord {
            lambda_index: li,
            delta_index: di,
            lambda,
            delta,
            mean_snr_db: snr,
            std_snr_db: 0.0,
            trial_snrs: vec![snr],
            trials: 1,
            failures: 0,
            error: None,
        }
    }

    fn result(records: Vec<CellRecord>) -> SweepResult {
        SweepResult {
            surface: "t".into(),
            noise: NoiseKind::None,
            noise_spec: NoiseSpec::none(),
            select_mode: SelectMode::MeanSnr,
            records,
            best: None,
            provenance: Provenance {
                config_hash: String::new(),
                seeds: vec![],
                code_version: String::new(),
                surface_formula_version: 1,
            },
        }
    }

    #[test]
    fn grid_validation() {
        assert!(HyperGrid::default().validate().is_ok());
        assert_eq!(HyperGrid::default().len(), 35);
        assert!(HyperGrid::new(vec![], vec![1.0]).is_err());
        assert!(HyperGrid::new(vec![1e-3, 1e-3], vec![1.0]).is_err());
        assert!(HyperGrid::new(vec![1e-2, 1e-3], vec![1.0]).is_err());
        assert!(HyperGrid::new(vec![0.0, 1.0], vec![1.0]).is_ok());
        assert!(HyperGrid::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn select_single_cell() {
        let r = result(vec![record(0, 0, 0.5, 3.0, 12.0)]);
        assert_eq!(select_optimal(&r).unwrap(), (0.5, 3.0));
    }

    #[test]
    fn ties_prefer_smaller_lambda_then_delta() {
        let r = result(vec![
            record(0, 1, 1e-5, 2.0, 10.0),
            record(1, 0, 1e-4, 1.0, 10.0),
            record(0, 0, 1e-5, 1.0, 10.0),
        ]);
        assert_eq!(select_optimal(&r).unwrap(), (1e-5, 1.0));
    }

    #[test]
    fn strict_maximum_wins() {
        let lambdas = [1e-5, 1e-4, 1e-3, 1e-2];
        let deltas = [1.0, 2.0, 5.0];
        let mut recs = vec![];
        for (li, &l) in lambdas.iter().enumerate() {
            for (di, &d) in deltas.iter().enumerate() {
                let snr = if l == 1e-3 && d == 2.0 { 30.0 } else { 10.0 + li as f64 };
                recs.push(record(li, di, l, d, snr));
            }
        }
        assert_eq!(select_optimal(&result(recs)).unwrap(), (1e-3, 2.0));
    }

    #[test]
    fn all_failed_is_empty() {
        let mut rec = record(0, 0, 1.0, 1.0, f64::NAN);
        rec.trial_snrs.clear();
        rec.failures = 1;
        assert!(matches!(select_optimal(&result(vec![rec])), Err(Error::EmptyResult)));
    }

    #[test]
    fn per_trial_average_of_winners() {
        let mut a = record(0, 0, 1e-5, 1.0, 0.0);
        a.trial_snrs = vec![10.0, 1.0];
        a.trials = 2;
        let mut b = record(1, 1, 1e-3, 5.0, 0.0);
        b.trial_snrs = vec![2.0, 9.0];
        b.trials = 2;
        let best = per_trial_average(&result(vec![a, b])).unwrap();
        assert!((best.lambda_star - (1e-5 + 1e-3) / 2.0).abs() < 1e-15);
        assert_eq!(best.delta_star, 3.0);
        assert_eq!(best.mean_snr_db, 9.5);
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(summarize(&[2.0]), (2.0, 0.0));
        let (m, s) = summarize(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(summarize(&[f64::INFINITY; 2]), (f64::INFINITY, 0.0));
        assert!(summarize(&[]).0.is_nan());
    }

    #[test]
    fn measurement_count_rounds_up() {
        let cfg = SweepConfig::new(vec![], NoiseSpec::none());
        assert_eq!(cfg.measurements(64), 32);
        let cfg = SweepConfig { m_ratio: 0.3, ..cfg };
        assert_eq!(cfg.measurements(10), 3);
        assert_eq!(cfg.measurements(1), 1);
    }

    #[test]
    fn config_json_defaults() {
        let cfg: SweepConfig = serde_json::from_str(
            r#"{"surfaces":[{"synthetic":"sphere","rows":8,"cols":8}],"noise":{"kind":"none"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.trials, 10);
        assert_eq!(cfg.grid, HyperGrid::default());
        assert_eq!(cfg.m_ratio, 0.5);
        let back: SweepConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
