use std::collections::HashSet;
use std::path::PathBuf;

use dcs_core::dcs::{dcs_solve, recover_gradients};
use dcs_core::grid::GridDims;
use dcs_core::metrics::{score, Score};
use dcs_core::noise::NoiseSpec;
use dcs_core::operators::assemble_system;
use dcs_core::poisson::{align_mean, integrate};
use dcs_core::seed::substream;
use dcs_core::sparse_solver::SolveReport;
use dcs_core::surfaces::{gen_surface, surface_to_pgm16, SurfaceKind};
use dcs_core::sweep::{run_grid, run_grid_with_workers, SweepResult};
use serde::Serialize;

use crate::config::{self, ReconstructFile, SweepFile};
use crate::error::{CliError, Result};
use crate::output::{self, grid_csv, OutputDir, RunManifest};

pub struct SweepArgs {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let started = output::timestamp();
    let loaded = config::load::<SweepFile>(args.config.as_deref())?;
    let mut cfg = loaded.value;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    cfg.validate()?;
    if args.workers == Some(0) {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }

    let surfaces = cfg
        .surfaces
        .iter()
        .map(|s| s.load())
        .collect::<Result<Vec<_>, _>>()?;
    let mut labels = HashSet::new();
    for s in &surfaces {
        if !labels.insert(s.label().to_string()) {
            return Err(CliError::Config(format!(
                "two surfaces share the label {:?}; give file surfaces distinct `label`s",
                s.label()
            )));
        }
    }

    let total = surfaces.len() * cfg.noises.len();
    let mut results: Vec<SweepResult> = Vec::with_capacity(total);
    for surface in &surfaces {
        for noise in &cfg.noises {
            let sc = cfg.sweep_config(*noise);
            let res = match args.workers {
                Some(w) => run_grid_with_workers(surface, &sc, w)?,
                None => run_grid(surface, &sc)?,
            };
            match res.best {
                Some(b) => eprintln!(
                    "[{}/{total}] {} / {}: lambda* = {}, delta* = {}, {:.2} dB",
                    results.len() + 1,
                    res.surface,
                    res.noise,
                    b.lambda_star,
                    b.delta_star,
                    b.mean_snr_db
                ),
                None => eprintln!("[{}/{total}] {} / {}: every cell failed", results.len() + 1, res.surface, res.noise),
            }
            results.push(res);
        }
    }

    let mut out = OutputDir::create(&args.out)?;
    out.write("cells.csv", &output::cells_csv(&results))?;
    out.write("optimal.csv", &output::optimal_csv(&results))?;
    let mut json = serde_json::to_string_pretty(&results).expect("results serialize");
    json.push('\n');
    out.write("results.json", json.as_bytes())?;
    out.write("heatmap.dat", &output::heatmap_dat(&results))?;
    out.write("effective_config.json", config::to_pretty_json(&cfg).as_bytes())?;
    RunManifest::new("sweep", loaded.path.as_deref(), &loaded.hash, started).finish(&mut out)?;

    let failed: Vec<String> = results
        .iter()
        .filter(|r| r.best.is_none())
        .map(|r| format!("{} / {}", r.surface, r.noise))
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Compute(format!("every cell failed for {}", failed.join(", "))));
    }
    Ok(())
}

pub struct ReconstructArgs {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct ReconstructSummary<'a> {
    surface: &'a str,
    rows: usize,
    cols: usize,
    measurements: usize,
    lambda: f64,
    delta: f64,
    noise: NoiseSpec,
    seed: u64,
    score: Score,
    outer_iterations: usize,
    feasible: bool,
    solve: &'a SolveReport,
}

pub fn reconstruct(args: ReconstructArgs) -> Result<()> {
    let started = output::timestamp();
    let loaded = config::load::<ReconstructFile>(args.config.as_deref())?;
    let mut cfg = loaded.value;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let surface = cfg.surface.load()?;
    let dims = surface.dims();
    let m = ((cfg.m_ratio * dims.n() as f64).ceil() as usize).clamp(1, dims.n());

    let sys = assemble_system(
        &surface,
        substream(cfg.seed, "psi_x"),
        substream(cfg.seed, "psi_y"),
        m,
        &cfg.noise,
        substream(cfg.seed, "noise"),
    )?;
    let (c, state, report) = dcs_solve(&sys, &cfg.params())?;
    let grads = recover_gradients(&c, &sys)?;
    let recon = align_mean(&integrate(&grads)?, &surface)?;
    let sc = score(&surface, &grads)?;
    eprintln!(
        "{}: {:.2} dB after {} outer iterations ({} inner)",
        surface.label(),
        sc.snr_surface_db,
        state.t,
        report.iterations
    );

    let (rows, cols) = (dims.rows(), dims.cols());
    let mut out = OutputDir::create(&args.out)?;
    out.write("surface.csv", &grid_csv(rows, cols, recon.heights()))?;
    out.write("reference.csv", &grid_csv(rows, cols, surface.heights()))?;
    out.write("grad_x.csv", &grid_csv(rows, cols, grads.zx()))?;
    out.write("grad_y.csv", &grid_csv(rows, cols, grads.zy()))?;

    let summary = ReconstructSummary {
        surface: surface.label(),
        rows,
        cols,
        measurements: m,
        lambda: cfg.lambda,
        delta: cfg.delta,
        noise: cfg.noise,
        seed: cfg.seed,
        score: sc,
        outer_iterations: state.t,
        feasible: report.converged,
        solve: &report,
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    out.write("score.json", json.as_bytes())?;

    let mut trace = String::from("t,constraint_norm,objective,inner_iterations,inner_converged\n");
    for s in &state.trace {
        trace.push_str(&format!(
            "{},{},{},{},{}\n",
            s.t,
            output::num(s.constraint_norm),
            output::num(s.objective),
            s.inner_iterations,
            s.inner_converged
        ));
    }
    out.write("trace.csv", trace.as_bytes())?;
    out.write("effective_config.json", config::to_pretty_json(&cfg).as_bytes())?;
    RunManifest::new("reconstruct", loaded.path.as_deref(), &loaded.hash, started).finish(&mut out)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceFormat {
    Csv,
    Pgm,
}

pub fn gen_surface_file(kind: &str, rows: usize, cols: usize, format: SurfaceFormat, out: &PathBuf) -> Result<()> {
    let kind = SurfaceKind::parse(kind)?;
    let dims = GridDims::new(rows, cols)?;
    let s = gen_surface(kind, dims);
    let bytes = match format {
        SurfaceFormat::Csv => grid_csv(rows, cols, s.heights()),
        SurfaceFormat::Pgm => surface_to_pgm16(&s),
    };
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::WriteOutput {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    output::write_atomic(out, &bytes)
}

pub fn default_config(kind: &str) -> Result<String> {
    match kind {
        "sweep" => Ok(config::to_pretty_json(&SweepFile::default())),
        "reconstruct" => Ok(config::to_pretty_json(&ReconstructFile::default())),
        other => Err(CliError::Config(format!(
            "unknown config kind {other:?} (expected sweep or reconstruct)"
        ))),
    }
}
