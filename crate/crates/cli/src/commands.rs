//! Subcommand implementations. Each writes its artifacts into `out`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use arcscat_core::forward::{l2, observation_directions, solve_density, synthesize, FarFieldSet};
use arcscat_core::frechet::{basis, fd_jacobian, jacobian};
use arcscat_core::geometry::{ChebCrack, Point2};
use arcscat_core::inversion::{run_multi_freq, run_single_freq, ReconstructionState, RunFailure, Stage};
use arcscat_core::lowfreq::{asymptotic_check, solve_profile};
use arcscat_core::sampling::{dsm_indicator, extract_initial_cracks, Bounds};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::format::{self, banner, num, Manifest, ManifestEntry, ReconstructionDoc, ARTIFACT};

pub const MANIFEST: &str = "manifest.json";

/// How a run ended when no error occurred.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    /// A residual target was not reached.
    TargetMissed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Done => 0,
            Outcome::TargetMissed => 2,
        }
    }
}

fn create_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

fn farfield_name(i: usize) -> String {
    format!("farfield_{i:02}.csv")
}

/// Synthetic far-field data, one file per `(k, d)` pair in config order.
pub fn synth(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let truth = cfg.truth_set()?;
    truth.ensure_valid()?;
    create_dir(out)?;
    let hash = cfg.hash();
    let dirs = observation_directions(cfg.observations);
    let mut entries = Vec::new();
    let mut paths = Vec::new();
    for &k in &cfg.frequencies {
        for d in cfg.incident_directions() {
            let i = entries.len();
            let clean = synthesize(&truth, cfg.n_nodes, k, d, &dirs)?;
            let seed = cfg.noise.seed + 100 * i as u64;
            let set = clean.add_noise(cfg.noise.delta, seed)?;
            let name = farfield_name(i);
            let path = out.join(&name);
            format::write(&path, &format::farfield_csv(&set, &hash))?;
            entries.push(ManifestEntry { file: name, k, d: [d.x, d.y], delta: set.delta, seed: set.seed });
            paths.push(path);
        }
    }
    let manifest = Manifest { artifact: ARTIFACT.into(), config_sha256: hash, files: entries };
    format::write(&out.join(MANIFEST), &format::json(&manifest))?;
    Ok(paths)
}

/// Data files given on the command line, or those listed in `out/manifest.json`.
pub fn load_data(out: &Path, files: &[PathBuf]) -> Result<Vec<FarFieldSet>, CliError> {
    let paths: Vec<PathBuf> = if files.is_empty() {
        let path = out.join(MANIFEST);
        let manifest: Manifest = serde_json::from_str(&format::read(&path)?)
            .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        manifest.files.iter().map(|f| out.join(&f.file)).collect()
    } else {
        files.to_vec()
    };
    if paths.is_empty() {
        return Err(CliError::Schema("no far-field data files".into()));
    }
    paths.iter().map(|p| format::read_farfield(p)).collect()
}

/// Data sets grouped by wavenumber, lowest first.
fn stages_by_k(data: Vec<FarFieldSet>) -> Vec<Vec<FarFieldSet>> {
    let mut groups: Vec<Vec<FarFieldSet>> = Vec::new();
    for set in data {
        match groups.iter_mut().find(|g| g[0].k == set.k) {
            Some(g) => g.push(set),
            None => groups.push(vec![set]),
        }
    }
    groups.sort_by(|a, b| a[0].k.total_cmp(&b[0].k));
    groups
}

fn indicator_for(cfg: &RunConfig, set: &FarFieldSet) -> Result<arcscat_core::sampling::IndicatorGrid, CliError> {
    Ok(dsm_indicator(set, cfg.dsm.bounds(), cfg.dsm.spacing)?)
}

/// Initial guess from the config, or from the indicator of the lowest-frequency data.
fn initial_guess(cfg: &RunConfig, data: &[Vec<FarFieldSet>]) -> Result<Vec<ChebCrack>, CliError> {
    if !cfg.initial.is_empty() {
        return cfg.initial_cracks();
    }
    if !cfg.init_from_dsm {
        return Err(CliError::Schema("config has no initial guess; pass --init-from-dsm to build one".into()));
    }
    let grid = indicator_for(cfg, &data[0][0])?;
    let ex = extract_initial_cracks(&grid, cfg.n_cracks())?;
    if ex.shortage {
        eprintln!("warning: indicator shows {} of {} requested cracks", ex.cracks.len(), cfg.n_cracks());
    }
    Ok(ex.cracks)
}

fn write_run(state: &ReconstructionState, out: &Path, hash: &str) -> Result<(), CliError> {
    format::write(&out.join("reconstruction.json"), &format::json(&ReconstructionDoc::from_state(state, hash)))?;
    format::write(&out.join("reconstruction.csv"), &format::polyline_csv(&state.cracks, hash))?;
    format::write(&out.join("iterations.csv"), &format::iteration_log_csv(state, hash))
}

/// Single- or multi-frequency reconstruction depending on the distinct wavenumbers in the data.
pub fn invert(cfg: &RunConfig, out: &Path, files: &[PathBuf]) -> Result<(ReconstructionState, Outcome), CliError> {
    let data = load_data(out, files)?;
    let stages = stages_by_k(data);
    let initial = initial_guess(cfg, &stages)?;
    create_dir(out)?;
    let hash = cfg.hash();
    let newton = cfg.newton_config();
    let target = |i: usize, sets: &[FarFieldSet]| {
        let delta = sets.iter().map(|s| s.delta).fold(0.0, f64::max);
        cfg.targets.get(i).map(|t| t.resolve(delta))
    };
    let result = if stages.len() == 1 {
        run_single_freq(&initial, &stages[0], &newton, target(0, &stages[0]))
    } else {
        if cfg.targets.len() < stages.len() {
            return Err(CliError::Schema(format!(
                "{} frequency stages need as many targets, config has {}",
                stages.len(),
                cfg.targets.len()
            )));
        }
        let stages: Vec<Stage> = stages
            .iter()
            .enumerate()
            .map(|(i, sets)| Stage { data: sets.clone(), eps_target: target(i, sets).unwrap() })
            .collect();
        run_multi_freq(&initial, &stages, &newton)
    };
    match result {
        Ok(state) => {
            write_run(&state, out, &hash)?;
            let outcome = if state.target_missed { Outcome::TargetMissed } else { Outcome::Done };
            Ok((state, outcome))
        }
        Err(RunFailure { error, state }) => {
            write_run(&state, out, &hash)?;
            Err(error.into())
        }
    }
}

/// Indicator grid, plotting script and extracted segments for every data set.
pub fn dsm(cfg: &RunConfig, out: &Path, files: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let data = load_data(out, files)?;
    create_dir(out)?;
    let hash = cfg.hash();
    let mut written = Vec::new();
    for (i, set) in data.iter().enumerate() {
        let grid = indicator_for(cfg, set)?;
        let csv = format!("indicator_{i:02}.csv");
        let title = format!("indicator, k = {}, d = ({}, {})", set.k, set.d.x, set.d.y);
        format::write(&out.join(&csv), &format::indicator_csv(&grid, &hash))?;
        format::write(&out.join(format!("indicator_{i:02}.gp")), &format::gnuplot_script(&csv, &title, &hash))?;
        let doc = if grid.max() > 0.0 {
            let ex = extract_initial_cracks(&grid, cfg.n_cracks())?;
            ReconstructionDoc::from_extraction(&ex.cracks, ex.shortage, &hash)
        } else {
            ReconstructionDoc::from_extraction(&[], true, &hash)
        };
        format::write(&out.join(format!("initial_{i:02}.json")), &format::json(&doc))?;
        written.push(out.join(csv));
    }
    Ok(written)
}

/// `e(k)` table and the profile `v` on a grid.
pub fn lowfreq_check(cfg: &RunConfig, out: &Path) -> Result<Vec<(f64, f64, f64)>, CliError> {
    let truth = cfg.truth_set()?;
    truth.ensure_valid()?;
    create_dir(out)?;
    let hash = cfg.hash();
    let spec = &cfg.lowfreq;
    let probes: Vec<Point2> = spec.probes.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let d = cfg.incident_directions()[0];
    let table = asymptotic_check(&truth, spec.n_nodes, &spec.wavenumbers, d, &probes)?;
    let mut csv = banner(&hash);
    csv.push_str("k,ln_k,e_k\n");
    for row in &table {
        writeln!(csv, "{},{},{}", num(row.k), num(row.ln_k), num(row.error)).unwrap();
    }
    format::write(&out.join("lowfreq.csv"), &csv)?;

    let profile = solve_profile(&truth, spec.n_nodes)?;
    let [x_min, x_max, y_min, y_max] = spec.grid_bounds;
    let h = spec.grid_spacing;
    if !(h > 0.0) {
        return Err(CliError::Schema("lowfreq.grid_spacing must be positive".into()));
    }
    let bounds = Bounds { x_min, x_max, y_min, y_max };
    let count = |lo: f64, hi: f64| ((hi - lo) / h + 1e-9).floor() as usize + 1;
    let mut grid = banner(&hash);
    grid.push_str("x,y,v\n");
    for iy in 0..count(bounds.y_min, bounds.y_max) {
        for ix in 0..count(bounds.x_min, bounds.x_max) {
            let x = Point2::new(x_min + ix as f64 * h, y_min + iy as f64 * h);
            writeln!(grid, "{},{},{}", num(x.x), num(x.y), num(profile.eval_v(x).v.re)).unwrap();
        }
        grid.push('\n');
    }
    format::write(&out.join("profile.csv"), &grid)?;
    format::write(&out.join("profile.gp"), &format::gnuplot_script("profile.csv", "low-frequency profile v", &hash))?;
    Ok(table.iter().map(|r| (r.k, r.ln_k, r.error)).collect())
}

/// One row of the derivative check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradRow {
    pub analytic_norm: f64,
    pub fd_norm: f64,
    pub rel_err: f64,
}

/// Analytic against central-difference Jacobian columns on the truth cracks.
pub fn gradcheck(cfg: &RunConfig, out: &Path) -> Result<Vec<GradRow>, CliError> {
    let truth = cfg.truth_set()?;
    create_dir(out)?;
    let hash = cfg.hash();
    let (k, d) = (cfg.frequencies[0], cfg.incident_directions()[0]);
    let dirs = observation_directions(cfg.observations);
    let b = basis(&vec![cfg.gradcheck.order; truth.len()], &vec![true; truth.len()]);
    let sol = solve_density(&truth, cfg.n_nodes, k, d)?;
    let analytic = jacobian(&sol, b.clone(), &dirs)?;
    let fd = fd_jacobian(&truth, cfg.n_nodes, k, d, b, &dirs, cfg.gradcheck.fd_step)?;
    let mut csv = banner(&hash);
    csv.push_str("basis_index,analytic_norm,fd_norm,rel_err\n");
    let mut rows = Vec::new();
    for j in 0..analytic.matrix.cols() {
        let (a, f) = (analytic.column(j), fd.column(j));
        let diff: Vec<_> = a.iter().zip(&f).map(|(x, y)| x - y).collect();
        let fd_norm = l2(&f);
        let rel_err = if fd_norm > 0.0 { l2(&diff) / fd_norm } else { l2(&diff) };
        let row = GradRow { analytic_norm: l2(&a), fd_norm, rel_err };
        writeln!(csv, "{j},{},{},{}", num(row.analytic_norm), num(row.fd_norm), num(row.rel_err)).unwrap();
        rows.push(row);
    }
    format::write(&out.join("gradcheck.csv"), &csv)?;
    Ok(rows)
}
