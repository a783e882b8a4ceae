//! The `simulate`, `eigen`, `search` and `oracle` commands.
//!
//! Each command reads one experiment file and writes its tables and a
//! `manifest.json` into `<out>/<experiment name>/`.

use std::path::{Path, PathBuf};

use serde_json::json;

use crate::analytic::analytic_mode_intensity;
use crate::config::{Experiment, ExperimentConfig};
use crate::error::{Error, Result};
use crate::output::{series_table, vertex_label, Manifest, Resolved, SpectrumSummary, Table};
use crate::par::{self, Execution};
use crate::search::{localized_mode_for, mode_series, run_search};
use crate::spectrum::{eigendecompose, mismatch_profile, EigenDecomposition};
use crate::walk::run_driven_walk;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Largest simulated-vs-analytic eigenmode intensity deviation `oracle`
/// accepts.
pub const ORACLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Eigen,
    Search,
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Eigen => "eigen",
            Command::Search => "search",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: String,
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub exit_code: i32,
    pub message: String,
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Index(_) | Error::Dimension { .. } => EXIT_CONFIG,
        Error::NumericalIntegrity { .. }
        | Error::Convergence { .. }
        | Error::UndefinedGap { .. } => EXIT_NUMERICAL,
        Error::Io(_) => EXIT_IO,
    }
}

pub fn run(command: Command, config_path: &Path, out_root: &Path) -> Result<Outcome> {
    let config = ExperimentConfig::load(config_path)?;
    let stem = config_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("experiment");
    let exp = config.resolve(stem)?;
    let dir = out_root.join(&exp.name);
    std::fs::create_dir_all(&dir)?;
    match command {
        Command::Simulate => simulate(&exp, &dir),
        Command::Eigen => eigen(&exp, &dir),
        Command::Search => search(&exp, &dir),
        Command::Oracle => oracle(&exp, &dir),
    }
}

/// Run several experiments, concurrently when `exec` allows.
pub fn run_many(
    command: Command,
    configs: &[PathBuf],
    out_root: &Path,
    exec: Execution,
) -> Vec<(PathBuf, Result<Outcome>)> {
    par::map(configs, exec, |p| (p.clone(), run(command, p, out_root)))
}

fn resolved(exp: &Experiment, phi: Option<f64>) -> Resolved {
    let site = |(x, y): (usize, usize)| [x, y];
    Resolved {
        name: exp.name.clone(),
        topology: *exp.operator.topology(),
        mode_count: exp.operator.mode_count(),
        flip_flop: exp.operator.flip_flop(),
        steps: exp.steps,
        phi,
        central: exp.search.as_ref().map(|s| site(s.central())),
        target: exp.search.as_ref().map(|s| site(s.target())),
        target_known: exp.search.as_ref().map(|_| exp.target_known),
    }
}

fn spectrum_summary(
    exp: &Experiment,
    e: &EigenDecomposition,
    phi: Option<f64>,
) -> Result<SpectrumSummary> {
    let prof = mismatch_profile(e, phi.unwrap_or(0.0), &exp.base)?;
    Ok(SpectrumSummary {
        frequencies: e.frequencies().to_vec(),
        deltas: phi.map(|_| prof.deltas.clone()),
        couplings_abs2: prof.couplings.iter().map(|b| b.norm_sqr()).collect(),
        reconstruction_residual: e.reconstruction_residual(&exp.operator.to_dense()),
    })
}

fn vertex_labels(exp: &Experiment) -> Vec<String> {
    let t = exp.operator.topology();
    (0..t.vertex_count()).map(|v| vertex_label(t, v)).collect()
}

fn file_names(files: &[PathBuf]) -> Vec<String> {
    files
        .iter()
        .filter_map(|p| p.file_name().and_then(|s| s.to_str()).map(str::to_string))
        .collect()
}

/// What a command produced, before the manifest is written.
struct Report {
    command: Command,
    files: Vec<PathBuf>,
    phi: Option<f64>,
    spectrum: Option<SpectrumSummary>,
    summary: Option<serde_json::Value>,
    exit_code: i32,
    message: String,
}

impl Report {
    fn new(command: Command, files: Vec<PathBuf>, message: String) -> Self {
        Report {
            command,
            files,
            phi: None,
            spectrum: None,
            summary: None,
            exit_code: EXIT_OK,
            message,
        }
    }

    fn finish(mut self, exp: &Experiment, dir: &Path) -> Result<Outcome> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.command.name(),
            config: &exp.config,
            resolved: resolved(exp, self.phi),
            spectrum: self.spectrum,
            summary: self.summary,
            files: file_names(&self.files),
        };
        self.files.push(manifest.write(dir)?);
        Ok(Outcome {
            name: exp.name.clone(),
            dir: dir.to_path_buf(),
            files: self.files,
            exit_code: self.exit_code,
            message: self.message,
        })
    }
}

pub fn simulate(exp: &Experiment, dir: &Path) -> Result<Outcome> {
    let outputs = exp.config.outputs;
    let eigen = if exp.needs_eigen_for_phase() || outputs.eigenmode {
        Some(eigendecompose(&exp.operator)?)
    } else {
        None
    };
    let phi = exp.phi(eigen.as_ref())?;
    let record = run_driven_walk(
        &exp.operator,
        &exp.schedule(phi),
        eigen.as_ref().filter(|_| outputs.eigenmode),
    )?;
    let scale = 1.0 + exp.base.norm() * exp.steps as f64;
    record.check_boundary(1e-12 * scale)?;

    let mut files = Vec::new();
    if outputs.physical {
        files.push(
            series_table(&vertex_labels(exp), &record.vertex_intensity)
                .write(dir, "vertex_intensity.csv")?,
        );
    }
    if let Some(rows) = &record.eigenmode_intensity {
        let labels: Vec<String> = (0..exp.operator.mode_count())
            .map(|j| format!("m{j}"))
            .collect();
        files.push(series_table(&labels, rows).write(dir, "eigenmode_intensity.csv")?);
    }
    let spectrum = eigen
        .as_ref()
        .map(|e| spectrum_summary(exp, e, Some(phi)))
        .transpose()?;
    let total = record.total_intensity().last().copied().unwrap_or(0.0);
    let summary = json!({ "final_total_intensity": total });
    let message = format!("{} steps, final total intensity {total:.6}", exp.steps);
    Report {
        phi: Some(phi),
        spectrum,
        summary: Some(summary),
        ..Report::new(Command::Simulate, files, message)
    }
    .finish(exp, dir)
}

pub fn eigen(exp: &Experiment, dir: &Path) -> Result<Outcome> {
    let e = eigendecompose(&exp.operator)?;
    let phi = exp.phi(Some(&e)).ok();
    let spectrum = spectrum_summary(exp, &e, phi)?;
    let topology = *exp.operator.topology();

    let mut freq = Table::new(&["index", "omega", "coupling_abs2"]);
    for (j, w) in e.frequencies().iter().enumerate() {
        freq.row([
            j.to_string(),
            w.to_string(),
            spectrum.couplings_abs2[j].to_string(),
        ]);
    }
    let mut header = vec!["index".to_string(), "omega".to_string()];
    header.extend(vertex_labels(exp));
    let mut weights = Table::new(&header);
    for (j, w) in e.frequencies().iter().enumerate() {
        let cells = [j.to_string(), w.to_string()].into_iter().chain(
            e.vertex_weights(j, &topology)
                .into_iter()
                .map(|x| x.to_string()),
        );
        weights.row(cells);
    }
    let mut files = vec![
        freq.write(dir, "eigenfrequencies.csv")?,
        weights.write(dir, "eigenvector_weights.csv")?,
    ];

    let mut message = format!("{} eigenfrequencies", e.dim());
    let summary = match &exp.search {
        Some(inst) => {
            let lm = localized_mode_for(inst, &e)?;
            let baseline = 2.0 / topology.vertex_count() as f64;
            let mut table = Table::new(&["x", "y", "weight"]);
            for (v, w) in lm.weights.iter().enumerate() {
                let (x, y) = topology.coords(v);
                table.row([x.to_string(), y.to_string(), w.to_string()]);
            }
            files.push(table.write(dir, "localized_mode.csv")?);
            message.push_str(&format!(
                "; localized mode at omega {:.3e} carries {:.4} of its weight on the marked vertices ({:.1}x uniform)",
                lm.frequency,
                lm.fraction,
                lm.fraction / baseline
            ));
            Some(json!({
                "localized_mode": {
                    "frequency": lm.frequency,
                    "multiplicity": lm.multiplicity,
                    "coupling": lm.coupling,
                    "marked_fraction": lm.fraction,
                    "uniform_baseline": baseline,
                }
            }))
        }
        None => None,
    };
    Report {
        phi,
        spectrum: Some(spectrum),
        summary,
        ..Report::new(Command::Eigen, files, message)
    }
    .finish(exp, dir)
}

pub fn search(exp: &Experiment, dir: &Path) -> Result<Outcome> {
    let inst = exp
        .search
        .as_ref()
        .ok_or_else(|| Error::config("search: the experiment has no [search] section"))?;
    let result = run_search(inst)?;
    let e = eigendecompose(inst.operator())?;
    let modes = mode_series(inst, &e)?;
    let topology = *inst.topology();

    let mut series = Table::new(&[
        "step",
        "matched_mode",
        "lower_mode",
        "upper_mode",
        "central",
        "target",
    ]);
    for t in 0..result.steps_run {
        series.row([
            (t + 1).to_string(),
            modes.matched[t].to_string(),
            modes.lower[t].to_string(),
            modes.upper[t].to_string(),
            result.central_series[t].to_string(),
            result.target_series[t].to_string(),
        ]);
    }
    let mut map = Table::new(&["x", "y", "intensity"]);
    for (v, i) in result.intensity_map.iter().enumerate() {
        let (x, y) = topology.coords(v);
        map.row([x.to_string(), y.to_string(), i.to_string()]);
    }
    let found = result.found(inst);
    let matched = exp.target_known.then_some(found);
    let report = json!({
        "detected": [result.detected.0, result.detected.1],
        "degraded": result.degraded,
        "contrast": result.contrast,
        "marked_intensity": result.marked_intensity,
        "steps_run": result.steps_run,
        "ground_truth": exp.target_known.then(|| [inst.target().0, inst.target().1]),
        "match": matched,
        "matched_mode_frequency": modes.matched_frequency,
        "lower_mode_frequency": modes.lower_frequency,
        "upper_mode_frequency": modes.upper_frequency,
    });
    let report_path = dir.join("search_result.json");
    std::fs::write(
        &report_path,
        serde_json::to_string_pretty(&report).expect("json") + "\n",
    )?;
    let files = vec![
        report_path,
        series.write(dir, "search_series.csv")?,
        map.write(dir, "intensity_map.csv")?,
    ];

    let exit_code = if matched == Some(false) {
        EXIT_MISMATCH
    } else {
        EXIT_OK
    };
    let message = format!(
        "detected ({}, {}){} after {} steps, contrast {:.2}{}",
        result.detected.0,
        result.detected.1,
        if result.degraded { " [degraded]" } else { "" },
        result.steps_run,
        result.contrast,
        match matched {
            Some(true) => ", matches ground truth",
            Some(false) => ", does NOT match ground truth",
            None => "",
        }
    );
    Report {
        phi: Some(0.0),
        summary: Some(report),
        exit_code,
        ..Report::new(Command::Search, files, message)
    }
    .finish(exp, dir)
}

pub fn oracle(exp: &Experiment, dir: &Path) -> Result<Outcome> {
    let e = eigendecompose(&exp.operator)?;
    let phi = exp.phi(Some(&e))?;
    let prof = mismatch_profile(&e, phi, &exp.base)?;
    let record = run_driven_walk(&exp.operator, &exp.schedule(phi), Some(&e))?;
    let rows = record.eigenmode_intensity.as_deref().unwrap_or_default();

    let mut table = Table::new(&[
        "step",
        "mode",
        "omega",
        "delta",
        "simulated",
        "analytic",
        "abs_deviation",
    ]);
    let mut max_dev: f64 = 0.0;
    for (t, row) in rows.iter().enumerate() {
        let step = t as u64 + 1;
        for (j, &sim) in row.iter().enumerate() {
            let ana = analytic_mode_intensity(prof.couplings[j], prof.deltas[j], step);
            let dev = (sim - ana).abs();
            max_dev = max_dev.max(dev);
            table.row([
                step.to_string(),
                j.to_string(),
                e.frequencies()[j].to_string(),
                prof.deltas[j].to_string(),
                sim.to_string(),
                ana.to_string(),
                dev.to_string(),
            ]);
        }
    }
    let files = vec![table.write(dir, "oracle.csv")?];
    let pass = max_dev <= ORACLE_TOL;
    let summary = json!({ "max_abs_deviation": max_dev, "tolerance": ORACLE_TOL, "pass": pass });
    let spectrum = spectrum_summary(exp, &e, Some(phi))?;
    let message = format!("max |simulated - analytic| = {max_dev:.3e} (tolerance {ORACLE_TOL:e})");
    Report {
        phi: Some(phi),
        spectrum: Some(spectrum),
        summary: Some(summary),
        exit_code: if pass { EXIT_OK } else { EXIT_NUMERICAL },
        ..Report::new(Command::Oracle, files, message)
    }
    .finish(exp, dir)
}
