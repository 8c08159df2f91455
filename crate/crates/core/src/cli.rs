//! The `radwave` command-line tool: configuration, subcommands and the
//! files each one writes.
//!
//! A run is described by one JSON document ([`ExperimentConfig`]); a few
//! top-level fields can be overridden by flags. Every output directory gets a
//! `manifest.json` holding the resolved configuration and the tool version.
//! Failures print one JSON line on stderr and exit with 1 (bad input),
//! 2 (numerical failure) or 3 (missing coverage).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::acceptance;
use crate::conformal::{dual_discrepancy, push_value, ConformalChart};
use crate::diagnostics::{
    decay_bound_monitor, divergence_identity_residual, lightcone_flux, pseudo_energy,
    tail_exponent_fit, uniform_bound_report, DecaySeries, EnergyMonitor, ProbeSeries,
};
use crate::dual::{evolve_from_forward, DualSettings};
use crate::error::{Error, Result};
use crate::grid::{FieldKind, GridSpec, InitialDataSpec, SpacetimeField};
use crate::solver::{evolve_forward_with, EvolveOptions, LevelView};

pub const VERSION: &str = concat!("radwave ", env!("CARGO_PKG_VERSION"));
pub const WORKERS_ENV: &str = "RADWAVE_WORKERS";

/// Settings of `transform`: the transformed grid plus the flux segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformConfig {
    #[serde(flatten)]
    pub dual: DualSettings,
    pub flux_t0: Vec<f64>,
    /// Levels between pseudo-energy samples.
    pub energy_every: usize,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            dual: DualSettings::default(),
            flux_t0: vec![-0.9, -0.5, -0.2, -0.1],
            energy_every: 1,
        }
    }
}

fn default_energy_every() -> usize {
    1
}

fn default_energy_tolerance() -> f64 {
    1e-3
}

fn default_store_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub p: f64,
    pub data: InitialDataSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub probes: Vec<f64>,
    #[serde(default)]
    pub windows: Vec<(f64, f64)>,
    pub outputs: PathBuf,
    /// Reserved for randomized data; the pipeline itself is deterministic.
    #[serde(default)]
    pub seed: u64,
    /// Solver steps per stored level of `field.bin`.
    #[serde(default = "default_store_every")]
    pub store_every: usize,
    /// Solver steps per energy and decay sample.
    #[serde(default = "default_energy_every")]
    pub energy_every: usize,
    #[serde(default = "default_energy_tolerance")]
    pub energy_tolerance: f64,
    #[serde(default)]
    pub transform: TransformConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 2.0 && self.p.is_finite()) {
            return Err(Error::config("p", format!("power must be finite and > 2, got {}", self.p)));
        }
        self.grid.validate()?;
        self.data.validate(self.p)?;
        if self.store_every == 0 || !self.grid.steps().is_multiple_of(self.store_every) {
            return Err(Error::config(
                "store_every",
                format!("{} does not divide {} steps", self.store_every, self.grid.steps()),
            ));
        }
        if self.energy_every == 0 {
            return Err(Error::config("energy_every", "must be positive"));
        }
        if !(self.energy_tolerance > 0.0) {
            return Err(Error::config("energy_tolerance", "must be positive"));
        }
        for &r in &self.probes {
            if !(r >= 0.0 && r < self.grid.r_max) {
                return Err(Error::config("probes", format!("radius {r} outside [0, r_max)")));
            }
        }
        for &(lo, hi) in &self.windows {
            if !(lo < hi) {
                return Err(Error::config("windows", format!("empty window [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[derive(Debug, Parser)]
#[command(name = "radwave", version, about = "Radial defocusing wave equation laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Overrides {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub outputs: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub store_every: Option<usize>,
}

impl Overrides {
    fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(p) = self.p {
            config.p = p;
        }
        if let Some(o) = &self.outputs {
            config.outputs = o.clone();
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(s) = self.store_every {
            config.store_every = s;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    P,
    Amplitude,
    H,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the forward problem and write field, energy and decay files.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Push a forward run onto the backward cone and evolve it there.
    Transform {
        run: PathBuf,
        /// Configuration to use instead of the run's manifest.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory, `<run>/transform` by default.
        #[arg(long)]
        outputs: Option<PathBuf>,
    },
    /// Fit tail exponents at probe radii over time windows.
    Fit {
        run: PathBuf,
        /// Comma-separated probe radii; defaults to the run's probes.
        #[arg(long, value_delimiter = ',')]
        probes: Option<Vec<f64>>,
        /// Windows as lo:hi, comma-separated; defaults to the run's windows.
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<String>>,
        /// Output directory, `<run>/fit` by default.
        #[arg(long)]
        outputs: Option<PathBuf>,
    },
    /// Run one simulation per value along an axis and tabulate the results.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the acceptance suite.
    Validate {
        /// Comma-separated criterion numbers; all by default.
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<u8>>,
        /// Write `validation.json` here.
        #[arg(long)]
        outputs: Option<PathBuf>,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Diagnostics go to stderr as one JSON line.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", json!({"error": "usage", "message": first, "exit_code": 1}));
            return 1;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string(), "exit_code": code}));
            code
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Simulate { config, overrides } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            overrides.apply(&mut cfg);
            let summary = cmd_simulate(&cfg)?;
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            Ok(0)
        }
        Command::Transform {
            run,
            config,
            outputs,
        } => {
            let cfg = match config {
                Some(path) => ExperimentConfig::load(&path)?,
                None => load_manifest_config(&run)?,
            };
            let out = outputs.unwrap_or_else(|| run.join("transform"));
            let summary = cmd_transform(&run, &cfg, &out)?;
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            Ok(0)
        }
        Command::Fit {
            run,
            probes,
            windows,
            outputs,
        } => {
            let cfg = load_manifest_config(&run)?;
            let probes = probes.unwrap_or_else(|| cfg.probes.clone());
            let windows = match windows {
                Some(w) => w.iter().map(|s| parse_window(s)).collect::<Result<Vec<_>>>()?,
                None => cfg.windows.clone(),
            };
            let out = outputs.unwrap_or_else(|| run.join("fit"));
            let fits = cmd_fit(&run, &probes, &windows, &out)?;
            println!("{}", serde_json::to_string(&fits).expect("fits serialize"));
            Ok(0)
        }
        Command::Sweep {
            config,
            axis,
            values,
            overrides,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            overrides.apply(&mut cfg);
            let rows = cmd_sweep(&cfg, axis, &values)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            println!("{}", json!({"rows": rows.len(), "failed": failed}));
            Ok(0)
        }
        Command::Validate { criteria, outputs } => {
            let ids = criteria.unwrap_or_else(|| (1..=11).collect());
            if let Some(bad) = ids.iter().find(|&&id| !(1..=11).contains(&id)) {
                return Err(Error::config("criteria", format!("no criterion {bad}")));
            }
            let outcomes = cmd_validate(&ids, outputs.as_deref())?;
            for o in &outcomes {
                println!("{}", o.line());
            }
            Ok(if outcomes.iter().all(|o| o.passed) { 0 } else { 2 })
        }
    }
}

fn parse_window(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::config("windows", format!("expected lo:hi, got `{s}`"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    Ok((lo, hi))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json serializes");
    text.push('\n');
    write_text(path, &text)
}

fn write_manifest(dir: &Path, command: &str, config: Value) -> Result<()> {
    write_json(
        &dir.join("manifest.json"),
        &json!({"version": VERSION, "command": command, "config": config}),
    )
}

fn load_manifest_config(run: &Path) -> Result<ExperimentConfig> {
    let path = run.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Value =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let config = manifest
        .get("config")
        .cloned()
        .ok_or_else(|| Error::Format(format!("{} has no config", path.display())))?;
    serde_json::from_value(config).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn csv<const N: usize>(header: &str, rows: impl Iterator<Item = [f64; N]>) -> String {
    let mut out = format!("{header}\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn decay_csv(decay: &DecaySeries) -> String {
    csv(
        "t,b,running_max",
        (0..decay.t.len()).map(|i| [decay.t[i], decay.b[i], decay.running_max[i]]),
    )
}

/// Scalars reported by `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub steps: usize,
    pub levels_stored: usize,
    pub t_final: f64,
    pub max_abs_phi: f64,
    pub all_zero: bool,
    pub cfl: f64,
    pub nonlinearity_evaluations: u64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub energy_drift: f64,
    pub energy_tolerance: f64,
    pub energy_within_tolerance: bool,
    pub decay_plateau_ratio: Option<f64>,
}

struct SimulateOutput {
    summary: SimulateSummary,
    field: SpacetimeField,
    probes: Vec<ProbeSeries>,
}

fn simulate_in_memory(cfg: &ExperimentConfig) -> Result<SimulateOutput> {
    cfg.validate()?;
    let mut energy = EnergyMonitor::new(cfg.p, cfg.energy_every);
    let mut monitor = crate::diagnostics::ForwardMonitor::new(cfg.p, cfg.energy_every, &cfg.probes);
    let mut obs = |v: &LevelView| {
        energy.observe(v);
        monitor.observe(v);
    };
    let opts = EvolveOptions {
        store_every: cfg.store_every,
    };
    let report = evolve_forward_with(&cfg.data, &cfg.grid, cfg.p, &opts, Some(&mut obs))?;
    if let Some(e) = energy.error.take() {
        return Err(e);
    }
    let first = energy.records.first().map_or(0.0, |r| r.total);
    let last = energy.records.last().map_or(0.0, |r| r.total);
    let drift = if first == 0.0 { 0.0 } else { energy.relative_drift()? };
    let plateau = monitor.decay.plateau_ratio(cfg.grid.t_end).ok();
    let probes: Vec<ProbeSeries> = (0..cfg.probes.len()).map(|k| monitor.probe_series(k)).collect();
    let summary = SimulateSummary {
        steps: report.steps,
        levels_stored: report.field.levels(),
        t_final: report.field.t_final(),
        max_abs_phi: report.max_abs_phi,
        all_zero: report.max_abs_phi == 0.0,
        cfl: report.cfl_used,
        nonlinearity_evaluations: report.nonlinearity_evaluations as u64,
        energy_initial: first,
        energy_final: last,
        energy_drift: drift,
        energy_tolerance: cfg.energy_tolerance,
        energy_within_tolerance: drift < cfg.energy_tolerance,
        decay_plateau_ratio: plateau,
    };
    let energy_csv = csv(
        "t,kinetic,gradient,potential,total",
        energy
            .records
            .iter()
            .map(|r| [r.t, r.kinetic, r.gradient, r.potential, r.total]),
    );
    let out = &cfg.outputs;
    create_dir(out)?;
    write_manifest(out, "simulate", cfg.to_json())?;
    report.field.write_binary(&out.join("field.bin"))?;
    write_text(&out.join("energy.csv"), &energy_csv)?;
    write_text(&out.join("decay.csv"), &decay_csv(&monitor.decay))?;
    write_text(&out.join("probes.csv"), &probes_csv(&probes))?;
    write_json(&out.join("summary.json"), &serde_json::to_value(&summary).expect("summary"))?;
    Ok(SimulateOutput {
        summary,
        field: report.field,
        probes,
    })
}

fn probes_csv(probes: &[ProbeSeries]) -> String {
    let mut out = String::from("r,t,phi\n");
    for s in probes {
        for (t, phi) in s.t.iter().zip(&s.phi) {
            out.push_str(&format!("{},{t},{phi}\n", s.r_probe));
        }
    }
    out
}

/// Forward evolution of `cfg`. Writes `manifest.json`, `field.bin` (χ on
/// every `store_every`-th level), `energy.csv`, `decay.csv`, `probes.csv`
/// and `summary.json` into `cfg.outputs`.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<SimulateSummary> {
    simulate_in_memory(cfg).map(|o| o.summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformSummary {
    pub dual_discrepancy: f64,
    pub divergence_residual: f64,
    pub divergence_max: f64,
    pub max_flux_ratio: f64,
    pub sup_psi: f64,
    pub pseudo_energy_initial: f64,
    pub forward_stride: usize,
}

/// Pushes the forward run in `run` onto t̃ = −1, evolves the transformed
/// equation and writes `pushed.bin` (push-forward on the transformed grid,
/// zero where t̃ + r̃ > u_cut), `dual.bin`, `pseudo_energy.csv`, `flux.csv`
/// and `summary.json` into `out`.
pub fn cmd_transform(run: &Path, cfg: &ExperimentConfig, out: &Path) -> Result<TransformSummary> {
    let forward = SpacetimeField::read_binary(&run.join("field.bin"))?;
    if forward.kind != FieldKind::Forward {
        return Err(Error::config("run", "transform needs a forward run"));
    }
    let p = forward.p;
    let chart = ConformalChart::new(p)?;
    let settings = cfg.transform.dual;
    let dual = evolve_from_forward(&forward, &chart, &settings)?.field;
    let u_cut = settings.u_cut;

    let mut pushed = SpacetimeField::zeros(&dual.spec, dual.stride, p, FieldKind::Transformed)?;
    pushed.support_edge = dual.support_edge;
    let h = dual.spec.h;
    for i in 0..pushed.levels() {
        let t = pushed.level_time(i);
        for j in 1..pushed.nodes() {
            let r = j as f64 * h;
            if t + r <= u_cut && r < -t {
                pushed.values[[i, j]] = r * push_value(&forward, &chart, t, r)?;
            }
        }
    }
    let discrepancy = dual_discrepancy(&forward, &dual, &chart, u_cut)?;
    let divergence = divergence_identity_residual(&dual, &chart, p, u_cut)?;
    let bound = uniform_bound_report(&dual)?;

    let mut flux_rows = Vec::new();
    for &t0 in &cfg.transform.flux_t0 {
        let rec = lightcone_flux(&dual, t0, &chart, p, None)?;
        flux_rows.push([rec.t0, rec.flux, rec.e0, rec.ratio, rec.potential]);
    }
    let every = cfg.transform.energy_every.max(1);
    let mut energy_rows = Vec::new();
    for i in (0..dual.levels()).step_by(every) {
        let e = pseudo_energy(&dual.time_slice(i), &chart, p)?;
        energy_rows.push([e.t, e.kinetic, e.gradient, e.potential, e.total]);
    }

    create_dir(out)?;
    let mut resolved = cfg.to_json();
    resolved["source_run"] = json!(run.display().to_string());
    write_manifest(out, "transform", resolved)?;
    pushed.write_binary(&out.join("pushed.bin"))?;
    dual.write_binary(&out.join("dual.bin"))?;
    write_text(
        &out.join("pseudo_energy.csv"),
        &csv("t,kinetic,gradient,potential,total", energy_rows.iter().copied()),
    )?;
    write_text(
        &out.join("flux.csv"),
        &csv("t0,flux,e0,ratio,potential", flux_rows.iter().copied()),
    )?;
    let summary = TransformSummary {
        dual_discrepancy: discrepancy,
        divergence_residual: divergence.max_norm,
        divergence_max: divergence.divergence,
        max_flux_ratio: flux_rows.iter().map(|r| r[3]).fold(0.0, f64::max),
        sup_psi: bound.overall,
        pseudo_energy_initial: energy_rows.first().map_or(0.0, |r| r[4]),
        forward_stride: forward.stride,
    };
    write_json(&out.join("summary.json"), &serde_json::to_value(&summary).expect("summary"))?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub r_probe: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub exponent: f64,
    pub amplitude: f64,
    pub rms_residual: f64,
    pub samples: usize,
    pub oscillatory: bool,
}

/// Tail fits of the stored field in `run` for every probe and window.
/// Writes `fits.csv` and `decay.csv` into `out`.
pub fn cmd_fit(run: &Path, probes: &[f64], windows: &[(f64, f64)], out: &Path) -> Result<Vec<FitRow>> {
    let field = SpacetimeField::read_binary(&run.join("field.bin"))?;
    let fits = fit_field(&field, probes, windows)?;
    let decay = decay_bound_monitor(&field, field.p)?;
    create_dir(out)?;
    write_manifest(
        out,
        "fit",
        json!({"source_run": run.display().to_string(), "probes": probes, "windows": windows}),
    )?;
    write_text(&out.join("fits.csv"), &fits_csv(&fits))?;
    write_text(&out.join("decay.csv"), &decay_csv(&decay))?;
    Ok(fits)
}

fn fit_field(field: &SpacetimeField, probes: &[f64], windows: &[(f64, f64)]) -> Result<Vec<FitRow>> {
    let series = probes
        .iter()
        .map(|&r| ProbeSeries::from_field(field, r))
        .collect::<Result<Vec<_>>>()?;
    fit_series(&series, windows)
}

fn fit_series(series: &[ProbeSeries], windows: &[(f64, f64)]) -> Result<Vec<FitRow>> {
    let mut rows = Vec::new();
    for s in series {
        for &w in windows {
            let f = tail_exponent_fit(s, w)?;
            rows.push(FitRow {
                r_probe: f.r_probe,
                t_lo: f.window.0,
                t_hi: f.window.1,
                exponent: f.exponent,
                amplitude: f.amplitude,
                rms_residual: f.rms_residual,
                samples: f.samples,
                oscillatory: f.oscillatory,
            });
        }
    }
    Ok(rows)
}

fn fits_csv(rows: &[FitRow]) -> String {
    let mut out = String::from("r_probe,t_lo,t_hi,exponent,amplitude,rms_residual,samples,oscillatory\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.r_probe, r.t_lo, r.t_hi, r.exponent, r.amplitude, r.rms_residual, r.samples, r.oscillatory
        ));
    }
    out
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub status: String,
    pub max_abs_phi: Option<f64>,
    pub energy_drift: Option<f64>,
    pub decay_plateau_ratio: Option<f64>,
    /// Exponent of the first probe and window, when both are configured.
    pub exponent: Option<f64>,
    /// h axis only: max |φ − φ_coarser| at t_end on the coarsest nodes.
    pub difference: Option<f64>,
    /// h axis only: log₂ of consecutive differences.
    pub order: Option<f64>,
}

/// Worker count from `RADWAVE_WORKERS`, else the available parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::config(WORKERS_ENV, format!("expected a positive integer, got `{s}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn value_label(value: f64) -> String {
    format!("{value}")
}

fn instantiate(template: &ExperimentConfig, axis: SweepAxis, value: f64) -> ExperimentConfig {
    let mut cfg = template.clone();
    match axis {
        SweepAxis::P => cfg.p = value,
        SweepAxis::Amplitude => cfg.data.amplitude = value,
        SweepAxis::H => {
            // keep the sampled times fixed as the grid is refined
            let factor = (template.grid.h / value).round().max(1.0) as usize;
            cfg.grid.h = value;
            cfg.store_every = template.store_every * factor;
            cfg.energy_every = template.energy_every * factor;
        }
    }
    let axis_name = match axis {
        SweepAxis::P => "p",
        SweepAxis::Amplitude => "amplitude",
        SweepAxis::H => "h",
    };
    cfg.outputs = template.outputs.join(format!("{axis_name}={}", value_label(value)));
    cfg
}

struct SweepRun {
    row: SweepRow,
    final_phi: Option<(f64, Vec<f64>)>,
}

fn sweep_one(cfg: &ExperimentConfig) -> SweepRun {
    let outcome = simulate_in_memory(cfg).map(|o| {
        let fits = fit_series(&o.probes, &cfg.windows[..cfg.windows.len().min(1)]);
        let exponent = match (cfg.probes.is_empty(), fits) {
            (false, Ok(f)) => f.first().map(|f| f.exponent),
            _ => None,
        };
        let last = o.field.levels() - 1;
        (o.summary, exponent, (o.field.spec.h, o.field.phi_row(last)))
    });
    match outcome {
        Ok((summary, exponent, final_phi)) => SweepRun {
            row: SweepRow {
                value: 0.0,
                status: "ok".into(),
                max_abs_phi: Some(summary.max_abs_phi),
                energy_drift: Some(summary.energy_drift),
                decay_plateau_ratio: summary.decay_plateau_ratio,
                exponent,
                difference: None,
                order: None,
            },
            final_phi: Some(final_phi),
        },
        Err(e) => SweepRun {
            row: SweepRow {
                value: 0.0,
                status: format!("failed: {}", e.kind()),
                max_abs_phi: None,
                energy_drift: None,
                decay_plateau_ratio: None,
                exponent: None,
                difference: None,
                order: None,
            },
            final_phi: None,
        },
    }
}

/// Difference of two final slices on the nodes of the coarser one.
fn slice_difference(coarse: &(f64, Vec<f64>), fine: &(f64, Vec<f64>)) -> Option<f64> {
    let ratio = coarse.0 / fine.0;
    let factor = ratio.round() as usize;
    if factor < 1 || (ratio - factor as f64).abs() > 1e-9 {
        return None;
    }
    let mut worst: f64 = 0.0;
    for (j, c) in coarse.1.iter().enumerate() {
        let f = fine.1.get(j * factor)?;
        worst = worst.max((c - f).abs());
    }
    Some(worst)
}

/// Runs the template once per value of `axis`, in parallel, and writes
/// `sweep.csv` (rows sorted by value) plus a manifest into
/// `template.outputs`. Each run's own files land in `<axis>=<value>/`.
pub fn cmd_sweep(template: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::config("values", "sweep needs at least one value"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::config("values", "sweep values must be finite"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup();
    let configs: Vec<ExperimentConfig> = sorted.iter().map(|&v| instantiate(template, axis, v)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| Error::config(WORKERS_ENV, e.to_string()))?;
    let mut runs: Vec<SweepRun> = pool.install(|| configs.par_iter().map(sweep_one).collect());
    for (run, &v) in runs.iter_mut().zip(&sorted) {
        run.row.value = v;
    }
    if axis == SweepAxis::H {
        // rows are in increasing h; compare each run with the next coarser one
        for i in 0..runs.len().saturating_sub(1) {
            if let (Some(fine), Some(coarse)) = (&runs[i].final_phi, &runs[i + 1].final_phi) {
                runs[i].row.difference = slice_difference(coarse, fine);
            }
        }
        for i in 0..runs.len().saturating_sub(2) {
            if let (Some(fine), Some(coarse)) = (runs[i].row.difference, runs[i + 1].row.difference) {
                let ratio = runs[i + 2].row.value / runs[i + 1].row.value;
                if fine > 0.0 && coarse > 0.0 {
                    runs[i].row.order = Some((coarse / fine).ln() / ratio.ln());
                }
            }
        }
    }
    let rows: Vec<SweepRow> = runs.into_iter().map(|r| r.row).collect();
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    let mut text = String::from("value,status,max_abs_phi,energy_drift,decay_plateau_ratio,exponent,difference,order\n");
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.value,
            r.status,
            opt(r.max_abs_phi),
            opt(r.energy_drift),
            opt(r.decay_plateau_ratio),
            opt(r.exponent),
            opt(r.difference),
            opt(r.order)
        ));
    }
    create_dir(&template.outputs)?;
    let mut resolved = template.to_json();
    resolved["sweep"] = json!({"axis": axis, "values": sorted});
    write_manifest(&template.outputs, "sweep", resolved)?;
    write_text(&template.outputs.join("sweep.csv"), &text)?;
    Ok(rows)
}

/// Runs the selected acceptance criteria; writes `validation.json` into
/// `out` when given.
pub fn cmd_validate(ids: &[u8], out: Option<&Path>) -> Result<Vec<acceptance::Outcome>> {
    let outcomes: Vec<_> = ids.iter().map(|&id| acceptance::run(id)).collect();
    if let Some(dir) = out {
        create_dir(dir)?;
        write_json(
            &dir.join("validation.json"),
            &json!({"version": VERSION, "criteria": outcomes}),
        )?;
    }
    Ok(outcomes)
}
