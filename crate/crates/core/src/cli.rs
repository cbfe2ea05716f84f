//! Command-line front end: `toa | bias | aoa | simulate | fit`.
//!
//! Every subcommand reads a TOML [`RunConfig`], applies flag overrides,
//! validates, computes, and writes CSV/JSON files into the output directory.
//! CSV values carry 17 significant digits so they parse back bit for bit.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::analytic::{
    bias_from_toa, default_grid, intensity, toa_quantile, toa_with_blocking, toa_without_blocking, CurveKind,
    CurveMeta, DistributionCurve, ToaModel,
};
use crate::aoa::{
    aoa_support, degree_bins, empirical_bin_masses, marginal_aoa_bin_masses, marginal_aoa_pdf_many, total_variation,
};
use crate::approx::{bias_for_fit, exponential_bias_rate, fit_all, FitMethod};
use crate::config::{RunConfig, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::montecarlo::{empirical_cdf, ks_distance, simulate_first_arrival, Mode};

/// CDF level the default TOA grid reaches.
pub const GRID_COVERAGE: f64 = 1.0 - 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "firstpath",
    version,
    about = "First-arriving reflection statistics under a Boolean model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Path-length (TOA) distribution of the first arrival.
    Toa,
    /// NLOS bias distribution, the TOA shifted by `d`.
    Bias,
    /// Marginal angle-of-arrival density of the first arrival.
    Aoa,
    /// Monte Carlo first arrivals compared with the analytic curve.
    Simulate,
    /// Surrogate families fitted to the bias, scored by KL divergence.
    Fit,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Toa => "toa",
            Command::Bias => "bias",
            Command::Aoa => "aoa",
            Command::Simulate => "simulate",
            Command::Fit => "fit",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Simulation seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Number of kept realizations.
    #[arg(long, global = true, value_name = "N")]
    pub realizations: Option<usize>,
    /// no-blocking | independent-blocking | correlated-blocking | correlated-los-blocked
    #[arg(long, global = true, value_name = "MODE")]
    pub mode: Option<Mode>,
    /// Points on the TOA and bias grids.
    #[arg(long, global = true, value_name = "N")]
    pub grid_points: Option<usize>,
    /// moments | analytic-exp
    #[arg(long, global = true, value_name = "METHOD")]
    pub method: Option<FitMethod>,
}

impl Overrides {
    /// Applies the flags on top of `cfg` and re-validates.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(dir) = &self.out {
            cfg.output.dir = dir.clone();
        }
        if let Some(seed) = self.seed {
            cfg.simulation.seed = seed;
        }
        if let Some(n) = self.realizations {
            cfg.simulation.realizations = n;
        }
        if let Some(mode) = self.mode {
            cfg.simulation.mode = mode;
        }
        if let Some(n) = self.grid_points {
            cfg.grid.points = n;
        }
        if let Some(m) = self.method {
            cfg.fit.method = m;
        }
        cfg.validate()
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let path = cli.overrides.config.as_deref().ok_or_else(|| Error::Config {
        field: "--config".into(),
        message: "a configuration file is required".into(),
    })?;
    let mut cfg = RunConfig::load(path)?;
    cli.overrides.apply(&mut cfg)?;
    run_command(cli.command, &cfg)
}

pub fn run_command(command: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    match command {
        Command::Toa => cmd_toa(cfg),
        Command::Bias => cmd_bias(cfg),
        Command::Aoa => cmd_aoa(cfg),
        Command::Simulate => cmd_simulate(cfg),
        Command::Fit => cmd_fit(cfg),
    }
}

/// TOA curve of the configured mode's analytic law on the configured grid.
pub fn toa_curve(cfg: &RunConfig) -> Result<DistributionCurve> {
    let model = cfg.model()?;
    let link = cfg.link()?;
    let kind = cfg.simulation.mode.reference();
    let upper = match cfg.grid.upper_m {
        Some(u) => u,
        None => toa_quantile(GRID_COVERAGE, kind, &model, &link)?,
    };
    let grid = default_grid(&link, upper, cfg.grid.points)?;
    match kind {
        ToaModel::WithBlocking => toa_with_blocking(&model, &link, &grid),
        ToaModel::WithoutBlocking => toa_without_blocking(&link, &model, &grid),
    }
}

/// Fields shared by every JSON sidecar.
fn sidecar(command: Command, cfg: &RunConfig) -> Result<Value> {
    let model = cfg.model()?;
    let link = cfg.link()?;
    let total = intensity(link.d(), f64::INFINITY, &model, &link)?;
    Ok(json!({
        "format_version": FORMAT_VERSION,
        "config_format": "toml",
        "command": command.name(),
        "config": cfg,
        "lambda_hat_inf": total.value,
        "no_reflection_probability": (-total.value).exp(),
        "tail_error_bound": total.tail_error_bound,
    }))
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.output.dir)?;
    Ok(&cfg.output.dir)
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// 17 significant digits: round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `header` and the columns row by row.
pub fn write_columns(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    let rows = columns.first().map_or(0, |c| c.len());
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| fmt_f64(c[i]))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric CSV with a header row into columns.
pub fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        for (col, field) in cols.iter_mut().zip(rec.iter()) {
            col.push(
                field
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("`{field}`: {e}")))?,
            );
        }
    }
    Ok((header, cols))
}

pub fn write_curve_csv(path: &Path, curve: &DistributionCurve) -> Result<()> {
    write_columns(path, &["x", "pdf", "cdf"], &[&curve.grid, &curve.pdf, &curve.cdf])
}

/// Inverse of [`write_curve_csv`]; metadata is not stored in the CSV.
pub fn read_curve_csv(path: &Path) -> Result<DistributionCurve> {
    let (header, mut cols) = read_columns(path)?;
    if header != ["x", "pdf", "cdf"] {
        return Err(Error::Parse(format!(
            "expected header x,pdf,cdf, got {}",
            header.join(",")
        )));
    }
    let cdf = cols.pop().unwrap_or_default();
    let pdf = cols.pop().unwrap_or_default();
    let grid = cols.pop().unwrap_or_default();
    Ok(DistributionCurve {
        grid,
        pdf,
        cdf,
        kind: CurveKind::Continuous,
        meta: CurveMeta {
            source: path.display().to_string(),
            params: Value::Null,
        },
    })
}

fn curve_summary(curve: &DistributionCurve) -> Value {
    json!({
        "points": curve.len(),
        "x_min": curve.grid.first(),
        "x_max": curve.grid.last(),
        "cdf_at_x_max": curve.cdf.last(),
        "pdf_mass": curve.pdf_mass(),
        "source": curve.meta.source,
    })
}

pub fn cmd_toa(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = out_dir(cfg)?;
    let curve = toa_curve(cfg)?;
    let csv = dir.join("toa.csv");
    write_curve_csv(&csv, &curve)?;
    let mut side = sidecar(Command::Toa, cfg)?;
    side["curve"] = curve_summary(&curve);
    let js = dir.join("toa.json");
    write_json(&js, &side)?;
    Ok(vec![csv, js])
}

pub fn cmd_bias(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = out_dir(cfg)?;
    let curve = bias_from_toa(&toa_curve(cfg)?, &cfg.link()?);
    let csv = dir.join("bias.csv");
    write_curve_csv(&csv, &curve)?;
    let mut side = sidecar(Command::Bias, cfg)?;
    side["curve"] = curve_summary(&curve);
    side["mean_m"] = curve.mean().into();
    let js = dir.join("bias.json");
    write_json(&js, &side)?;
    Ok(vec![csv, js])
}

pub fn cmd_aoa(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = out_dir(cfg)?;
    let model = cfg.model()?;
    let link = cfg.link()?;
    let n = cfg.aoa.points;
    let alphas: Vec<f64> = (0..n).map(|i| std::f64::consts::TAU * i as f64 / n as f64).collect();
    let pdf = marginal_aoa_pdf_many(&alphas, &model, &link)?;
    let csv = dir.join("aoa.csv");
    write_columns(&csv, &["alpha_rad", "pdf"], &[&alphas, &pdf])?;

    let masses = marginal_aoa_bin_masses(&degree_bins(cfg.aoa.bin_width_deg), &model, &link)?;
    let support: Vec<Value> = aoa_support(&model)
        .intervals()
        .iter()
        .map(|iv| {
            json!({
                "lo_deg": iv.lo.to_degrees(),
                "hi_deg": iv.hi.to_degrees(),
                "lo_closed": iv.lo_closed,
                "hi_closed": iv.hi_closed,
            })
        })
        .collect();
    let mut side = sidecar(Command::Aoa, cfg)?;
    side["support"] = support.into();
    side["total_mass"] = masses.iter().sum::<f64>().into();
    let js = dir.join("aoa.json");
    write_json(&js, &side)?;
    Ok(vec![csv, js])
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = out_dir(cfg)?;
    let sim = cfg.simulation()?;
    let out = simulate_first_arrival(&sim)?;

    let samples = dir.join("samples.csv");
    let mut w = csv::Writer::from_path(&samples).map_err(csv_err)?;
    w.write_record(["s", "alpha_rad", "quadrant", "theta_rad"])
        .map_err(csv_err)?;
    for s in &out.samples {
        w.write_record([
            fmt_f64(s.s),
            fmt_f64(s.alpha),
            s.quadrant.label().to_owned(),
            fmt_f64(s.theta),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;

    let emp = empirical_cdf(&out.path_lengths())?;
    let emp_csv = dir.join("empirical_cdf.csv");
    write_columns(&emp_csv, &["x", "cdf"], &[&emp.grid, &emp.cdf])?;

    let reference = toa_curve(cfg)?;
    let ks = ks_distance(&emp, &reference);
    let aoa_tv = match sim.mode {
        Mode::NoBlocking => None,
        _ => {
            let edges = degree_bins(cfg.aoa.bin_width_deg);
            let alphas: Vec<f64> = out.samples.iter().map(|s| s.alpha).collect();
            let analytic = marginal_aoa_bin_masses(&edges, &sim.model, &sim.link)?;
            Some(total_variation(&empirical_bin_masses(&alphas, &edges)?, &analytic))
        }
    };
    let mut side = sidecar(Command::Simulate, cfg)?;
    side["mode"] = sim.mode.name().into();
    side["reference"] = reference.meta.source.clone().into();
    side["s_window_m"] = sim.s_window.into();
    side["ks"] = ks.into();
    side["aoa_total_variation"] = json!(aoa_tv);
    side["diagnostics"] = json!(out.diagnostics);
    let js = dir.join("comparison.json");
    write_json(&js, &side)?;
    Ok(vec![samples, emp_csv, js])
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = out_dir(cfg)?;
    let model = cfg.model()?;
    let link = cfg.link()?;
    let bias = bias_for_fit(&model, &link, cfg.grid.points)?;
    let report = fit_all(&bias, &model, cfg.fit.method)?;
    let mut side = sidecar(Command::Fit, cfg)?;
    side["analytic_exponential_rate"] = exponential_bias_rate(&model).into();
    side["bias_curve"] = curve_summary(&bias);
    side["report"] = json!(report);
    side["kl_nats"] = report
        .entries
        .iter()
        .map(|e| (e.fitted.family().name().to_owned(), json!(e.kl.value)))
        .collect::<serde_json::Map<_, _>>()
        .into();
    let js = dir.join("fit.json");
    write_json(&js, &side)?;
    Ok(vec![js])
}
