//! Experiment drivers behind the CLI: spectrum dumps, tomography sweeps,
//! ablations, the shift-register lower bound and the theory-check suite.
//!
//! Every run writes `<out>/<command>.csv` and `<out>/<command>.manifest.json`.
//! CSV bytes depend only on the configuration; wall time lives in the
//! manifest.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};

pub mod checks;
pub mod sweep;

pub use checks::{run_theory_checks, CheckOutcome};
pub use sweep::{
    lower_bound_trial, run_basis_ablation, run_dim_ablation, run_lower_bound, run_tomography, Aggregate,
    ResultRow, SweepResult,
};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_917;
/// Version of the CSV layouts, recorded in every manifest.
pub const SCHEMA_VERSION: u32 = 1;
pub const CI_METHOD: &str = "mean +- 1.96 * sample_std / sqrt(trials), normal approximation";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Tomography,
    DimAblation,
    BasisAblation,
    LowerBound,
    TheoryChecks,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Tomography => "tomography",
            Command::DimAblation => "dim-ablation",
            Command::BasisAblation => "basis-ablation",
            Command::LowerBound => "lower-bound",
            Command::TheoryChecks => "theory-checks",
        }
    }

    /// Fork index separating the random streams of different commands.
    pub(crate) fn stream_tag(self) -> u64 {
        match self {
            Command::Spectrum => 1,
            Command::Tomography => 2,
            Command::DimAblation => 3,
            Command::BasisAblation => 4,
            Command::LowerBound => 5,
            Command::TheoryChecks => 6,
        }
    }
}

/// Fully resolved experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(rename = "W")]
    pub windows: Vec<usize>,
    /// Sector half-angles in radians.
    pub betas: Vec<f64>,
    #[serde(rename = "K")]
    pub ks: Vec<usize>,
    pub dims: Vec<usize>,
    #[serde(rename = "T")]
    pub len: usize,
    #[serde(rename = "T_train")]
    pub t_train: usize,
    pub trials: usize,
    pub lambda: f64,
    pub seed: u64,
    pub r_min: f64,
    pub r_max: f64,
    pub out: PathBuf,
    /// Run trials on the calling thread instead of the rayon pool.
    pub serial: bool,
}

impl ExperimentConfig {
    /// Defaults for each command, following the experimental protocol.
    pub fn defaults(command: Command) -> Self {
        let grid: Vec<usize> = (1..=19).map(|i| 5 * i).collect();
        let mut cfg = Self {
            command,
            windows: vec![100],
            betas: vec![0.5 * PI],
            ks: grid,
            dims: vec![20],
            len: 1000,
            t_train: 800,
            trials: 20,
            lambda: 1e-5,
            seed: DEFAULT_SEED,
            r_min: 0.85,
            r_max: 0.95,
            out: PathBuf::from("results"),
            serial: false,
        };
        match command {
            Command::Spectrum => cfg.windows = vec![100, 200, 400],
            Command::Tomography => cfg.betas = vec![0.2 * PI, 0.5 * PI, 0.9 * PI],
            Command::DimAblation => cfg.dims = vec![50, 200, 800],
            Command::BasisAblation => cfg.dims = vec![100],
            Command::LowerBound => {
                cfg.dims = vec![64];
                cfg.trials = 200;
            }
            Command::TheoryChecks => {}
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let nonempty = |name: &str, n: usize| {
            if n == 0 {
                Err(param_err(format!("{name} list is empty")))
            } else {
                Ok(())
            }
        };
        nonempty("W", self.windows.len())?;
        nonempty("beta", self.betas.len())?;
        nonempty("K", self.ks.len())?;
        nonempty("d", self.dims.len())?;
        if self.windows.contains(&0) || self.dims.contains(&0) || self.ks.contains(&0) {
            return Err(param_err("W, d and K must be positive"));
        }
        if let Some(b) = self.betas.iter().find(|b| !(**b > 0.0 && **b <= PI)) {
            return Err(param_err(format!("beta must lie in (0, pi], got {b}")));
        }
        if self.trials < 1 {
            return Err(param_err("trials must be at least 1"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(param_err("lambda must be positive"));
        }
        if !(0.0 <= self.r_min && self.r_min <= self.r_max && self.r_max <= 1.0) {
            return Err(param_err("radii must satisfy 0 <= r_min <= r_max <= 1"));
        }
        let needs_split = matches!(
            self.command,
            Command::Tomography | Command::DimAblation | Command::BasisAblation
        );
        if needs_split {
            if self.t_train < 2 || self.t_train >= self.len {
                return Err(param_err(format!(
                    "need 2 <= T_train < T, got T_train={} T={}",
                    self.t_train, self.len
                )));
            }
            for &w in &self.windows {
                if let Some(k) = self.ks.iter().find(|&&k| k > w) {
                    return Err(param_err(format!("K={k} exceeds W={w}")));
                }
            }
        }
        Ok(())
    }
}

/// Parses a half-angle: `0.5pi`, `pi/4`, `0.5π`, `pi` or plain radians.
pub fn parse_beta(text: &str) -> Result<f64> {
    let s = text.trim().to_ascii_lowercase().replace('π', "pi");
    let bad = || param_err(format!("cannot parse beta '{text}'"));
    let value = if let Some((num, den)) = s.split_once('/') {
        let num = parse_pi_multiple(num.trim()).ok_or_else(bad)?;
        let den: f64 = den.trim().parse().map_err(|_| bad())?;
        num / den
    } else {
        parse_pi_multiple(&s).ok_or_else(bad)?
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

fn parse_pi_multiple(s: &str) -> Option<f64> {
    match s.strip_suffix("pi") {
        Some("") => Some(PI),
        Some(coef) => coef.trim_end_matches('*').trim().parse::<f64>().ok().map(|c| c * PI),
        None => s.parse().ok(),
    }
}

pub fn parse_beta_list(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(parse_beta).collect()
}

/// Parses `5:95:5` (inclusive range with step), `a:b` (step 1) or a comma list.
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    let bad = || param_err(format!("cannot parse integer list '{text}'"));
    let text = text.trim();
    if text.contains(':') {
        let parts: Vec<usize> = text
            .split(':')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let (lo, hi, step) = match parts[..] {
            [lo, hi] => (lo, hi, 1),
            [lo, hi, step] => (lo, hi, step),
            _ => return Err(bad()),
        };
        if step == 0 || lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).step_by(step).collect());
    }
    text.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

/// Manifest written next to each result CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub csv: String,
    pub ci_method: String,
    pub wall_time_s: f64,
    pub passed: Option<bool>,
}

/// Paths and status of a finished run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    /// `Some(false)` when the theory-check suite had a failing check.
    pub passed: Option<bool>,
}

/// Executes the configured command and writes its CSV and manifest.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary> {
    config.validate()?;
    let start = Instant::now();
    fs::create_dir_all(&config.out)?;
    let name = config.command.name();
    let csv_path = config.out.join(format!("{name}.csv"));
    let mut out = BufWriter::new(File::create(&csv_path)?);
    let passed = match config.command {
        Command::Spectrum => {
            write_spectra(config, &mut out)?;
            None
        }
        Command::Tomography => {
            run_tomography(config)?.write_csv(&mut out)?;
            None
        }
        Command::DimAblation => {
            run_dim_ablation(config)?.write_csv(&mut out)?;
            None
        }
        Command::BasisAblation => {
            run_basis_ablation(config)?.write_csv(&mut out)?;
            None
        }
        Command::LowerBound => {
            run_lower_bound(config)?.write_csv(&mut out)?;
            None
        }
        Command::TheoryChecks => {
            let outcomes = run_theory_checks(config)?;
            checks::write_checks_csv(&outcomes, &mut out)?;
            Some(outcomes.iter().all(|c| c.pass))
        }
    };
    out.flush()?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        command: name.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        csv: format!("{name}.csv"),
        ci_method: CI_METHOD.to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        passed,
    };
    let manifest_path = config.out.join(format!("{name}.manifest.json"));
    write_manifest(&manifest, &manifest_path)?;
    Ok(RunSummary {
        csv: csv_path,
        manifest: manifest_path,
        passed,
    })
}

fn write_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, manifest)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// One spectrum report per (W, beta), concatenated under a single header.
fn write_spectra<W: Write>(config: &ExperimentConfig, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(crate::infomatrix::SpectrumReport::HEADER)?;
    for &beta in &config.betas {
        for &w in &config.windows {
            let params = crate::infomatrix::SectorParams::new(w, beta)?;
            crate::infomatrix::spectrum_report(params).write_rows(&mut writer)?;
        }
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

/// `{:.16e}`: 17 significant digits, round-trips any `f64`.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
