use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sector_spectral::experiments::{self, parse_beta_list, parse_usize_list, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "sector-spectral", version, about = "Slepian spectral filtering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Eigenvalues of Z_W(beta) with k* annotation.
    Spectrum,
    /// Test MSE vs number of filters for several sector widths.
    Tomography,
    /// Tomography sweep across hidden dimensions.
    DimAblation,
    /// Slepian vs Fourier filter banks on shared trials.
    BasisAblation,
    /// Online loss on random shift registers.
    LowerBound,
    /// Numerical verification suite; exits 2 if any check fails.
    TheoryChecks,
}

#[derive(clap::Args)]
struct Opts {
    /// Window length(s), comma list or lo:hi:step.
    #[arg(long = "W", global = true)]
    window: Option<String>,
    /// Sector half-angle(s): `0.5pi`, `pi/4` or radians, comma separated.
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<String>,
    /// Filter counts, comma list or lo:hi:step.
    #[arg(long = "K", global = true)]
    k: Option<String>,
    /// Hidden dimension(s), comma list or lo:hi:step.
    #[arg(long, global = true)]
    d: Option<String>,
    #[arg(long = "T", global = true)]
    len: Option<usize>,
    #[arg(long = "T-train", global = true)]
    t_train: Option<usize>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long = "r-min", global = true)]
    r_min: Option<f64>,
    #[arg(long = "r-max", global = true)]
    r_max: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run trials sequentially.
    #[arg(long, global = true)]
    serial: bool,
}

fn build_config(command: Command, o: Opts) -> sector_spectral::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::defaults(command);
    if let Some(s) = o.window {
        cfg.windows = parse_usize_list(&s)?;
    }
    if let Some(s) = o.beta {
        cfg.betas = parse_beta_list(&s)?;
    }
    if let Some(s) = o.k {
        cfg.ks = parse_usize_list(&s)?;
    }
    if let Some(s) = o.d {
        cfg.dims = parse_usize_list(&s)?;
    }
    cfg.len = o.len.unwrap_or(cfg.len);
    cfg.t_train = o.t_train.unwrap_or(cfg.t_train);
    cfg.trials = o.trials.unwrap_or(cfg.trials);
    cfg.lambda = o.lambda.unwrap_or(cfg.lambda);
    cfg.seed = o.seed.unwrap_or(cfg.seed);
    cfg.r_min = o.r_min.unwrap_or(cfg.r_min);
    cfg.r_max = o.r_max.unwrap_or(cfg.r_max);
    if let Some(out) = o.out {
        cfg.out = out;
    }
    cfg.serial = o.serial;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let command = match cli.command {
        Cmd::Spectrum => Command::Spectrum,
        Cmd::Tomography => Command::Tomography,
        Cmd::DimAblation => Command::DimAblation,
        Cmd::BasisAblation => Command::BasisAblation,
        Cmd::LowerBound => Command::LowerBound,
        Cmd::TheoryChecks => Command::TheoryChecks,
    };
    let cfg = match build_config(command, cli.opts) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match experiments::run(&cfg) {
        Ok(summary) => {
            println!("wrote {}", summary.csv.display());
            println!("wrote {}", summary.manifest.display());
            if summary.passed == Some(false) {
                eprintln!("theory checks failed; see {}", summary.csv.display());
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
