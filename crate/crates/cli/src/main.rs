use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spherenet_cli::{run, Command, ExperimentConfig, Settings};

#[derive(Parser)]
#[command(
    name = "spherenet",
    version,
    about = "Wide random networks on the sphere and their Gaussian limits"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Gegenbauer and Hermite coefficients of the activation
    Expand(Flags),
    /// Theorem-level bound tables, one row per width
    Bounds(Flags),
    /// Monte-Carlo check of the Stein identity
    SteinCheck(Flags),
    /// Empirical W2 against width with a slope fit
    RateSweep(Flags),
    /// GP covariance on a seeded point set
    Kernel(Flags),
}

#[derive(Args)]
struct Flags {
    /// key=value configuration file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    /// relu | erf | poly:c0,c1,...  (append +centered to center)
    #[arg(long)]
    activation: Option<String>,
    /// rademacher | gaussian | generic:E_s2,E_s4
    #[arg(long)]
    s_law: Option<String>,
    /// comma-separated, strictly increasing
    #[arg(long)]
    widths: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    lmax: Option<usize>,
    /// number of random test functions for stein-check
    #[arg(long)]
    tests: Option<usize>,
    /// rate-sweep: replace the network by an independent GP cloud
    #[arg(long)]
    control: bool,
}

impl Flags {
    fn settings(&self) -> anyhow::Result<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        let pairs: [(&str, Option<String>); 10] = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("d", self.d.map(|v| v.to_string())),
            ("activation", self.activation.clone()),
            ("s_law", self.s_law.clone()),
            ("widths", self.widths.clone()),
            ("samples", self.samples.map(|v| v.to_string())),
            ("grid", self.grid.map(|v| v.to_string())),
            ("lmax", self.lmax.map(|v| v.to_string())),
            ("tests", self.tests.map(|v| v.to_string())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                s.set(k, v);
            }
        }
        if self.control {
            s.set("control", "true");
        }
        Ok(s)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match &cli.command {
        Sub::Expand(f) => (Command::Expand, f),
        Sub::Bounds(f) => (Command::Bounds, f),
        Sub::SteinCheck(f) => (Command::SteinCheck, f),
        Sub::RateSweep(f) => (Command::RateSweep, f),
        Sub::Kernel(f) => (Command::Kernel, f),
    };
    let config = match flags
        .settings()
        .and_then(|s| ExperimentConfig::from_settings(command, &s))
    {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(&config) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            for line in &outcome.summary {
                println!("{line}");
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                println!("criterion failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
