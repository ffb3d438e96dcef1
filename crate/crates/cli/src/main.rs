use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use splab::{emit_plots, run, ExperimentConfig, Kind};

#[derive(Parser)]
#[command(name = "splab", version, about = "Normalized ground states of Schrödinger–Poisson equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Limit ground state φ and ω₀.
    Groundstate(Common),
    /// Minimizer of the rescaled functional at one c.
    Minimize(Common),
    /// Newton solution at (c, ω), with ω_c from the minimizer by default.
    Branch(Common),
    /// Minimizers along the c schedule, measured against φ.
    Sweep(Common),
    /// Sampled checks of (F1)–(F3) and (A1)–(A2).
    CheckAssumptions(Common),
    /// 3D minimization from a non-radial start, recentered.
    Symmetry3d(Common),
    /// SVG plots of a results directory.
    Plots {
        /// Directory holding the results.
        results: PathBuf,
        /// Output directory, `<results>/plots` by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the limit exponent p.
    #[arg(long)]
    p: Option<f64>,
    /// Overrides the mass parameter c.
    #[arg(long)]
    c: Option<f64>,
}

impl Common {
    fn config(&self, kind: Kind) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ExperimentConfig::from_toml(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        cfg.kind = kind;
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.threads {
            cfg.threads = v;
        }
        if let Some(v) = self.p {
            cfg.p = v;
        }
        if let Some(v) = self.c {
            cfg.c = v;
        }
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let (common, kind) = match cli.command {
        Command::Plots { results, out } => {
            let out = out.unwrap_or_else(|| results.join("plots"));
            let m = emit_plots(&results, &out)?;
            let svgs = m.artifacts.iter().filter(|a| a.path.ends_with(".svg")).count();
            println!("{svgs} plots in {}", out.display());
            return Ok(true);
        }
        Command::Groundstate(c) => (c, Kind::Groundstate),
        Command::Minimize(c) => (c, Kind::Minimize),
        Command::Branch(c) => (c, Kind::Branch),
        Command::Sweep(c) => (c, Kind::Sweep),
        Command::CheckAssumptions(c) => (c, Kind::CheckAssumptions),
        Command::Symmetry3d(c) => (c, Kind::Symmetry3d),
    };
    let cfg = common.config(kind)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global()?;
    }
    let manifest = run(&cfg)?;
    println!(
        "{}: {} artifacts in {}, converged = {}",
        manifest.kind,
        manifest.artifacts.len(),
        cfg.out.display(),
        manifest.converged
    );
    Ok(manifest.converged)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
