//! Command-line entry point for the joint-sparsity solver.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use jointsparse::cli::{cmd_demo_color, cmd_gen, cmd_rates, cmd_solve, cmd_verify, VerifyScope};
use jointsparse::cli::RunConfig;
use jointsparse::core::ChannelNorm;

#[derive(Parser)]
#[command(
    name = "jointsparse",
    about = "Vector-valued sparse recovery via two-loop thresholded Landweber iteration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the coupling norm (1, 2, or inf).
    #[arg(long)]
    q: Option<String>,
    /// Override the resolution-reduction factor.
    #[arg(long)]
    downsample: Option<usize>,
}

impl CommonArgs {
    fn load(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(q) = &self.q {
            cfg.q = ChannelNorm::parse(q)?;
        }
        if let Some(d) = self.downsample {
            cfg.downsample = d;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic joint-sparsity instance.
    Gen {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve the instance referenced by the config.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Color-recovery demo: full-resolution luminance, downsampled chroma.
    DemoColor {
        #[command(flatten)]
        common: CommonArgs,
        /// Ground-truth color image (PPM); overrides the config's `image`.
        #[arg(long)]
        image: Option<PathBuf>,
    },
    /// Compare fast paths against the built-in oracles.
    Verify {
        /// Scopes to run: prox, rates, stationarity.
        scopes: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Report certified contraction rates for an instance.
    Rates {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen { common } => {
            let cfg = common.load()?;
            cmd_gen(&cfg, &common.out)?;
            println!("instance written to {}", common.out.display());
        }
        Command::Solve { common } => {
            let cfg = common.load()?;
            let sol = cmd_solve(&cfg, &common.out)?;
            let last = sol.telemetry.outer.last();
            println!(
                "solved: {} outer passes, final J = {}",
                sol.telemetry.outer.len(),
                last.map_or("n/a".into(), |o| format!("{:.6e}", o.objective_j))
            );
            println!("results written to {}", common.out.display());
        }
        Command::DemoColor { common, image } => {
            let mut cfg = common.load()?;
            if let Some(path) = image {
                cfg.image = Some(path);
            }
            let report = cmd_demo_color(&cfg, &common.out)?;
            println!(
                "demo finished: {} outer passes, chroma errors I = {:.6e}, Q = {:.6e}",
                report.outer_passes, report.err_i, report.err_q
            );
            println!("outputs written to {}", common.out.display());
        }
        Command::Verify { scopes, seed } => {
            if scopes.is_empty() {
                bail!("verify needs at least one scope: prox, rates, stationarity");
            }
            let parsed: Result<Vec<VerifyScope>, _> =
                scopes.iter().map(|s| VerifyScope::parse(s)).collect();
            let report = cmd_verify(&parsed?, seed)?;
            print!("{report}");
        }
        Command::Rates { common } => {
            let cfg = common.load()?;
            print!("{}", cmd_rates(&cfg)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
