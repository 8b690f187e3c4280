use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use slds_cli::{load_config, run, Command, ExperimentConfig, OUT_DIR_ENV};

const DEFAULT_OUT_DIR: &str = "slds-out";

#[derive(Parser, Debug)]
#[command(name = "slds", version, about = "Experiments on fBm-driven lattice systems")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// JSON experiment configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory. Takes precedence over the environment variable
    /// and the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the ensemble pool.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct PathArgs {
    /// Hurst index.
    #[arg(long)]
    h: Option<f64>,
    /// Grid step.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Sample fBm paths and test their law.
    SampleFbm {
        #[command(flatten)]
        path: PathArgs,
        /// Steps per path.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Check the lattice operator identities and the nonlinearity probes.
    VerifyOperators,
    /// Integrate one trajectory and check the cocycle property.
    Simulate,
    /// Evaluate the stationary fractional OU process.
    Ou {
        #[command(flatten)]
        path: PathArgs,
        /// Linear damping.
        #[arg(long)]
        lambda: Option<f64>,
        /// Length of the sampled past.
        #[arg(long)]
        t_past: Option<f64>,
    },
    /// Pairwise contraction of two solutions on the same noise.
    Contraction,
    /// Pullback of a sphere of initial states.
    Pullback,
    /// Random equilibrium and its invariance.
    Equilibrium,
    /// Absorbing ball of the pullback dynamics.
    Absorb,
    /// Every experiment above, with a summary table.
    Report,
}

impl Cmd {
    fn command(&self) -> Command {
        match self {
            Self::SampleFbm { .. } => Command::SampleFbm,
            Self::VerifyOperators => Command::VerifyOperators,
            Self::Simulate => Command::Simulate,
            Self::Ou { .. } => Command::Ou,
            Self::Contraction => Command::Contraction,
            Self::Pullback => Command::Pullback,
            Self::Equilibrium => Command::Equilibrium,
            Self::Absorb => Command::Absorb,
            Self::Report => Command::Report,
        }
    }

    fn apply(&self, config: &mut ExperimentConfig) {
        let set_path = |config: &mut ExperimentConfig, p: &PathArgs| {
            if let Some(h) = p.h {
                config.hurst = h;
            }
            if let Some(dt) = p.dt {
                config.dt = dt;
            }
        };
        match self {
            Self::SampleFbm { path, steps } => {
                set_path(config, path);
                if let Some(n) = steps {
                    config.sample_fbm.n_steps = *n;
                }
            }
            Self::Ou { path, lambda, t_past } => {
                set_path(config, path);
                if let Some(l) = lambda {
                    config.lambda = *l;
                }
                if let Some(t) = t_past {
                    config.t_past = *t;
                }
            }
            _ => {}
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut config = match &cli.global.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.global.seed {
        config.master_seed = seed;
    }
    cli.command.apply(&mut config);
    let errs = config.violations();
    if !errs.is_empty() {
        anyhow::bail!("invalid configuration:\n  {}", errs.join("\n  "));
    }
    let out_dir = cli
        .global
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let command = cli.command.command();
    let manifest = run(command, &config, &out_dir)?;
    for check in &manifest.checks {
        println!(
            "{} {} value={:e} threshold={:e}",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.value,
            check.threshold
        );
    }
    if let Some(e) = &manifest.error {
        eprintln!("error: {e}");
    }
    println!(
        "{} {} -> {}",
        command.name(),
        if manifest.pass { "PASS" } else { "FAIL" },
        out_dir.join(format!("{}.json", command.name())).display()
    );
    Ok(manifest.pass)
}
