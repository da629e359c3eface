use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use triadic_cli::{run, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "triadic", version, about = "Triadic-closure network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact SSA path of the edge density.
    MicroPath(Common),
    /// Adjacency snapshots as edge lists.
    MicroSpy(Common),
    /// Monte Carlo edge probabilities P_ij(t).
    MicroPij(Common),
    /// Birth–death chain path of the edge density.
    MacroPath(Common),
    /// Stationary distribution of the chain.
    MacroSteady(Common),
    /// Mean exit times between modes over a range of n.
    MacroExit(Common),
    /// Euler–Maruyama path of the Langevin equation.
    SdePath(Common),
    /// Langevin mean first passage times.
    SdeMfpt(Common),
    /// RK4 trace of the reaction-rate equation.
    OdeTrace(Common),
    /// Unit-step Euler iteration.
    MeanField(Common),
    /// Micro, macro, Langevin and ODE on one time grid.
    CompareModels(Common),
    /// Print the default config for an experiment.
    Defaults {
        #[arg(value_parser = parse_experiment)]
        experiment: Experiment,
    },
}

#[derive(Args)]
struct Common {
    /// Flat TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    Experiment::ALL
        .into_iter()
        .find(|e| e.tag() == s)
        .ok_or_else(|| format!("unknown experiment {s:?}"))
}

fn resolve(experiment: Experiment, args: Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = experiment;
    for s in &args.set {
        cfg.set(s)?;
    }
    cfg.experiment = experiment;
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = args.threads {
        cfg.threads = Some(threads);
    }
    Ok(cfg)
}

fn execute(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let result = match cfg.threads {
        Some(t) if t > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .context("building thread pool")?
            .install(|| run(cfg)),
        _ => run(cfg),
    }?;
    for f in &result.files {
        println!("{}", result.dir.join(f).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::MicroPath(a) => (Experiment::MicroPath, a),
        Command::MicroSpy(a) => (Experiment::MicroSpy, a),
        Command::MicroPij(a) => (Experiment::MicroPij, a),
        Command::MacroPath(a) => (Experiment::MacroPath, a),
        Command::MacroSteady(a) => (Experiment::MacroSteady, a),
        Command::MacroExit(a) => (Experiment::MacroExit, a),
        Command::SdePath(a) => (Experiment::SdePath, a),
        Command::SdeMfpt(a) => (Experiment::SdeMfpt, a),
        Command::OdeTrace(a) => (Experiment::OdeTrace, a),
        Command::MeanField(a) => (Experiment::MeanField, a),
        Command::CompareModels(a) => (Experiment::CompareModels, a),
        Command::Defaults { experiment } => {
            let cfg = ExperimentConfig {
                experiment,
                ..ExperimentConfig::default()
            };
            print!("{}", cfg.to_toml());
            return ExitCode::SUCCESS;
        }
    };
    match resolve(experiment, args).and_then(|cfg| execute(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
