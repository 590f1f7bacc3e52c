use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mmia::config::{load_config, SimConfig};
use mmia::experiments::{run_experiment, ExperimentKind, Scenario};
use mmia::output::write_table;
use mmia::protocol::{run_coordinated, run_exhaustive};
use mmia::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_FAILURE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "mmia", version, about = "Coordinated initial-access simulator for mmWave small-cell clusters")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed.
    #[arg(long, global = true, env = "SIM_SEED")]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, env = "SIM_OUT")]
    out: Option<PathBuf>,

    /// Trials per grid point.
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// LOS probability of the selected cells against cluster size.
    PLos,
    /// IA time reduction against UE transmit power.
    ReductionPower,
    /// IA time reduction against the target miss probability.
    ReductionPmiss,
    /// Normalized IA time against cluster size.
    TimeCluster,
    /// Run one paired trial and print both outcomes.
    SingleTrial {
        /// Trial index.
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Run the oracle suite.
    Selftest,
}

fn configure(cli: &Cli) -> Result<SimConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.experiments.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.display().to_string();
    }
    if let Some(trials) = cli.trials {
        cfg.experiments.trials = trials;
        cfg.experiments.p_los_trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(command: Command, cfg: &SimConfig) -> Result<bool, Error> {
    let kind = match command {
        Command::PLos => ExperimentKind::PLosVsCluster,
        Command::ReductionPower => ExperimentKind::ReductionVsPower,
        Command::ReductionPmiss => ExperimentKind::ReductionVsPmiss,
        Command::TimeCluster => ExperimentKind::TimeVsCluster,
        Command::SingleTrial { index } => {
            let setup = Scenario::new(cfg, 0)?.trial(index)?;
            println!("{}\n", run_exhaustive(&setup));
            println!("{}", run_coordinated(&setup));
            return Ok(true);
        }
        Command::Selftest => {
            let checks = mmia::selftest::run_all(cfg)?;
            for c in &checks {
                println!("{c}");
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    };
    let table = run_experiment(kind, cfg)?;
    let path = write_table(&table, cfg.output.dir.as_ref())?;
    println!("wrote {}", path.display());
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match configure(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(cli.command, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("selftest failed");
            ExitCode::from(EXIT_FAILURE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
