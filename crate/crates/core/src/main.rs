use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pinsec::harness::{
    parse_methods, run_antenna_sweep, run_convergence_study, run_power_sweep, single_drop_report, ExperimentConfig,
};
use pinsec::Result;

#[derive(Debug, Parser)]
#[command(name = "pinsec", version, about = "Pinching-antenna secrecy-rate experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Drops per sweep point.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Comma-separated methods: initial-single-antenna, shapley,
    /// coalition-value, brute-force, annealing, fixed-ula.
    #[arg(long, global = true)]
    methods: Option<String>,

    /// Simulated-annealing steps.
    #[arg(long, global = true)]
    annealing_steps: Option<usize>,

    /// Fill the wall-time column (makes outputs run-dependent).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Secrecy rate against transmit power.
    PowerSweep {
        /// Comma-separated transmit powers in dBm.
        #[arg(long, value_delimiter = ',')]
        powers: Option<Vec<f64>>,
        #[arg(long)]
        antennas: Option<usize>,
    },
    /// Secrecy rate against the number of antennas.
    AntennaSweep {
        /// Comma-separated antenna counts.
        #[arg(long, value_delimiter = ',')]
        antenna_counts: Option<Vec<usize>>,
        #[arg(long)]
        power: Option<f64>,
    },
    /// Game traces against the global optimum.
    Convergence {
        #[arg(long)]
        antennas: Option<usize>,
        #[arg(long)]
        power: Option<f64>,
    },
    /// Channels, payoffs and trace for one drop.
    SingleDrop {
        #[arg(long, default_value_t = 20)]
        antennas: usize,
        #[arg(long, default_value_t = 20.0)]
        power: f64,
    },
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let c = &cli.common;
    if let Some(seed) = c.seed {
        config.run.master_seed = seed;
    }
    if let Some(trials) = c.trials {
        config.run.trials = trials;
    }
    if let Some(workers) = c.workers {
        config.run.workers = workers;
    }
    if let Some(out) = &c.out {
        config.run.output = out.clone();
    }
    if let Some(list) = &c.methods {
        config.run.methods = parse_methods(list)?;
    }
    if let Some(steps) = c.annealing_steps {
        config.annealing.steps = steps;
    }
    if c.timing {
        config.run.timing = true;
    }
    match &cli.command {
        Command::PowerSweep { powers, antennas } => {
            if let Some(p) = powers {
                config.power_sweep.powers_dbm = p.clone();
            }
            if let Some(n) = antennas {
                config.power_sweep.antennas = *n;
            }
        }
        Command::AntennaSweep { antenna_counts, power } => {
            if let Some(n) = antenna_counts {
                config.antenna_sweep.antennas = n.clone();
            }
            if let Some(p) = power {
                config.antenna_sweep.power_dbm = *p;
            }
        }
        Command::Convergence { antennas, power } => {
            if let Some(n) = antennas {
                config.convergence.antennas = *n;
            }
            if let Some(p) = power {
                config.convergence.power_dbm = *p;
            }
        }
        Command::SingleDrop { .. } => {}
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<()> {
    let config = build_config(cli)?;
    let output = match &cli.command {
        Command::PowerSweep { .. } => run_power_sweep(&config)?,
        Command::AntennaSweep { .. } => run_antenna_sweep(&config)?,
        Command::Convergence { .. } => run_convergence_study(&config)?,
        Command::SingleDrop { antennas, power } => {
            print!(
                "{}",
                single_drop_report(&config, *antennas, *power, config.run.master_seed)?
            );
            return Ok(());
        }
    };
    output.write(&config, &config.run.output)?;
    for a in &output.aggregates {
        println!(
            "{:<22} {:>6} secrecy {:>8.4} ± {:.4}  bob {:>8.4}  eve {:>8.4}",
            a.method.as_str(),
            a.sweep_value,
            a.secrecy.mean,
            a.secrecy.std_err,
            a.bob.mean,
            a.eve.mean
        );
    }
    println!("wrote {}", config.run.output.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
