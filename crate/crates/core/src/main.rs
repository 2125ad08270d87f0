use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use edgealloc::harness::{
    compare, oracle_report, read_metrics, run_experiment, sweep_epsilon, write_metrics, write_plot_data,
    ExperimentConfig, PlotKind,
};
use edgealloc::{Error, Execution, Result};

#[derive(Parser)]
#[command(name = "edgealloc", version, about = "Learned bandwidth slicing and edge task offloading")]
struct Cli {
    /// Run independent work on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train or run a baseline and write JSON-lines metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the closed-form or exhaustive optimum for a config.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarise metrics files; ratios are relative to the last file.
    Compare {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Final-window length in steps (default: last 5%).
        #[arg(long)]
        window: Option<usize>,
    },
    /// Export plot-ready CSV from a metrics file.
    Plot {
        #[arg(long)]
        kind: String,
        file: PathBuf,
        /// Defaults to `<file>.<kind>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one DQN config per ε with identical seeds and arrivals.
    SweepEpsilon {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5")]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn execute(cli: Cli) -> Result<()> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let path = run_experiment(&cfg, out.as_deref())?;
            println!("{}", path.display());
        }
        Command::Oracle { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = oracle_report(&cfg, exec)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Compare { files, window } => {
            let inputs = files
                .iter()
                .map(|f| Ok((f.display().to_string(), read_metrics(f)?)))
                .collect::<Result<Vec<_>>>()?;
            print!("{}", compare(&inputs, window)?.to_table());
        }
        Command::Plot { kind, file, out } => {
            let kind: PlotKind = kind.parse()?;
            let records = read_metrics(&file)?;
            let path = out.unwrap_or_else(|| with_suffix(&file, &format!(".{}.csv", kind.name())));
            write_plot_data(&records, kind, &path)?;
            println!("{}", path.display());
        }
        Command::SweepEpsilon { config, values, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Config(format!("epsilon {bad} outside [0, 1]")));
            }
            let records = sweep_epsilon(&cfg, &values, exec)?;
            let path = out.unwrap_or_else(|| with_suffix(&cfg.output_path(), ".sweep.jsonl"));
            write_metrics(&path, &records)?;
            let csv = with_suffix(&path, ".epsilon-sweep.csv");
            write_plot_data(&records, PlotKind::EpsilonSweep, &csv)?;
            println!("{}", path.display());
            println!("{}", csv.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
