use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stylefacts::harness::experiment::{
    analyze_returns, run_experiment, run_seeds, summary, write_acf_csv, write_report_json, AnalysisPlan,
};
use stylefacts::harness::output::read_column;
use stylefacts::harness::{parse_config, preset, Analysis, ExperimentConfig, PRESETS};
use stylefacts::{Error, Result};

const DEFAULT_OUT: &str = "stylefacts-out";
const OUT_ENV: &str = "STYLEFACTS_OUT";

#[derive(Parser)]
#[command(name = "stylefacts", version, about = "Agent-based market simulator and stylised-facts analyser")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a configured market and analyse its returns.
    Run {
        /// Key-value config file.
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Run a named preset instead of a config file.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, conflicts_with = "seeds")]
        seed: Option<u64>,
        /// Comma-separated seeds, run concurrently into `seed_<s>` subdirectories.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Output directory; overrides the config's `out` and $STYLEFACTS_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in presets.
    Presets,
    /// Analyse an existing CSV of returns.
    Analyze {
        csv: PathBuf,
        /// Column holding the returns; defaults to `log_return` or the only column.
        #[arg(long)]
        column: Option<String>,
        /// Write report.json and acf.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        acf_max_lag: usize,
        /// Aggregation lags for the kurtosis table.
        #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
        deltas: Vec<usize>,
        /// Seeds the normality-test subsample.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { config, preset: name, seed, seeds, out } => {
            let mut cfg = load_config(config.as_deref(), name.as_deref())?;
            if let Some(seed) = seed {
                cfg.params.seed = seed;
            }
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            match seeds {
                Some(seeds) => run_many(&cfg, &seeds, &dir),
                None => {
                    let outcome = run_experiment(&cfg, &dir)?;
                    println!("seed {} -> {}", cfg.params.seed, dir.display());
                    print!("{}", outcome.summary());
                    Ok(status(outcome.succeeded()))
                }
            }
        }
        Command::Presets => {
            for p in PRESETS {
                println!("{:<26} {}", p.name, p.description);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze { csv, column, out, acf_max_lag, deltas, seed } => {
            let returns = read_column(&csv, column.as_deref())?;
            let plan = AnalysisPlan { analyses: Analysis::ALL.into_iter().collect(), deltas, acf_max_lag, seed };
            let analyzed = analyze_returns(&returns, None, &plan);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                write_acf_csv(&dir, &analyzed.report)?;
                write_report_json(&dir, &analyzed.report, &analyzed.failures, None)?;
            }
            println!("{} returns from {}", returns.len(), csv.display());
            print!("{}", summary(&analyzed.report, &analyzed.failures));
            Ok(status(analyzed.failures.is_empty()))
        }
    }
}

fn load_config(path: Option<&Path>, name: Option<&str>) -> Result<ExperimentConfig<f64>> {
    match (path, name) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_config(&text)
        }
        (None, Some(name)) => preset(name).ok_or_else(|| Error::Config {
            line: 0,
            message: format!("unknown preset `{name}`; see `stylefacts presets`"),
        }),
        (None, None) => unreachable!("clap requires a config or a preset"),
    }
}

fn run_many(cfg: &ExperimentConfig<f64>, seeds: &[u64], root: &Path) -> Result<ExitCode> {
    let mut ok = true;
    let mut worst: Option<Error> = None;
    for (seed, result) in run_seeds(cfg, seeds, root) {
        println!("== seed {seed}");
        match result {
            Ok(outcome) => {
                ok &= outcome.succeeded();
                print!("{}", outcome.summary());
            }
            Err(e) => {
                println!("error: {e}");
                if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                    worst = Some(e);
                }
            }
        }
    }
    match worst {
        Some(e) => Err(e),
        None => Ok(status(ok)),
    }
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
