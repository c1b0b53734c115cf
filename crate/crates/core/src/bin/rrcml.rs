use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use rrcml::datamodel::{compute_stats, load_dataset, write_stats_csv, DataFormat};
use rrcml::harness::{emit_reports, parse_runs_csv, run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(version, about = "Multi-label classification with SCM and BMC corrected binary members")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Recompute rank tables from a runs.csv file.
    Stats { runs: PathBuf },
    /// Print dataset characteristics.
    Datastats {
        dataset: PathBuf,
        /// Defaults to arff-ml for `.arff` files and csv-ml otherwise.
        #[arg(long, value_parser = parse_format)]
        format: Option<DataFormat>,
    },
}

fn parse_format(s: &str) -> Result<DataFormat, String> {
    match s {
        "csv-ml" => Ok(DataFormat::CsvMl),
        "arff-ml" => Ok(DataFormat::ArffMl),
        _ => Err(format!("unknown format {s:?} (csv-ml or arff-ml)")),
    }
}

fn guess_format(path: &Path) -> DataFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("arff") => DataFormat::ArffMl,
        _ => DataFormat::CsvMl,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> rrcml::Result<()> {
    match cli.command {
        Command::Run { config } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(j) = cli.jobs {
                cfg.jobs = Some(j);
            }
            if let Some(o) = cli.out {
                cfg.output = o;
            }
            let outcome = run_experiment(&cfg)?;
            info!("{} runs succeeded, {} failed", outcome.records.len(), outcome.failures.len());
            let files = emit_reports(&outcome.records, &outcome.failures, Some(&cfg), &cfg.output)?;
            for t in files.rank_tables.iter().filter(|p| p.extension().is_some_and(|e| e == "txt")) {
                print!("{}", std::fs::read_to_string(t)?);
            }
            info!("reports written to {}", cfg.output.display());
        }
        Command::Stats { runs } => {
            let records = parse_runs_csv(&std::fs::read_to_string(&runs)?, &runs)?;
            let out = cli.out.unwrap_or_else(|| runs.parent().unwrap_or(Path::new(".")).join("stats"));
            let files = emit_reports(&records, &[], None, &out)?;
            for t in files.rank_tables.iter().filter(|p| p.extension().is_some_and(|e| e == "txt")) {
                print!("{}", std::fs::read_to_string(t)?);
            }
        }
        Command::Datastats { dataset, format } => {
            let ds = load_dataset(&dataset, format.unwrap_or_else(|| guess_format(&dataset)))?;
            let stats = compute_stats(&ds)?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
            if let Some(o) = cli.out {
                std::fs::create_dir_all(&o)?;
                let path = write_stats_csv(&[stats], &o.join("datastats.csv"))?;
                info!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}
