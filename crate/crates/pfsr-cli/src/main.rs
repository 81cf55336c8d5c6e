//! `pfsr` binary: run experiments from TOML configs, dry-run validate them,
//! summarize result CSVs, and exercise the dense-oracle equivalence suite.
//! Exit codes: 0 ok, 2 config error, 3 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pfsr_cli::{
    report_files, run_config, validate_config, CliError, ExperimentConfig, OracleConfig,
    Overrides, ORACLE_TOLERANCE,
};

#[derive(Parser)]
#[command(name = "pfsr", version, about = "Sparse Pauli-frame QEC experiment driver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a config and write results.csv + manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the worker count (0 = one per core).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the per-point shot count.
        #[arg(long)]
        shots: Option<u64>,
    },
    /// Dry-run a config: code counts, schedules, fault locations, memory.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarize result CSVs: curves, thresholds, plot-ready long CSV.
    Report {
        /// results.csv files from previous runs.
        files: Vec<PathBuf>,
        /// Bootstrap seed for threshold confidence intervals.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for report.csv (defaults to the current directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the dense-statevector equivalence suite.
    Oracle {
        /// Optional config whose [oracle] section sizes the suite.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        circuits: usize,
        #[arg(long, default_value_t = 8)]
        max_qubits: usize,
        #[arg(long, default_value_t = 40)]
        max_depth: usize,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Run {
            config,
            seed,
            workers,
            out,
            shots,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            Overrides {
                seed,
                workers,
                shots,
            }
            .apply(&mut cfg);
            let out_dir = out.unwrap_or_else(|| PathBuf::from(&cfg.out));
            let art = run_config(&cfg, &out_dir)?;
            println!(
                "wrote {} ({} rows) and {}",
                art.csv_path.display(),
                art.rows,
                art.manifest_path.display()
            );
            Ok(())
        }
        Cmd::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            print!("{}", validate_config(&cfg));
            Ok(())
        }
        Cmd::Report { files, seed, out } => {
            if files.is_empty() {
                return Err(CliError::Config("report needs at least one CSV".into()));
            }
            let rep = report_files(&files, seed)?;
            print!("{}", rep.summary);
            let dir = out.unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let path = dir.join("report.csv");
            std::fs::write(&path, rep.long_csv)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Cmd::Oracle {
            config,
            seed,
            circuits,
            max_qubits,
            max_depth,
        } => {
            let o = match config {
                Some(path) => {
                    let cfg = ExperimentConfig::load(&path)?;
                    cfg.oracle.unwrap_or(OracleConfig {
                        circuits,
                        max_qubits,
                        max_depth,
                    })
                }
                None => OracleConfig {
                    circuits,
                    max_qubits,
                    max_depth,
                },
            };
            let report =
                pfsr::oracle::run_oracle_suite(o.circuits, o.max_qubits, o.max_depth, seed)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
            println!(
                "oracle suite: {} circuits, worst overlap {:.12} (circuit {}), \
                 mean {:.12}, worst prob gap {:.3e}, max entries {}",
                report.circuits,
                report.worst_overlap,
                report.worst_circuit,
                report.mean_overlap,
                report.worst_prob_gap,
                report.max_entries
            );
            if report.worst_overlap < 1.0 - ORACLE_TOLERANCE {
                return Err(CliError::Runtime(format!(
                    "worst overlap {} below tolerance",
                    report.worst_overlap
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
