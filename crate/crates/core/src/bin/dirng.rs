use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use dirng_core::bits::BitString;
use dirng_core::eatbound::{self, EATParams};
use dirng_core::protocol::{self, SessionConfig};
use dirng_core::qsim;
use dirng_core::trevisan::{self, DesignKind};
use dirng_core::{Error, Result};

#[derive(Parser)]
#[command(name = "dirng", version, about = "Device-independent randomness over the instrumental scenario")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the runs of a session and write them as a record file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Certified min-entropy for the EAT parameters of a configuration.
    Bound {
        /// Session configuration, or bare EAT parameters.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Extractor error used for the soundness figure.
        #[arg(long, default_value_t = 1e-6)]
        eps_ext: f64,
    },
    /// Run the Trevisan extractor on raw bit files.
    Extract {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        seed: PathBuf,
        /// Claimed min-entropy of the source, in bits.
        #[arg(long)]
        k: f64,
        #[arg(long)]
        eps_ext: f64,
        #[arg(long, default_value = "block")]
        design: DesignKind,
        /// Output bit file (a `.json` sidecar is written next to it).
        #[arg(long)]
        out: PathBuf,
    },
    /// Full protocol: runs, threshold test, bound and extraction.
    RunSession {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Extractor parameters over a grid, as CSV.
    Tabulate {
        #[arg(long, value_delimiter = ',', required = true)]
        n_in: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        eps_ext: Vec<f64>,
        /// Min-entropy rates `k / n_in`.
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[arg(long, default_value = "block")]
        design: DesignKind,
        /// Directory for `tabulate.csv`; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximum of the functional over deterministic strategies.
    ClassicalMax {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::Io { path: path.to_owned(), source: e })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_owned(), source: e })
}

fn emit(value: &impl Serialize, out: Option<&Path>) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    if let Some(path) = out {
        write_json(path, value)?;
    }
    Ok(())
}

fn load_eat(path: &Path) -> Result<EATParams> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_owned(), source: e })?;
    match serde_json::from_str::<SessionConfig>(&text) {
        Ok(cfg) => Ok(cfg.eat),
        Err(_) => Ok(serde_json::from_str(&text)?),
    }
}

#[derive(Serialize)]
struct SimulationSummary {
    n: u64,
    test_runs: u64,
    observed_i: f64,
    delta_prime_observed: f64,
    setting_bits: u64,
    records: PathBuf,
}

#[derive(Serialize)]
struct BoundSummary {
    bound: eatbound::BoundResult,
    soundness: f64,
    completeness: f64,
}

#[derive(Serialize)]
struct ClassicalSummary {
    value: f64,
    maximizers: usize,
    strategies: usize,
    elapsed_ms: f64,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = SessionConfig::from_file(&config)?;
            cfg.validate()?;
            let mut stream = cfg.open_seed_stream()?;
            let runs = protocol::acquire_runs(&cfg, &mut stream)?;
            let est = protocol::estimate_violation(&runs)?;
            ensure_dir(&out)?;
            let records = out.join("records.bin");
            protocol::write_records(&records, &runs, &cfg.hash())?;
            let summary = SimulationSummary {
                n: runs.len() as u64,
                test_runs: runs.iter().filter(|r| r.is_test()).count() as u64,
                observed_i: est.i_star,
                delta_prime_observed: est.delta_prime,
                setting_bits: stream.consumed(),
                records,
            };
            emit(&summary, Some(&out.join("simulate.json")))
        }
        Command::Bound { config, out, eps_ext } => {
            let p = load_eat(&config)?;
            let bound = eatbound::certified_min_entropy(&p)?;
            let m = if bound.aborted {
                0
            } else {
                trevisan::compute_params(2 * p.n, bound.total_bits, eps_ext, DesignKind::Block).map_or(0, |e| e.m)
            };
            let summary = BoundSummary {
                bound,
                soundness: eatbound::soundness(&p, m, eps_ext),
                completeness: eatbound::completeness(p.n, p.delta_prime),
            };
            emit(&summary, out.as_deref())
        }
        Command::Extract { source, seed, k, eps_ext, design, out } => {
            let source = BitString::read_file(&source)?;
            let seed = BitString::read_file(&seed)?;
            let params = trevisan::compute_params(source.len() as u64, k, eps_ext, design)?;
            let bits = trevisan::extract(&source, &seed, &params)?;
            bits.write_file(&out)?;
            println!("{}", serde_json::to_string_pretty(&params)?);
            Ok(())
        }
        Command::RunSession { config, out } => {
            let cfg = SessionConfig::from_file(&config)?;
            let result = protocol::run_session(&cfg)?;
            ensure_dir(&out)?;
            result.extracted.write_file(&out.join("extracted.bin"))?;
            write_json(&out.join("session.json"), &result)?;
            eprintln!(
                "{}: I = {:.5}, threshold {:.5}, {} bits extracted",
                if result.aborted { "aborted" } else { "accepted" },
                result.observed_i,
                result.threshold,
                result.extracted.len()
            );
            if let Some(reason) = &result.reason {
                eprintln!("{reason}");
            }
            Ok(())
        }
        Command::Tabulate { n_in, eps_ext, alpha, design, out } => {
            let rows = trevisan::tabulate_params(&n_in, &eps_ext, &alpha, design)?;
            match out {
                Some(dir) => {
                    ensure_dir(&dir)?;
                    let path = dir.join("tabulate.csv");
                    let file = fs::File::create(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
                    trevisan::write_tabulation_csv(&rows, file)
                }
                None => trevisan::write_tabulation_csv(&rows, std::io::stdout().lock()),
            }
        }
        Command::ClassicalMax { out } => {
            let start = Instant::now();
            let cm = qsim::classical_max();
            let summary = ClassicalSummary {
                value: cm.value,
                maximizers: cm.maximizers.len(),
                strategies: qsim::DeterministicStrategy::all().count(),
                elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            };
            emit(&summary, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
