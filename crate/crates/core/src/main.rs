use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use squidsim::error::Error;
use squidsim::io::{load_config, sweep_with_cache, SweepOutcome};
use squidsim::params::{validate_params, BathParams, Severity};
use squidsim::plot::{render_svg, Figure};
use squidsim::verify::{run_all, Fault, ORACLE_NAMES};

#[derive(Parser)]
#[command(name = "squidsim", version, about = "SQUID ring / Ohmic bath steady-state simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flux sweep described by a config file; writes CSV + JSON.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Override the worker count (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Render one of the figures from a sweep CSV.
    Plot {
        #[arg(long)]
        results: PathBuf,
        /// fig1 (purity), fig2 (zeta*), or fig3 (screening current).
        #[arg(long)]
        figure: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the oracle suites and print a pass/fail table.
    Verify {
        /// Print oracle names without running anything.
        #[arg(long)]
        list: bool,
        /// Corrupt the first-order Lindblad momentum coefficient to
        /// demonstrate that the defect oracle catches it.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Check a config's physical parameters and report findings.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::PlotInput(_) => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Sweep { config, workers } => {
            let mut cfg = load_config(&config)?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let body = || -> Result<u8, Error> {
                let (hash, outcome, records) = sweep_with_cache(&cfg)?;
                match outcome {
                    SweepOutcome::CacheHit => eprintln!("cache hit {hash}"),
                    SweepOutcome::Computed => eprintln!("computed {hash}"),
                }
                println!(
                    "wrote {} ({} rows) and {}",
                    cfg.output_csv.display(),
                    records.len(),
                    cfg.output_json.display()
                );
                let mut failed = 0u8;
                for r in &records {
                    if let Some(msg) = &r.error {
                        eprintln!("row failed: flux {:.6}, xi {:.6}: {msg}", r.flux_fraction, r.xi);
                        failed = 1;
                    }
                }
                Ok(failed)
            };
            if cfg.workers > 0 {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(cfg.workers)
                    .build()
                    .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
                pool.install(body)
            } else {
                body()
            }
        }
        Command::Plot { results, figure, output } => {
            let fig = Figure::from_name(&figure)
                .ok_or_else(|| Error::Config(format!("unknown figure '{figure}' (fig1/fig2/fig3)")))?;
            let csv = std::fs::read_to_string(&results)
                .map_err(|e| Error::PlotInput(format!("cannot read {}: {e}", results.display())))?;
            let svg = render_svg(&csv, fig)?;
            std::fs::write(&output, svg)?;
            println!("wrote {}", output.display());
            Ok(0)
        }
        Command::Verify { list, inject_fault } => {
            if list {
                for name in ORACLE_NAMES {
                    println!("{name}");
                }
                return Ok(0);
            }
            let fault = inject_fault.then_some(Fault::FlipFirstOrderMomentumSign);
            let mut any_failed = false;
            for o in run_all(fault) {
                println!("{:>4}  {:<32} {}", if o.passed { "ok" } else { "FAIL" }, o.name, o.detail);
                any_failed |= !o.passed;
            }
            Ok(u8::from(any_failed))
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            let neutral = BathParams {
                damping_rate: 0.0,
                cutoff_frequency: f64::INFINITY,
                temperature: 0.0,
            };
            let findings = validate_params(&cfg.squid, &neutral, cfg.basis_size);
            let mut worst_is_error = false;
            if findings.is_empty() {
                println!("no findings");
            }
            for f in &findings {
                println!("{:?}: {}", f.severity, f.message);
                worst_is_error |= f.severity == Severity::Violation;
            }
            Ok(u8::from(worst_is_error))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
