use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wearsim::compensator::displacement_per_pulse;
use wearsim::exec::Execution;
use wearsim::scenario::{RawScenario, Scenario};
use wearsim::sweep::{self, Vary};
use wearsim::{check, link, report, sim, trace};

#[derive(Parser)]
#[command(name = "wearsim", version, about = "Wear-compensation and acquisition-link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and print its summary.
    Run {
        scenario: PathBuf,
        /// Write the per-tick trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Trace columns to plot, one `<column>.svg` each.
        #[arg(long, num_args = 1..)]
        plot: Vec<String>,
        /// Directory for plot files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run the cartesian product of parameter overrides.
    Sweep {
        scenario: PathBuf,
        /// `key=v1,v2,...`; repeat for more axes.
        #[arg(long, required = true)]
        vary: Vec<Vary>,
        /// Write `sweep.csv` and one trace per variant here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Run variants one at a time.
        #[arg(long)]
        sequential: bool,
    },
    /// Print the scenario in canonical form.
    PrintConfig { scenario: PathBuf },
    /// Run the link conformance suite.
    Conformance {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        random: usize,
    },
}

enum Failure {
    Validation(String),
    Invariant(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Invariant(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Validation(msg) | Failure::Invariant(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.exit_code())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    Scenario::load(&read(path)?).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Validation(format!("{}: {e}", path.display()))
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            scenario,
            trace: trace_path,
            plot,
            out_dir,
        } => {
            let scenario = load(&scenario)?;
            // reject bad column names before spending time on the run
            for c in &plot {
                if !trace::COLUMNS.contains(&c.as_str()) {
                    return Err(Failure::Validation(wearsim::Error::UnknownColumn(c.clone()).to_string()));
                }
            }
            let (records, summary) = sim::run(&scenario);
            print!("{}", report::summary_text(&scenario.name, &summary));
            if let Some(path) = &trace_path {
                let file = fs::File::create(path).map_err(io_err(path))?;
                let mut w = std::io::BufWriter::new(file);
                trace::write_csv(&mut w, &records)
                    .and_then(|()| w.flush())
                    .map_err(io_err(path))?;
            }
            if !plot.is_empty() {
                fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
                let written = report::write_plots(&records, &plot, &out_dir)
                    .map_err(|e| Failure::Validation(e.to_string()))?;
                for p in written {
                    println!("wrote {}", p.display());
                }
            }
            let violations = check::scan(&records, displacement_per_pulse(&scenario.chain));
            if let Some(first) = violations.first() {
                return Err(Failure::Invariant(format!(
                    "{} invariant violation(s); first: {first}",
                    violations.len()
                )));
            }
            Ok(())
        }
        Command::Sweep {
            scenario,
            vary,
            out_dir,
            sequential,
        } => {
            let raw = RawScenario::parse(&read(&scenario)?)
                .map_err(|e| Failure::Validation(format!("{}: {e}", scenario.display())))?;
            let variants = sweep::expand(&raw, &vary).map_err(|e| Failure::Validation(e.to_string()))?;
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            let results = sweep::run(&variants, exec);
            let table = sweep::results_csv(&results);
            print!("{table}");
            if let Some(dir) = &out_dir {
                fs::create_dir_all(dir).map_err(io_err(dir))?;
                let path = dir.join("sweep.csv");
                fs::write(&path, &table).map_err(io_err(&path))?;
                for s in &variants {
                    let path = dir.join(format!("{}.csv", s.name));
                    let (records, _) = sim::run(s);
                    fs::write(&path, trace::to_csv_bytes(&records)).map_err(io_err(&path))?;
                }
            }
            let bad: Vec<&str> = results
                .iter()
                .filter(|r| r.invariant_violations > 0)
                .map(|r| r.name.as_str())
                .collect();
            if !bad.is_empty() {
                return Err(Failure::Invariant(format!("invariant violations in: {}", bad.join(", "))));
            }
            Ok(())
        }
        Command::PrintConfig { scenario } => {
            print!("{}", load(&scenario)?.to_text());
            Ok(())
        }
        Command::Conformance { seed, random } => {
            let reports = link::suite(seed, random).map_err(|e| Failure::Validation(e.to_string()))?;
            let mut failed = 0;
            for r in &reports {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                failed += usize::from(!r.passed);
            }
            if failed > 0 {
                return Err(Failure::Invariant(format!("{failed} conformance case(s) failed")));
            }
            Ok(())
        }
    }
}
