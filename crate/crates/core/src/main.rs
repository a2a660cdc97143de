use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use objev::cli::{self, report, ScenarioError, EXIT_FAIL, EXIT_INVALID, EXIT_PASS};
use objev::random::derive_seed;

#[derive(Parser, Debug)]
#[command(name = "objev", version, about = "Verify measurement models, discriminating channels and objective events")]
struct Cli {
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Multiplies every tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Include wall time in the report (breaks byte-identical output).
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the verification suites of a scenario file or builtin.
    Verify { scenario: String },
    /// Draw per-trial readings of every discriminating channel.
    Sample {
        scenario: String,
        #[arg(long)]
        trials: Option<usize>,
        /// Include every trial in the report.
        #[arg(long)]
        records: bool,
    },
    /// Run the axiom suite on seeded random models.
    Fuzz {
        #[arg(long, default_value_t = 2)]
        object_dim: usize,
        #[arg(long, num_args = 1.., default_values_t = [2])]
        probe_dims: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Print a builtin scenario as JSON, or list the builtins.
    Show { name: Option<String> },
}

#[derive(Serialize)]
struct FuzzEntry {
    scenario: String,
    seed: u64,
    passed: bool,
    max_residual: Option<f64>,
    worst: Option<String>,
}

#[derive(Serialize)]
struct FuzzReport {
    object_dim: usize,
    probe_dims: Vec<usize>,
    passed: bool,
    runs: Vec<FuzzEntry>,
}

fn emit(cli: &Cli, json: String, text: String) -> std::io::Result<()> {
    let body = match cli.format {
        Format::Json => json + "\n",
        Format::Text => text,
    };
    match &cli.output {
        Some(path) => std::fs::write(path, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn invalid(e: &dyn std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_INVALID as u8)
}

fn code(passed: bool) -> ExitCode {
    ExitCode::from(if passed { EXIT_PASS } else { EXIT_FAIL } as u8)
}

fn build(cli: &Cli, source: &str) -> Result<cli::Scenario, ScenarioError> {
    let file = cli::load(source)?;
    let mut scenario = file.build(cli.tolerance_scale)?;
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify { scenario } => {
            let s = match build(&cli, scenario) {
                Ok(s) => s,
                Err(e) => return invalid(&e),
            };
            let r = cli::run(&s, cli.timing);
            if !r.passed {
                let names: Vec<&str> = r.failing().iter().map(|s| s.name()).collect();
                eprintln!("failing suites: {}", names.join(", "));
            }
            emit(&cli, r.to_json(), r.to_text()).map(|()| r.passed)
        }
        Command::Sample {
            scenario,
            trials,
            records,
        } => {
            let s = match build(&cli, scenario) {
                Ok(s) => s,
                Err(e) => return invalid(&e),
            };
            let trials = trials.unwrap_or(s.trials);
            let r = match report::sample(&s, trials, s.seed, *records) {
                Ok(r) => r,
                Err(e) => return invalid(&e),
            };
            let json = serde_json::to_string_pretty(&r).expect("report serialises");
            emit(&cli, json, r.to_text()).map(|()| r.passed)
        }
        Command::Fuzz {
            object_dim,
            probe_dims,
            count,
        } => {
            let base = cli.seed.unwrap_or(0);
            let mut runs = Vec::with_capacity(*count);
            for i in 0..*count {
                let seed = derive_seed(base, i as u64);
                let file = match cli::generate_random_scenario(*object_dim, probe_dims, seed) {
                    Ok(f) => f,
                    Err(e) => return invalid(&e),
                };
                let s = match file.build(cli.tolerance_scale) {
                    Ok(s) => s,
                    Err(e) => return invalid(&e),
                };
                let r = cli::run(&s, false);
                let axioms = &r.suites[0];
                runs.push(FuzzEntry {
                    scenario: r.scenario.clone(),
                    seed,
                    passed: r.passed,
                    max_residual: axioms.max_residual,
                    worst: axioms.worst.clone(),
                });
            }
            let passed = runs.iter().all(|r| r.passed);
            let text = runs
                .iter()
                .map(|r| {
                    format!(
                        "{:<32} {:<5} {}\n",
                        r.scenario,
                        if r.passed { "pass" } else { "FAIL" },
                        r.max_residual.map_or("-".into(), |v| format!("{v:.3e}"))
                    )
                })
                .collect::<String>()
                + if passed { "PASS\n" } else { "FAIL\n" };
            let report = FuzzReport {
                object_dim: *object_dim,
                probe_dims: probe_dims.clone(),
                passed,
                runs,
            };
            emit(&cli, serde_json::to_string_pretty(&report).expect("report serialises"), text).map(|()| passed)
        }
        Command::Show { name } => match name {
            None => emit(&cli, serde_json::to_string(&cli::BUILTIN_NAMES).expect("names"), cli::BUILTIN_NAMES.join("\n") + "\n")
                .map(|()| true),
            Some(n) => match cli::builtin(n) {
                Some(f) => {
                    let json = cli::scenario::to_json(&f);
                    emit(&cli, json.clone(), json + "\n").map(|()| true)
                }
                None => return invalid(&format!("unknown builtin `{n}`; available: {}", cli::BUILTIN_NAMES.join(", "))),
            },
        },
    };
    match result {
        Ok(passed) => code(passed),
        Err(e) => {
            eprintln!("error: cannot write report: {e}");
            ExitCode::from(EXIT_FAIL as u8)
        }
    }
}
