use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use condex_cli::config::ScenarioConfig;
use condex_cli::scenarios::{bundled_config, BUNDLED};
use condex_cli::{run_scenario, verify, write_outputs, CliError, CliResult, SolverKind};
use log::info;

#[derive(Parser)]
#[command(name = "condex", version, about = "Conditional extrema of prior vector fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file, or a bundled scenario by name.
    Run {
        scenario: String,
        #[arg(long)]
        solver: Option<SolverKind>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the acceptance suite and print a pass/fail table.
    Verify {
        /// Where the bundled scenario outputs go.
        #[arg(long, default_value = "condex-verify")]
        out: PathBuf,
        /// Run only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
    /// List the bundled scenarios.
    List,
}

fn load(scenario: &str) -> CliResult<ScenarioConfig> {
    let path = Path::new(scenario);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return ScenarioConfig::from_json(scenario, &text);
    }
    if BUNDLED.iter().any(|(n, _)| *n == scenario) {
        info!("no file {scenario:?}; using the bundled scenario");
        return bundled_config(scenario);
    }
    Err(CliError::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or bundled scenario")))
}

fn run(scenario: &str, solver: Option<SolverKind>, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let mut config = load(scenario)?;
    if let Some(s) = solver {
        config.solver = s;
    }
    if let Some(k) = seed {
        config.seed = k;
    }
    let scn = config.validate(scenario)?;
    let report = run_scenario(&scn)?;
    for path in write_outputs(&report, out)? {
        info!("wrote {}", path.display());
    }
    let text = serde_json::to_string_pretty(&report.summary).expect("summary serializes");
    // a closed pipe downstream is not an error of the run
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, solver, out, seed } => run(&scenario, solver, &out, seed).map(|_| true),
        Command::Verify { out, only } => verify::write_bundled(&out).map(|_| {
            let results: Vec<_> = if only.is_empty() { verify::run_all() } else { only.into_iter().map(verify::criterion).collect() };
            print!("{}", verify::table(&results));
            results.iter().all(|c| c.passed())
        }),
        Command::List => {
            for (name, _) in BUNDLED {
                println!("{name}");
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
