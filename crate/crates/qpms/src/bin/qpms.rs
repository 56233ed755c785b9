//! Command-line scenario runner.
//!
//! `qpms run <preset|file.json>` executes a scenario into an output
//! directory, `qpms list` shows the built-in presets, and
//! `qpms validate <file.json>` checks a scenario file without running it.
//!
//! Exit codes: 0 on success, 2 when a scenario fails validation, 3 when a
//! run hits cell failures that the scenario declares fatal.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qpms::scenario::{list_presets, preset, run_scenario, Scenario};

#[derive(Parser)]
#[command(
    name = "qpms",
    version,
    about = "Spatiotemporal parametric mode-sorting simulator and optimizer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in preset or a scenario JSON file.
    Run {
        /// Preset name (see `qpms list`) or path to a scenario JSON file.
        target: String,
        /// Output directory (default: runs/<scenario-name>).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Number of worker threads (default: all hardware threads).
        #[arg(long, value_name = "N")]
        jobs: Option<usize>,
        /// Override the scenario's random seed.
        #[arg(long, value_name = "S")]
        seed: Option<u64>,
        /// Poisson-sample all exported counts (default: deterministic means).
        #[arg(long)]
        poisson: bool,
    },
    /// List the built-in presets.
    List,
    /// Validate a scenario JSON file without running it.
    Validate {
        /// Path to a scenario JSON file.
        file: PathBuf,
    },
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_FATAL: u8 = 3;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            target,
            out,
            jobs,
            seed,
            poisson,
        } => cmd_run(&target, out, jobs, seed, poisson),
        Command::List => cmd_list(),
        Command::Validate { file } => cmd_validate(&file),
    }
}

fn cmd_list() -> ExitCode {
    for info in list_presets() {
        println!("{:<22} {}", info.name, info.description);
    }
    ExitCode::SUCCESS
}

/// Presets take precedence; anything else is read as a JSON file.
fn load_scenario(target: &str) -> Result<Scenario, String> {
    if let Some(sc) = preset(target) {
        return Ok(sc);
    }
    let path = PathBuf::from(target);
    if !path.exists() {
        return Err(format!(
            "'{target}' is neither a preset (see `qpms list`) nor an existing file"
        ));
    }
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    Scenario::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_run(
    target: &str,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    seed: Option<u64>,
    poisson: bool,
) -> ExitCode {
    let mut scenario = match load_scenario(target) {
        Ok(sc) => sc,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if let Some(s) = seed {
        scenario.seed = s;
    }
    if poisson {
        scenario.poisson = true;
    }
    if let Err(e) = scenario.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_VALIDATION);
    }

    let out_dir = out.unwrap_or_else(|| PathBuf::from("runs").join(&scenario.name));
    eprintln!("running '{}' into {}", scenario.name, out_dir.display());

    let summary = match run_scenario(&scenario, &out_dir, jobs) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                qpms::Error::Validation { .. } | qpms::Error::Config(_) => EXIT_VALIDATION,
                _ => EXIT_FATAL,
            });
        }
    };

    for trend in &summary.trends {
        let status = if trend.report.passed { "pass" } else { "FAIL" };
        println!("trend {:<32} {}", trend.name, status);
        for f in &trend.report.failures {
            println!("  {f}");
        }
    }
    if !summary.failures.is_empty() {
        println!("{} cell failure(s):", summary.failures.len());
        for f in &summary.failures {
            println!("  {f}");
        }
    }
    println!(
        "{}: {} file(s) written to {} ({})",
        summary.name,
        summary.manifest.files.len(),
        summary.out_dir.display(),
        if summary.passed { "passed" } else { "failed" },
    );

    if summary.fatal {
        eprintln!("error: cell failures occurred and the scenario declares them fatal");
        ExitCode::from(EXIT_FATAL)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_validate(file: &PathBuf) -> ExitCode {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", file.display());
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    match Scenario::from_json(&text).and_then(|sc| {
        sc.validate()?;
        Ok(sc)
    }) {
        Ok(sc) => {
            println!(
                "{}: ok ({} stage(s), {} trend(s))",
                sc.name,
                sc.stages.len(),
                sc.trends.len()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}
