use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use quadctl::harness::{compute_metrics, read_log, run_scenario, write_log, Metrics, Scenario};
use quadctl::Error;

const EXIT_INVALID: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "quadctl",
    version,
    about = "Quadrotor cascade control simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and write `<name>.csv` and `<name>.metrics.json`.
    Run {
        scenario: PathBuf,
        /// Output directory; defaults to the scenario's `output` or the current directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dotted-key override, e.g. `inner.lambda=1.0`. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run every `*.toml` scenario in a directory in parallel.
    Sweep {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print metrics for a log as JSON.
    Metrics { log: PathBuf },
    /// Print metrics for two logs side by side.
    Compare { a: PathBuf, b: PathBuf },
}

enum Outcome {
    Ok,
    Diverged,
}

fn run_one(path: &Path, out: Option<&Path>, overrides: &[String]) -> anyhow::Result<Outcome> {
    let scenario = Scenario::load(path, overrides)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| scenario.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let result = run_scenario(&scenario)?;
    let csv = dir.join(format!("{}.csv", scenario.name));
    write_log(&result.log, &csv)?;
    let json = dir.join(format!("{}.metrics.json", scenario.name));
    std::fs::write(&json, serde_json::to_string_pretty(&result.metrics)? + "\n")
        .with_context(|| format!("writing {}", json.display()))?;
    let m = &result.metrics;
    println!(
        "{}: final position RMSE {:.4} m, final attitude RMSE {:.4} rad{}",
        scenario.name,
        m.position_rmse_final,
        m.attitude_rmse_final,
        m.failure
            .as_deref()
            .map(|f| format!(", diverged: {f}"))
            .unwrap_or_default()
    );
    Ok(if m.diverged {
        Outcome::Diverged
    } else {
        Outcome::Ok
    })
}

fn metrics_of(path: &Path) -> anyhow::Result<Metrics> {
    Ok(compute_metrics(&read_log(path)?)?)
}

fn is_invalid(e: &anyhow::Error) -> bool {
    matches!(
        e.downcast_ref::<Error>(),
        Some(
            Error::InvalidScenario(_)
                | Error::InvalidSchedule(_)
                | Error::DegenerateQuaternion { .. }
        )
    )
}

fn exit_for(result: anyhow::Result<Outcome>) -> ExitCode {
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Diverged) => ExitCode::from(EXIT_DIVERGED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_invalid(&e) { EXIT_INVALID } else { 1 })
        }
    }
}

fn sweep(dir: &Path, out: Option<&Path>, overrides: &[String]) -> anyhow::Result<Outcome> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .toml scenarios in {}", dir.display());
    }
    let results: Vec<_> = files
        .par_iter()
        .map(|f| (f, run_one(f, out, overrides)))
        .collect();
    let mut worst = Outcome::Ok;
    for (f, r) in results {
        match r {
            Ok(Outcome::Diverged) => worst = Outcome::Diverged,
            Ok(Outcome::Ok) => {}
            Err(e) => return Err(e.context(format!("scenario {}", f.display()))),
        }
    }
    Ok(worst)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            out,
            overrides,
        } => run_one(&scenario, out.as_deref(), &overrides),
        Command::Sweep {
            dir,
            out,
            overrides,
        } => sweep(&dir, out.as_deref(), &overrides),
        Command::Metrics { log } => metrics_of(&log).and_then(|m| {
            println!("{}", serde_json::to_string_pretty(&m)?);
            Ok(Outcome::Ok)
        }),
        Command::Compare { a, b } => metrics_of(&a).and_then(|ma| {
            let mb = metrics_of(&b)?;
            let json =
                serde_json::json!({ a.display().to_string(): ma, b.display().to_string(): mb });
            println!("{}", serde_json::to_string_pretty(&json)?);
            Ok(Outcome::Ok)
        }),
    };
    exit_for(result)
}
