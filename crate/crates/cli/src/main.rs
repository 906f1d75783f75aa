mod commands;
mod config;
mod error;
mod inputs;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use commands::{Command, Verdict};
use config::{load_config, merge, ConfigEcho};
use error::{CliError, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

pub const SCHEMA_VERSION: &str = "1";
pub const SEED_ENV: &str = "LIEGERM_SEED";

#[derive(Parser)]
#[command(name = "liegerm", version, about = "Local Lie group and germ laboratory")]
struct Cli {
    /// JSON run configuration; flags take precedence over its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    BchEval(commands::BchEval),
    BchAxioms(commands::BchAxioms),
    Hlemma(commands::Hlemma),
    GroupDev(commands::GroupDev),
    GroupAssoc(commands::GroupAssoc),
    OlverDemo(commands::OlverDemo),
    NearFit(commands::NearFit),
    NearSweep(commands::NearSweep),
    TaylorProbe(commands::TaylorProbe),
    GermCompare(commands::GermCompare),
    HardyBuild(commands::HardyBuild),
    HardyVerify(commands::HardyVerify),
    Intertwine(commands::Intertwine),
}

#[derive(Serialize)]
struct Versions {
    liegerm: &'static str,
    schema: &'static str,
}

#[derive(Serialize)]
struct Report {
    schema_version: &'static str,
    command: &'static str,
    inputs: Value,
    config: ConfigEcho,
    results: Value,
    verdict: Verdict,
    versions: Versions,
    wall_time: f64,
}

fn execute<C: Command>(flags: C, config: Option<PathBuf>, out: Option<PathBuf>) -> Result<i32, CliError> {
    let start = Instant::now();
    let file = config.as_deref().map(|p| load_config(p, C::NAME)).transpose()?;
    let (mut args, conflicts) = merge(&flags, file, config.as_deref())?;
    let mut seed_source = None;
    if let Some(seed) = args.seed() {
        seed_source = Some(if flags.clone().seed().is_some_and(|s| s.is_some()) {
            "flag"
        } else if seed.is_some() {
            "config"
        } else if let Ok(text) = std::env::var(SEED_ENV) {
            *seed = Some(text.trim().parse().map_err(|_| {
                CliError::usage("parse", format!("{SEED_ENV}={text:?} is not an unsigned 64-bit integer"))
            })?);
            "env"
        } else {
            *seed = Some(liegerm::rng::DEFAULT_SEED);
            "default"
        });
    }
    args.fill_defaults();
    let outcome = args.run()?;
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: C::NAME,
        inputs: serde_json::to_value(&args).expect("inputs serialize"),
        config: ConfigEcho { file: config.map(|p| p.display().to_string()), conflicts, seed_source },
        results: outcome.results,
        verdict: outcome.verdict,
        versions: Versions { liegerm: env!("CARGO_PKG_VERSION"), schema: SCHEMA_VERSION },
        wall_time: start.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match out {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| CliError::usage("io", format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(match outcome.verdict {
        Verdict::Fail => EXIT_FAIL,
        Verdict::Pass | Verdict::Inconclusive => EXIT_PASS,
    })
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return EXIT_PASS;
            }
            eprint!("error[cli/usage]: {}", e.render());
            return EXIT_USAGE;
        }
    };
    let (config, out) = (cli.config, cli.out);
    let result = match cli.command {
        Cmd::BchEval(a) => execute(a, config, out),
        Cmd::BchAxioms(a) => execute(a, config, out),
        Cmd::Hlemma(a) => execute(a, config, out),
        Cmd::GroupDev(a) => execute(a, config, out),
        Cmd::GroupAssoc(a) => execute(a, config, out),
        Cmd::OlverDemo(a) => execute(a, config, out),
        Cmd::NearFit(a) => execute(a, config, out),
        Cmd::NearSweep(a) => execute(a, config, out),
        Cmd::TaylorProbe(a) => execute(a, config, out),
        Cmd::GermCompare(a) => execute(a, config, out),
        Cmd::HardyBuild(a) => execute(a, config, out),
        Cmd::HardyVerify(a) => execute(a, config, out),
        Cmd::Intertwine(a) => execute(a, config, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("liegerm: {e}");
            e.exit_code()
        }
    }
}

fn main() {
    std::process::exit(run());
}
