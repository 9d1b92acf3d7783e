mod args;
mod run;

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use args::{Cli, Command};
use run::Outcome;

const EXIT_USAGE: u8 = 1;
const EXIT_FAIL: u8 = 2;

#[derive(Serialize)]
struct RunReport {
    command: Vec<String>,
    /// SHA-256 over the arguments and the contents of every input file.
    inputs_digest: String,
    outputs: Value,
    pass: bool,
    version: &'static str,
    wall_time_s: f64,
}

fn digest(argv: &[String], inputs: &[impl AsRef<Path>]) -> Result<String> {
    let mut h = Sha256::new();
    for a in argv {
        h.update(a.as_bytes());
        h.update([0]);
    }
    for p in inputs {
        h.update(fs::read(p.as_ref()).with_context(|| format!("reading {}", p.as_ref().display()))?);
    }
    Ok(hex::encode(h.finalize()))
}

fn threads() -> Result<()> {
    if let Ok(n) = std::env::var("SLIDECAL_THREADS") {
        let n: usize = n.parse().context("SLIDECAL_THREADS must be a positive integer")?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Build(a) => run::build_cmd(a),
        Command::Energy(a) => run::energy_cmd(a),
        Command::Calibrate(a) => run::calibrate_cmd(a),
        Command::Compete(a) => run::compete_cmd(a),
        Command::Evolve(a) => run::evolve_cmd(a),
        Command::Net { command } => run::net_cmd(command),
        Command::Classify1d(a) => run::classify1d_cmd(a),
        Command::Fubini(a) => run::fubini_cmd(a),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let start = Instant::now();
    let result = threads().and_then(|()| {
        let out = dispatch(&cli)?;
        if let Some(path) = &cli.report {
            let report = RunReport {
                command: argv[1..].to_vec(),
                inputs_digest: digest(&argv[1..], &out.inputs)?,
                outputs: out.outputs.clone(),
                pass: out.pass,
                version: env!("CARGO_PKG_VERSION"),
                wall_time_s: start.elapsed().as_secs_f64(),
            };
            fs::write(path, serde_json::to_string_pretty(&report)?).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(out.pass)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
