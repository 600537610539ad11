use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use qmlab::io::{write_json, write_text};
use qmlab::scenario::{self, Format, RunError, ScenarioFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
    Svg,
}

/// Run one qmlab scenario and write its report and artifacts.
#[derive(Debug, Parser)]
#[command(name = "qmlab", version)]
struct Args {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed stored in the scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output formats to write; repeat or comma-separate. Default: all.
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Vec<OutFormat>,
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("qmlab: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("qmlab: configuration error: cannot set thread count: {e}");
            return ExitCode::from(2);
        }
    }
    let formats = if args.format.is_empty() {
        vec![OutFormat::Json, OutFormat::Csv, OutFormat::Svg]
    } else {
        args.format.clone()
    };
    let file = match ScenarioFile::load(&args.config) {
        Ok(f) => f,
        Err(e) => return fail(&RunError::Config(e)),
    };
    let outcome = match scenario::run(&file, args.seed) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    let wanted = |f: Format| {
        formats.contains(&match f {
            Format::Json => OutFormat::Json,
            Format::Csv => OutFormat::Csv,
            Format::Svg => OutFormat::Svg,
        })
    };
    let mut written = Vec::new();
    if wanted(Format::Json) {
        let path = args.out.join("report.json");
        if let Err(e) = write_json(&path, &outcome.report) {
            return fail(&RunError::Config(e));
        }
        written.push(path);
    }
    for a in outcome.artifacts.iter().filter(|a| wanted(a.format)) {
        let path = args.out.join(&a.name);
        if let Err(e) = write_text(&path, &a.contents) {
            return fail(&RunError::Config(e));
        }
        written.push(path);
    }
    let status = if outcome.passed { "ok" } else { "checks failed" };
    println!("{} {status}: {} files in {}", file.scenario.kind(), written.len(), args.out.display());
    ExitCode::from(outcome.exit_code() as u8)
}
