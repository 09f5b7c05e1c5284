//! `s3curv` command-line front end.
//!
//! Exit codes: 0 on success, 2 when the degree theory is silent (inconclusive
//! sign, `t` on a breakpoint, no blow-up curve, or `d = 0` on every interval),
//! 1 on any other error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use s3curv::problem::{builtin, ProblemFile, BUILTIN};
use s3curv::reduction::write_curves_csv;
use s3curv::report::{self, Command};
use s3curv::selftest;

#[derive(Parser)]
#[command(name = "s3curv", version, about = "Degree counting for prescribed scalar curvature on S³")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Critical points with Morse indices and Laplacian signs.
    Crit(Common),
    /// Critical points with the invariants a0, a1, a2.
    Invariants(Common),
    /// Degree on each interval of (0, 1] between breakpoints.
    Degree(Common),
    /// Blow-up curves s(mu) through the points of M_*(t0).
    Blowup {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        t0: f64,
        /// Also write the curve samples as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Runs the acceptance suite.
    Selftest {
        /// Ignored; accepted for a uniform command line.
        file: Option<String>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Problem file (JSON) or the name of a bundled problem.
    file: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Absolute tolerance of the principal-value integrals.
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
    /// Write the machine-readable report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn load(c: &Common) -> anyhow::Result<ProblemFile> {
    let mut p = if Path::new(&c.file).exists() {
        let text = std::fs::read_to_string(&c.file).with_context(|| format!("reading {}", c.file))?;
        ProblemFile::parse(&text)?
    } else if let Some(p) = builtin(&c.file) {
        p
    } else {
        bail!("{}: no such file or bundled problem (bundled: {})", c.file, BUILTIN.join(", "));
    };
    if let Some(s) = c.seed {
        p.options.seed = s;
    }
    if let Some(t) = c.tol {
        p.options.tol = t;
    }
    Ok(ProblemFile::parse(&p.to_json())?)
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let (command, common, t0, csv) = match cli.command {
        Cmd::Crit(c) => (Command::Crit, c, 1.0, None),
        Cmd::Invariants(c) => (Command::Invariants, c, 1.0, None),
        Cmd::Degree(c) => (Command::Degree, c, 1.0, None),
        Cmd::Blowup { common, t0, csv } => (Command::Blowup, common, t0, csv),
        Cmd::Selftest { json, .. } => {
            let results = selftest::run_all();
            for r in &results {
                println!("{}", r.line());
            }
            if let Some(path) = json {
                write(&path, &serde_json::to_string_pretty(&results)?)?;
            }
            return Ok(if results.iter().all(|r| r.passed) { 0 } else { 1 });
        }
    };
    let problem = load(&common)?;
    let rep = match report::run(command, &problem, t0) {
        Ok(r) => r,
        Err(e) if e.is_silent() => {
            eprintln!("no conclusion: {e}");
            return Ok(2);
        }
        Err(e) => return Err(e.into()),
    };
    print!("{}", report::render(&rep));
    if let Some(path) = &common.json {
        write(path, &rep.to_json())?;
    }
    if let (Some(path), Some(b)) = (&csv, &rep.blowup) {
        let mut buf = Vec::new();
        write_curves_csv(&b.curves, &mut buf)?;
        write(path, &String::from_utf8(buf)?)?;
    }
    let silent = rep.degree.as_ref().is_some_and(|d| !d.any_solvable());
    Ok(if silent { 2 } else { 0 })
}

fn main() -> ExitCode {
    // usage errors are hard errors (1), not clap's default 2
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
