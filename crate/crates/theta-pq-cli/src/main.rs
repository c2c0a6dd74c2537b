//! Verification CLI: batch suites, cross ratios, positivity queries,
//! and representation building over exact arithmetic.
//!
//! Reports are emitted as JSON on stdout and are byte-stable for a
//! fixed seed; human-oriented summaries and timing go to stderr. Exit
//! codes: 0 all PASS, 1 any FAIL, 2 when the only non-passes are
//! UNDECIDED.

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::process::ExitCode;
use std::sync::Arc;

use theta_pq::flags::{FlagWire, PartialFlag};
use theta_pq::matrix::Matrix;
use theta_pq::positivity::{is_positive_tuple, ThetaCoordinates, Verdict};
use theta_pq::pqspace::build_form;
use theta_pq::reps::RepresentationWire;
use theta_pq::scalar::Scalar;
use theta_pq::suites::{run_suite, SuiteConfig, SUITE_NAMES};

#[derive(Parser)]
#[command(
    name = "thetapq",
    about = "Exact verification of the positive structure of PO(p,q)",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and print its JSON report.
    Verify(VerifyArgs),
    /// Evaluate the cross ratio of four flags from a JSON file.
    Cr(CrArgs),
    /// Certify positivity of a flag triple or tuple from a JSON file.
    Positivity(PositivityArgs),
    /// Build a Fuchsian-locus representation and print its JSON.
    RepBuild(RepBuildArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// One of: identities, semigroup, braid, poscr, collar2q, collar,
    /// hybrid, derivative, ratioed, involutions.
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 3)]
    q: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the eigenvalue enclosure tolerance, e.g. "1/10000000000".
    #[arg(long)]
    tol: Option<String>,
    /// Emit the raw JSON report only (it is also the default output).
    #[arg(long, default_value_t = false)]
    json: bool,
}

#[derive(Args)]
struct CrArgs {
    /// JSON file {p, q, flags: [[level bases]…]} with four flags.
    #[arg(long)]
    file: String,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = false)]
    json: bool,
}

#[derive(Args)]
struct PositivityArgs {
    /// JSON file {p, q, flags: [[level bases]…]} with at least three flags.
    #[arg(long)]
    file: String,
    #[arg(long, default_value_t = false)]
    json: bool,
}

#[derive(Args)]
struct RepBuildArgs {
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 3)]
    q: usize,
    /// Variant selector for the generator pair (even: rational spectra,
    /// odd: include an irrational-trace generator).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = false)]
    json: bool,
}

#[derive(Serialize, Deserialize)]
struct FlagsFile {
    p: usize,
    q: usize,
    flags: Vec<Vec<Matrix>>,
}

#[derive(Serialize)]
struct CrOutput {
    k: usize,
    exact: String,
    decimal: f64,
}

#[derive(Serialize)]
#[serde(untagged)]
enum PositivityResult {
    Decided {
        result: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        certificate: Option<Vec<ThetaCoordinates>>,
    },
    Undecided {
        result: String,
        reason: String,
    },
}

fn configure_threads() {
    if let Ok(v) = std::env::var("THETA_POS_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

fn load_flags(path: &str) -> Result<(Arc<theta_pq::pqspace::FormData>, Vec<PartialFlag>), String> {
    let raw = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
    let file: FlagsFile =
        serde_json::from_str(&raw).map_err(|e| format!("malformed flag JSON: {e}"))?;
    let form = Arc::new(build_form(file.p, file.q).map_err(|e| e.to_string())?);
    let flags = file
        .flags
        .iter()
        .map(|levels| {
            PartialFlag::from_wire(
                form.clone(),
                &FlagWire {
                    p: file.p,
                    q: file.q,
                    levels: levels.clone(),
                },
            )
            .map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((form, flags))
}

fn cmd_verify(args: &VerifyArgs) -> ExitCode {
    let mut cfg = SuiteConfig::new(args.p, args.q, args.trials, args.seed);
    if let Some(t) = &args.tol {
        match t.parse::<Scalar>() {
            Ok(tol) if tol.is_positive() => cfg.tol = tol,
            _ => {
                eprintln!("error: --tol must be a positive rational like 1/10000000000");
                return ExitCode::from(64);
            }
        }
    }
    if !SUITE_NAMES.contains(&args.suite.as_str()) {
        eprintln!(
            "error: unknown suite {:?}; expected one of {}",
            args.suite,
            SUITE_NAMES.join(", ")
        );
        return ExitCode::from(64);
    }
    let started = std::time::Instant::now();
    match run_suite(&args.suite, &cfg) {
        Ok(report) => {
            println!("{}", report.to_json());
            if !args.json {
                eprintln!(
                    "suite {} ({},{}) seed {}: {} PASS, {} FAIL, {} UNDECIDED in {:?}",
                    report.suite,
                    report.p,
                    report.q,
                    report.seed,
                    report.pass,
                    report.fail,
                    report.undecided,
                    started.elapsed()
                );
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(64)
        }
    }
}

fn cmd_cr(args: &CrArgs) -> ExitCode {
    let (_, flags) = match load_flags(&args.file) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(64);
        }
    };
    if flags.len() != 4 {
        eprintln!("error: cross ratio needs exactly 4 flags, got {}", flags.len());
        return ExitCode::from(64);
    }
    let k = args.k;
    let input = theta_pq::crossratio::CrossRatioInput::new(
        flags[0].level(k).clone(),
        flags[1].level(k).clone(),
        flags[2].level(k).clone(),
        flags[3].level(k).clone(),
    );
    let value = input.and_then(|i| theta_pq::crossratio::cr_k(&i));
    match value {
        Ok(v) => {
            let out = CrOutput {
                k,
                exact: v.to_string(),
                decimal: v.to_f64(),
            };
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            if !args.json {
                eprintln!("{} ({})", out.exact, out.decimal);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(65)
        }
    }
}

fn cmd_positivity(args: &PositivityArgs) -> ExitCode {
    let (_, flags) = match load_flags(&args.file) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(64);
        }
    };
    match is_positive_tuple(&flags) {
        Ok(Verdict::Positive(certs)) => {
            let out = PositivityResult::Decided {
                result: true,
                certificate: Some(certs),
            };
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            ExitCode::SUCCESS
        }
        Ok(Verdict::NotPositive) => {
            let out = PositivityResult::Decided {
                result: false,
                certificate: None,
            };
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            ExitCode::SUCCESS
        }
        Ok(Verdict::Undecided(reason)) => {
            let out = PositivityResult::Undecided {
                result: "undecided".into(),
                reason,
            };
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(65)
        }
    }
}

fn cmd_rep_build(args: &RepBuildArgs) -> ExitCode {
    let form = match build_form(args.p, args.q) {
        Ok(f) => Arc::new(f),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(64);
        }
    };
    match theta_pq::suites::suite_representation(&form, args.seed) {
        Ok(rep) => {
            let wire: RepresentationWire = rep.to_wire();
            println!("{}", serde_json::to_string_pretty(&wire).unwrap());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(65)
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match &cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Cr(args) => cmd_cr(args),
        Command::Positivity(args) => cmd_positivity(args),
        Command::RepBuild(args) => cmd_rep_build(args),
    }
}
