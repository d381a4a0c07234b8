//! Command-line surface: `compile`, `run`, `verify` and `audit`.
//!
//! Exit codes are 0 for success or a passing verification, 1 for a failed
//! verification and 2 for invalid input.

pub mod documents;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::apparatus::RandomSource;
use crate::function_specs::{FunctionSpec, PlayerInputs, MAX_PLAYERS};
use crate::protocol::{compile, execute, ProtocolPlan};
use crate::verification::{audit_resources, check_correctness, check_security, VerificationReport};
use documents::{ReportDocument, SpecDocument, TraceDocument};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_INVALID: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "balance-mpc",
    version,
    about = "Secure multi-party computation with a balance scale and coins"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile a function spec into a protocol plan.
    Compile {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Execute a plan once on the given inputs.
    Run {
        #[arg(long)]
        plan: PathBuf,
        /// Player bits, player 1 leftmost.
        #[arg(long)]
        inputs: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include inputs, shuffles and pan weights in the trace document.
        #[arg(long)]
        reveal_randomness: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustively verify a compiled (or supplied) plan against a spec.
    Verify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit the resource counts of a plan.
    Audit {
        #[arg(long)]
        plan: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Correctness,
    Security,
    Resources,
    All,
}

/// An error that maps to exit code 2.
#[derive(Debug)]
struct Invalid(String);

impl<E: std::fmt::Display> From<E> for Invalid {
    fn from(e: E) -> Self {
        Invalid(e.to_string())
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Invalid> {
    let text = fs::read_to_string(path)
        .map_err(|e| Invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Invalid(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Invalid> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Invalid(format!("cannot write {}: {e}", path.display())))
}

fn read_spec(path: &Path) -> Result<FunctionSpec, Invalid> {
    let doc: SpecDocument = read_json(path)?;
    doc.to_spec()
        .map_err(|e| Invalid(format!("invalid spec {}: {e}", path.display())))
}

fn read_plan(path: &Path) -> Result<ProtocolPlan, Invalid> {
    let plan: ProtocolPlan = read_json(path)?;
    if plan.n == 0 || plan.n > MAX_PLAYERS {
        return Err(Invalid(format!(
            "invalid plan {}: n = {} outside 1..={MAX_PLAYERS}",
            path.display(),
            plan.n
        )));
    }
    Ok(plan)
}

fn bit(b: bool) -> u8 {
    u8::from(b)
}

fn report_line(r: &VerificationReport) -> String {
    format!(
        "{}: {} (inputs={} transcripts={} executions={} failures={})",
        r.check,
        if r.passed { "pass" } else { "FAIL" },
        r.stats.inputs,
        r.stats.transcripts,
        r.stats.executions,
        r.failures
    )
}

fn print_counterexamples(out: &mut dyn Write, r: &VerificationReport) -> std::io::Result<()> {
    for c in &r.counterexamples {
        writeln!(
            out,
            "  counterexample: {}",
            serde_json::to_string(c).unwrap_or_default()
        )?;
    }
    Ok(())
}

fn cmd_compile(out: &mut dyn Write, spec: &Path, target: &Path) -> Result<u8, Invalid> {
    let plan = compile(&read_spec(spec)?)?;
    write_json(target, &plan)?;
    writeln!(
        out,
        "protocol: {}",
        serde_json::to_string(&plan.kind)?.trim_matches('"')
    )?;
    writeln!(out, "resources: {}", plan.resources)?;
    for note in &plan.notes {
        writeln!(out, "note: {note}")?;
    }
    Ok(EXIT_PASS)
}

fn cmd_run(
    out: &mut dyn Write,
    plan: &Path,
    inputs: &str,
    seed: u64,
    reveal: bool,
    target: Option<&Path>,
) -> Result<u8, Invalid> {
    let plan = read_plan(plan)?;
    let x = PlayerInputs::parse(inputs)?;
    let trace = execute(&plan, &x, &mut RandomSource::seeded(seed))?;
    writeln!(out, "view: {}", trace.view)?;
    writeln!(out, "output: {}", bit(trace.output))?;
    if let Some(target) = target {
        let doc = TraceDocument::new(&plan, &trace, reveal.then_some((inputs, seed)));
        write_json(target, &doc)?;
    }
    Ok(EXIT_PASS)
}

fn cmd_verify(
    out: &mut dyn Write,
    spec_path: &Path,
    plan_path: Option<&Path>,
    mode: Mode,
    target: Option<&Path>,
) -> Result<u8, Invalid> {
    let spec = read_spec(spec_path)?;
    let plan = match plan_path {
        Some(p) => read_plan(p)?,
        None => compile(&spec)?,
    };
    let mut reports = Vec::new();
    if matches!(mode, Mode::Correctness | Mode::All) {
        reports.push(check_correctness(&spec, &plan));
    }
    if matches!(mode, Mode::Security | Mode::All) {
        reports.push(check_security(&spec, &plan));
    }
    if matches!(mode, Mode::Resources | Mode::All) {
        reports.push(audit_resources(&plan));
    }
    for r in &reports {
        writeln!(out, "{}", report_line(r))?;
        print_counterexamples(out, r)?;
    }
    let passed = reports.iter().all(|r| r.passed);
    if let Some(target) = target {
        write_json(
            target,
            &ReportDocument {
                spec: SpecDocument::from_spec(&spec),
                protocol: plan.kind,
                resources: plan.resources,
                passed,
                reports,
            },
        )?;
    }
    Ok(if passed { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_audit(out: &mut dyn Write, plan: &Path) -> Result<u8, Invalid> {
    let plan = read_plan(plan)?;
    let r = audit_resources(&plan);
    writeln!(out, "resources: {}", plan.resources)?;
    writeln!(out, "{}", report_line(&r))?;
    print_counterexamples(out, &r)?;
    Ok(if r.passed { EXIT_PASS } else { EXIT_FAIL })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return if e.use_stderr() {
                let _ = write!(err, "{e}");
                EXIT_INVALID
            } else {
                let _ = write!(out, "{e}");
                EXIT_PASS
            };
        }
    };
    let result = match &cli.command {
        Command::Compile { spec, out: target } => cmd_compile(out, spec, target),
        Command::Run {
            plan,
            inputs,
            seed,
            reveal_randomness,
            out: target,
        } => cmd_run(
            out,
            plan,
            inputs,
            *seed,
            *reveal_randomness,
            target.as_deref(),
        ),
        Command::Verify {
            spec,
            plan,
            mode,
            out: target,
        } => cmd_verify(out, spec, plan.as_deref(), *mode, target.as_deref()),
        Command::Audit { plan } => cmd_audit(out, plan),
    };
    match result {
        Ok(code) => code,
        Err(Invalid(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INVALID
        }
    }
}
