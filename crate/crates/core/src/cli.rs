//! Command-line driver.
//!
//! Exit codes: 0 success, 1 a check found a violation, 2 the specification
//! could not be read, parsed, type-checked or its constants resolved, 3 usage
//! error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::checker::{check_operation, CheckError, CheckOptions};
use crate::evaluator::EvalMode;
use crate::frontend::{self, ast::Spec, pretty_print};
use crate::scaffold::{render_suite, SpecSkeleton};
use crate::semantics::{elaborate, SemanticError, TypedSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_SPEC_ERROR: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "finspec", version, about = "Exhaustively check finite-model specifications")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an operation on all inputs and check every annotation
    Check(CheckArgs),
    /// Like `check`, but prints every run and its result
    Run(CheckArgs),
    /// Parse a file and print it back
    Parse(FileArgs),
    /// Parse, resolve constants and type-check a file
    Typecheck(ConstArgs),
    /// Generate the validation theorems for a precondition/postcondition pair
    Scaffold(ScaffoldArgs),
    /// List the operations that can be checked
    ListOps(ConstArgs),
}

#[derive(Debug, Args)]
pub struct FileArgs {
    pub file: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConstArgs {
    pub file: PathBuf,
    /// Value of an unspecified natural constant, as NAME=VALUE
    #[arg(long = "const", value_name = "NAME=VALUE", value_parser = parse_const)]
    pub consts: Vec<(String, i64)>,
    /// Value of every unspecified constant not given with --const
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(i64).range(0..))]
    pub default: i64,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub spec: ConstArgs,
    /// Operation to check
    #[arg(long)]
    pub op: String,
    /// Only print the summary
    #[arg(long)]
    pub silent: bool,
    /// Explore every choice instead of the first one
    #[arg(long)]
    pub nondet: bool,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    /// Print a progress line every this many inputs (0 for none)
    #[arg(long, default_value_t = 0)]
    pub progress: u64,
}

#[derive(Debug, Args)]
pub struct ScaffoldArgs {
    pub file: PathBuf,
    /// Name of the precondition predicate
    #[arg(long)]
    pub pre: String,
    /// Name of the postcondition predicate
    #[arg(long)]
    pub post: String,
    /// Write a copy of the file with the suite appended here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_const(s: &str) -> Result<(String, i64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, found `{s}`"))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(format!("missing constant name in `{s}`"));
    }
    let value: i64 = value
        .trim()
        .parse()
        .map_err(|_| format!("`{value}` is not an integer"))?;
    if value < 0 {
        return Err(format!("constant {name} must not be negative"));
    }
    Ok((name.to_string(), value))
}

/// A failure with the exit code it maps to.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn spec(message: impl ToString) -> Failure {
        Failure {
            code: EXIT_SPEC_ERROR,
            message: message.to_string(),
        }
    }

    fn usage(message: impl ToString) -> Failure {
        Failure {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }
}

fn semantic_failure(e: SemanticError) -> Failure {
    let code = match e {
        SemanticError::TheoremFailed { .. } => EXIT_VIOLATION,
        _ => EXIT_SPEC_ERROR,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

fn read_spec(path: &Path) -> Result<(String, Spec), Failure> {
    let source = std::fs::read_to_string(path)
        .map_err(|e| Failure::spec(format!("cannot read {}: {e}", path.display())))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let spec = frontend::parse_source(&source, &name).map_err(Failure::spec)?;
    Ok((source, spec))
}

fn load(args: &ConstArgs) -> Result<TypedSpec, Failure> {
    let (_, spec) = read_spec(&args.file)?;
    let overrides: BTreeMap<String, i64> = args.consts.iter().cloned().collect();
    elaborate(&spec, &overrides, args.default).map_err(semantic_failure)
}

fn check(args: &CheckArgs, silent: bool, out: &mut dyn Write) -> Result<i32, Failure> {
    let spec = load(&args.spec)?;
    let opts = CheckOptions {
        operation_name: args.op.clone(),
        mode: if args.nondet {
            EvalMode::Nondeterministic
        } else {
            EvalMode::Deterministic
        },
        silent,
        workers: args.workers as usize,
        progress_every: args.progress,
    };
    let report = check_operation(&spec, &opts, out).map_err(|e| match e {
        CheckError::TooManyInputs(_) => Failure::spec(e),
        _ => Failure::usage(e),
    })?;
    Ok(if report.is_clean() {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    })
}

fn scaffold(args: &ScaffoldArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (source, spec) = read_spec(&args.file)?;
    let skel = SpecSkeleton::from_spec(&spec, &args.pre, &args.post).map_err(Failure::spec)?;
    let suite = render_suite(&skel);
    match &args.out {
        None => {
            let _ = write!(out, "{suite}");
        }
        Some(path) => {
            let mut text = source;
            if !text.ends_with('\n') {
                text.push('\n');
            }
            text.push('\n');
            text.push_str(&suite);
            std::fs::write(path, text)
                .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
        }
    }
    Ok(EXIT_OK)
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    match &cli.command {
        Command::Check(args) => check(args, args.silent, out),
        Command::Run(args) => check(args, false, out),
        Command::Parse(args) => {
            let (_, spec) = read_spec(&args.file)?;
            let _ = write!(out, "{}", pretty_print(&spec));
            Ok(EXIT_OK)
        }
        Command::Typecheck(args) => {
            let spec = load(args)?;
            for (name, value) in &spec.consts.naturals {
                let _ = writeln!(out, "{name} = {value}");
            }
            let _ = writeln!(out, "{} operations type-checked.", spec.ops.len());
            Ok(EXIT_OK)
        }
        Command::ListOps(args) => {
            let spec = load(args)?;
            for op in spec.ops.iter().filter(|op| op.has_params()) {
                let _ = writeln!(out, "{}", op.signature());
            }
            Ok(EXIT_OK)
        }
        Command::Scaffold(args) => scaffold(args, out),
    }
}

/// Runs the command line `argv` (including the program name) and returns
/// the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            if informational {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let _ = write!(err, "{}", e.render());
            return EXIT_USAGE;
        }
    };
    let code = match dispatch(&cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    };
    let _ = out.flush();
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn const_arguments() {
        assert_eq!(parse_const("N=20"), Ok(("N".to_string(), 20)));
        assert!(parse_const("N=-1").is_err());
        assert!(parse_const("N").is_err());
        assert!(parse_const("=3").is_err());
    }

    #[test]
    fn usage_errors_exit_with_three() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["finspec", "check", "x.fspec"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(run(["finspec", "frobnicate"], &mut out, &mut err), EXIT_USAGE);
    }
}
