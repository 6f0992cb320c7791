//! Exhaustive checking of one operation over its whole input space.
//!
//! Inputs are enumerated in canonical order (last parameter fastest) and
//! handed to a pool of workers in chunks. Results are reassembled in input
//! order on the calling thread, so transcripts and the reported first error
//! do not depend on the number of workers.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc};
use std::time::Instant;

use thiserror::Error;

use crate::evaluator::{EvalMode, Evaluator, Outcome, RuntimeError};
use crate::semantics::{OpDef, TypedSpec};
use crate::values::{format_args, LazySeq, Value};

const WORKER_STACK: usize = 256 << 20;
const MAX_CHUNK: u64 = 64;

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub operation_name: String,
    pub mode: EvalMode,
    pub silent: bool,
    pub workers: usize,
    /// Emit a progress line every this many inputs; 0 disables them.
    pub progress_every: u64,
}

impl CheckOptions {
    pub fn new(operation_name: &str) -> CheckOptions {
        CheckOptions {
            operation_name: operation_name.to_string(),
            mode: EvalMode::Deterministic,
            silent: true,
            workers: 1,
            progress_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailedInput {
    pub index: u64,
    pub args: Vec<Value>,
    pub error: RuntimeError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub operation: String,
    pub total_inputs: u64,
    pub checked: u64,
    pub inadmissible: u64,
    pub first_error: Option<FailedInput>,
    pub elapsed_ms: u128,
    /// Deterministic run of an operation that makes choices.
    pub nondet_note: bool,
}

impl CheckReport {
    pub fn is_clean(&self) -> bool {
        self.first_error.is_none()
    }

    /// Inputs never run because an earlier input failed.
    pub fn skipped(&self) -> u64 {
        self.total_inputs
            - self.checked
            - self.inadmissible
            - u64::from(self.first_error.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("unknown operation {0}")]
    UnknownOperation(String),
    #[error("{0} has no parameters to enumerate")]
    NotParameterized(String),
    #[error("the input space of {0} is too large to enumerate")]
    TooManyInputs(String),
}

/// Random access to the Cartesian product of the parameter domains.
#[derive(Debug, Clone)]
pub struct InputSpace {
    domains: Vec<Arc<Vec<Value>>>,
    total: u64,
}

impl InputSpace {
    pub fn new(op: &OpDef) -> Result<InputSpace, CheckError> {
        let too_many = || CheckError::TooManyInputs(op.name.clone());
        let mut domains = Vec::new();
        let mut total: u64 = 1;
        for p in &op.params {
            let values = p.domain.values().ok_or_else(too_many)?;
            total = total.checked_mul(values.len() as u64).ok_or_else(too_many)?;
            domains.push(values);
        }
        Ok(InputSpace { domains, total })
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// The input at `index` in canonical order.
    pub fn get(&self, mut index: u64) -> Vec<Value> {
        let mut args = vec![Value::Bool(false); self.domains.len()];
        for (k, d) in self.domains.iter().enumerate().rev() {
            let n = d.len() as u64;
            args[k] = d[(index % n) as usize].clone();
            index /= n;
        }
        args
    }
}

/// All argument lists of `op`, in canonical order.
pub fn enumerate_inputs(op: &OpDef) -> Result<LazySeq<Vec<Value>>, CheckError> {
    let space = Arc::new(InputSpace::new(op)?);
    Ok(LazySeq::unfold(0u64, move |&i| {
        (i < space.len()).then(|| (space.get(i), i + 1))
    }))
}

fn chunk_size(total: u64, workers: usize) -> u64 {
    if workers <= 1 {
        return total.max(1);
    }
    total.div_ceil(workers as u64 * 8).clamp(1, MAX_CHUNK)
}

/// Contiguous chunks covering `0..total`, claimed by workers in order.
pub fn partition_work(total: u64, workers: usize) -> Vec<Range<u64>> {
    partition_with_chunk(total, chunk_size(total, workers))
}

pub fn partition_with_chunk(total: u64, chunk: u64) -> Vec<Range<u64>> {
    let chunk = chunk.max(1);
    (0..total.div_ceil(chunk))
        .map(|i| i * chunk..((i + 1) * chunk).min(total))
        .collect()
}

enum Verdict {
    Inadmissible,
    Values(Vec<Value>),
    Failed(RuntimeError),
}

struct Finished {
    index: u64,
    verdict: Verdict,
    printed: Vec<String>,
}

/// Runs the named operation on every input and checks every annotation.
pub fn check_operation(
    spec: &TypedSpec,
    opts: &CheckOptions,
    out: &mut dyn Write,
) -> Result<CheckReport, CheckError> {
    let index = spec
        .op_index(&opts.operation_name)
        .ok_or_else(|| CheckError::UnknownOperation(opts.operation_name.clone()))?;
    let op = &spec.ops[index];
    if !op.has_params() {
        return Err(CheckError::NotParameterized(op.name.clone()));
    }
    let space = InputSpace::new(op)?;
    let total = space.len();
    let start = Instant::now();

    let _ = writeln!(out, "Executing {} with all {total} inputs.", op.signature());
    if !opts.silent && !op.requires.is_empty() {
        let _ = writeln!(out, "Ignoring inadmissible inputs...");
    }

    let mut report = CheckReport {
        operation: op.name.clone(),
        total_inputs: total,
        checked: 0,
        inadmissible: 0,
        first_error: None,
        elapsed_ms: 0,
        nondet_note: opts.mode == EvalMode::Deterministic && op.nondet,
    };

    let chunks = partition_work(total, opts.workers.max(1));
    let cursor = AtomicU64::new(0);
    let error_at = AtomicU64::new(u64::MAX);
    let (tx, rx) = mpsc::channel::<Finished>();

    std::thread::scope(|scope| {
        for _ in 0..opts.workers.max(1) {
            let tx = tx.clone();
            let (chunks, cursor, error_at, space) = (&chunks, &cursor, &error_at, &space);
            std::thread::Builder::new()
                .stack_size(WORKER_STACK)
                .spawn_scoped(scope, move || {
                    let mut ev = Evaluator::new(spec, opts.mode);
                    loop {
                        let c = cursor.fetch_add(1, Ordering::SeqCst) as usize;
                        let Some(range) = chunks.get(c) else { break };
                        for i in range.clone() {
                            if i > error_at.load(Ordering::SeqCst) {
                                return;
                            }
                            let verdict = match ev.invoke_operation(index, &space.get(i)) {
                                Ok(Outcome::Inadmissible) => Verdict::Inadmissible,
                                Ok(Outcome::Results(vs)) => Verdict::Values(vs),
                                Err(e) => {
                                    error_at.fetch_min(i, Ordering::SeqCst);
                                    Verdict::Failed(e)
                                }
                            };
                            let printed = ev.take_printed();
                            if tx.send(Finished { index: i, verdict, printed }).is_err() {
                                return;
                            }
                        }
                    }
                })
                .expect("failed to start worker thread");
        }
        drop(tx);

        let mut pending = BTreeMap::new();
        let mut next = 0u64;
        while next < total {
            let Ok(done) = rx.recv() else { break };
            pending.insert(done.index, done);
            while let Some(done) = pending.remove(&next) {
                let args = space.get(next);
                for line in &done.printed {
                    let _ = writeln!(out, "{line}");
                }
                match done.verdict {
                    Verdict::Inadmissible => report.inadmissible += 1,
                    Verdict::Values(values) => {
                        report.checked += 1;
                        if !opts.silent {
                            write_results(out, op, next, &args, &values, opts.mode);
                        }
                    }
                    Verdict::Failed(error) => {
                        write_error(out, op, &args, &error);
                        report.first_error = Some(FailedInput {
                            index: next,
                            args,
                            error,
                        });
                    }
                }
                next += 1;
                if report.first_error.is_some() {
                    break;
                }
                if opts.progress_every > 0 && next.is_multiple_of(opts.progress_every) && next < total {
                    let _ = writeln!(
                        out,
                        "{next} inputs ({} checked, {} inadmissible, 0 ignored)...",
                        report.checked, report.inadmissible
                    );
                }
            }
            if report.first_error.is_some() {
                break;
            }
        }
        error_at.store(0, Ordering::SeqCst);
        cursor.store(u64::MAX, Ordering::SeqCst);
        drop(rx);
    });

    report.elapsed_ms = start.elapsed().as_millis();
    if report.first_error.is_none() {
        let _ = writeln!(
            out,
            "Execution completed for ALL inputs ({} ms, {} checked, {} inadmissible).",
            report.elapsed_ms, report.checked, report.inadmissible
        );
        if report.nondet_note {
            let _ = writeln!(out, "Not all nondeterministic branches may have been considered.");
        }
    }
    Ok(report)
}

fn write_results(
    out: &mut dyn Write,
    op: &OpDef,
    index: u64,
    args: &[Value],
    values: &[Value],
    mode: EvalMode,
) {
    let call = format!("{}({})", op.name, format_args(args));
    match mode {
        EvalMode::Deterministic => {
            let _ = writeln!(out, "Run {index} of deterministic function {call}:");
            for v in values {
                let _ = writeln!(out, "Result: {v}");
            }
        }
        EvalMode::Nondeterministic => {
            for (j, v) in values.iter().enumerate() {
                let _ = writeln!(out, "Branch {j}:{index} of nondeterministic function {call}:");
                let _ = writeln!(out, "Result: {v}");
            }
            let _ = writeln!(
                out,
                "Branch {}:{index} of nondeterministic function {call}:",
                values.len()
            );
            let _ = writeln!(out, "No more results.");
        }
    }
}

fn write_error(out: &mut dyn Write, op: &OpDef, args: &[Value], error: &RuntimeError) {
    let call = format!("{}({})", op.name, format_args(args));
    let text = error.text.clone().unwrap_or_else(|| call.clone());
    let _ = writeln!(out, "ERROR in execution of {call}: evaluation of");
    let _ = writeln!(out, "  {text}");
    let _ = writeln!(out, "at line {} in file {}:", error.span.line, error.span.file);
    let _ = writeln!(out, "  {}", error.reason());
    let _ = writeln!(out, "ERROR encountered in execution.");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions() {
        assert_eq!(partition_work(10, 1), vec![0..10]);
        assert_eq!(partition_with_chunk(10, 4), vec![0..4, 4..8, 8..10]);
        assert!(partition_work(0, 4).is_empty());
        let parts = partition_work(1000, 3);
        assert_eq!(parts.first().unwrap().start, 0);
        assert_eq!(parts.last().unwrap().end, 1000);
        assert!(parts.windows(2).all(|w| w[0].end == w[1].start));
    }

    proptest::proptest! {
        #[test]
        fn partition_covers_exactly_once(total in 0u64..5000, workers in 1usize..16) {
            let parts = partition_work(total, workers);
            let mut expected = 0;
            for r in &parts {
                proptest::prop_assert_eq!(r.start, expected);
                proptest::prop_assert!(r.end > r.start);
                expected = r.end;
            }
            proptest::prop_assert_eq!(expected, total);
        }
    }
}
