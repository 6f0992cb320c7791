//! Constant resolution and static checking. Turns a parsed [`Spec`] into a
//! [`TypedSpec`] in which every type is finite and every name is resolved.

mod elaborate;
pub mod ir;
mod types;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::evaluator::RuntimeError;
use crate::frontend::ast::{Expr, Spec};
use crate::frontend::SourceSpan;
use crate::values::Value;

pub use ir::OpDef;
pub use types::{CardinalityOverflow, SemType};

#[derive(Debug, Clone, Error)]
pub enum SemanticError {
    #[error("unknown constant {0}")]
    UnknownConstant(String),
    #[error("constant {0} must not be negative")]
    NegativeConstant(String),
    #[error("{span}: {message}")]
    Type { span: SourceSpan, message: String },
    #[error("{span}: recursive operation {name} needs a decreases clause")]
    MissingDecreases { span: SourceSpan, name: String },
    #[error("{span}: theorem {name} is false")]
    TheoremFailed { span: SourceSpan, name: String },
    #[error("{span}: type {ty} has too many values")]
    Cardinality { span: SourceSpan, ty: String },
    #[error("{0}")]
    Evaluation(#[from] RuntimeError),
}

impl SemanticError {
    pub fn type_error(span: &SourceSpan, message: impl Into<String>) -> SemanticError {
        SemanticError::Type {
            span: span.clone(),
            message: message.into(),
        }
    }
}

/// Values of all global constants.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstEnv {
    /// Unspecified natural-number constants, in declaration order.
    pub naturals: Vec<(String, i64)>,
    /// Every global constant (including the naturals) with its type.
    pub values: Vec<(String, Value, SemType)>,
}

impl ConstEnv {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.iter().find(|(n, _, _)| n == name).map(|(_, v, _)| v)
    }

    pub fn natural(&self, name: &str) -> Option<i64> {
        self.naturals.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    fn overrides(&self) -> BTreeMap<String, i64> {
        self.naturals.iter().cloned().collect()
    }
}

/// A fully resolved specification ready for evaluation.
#[derive(Debug, Clone, Default)]
pub struct TypedSpec {
    pub consts: ConstEnv,
    pub types: HashMap<String, SemType>,
    pub ops: Vec<OpDef>,
    index: HashMap<String, usize>,
}

impl TypedSpec {
    pub fn op_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn op(&self, name: &str) -> Option<&OpDef> {
        self.op_index(name).map(|i| &self.ops[i])
    }

    fn push_op(&mut self, op: OpDef) -> usize {
        let i = self.ops.len();
        self.index.insert(op.name.clone(), i);
        self.ops.push(op);
        i
    }
}

/// Fixes every unspecified natural constant (override, else `default`),
/// evaluates defined constants in order, and checks parameterless theorems.
pub fn resolve_constants(
    spec: &Spec,
    overrides: &BTreeMap<String, i64>,
    default: i64,
) -> Result<ConstEnv, SemanticError> {
    Ok(elaborate::elaborate(spec, overrides, default)?.consts)
}

/// Type-checks a specification under already resolved constants.
pub fn typecheck(spec: &Spec, consts: &ConstEnv) -> Result<TypedSpec, SemanticError> {
    elaborate::elaborate(spec, &consts.overrides(), 0)
}

/// Resolves constants and type-checks in one pass.
pub fn elaborate(
    spec: &Spec,
    overrides: &BTreeMap<String, i64>,
    default: i64,
) -> Result<TypedSpec, SemanticError> {
    elaborate::elaborate(spec, overrides, default)
}

/// Type-checks a closed expression against the globals of `spec`. Returns the
/// typed expression and the number of variable slots it needs.
pub fn typecheck_expr(spec: &TypedSpec, e: &Expr) -> Result<(ir::TExpr, usize), SemanticError> {
    elaborate::typecheck_closed(spec, e)
}

pub(crate) fn shared_name(s: &str) -> Arc<str> {
    Arc::from(s)
}
