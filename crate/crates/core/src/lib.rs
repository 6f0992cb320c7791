//! Finite-model specification language with an exhaustive checker.
//!
//! Every type is finite once its constants are fixed, so every operation can
//! be run on every input and every annotation checked by evaluation.

#![allow(clippy::result_large_err, clippy::large_enum_variant)]

pub mod checker;
pub mod cli;
pub mod evaluator;
pub mod frontend;
pub mod scaffold;
pub mod semantics;
pub mod values;
