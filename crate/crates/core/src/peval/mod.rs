//! Semi-static middle-end: online partial evaluation of a lowered kernel
//! into a residual program that keeps only measurement-dependent control.

mod interp;
mod main_gen;
mod simplify;
mod spec;

use thiserror::Error;

pub use interp::{interpret, ExecOutcome, InterpError, TraceEvent, TraceKind};
pub use main_gen::{generate_main, value_has_type, ArgTypeError};
pub use simplify::{canonicalize, simplify};
pub use spec::specialize;

use crate::ir::{EvalError, KernelIR};
use crate::platform::PlatformConfig;

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PeError {
    #[error("partial evaluation exceeded its budget of {0} steps")]
    StepBudgetExceeded(u64),
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("in `{proc}`: {err}")]
    Eval { proc: String, err: EvalError },
    #[error("in `{proc}`: {what} must be known before execution but depends on a measurement")]
    DynamicValueRequired { proc: String, what: String },
    #[error("kernel needs {requested} qubits at once but the platform has {available}")]
    TooManyQubits { requested: u32, available: u32 },
    #[error("in `{proc}`: cannot invert: {what}")]
    NonInvertible { proc: String, what: String },
    #[error("in `{proc}`: {what}")]
    InvalidQuantumOp { proc: String, what: String },
    #[error("the entry procedure must not take parameters")]
    EntryHasParams,
}

impl PeError {
    pub(crate) fn eval(proc: &str, err: EvalError) -> Self {
        match err {
            EvalError::DivisionByZero => PeError::DivisionByZero(proc.to_string()),
            err => PeError::Eval { proc: proc.to_string(), err },
        }
    }
}

#[derive(Debug, Clone)]
pub struct PeOptions {
    pub step_budget: u64,
}

impl Default for PeOptions {
    fn default() -> Self {
        PeOptions { step_budget: DEFAULT_STEP_BUDGET }
    }
}

/// Specializes, simplifies and canonicalizes.
pub fn partial_evaluate(ir: &KernelIR, config: &PlatformConfig, opts: &PeOptions) -> Result<KernelIR, PeError> {
    let mut out = specialize(ir, config, opts)?;
    simplify(&mut out);
    canonicalize(&mut out);
    Ok(out)
}
