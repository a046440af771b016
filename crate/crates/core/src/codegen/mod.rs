//! Code generation: selected classical code, register assignment, and the
//! text program with its result epilogue.

mod emit;
pub mod isa;
mod regalloc;
mod select;

use thiserror::Error;

pub use emit::{emit, emit_result_epilogue, EmitOptions};
pub use isa::{asm_tokens, assemble, AluOp, AsmError, AsmErrorKind, Cond, Instr, Label, QProgram, Reg};
pub use select::IsaCost;

use crate::codec::CodecError;
use crate::ir::BlockId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodegenError {
    #[error("cannot generate code for {0}")]
    Unsupported(String),
    #[error("return value cannot be stored: {0}")]
    UnsupportedReturn(String),
    #[error("more than {available} values are live at once; the control processor has no spill space")]
    RegisterPressure { available: usize },
    #[error("jump at the end of b{block} passes {count} run-time values; at most 8 are supported")]
    TooManyJumpArgs { block: BlockId, count: usize },
    #[error(transparent)]
    Codec(#[from] CodecError),
}
