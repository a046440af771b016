//! Quingo toolchain: frontend, semi-static middle-end, timing scheduler,
//! code generator, control-processor VM and runtime.

pub mod codec;
pub mod codegen;
pub mod frontend;
pub mod ir;
pub mod linalg;
pub mod lower;
pub mod peval;
pub mod platform;
pub mod qvm;
pub mod runtime;
pub mod sched;
pub mod time;
pub mod types;

#[cfg(test)]
pub(crate) mod testutil;
