//! Execution: an RV32 instruction-set simulator for compiled code and a
//! direct interpreter for IR, sharing one memory layout so results compare.

mod cpu;
mod interp;
pub mod memory;

use thiserror::Error;

pub use cpu::{run_function, run_program, step, ExecTrace, SimState, TraceStep, DEFAULT_FUEL};
pub use interp::ir_interpret;
pub use memory::{initial_memory, layout, random_inputs, symbol_map, Memory};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("read of undefined value")]
    UndefinedValue,
    #[error("expected {expected} arguments, got {got}")]
    BadArguments { expected: usize, got: usize },
    #[error("misaligned access at {addr:#010x}{}", pc.map(|p| format!(" (pc {p:#010x})")).unwrap_or_default())]
    Misaligned { addr: u32, pc: Option<u32> },
    #[error("undecodable instruction {word:#010x} at pc {pc:#010x}")]
    Undecodable { word: u32, pc: u32 },
    #[error("fuel exhausted after {0} steps")]
    FuelExhausted(u64),
    #[error("too many arguments: {0} (at most 8)")]
    TooManyArguments(usize),
}
