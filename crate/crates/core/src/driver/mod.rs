//! Wiring: the compile pipeline as a library call, and the command line.

mod cli;
mod compile;

pub use cli::{invoke, main, Outcome, MATTR_ENV};
pub use compile::{
    compile_module, compile_text, load_ir, opcode_histogram, CompileError, CompileOptions, CompiledFunction,
    CompiledModule, OptLevel,
};
