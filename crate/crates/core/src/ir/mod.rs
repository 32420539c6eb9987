//! SSA intermediate representation: a single-block subset of LLVM IR with
//! i32 and ptr values, its parser, printer and verifier.

mod lexer;
mod parser;
mod printer;
mod types;
mod verify;

use thiserror::Error;

pub use parser::parse_module_unverified;
pub use printer::{print_function, print_inst, print_module, value_str};
pub use types::*;
pub use verify::{verify, Violation};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// Parses and verifies a module. Verifier violations are reported as a parse
/// error at the position of the offending function.
pub fn parse_ir(text: &str) -> Result<IrModule, ParseError> {
    let m = parse_module_unverified(text)?;
    if let Some(v) = verify(&m).into_iter().next() {
        let line = text
            .lines()
            .position(|l| l.starts_with("define") && l.contains(&format!("@{}(", v.function)))
            .map(|i| i + 1)
            .unwrap_or(1);
        return Err(ParseError { line, col: 1, message: v.to_string() });
    }
    Ok(m)
}
