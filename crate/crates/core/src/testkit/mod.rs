//! A small lit/FileCheck pair. RUN lines call this crate's own driver
//! in-process, so tests need no shell and no external tools.

mod filecheck;
mod lit;
mod update;


pub use filecheck::{
    collapse_ws, filecheck, parse_directive_line, parse_directives, CheckDirective, CheckKind, FileCheckError, Pos,
};
pub use lit::{
    discover, run_lit, run_pipeline, run_test, LitError, LitReport, PipelineOutput, RunLine, Stage, TestFile,
    TestResult, Verdict, SUITE,
};
pub use update::{update_checks, update_checks_text, UpdateError, NOTE};
