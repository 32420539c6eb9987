//! Instruction selection over a per-function selection DAG: build, combine,
//! legalize, combine again, select, schedule.

mod build;
mod combine;
mod dag;
mod legalize;
mod schedule;
mod select;

#[cfg(test)]
mod tests;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use build::{alloca_bytes, build_dag};
pub use combine::{combine, CombineStage};
pub use dag::{emit_dot, DagNode, DagOp, DagValue, NodeKind, SelDag, ValueType};
pub use legalize::legalize;
pub use schedule::schedule;
pub use select::{hook_xor_dependent_loads, select, Hook, HookFn, HookRegistry};

use crate::codegen::MachineFunction;
use crate::ir::{IrFunction, IrModule};
use crate::target::{ExtensionSet, TargetDesc, DEFAULT_ZBA_THRESHOLD};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum IselError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("cannot select {0}")]
    CannotSelect(String),
    #[error("function takes {0} arguments; only 8 can be passed in registers")]
    TooManyArguments(usize),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IselOptions {
    pub ext: ExtensionSet,
    pub zba_threshold: usize,
}

impl IselOptions {
    pub fn new(ext: ExtensionSet) -> Self {
        IselOptions { ext, zba_threshold: DEFAULT_ZBA_THRESHOLD }
    }
}

/// Points at which the DAG can be dumped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum DagStage {
    Built,
    Combined1,
    Legalized,
    Combined2,
    Selected,
}

impl DagStage {
    pub const ALL: [DagStage; 5] =
        [DagStage::Built, DagStage::Combined1, DagStage::Legalized, DagStage::Combined2, DagStage::Selected];

    pub fn name(self) -> &'static str {
        match self {
            DagStage::Built => "built",
            DagStage::Combined1 => "combined1",
            DagStage::Legalized => "legalized",
            DagStage::Combined2 => "combined2",
            DagStage::Selected => "selected",
        }
    }
}

impl fmt::Display for DagStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DagStage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        DagStage::ALL.into_iter().find(|d| d.name() == s).ok_or_else(|| format!("unknown DAG stage '{s}'"))
    }
}

/// Result of selecting one function.
#[derive(Clone, Debug)]
pub struct Lowered {
    /// Scheduled, over virtual registers.
    pub mf: MachineFunction,
    /// Hook decisions and pattern matches, in selection order.
    pub trace: Vec<String>,
    /// Graphviz text for the requested stage.
    pub dot: Option<String>,
}

/// Runs the DAG phases on one function and schedules the result.
pub fn lower_function(
    m: &IrModule,
    f: &IrFunction,
    desc: &TargetDesc,
    hooks: &HookRegistry,
    opts: IselOptions,
    dot_stage: Option<DagStage>,
) -> Result<Lowered, IselError> {
    if f.params.len() > 8 {
        return Err(IselError::TooManyArguments(f.params.len()));
    }
    let mut dot = None;
    let mut snap = |stage: DagStage, dag: &SelDag| {
        if dot_stage == Some(stage) {
            dot = Some(emit_dot(dag, &format!("{} {}", f.name, stage.name())));
        }
    };
    let mut dag = build_dag(m, f);
    snap(DagStage::Built, &dag);
    combine(&mut dag, CombineStage::PreLegalize);
    snap(DagStage::Combined1, &dag);
    legalize(&mut dag, opts.ext)?;
    snap(DagStage::Legalized, &dag);
    combine(&mut dag, CombineStage::PostLegalize);
    snap(DagStage::Combined2, &dag);
    let mut trace = Vec::new();
    select(&mut dag, desc, opts.ext, hooks, opts.zba_threshold, &mut trace)?;
    snap(DagStage::Selected, &dag);

    let mut mf = MachineFunction::new(&f.name, f.params.len());
    mf.frame_size = alloca_bytes(f);
    schedule(&dag, desc, &mut mf)?;
    Ok(Lowered { mf, trace, dot })
}
