//! Optimization passes over single-block IR functions and the pipeline that
//! sequences them, with LLVM-style statistics.

mod alias;
mod attrs;
mod dse;
mod early_cse;
mod instcombine;
mod reassociate;
mod sroa;


use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ir::{IrFunction, IrModule};

pub use alias::{provably_different, provably_same, resolve_address};
pub use attrs::{pass_attr, AttrKind};
pub use dse::pass_dse;
pub use early_cse::pass_early_cse;
pub use instcombine::{pass_inst_combine, MAX_ITERATIONS};
pub use reassociate::{pass_reassociate, rank_map};
pub use sroa::pass_sroa;

/// The default optimization sequence, one entry per pass run.
pub const O2_PIPELINE: [&str; 11] = [
    "inferattrs",
    "sroa",
    "early-cse",
    "globalopt",
    "instcombine",
    "early-cse",
    "instcombine",
    "reassociate",
    "instcombine",
    "dse",
    "function-attrs",
];

pub const KNOWN_PASSES: [&str; 9] =
    ["inferattrs", "sroa", "mem2reg", "early-cse", "globalopt", "instcombine", "reassociate", "dse", "function-attrs"];

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum MidendError {
    #[error("unknown pass '{0}'")]
    UnknownPass(String),
    #[error("pass {pass} broke the IR: {violation}")]
    Broken { pass: String, violation: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PassPipeline {
    pub passes: Vec<String>,
    pub stats_enabled: bool,
}

impl PassPipeline {
    pub fn o2() -> Self {
        Self::from_names(&O2_PIPELINE)
    }

    pub fn from_names(names: &[&str]) -> Self {
        PassPipeline { passes: names.iter().map(|s| s.to_string()).collect(), stats_enabled: false }
    }

    /// Parses a `--passes=a,b,c` list, rejecting unknown names.
    pub fn parse(list: &str) -> Result<Self, MidendError> {
        let passes: Vec<String> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        if let Some(bad) = passes.iter().find(|p| !KNOWN_PASSES.contains(&p.as_str())) {
            return Err(MidendError::UnknownPass(bad.clone()));
        }
        Ok(PassPipeline { passes, stats_enabled: false })
    }
}

/// Monotone counters keyed `pass.counter`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PassStats {
    pub counters: BTreeMap<String, u64>,
}

fn describe(key: &str) -> &'static str {
    match key {
        "sroa.allocas-promoted" => "Number of allocas promoted to SSA values",
        "sroa.allocas-analyzed" => "Number of allocas analyzed for replacement",
        "sroa.insts-deleted" => "Number of instructions deleted",
        "mem2reg.single-store" => "Number of alloca's promoted with a single store",
        "mem2reg.single-block" => "Number of alloca's promoted within one block",
        "early-cse.loads" => "Number of load instructions CSE'd",
        "early-cse.insts" => "Number of instructions CSE'd",
        "instcombine.combined" => "Number of insts combined",
        "instcombine.dce" => "Number of dead inst eliminated",
        "instcombine.iterations" => "Number of instruction combining iterations performed",
        "instcombine.loads-forwarded" => "Number of loads replaced by an available value",
        "instcombine.funnel-shifts" => "Number of funnel shifts formed",
        "reassociate.insts-reassociated" => "Number of insts reassociated",
        "dse.stores-deleted" => "Number of stores deleted",
        "dse.stores-remaining" => "Number of stores remaining",
        "function-attrs.nofree" => "Number of functions marked as nofree",
        "function-attrs.norecurse" => "Number of functions marked as norecurse",
        "function-attrs.nosync" => "Number of functions marked nosync",
        "function-attrs.nounwind" => "Number of functions marked as nounwind",
        "function-attrs.willreturn" => "Number of functions marked as willreturn",
        "inferattrs.mustprogress" => "Number of functions inferred as mustprogress",
        "globalopt.unnamed-addr" => "Number of functions marked local_unnamed_addr",
        _ => "",
    }
}

impl PassStats {
    pub fn add(&mut self, key: &str, n: u64) {
        if n > 0 {
            *self.counters.entry(key.to_string()).or_default() += n;
        }
    }

    pub fn get(&self, key: &str) -> u64 {
        self.counters.get(key).copied().unwrap_or(0)
    }

    pub fn merge(&mut self, other: &PassStats) {
        for (k, v) in &other.counters {
            self.add(k, *v);
        }
    }
}

/// `N pass - description` lines sorted by pass, then counter name.
impl fmt::Display for PassStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.counters.values().map(|v| v.to_string().len()).max().unwrap_or(1);
        let pw = self.counters.keys().map(|k| k.split('.').next().unwrap().len()).max().unwrap_or(1);
        for (k, v) in &self.counters {
            let (pass, name) = k.split_once('.').unwrap_or((k, ""));
            let d = describe(k);
            let d = if d.is_empty() { name } else { d };
            writeln!(f, "{v:>width$} {pass:<pw$} - {d}")?;
        }
        Ok(())
    }
}

fn run_pass(name: &str, f: &mut IrFunction, stats: &mut PassStats) -> Result<(), MidendError> {
    match name {
        "inferattrs" => pass_attr(f, AttrKind::Infer, stats),
        "sroa" | "mem2reg" => pass_sroa(f, stats),
        "early-cse" => pass_early_cse(f, stats),
        "globalopt" => pass_attr(f, AttrKind::GlobalOpt, stats),
        "instcombine" => pass_inst_combine(f, stats),
        "reassociate" => pass_reassociate(f, stats),
        "dse" => pass_dse(f, stats),
        "function-attrs" => pass_attr(f, AttrKind::PostOrder, stats),
        other => return Err(MidendError::UnknownPass(other.to_string())),
    }
    Ok(())
}

/// Runs every pass in order over every function except those marked
/// `optnone`, which are left exactly as written. The result is verified
/// after each pass; a violation is reported as an internal error.
pub fn run_pipeline(m: &IrModule, p: &PassPipeline) -> Result<(IrModule, PassStats), MidendError> {
    let mut out = m.clone();
    let mut stats = PassStats::default();
    for pass in &p.passes {
        if !KNOWN_PASSES.contains(&pass.as_str()) {
            return Err(MidendError::UnknownPass(pass.clone()));
        }
        for f in out.functions.iter_mut().filter(|f| !f.attrs.contains("optnone")) {
            run_pass(pass, f, &mut stats)?;
        }
        if let Some(v) = crate::ir::verify(&out).into_iter().next() {
            return Err(MidendError::Broken { pass: pass.clone(), violation: v.to_string() });
        }
    }
    Ok((out, stats))
}
