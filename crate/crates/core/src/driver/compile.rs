use std::collections::BTreeMap;

use thiserror::Error;

use crate::codegen::{emit_words, finish, print_asm, AllocStats, CodegenError, MachineFunction};
use crate::ir::{parse_ir, IrModule, ParseError};
use crate::isel::{lower_function, DagStage, HookRegistry, IselError, IselOptions};
use crate::midend::{run_pipeline, MidendError, PassPipeline, PassStats};
use crate::sim::{run_function, symbol_map, Memory, SimError, DEFAULT_FUEL};
use crate::target::{EncodedWord, ExtensionSet, TargetDesc, DEFAULT_ZBA_THRESHOLD};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OptLevel {
    /// No midend passes.
    O0,
    /// The default pipeline.
    #[default]
    O2,
}

impl OptLevel {
    pub fn pipeline(self) -> PassPipeline {
        match self {
            OptLevel::O0 => PassPipeline::from_names(&[]),
            OptLevel::O2 => PassPipeline::o2(),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Midend(#[from] MidendError),
    #[error("@{function}: {error}")]
    Isel { function: String, error: IselError },
    #[error("{0}")]
    Codegen(#[from] CodegenError),
    #[error("no function named @{0}")]
    NoSuchFunction(String),
    #[error("{0}")]
    Sim(#[from] SimError),
}

#[derive(Clone)]
pub struct CompileOptions {
    pub ext: ExtensionSet,
    pub opt: OptLevel,
    pub zba_threshold: usize,
    pub hooks: HookRegistry,
    pub dot_stage: Option<DagStage>,
}

impl CompileOptions {
    pub fn new(ext: ExtensionSet) -> Self {
        CompileOptions {
            ext,
            opt: OptLevel::O2,
            zba_threshold: DEFAULT_ZBA_THRESHOLD,
            hooks: HookRegistry::standard(),
            dot_stage: None,
        }
    }

    pub fn with_opt(mut self, opt: OptLevel) -> Self {
        self.opt = opt;
        self
    }
}

#[derive(Clone, Debug)]
pub struct CompiledFunction {
    /// After allocation and frame setup.
    pub mf: MachineFunction,
    pub trace: Vec<String>,
    pub dot: Option<String>,
    pub alloc: AllocStats,
}

#[derive(Clone, Debug)]
pub struct CompiledModule {
    /// The module after the midend, which is what got selected.
    pub ir: IrModule,
    pub stats: PassStats,
    pub functions: Vec<CompiledFunction>,
}

impl CompiledModule {
    pub fn function(&self, name: &str) -> Option<&CompiledFunction> {
        self.functions.iter().find(|f| f.mf.name == name)
    }

    pub fn asm(&self, desc: &TargetDesc) -> String {
        self.functions.iter().map(|f| print_asm(&f.mf, desc)).collect::<Vec<_>>().join("\n")
    }

    /// Words for one function with globals at their standard addresses.
    pub fn words(&self, name: &str, desc: &TargetDesc) -> Result<Vec<EncodedWord>, CompileError> {
        let f = self.function(name).ok_or_else(|| CompileError::NoSuchFunction(name.into()))?;
        Ok(emit_words(&f.mf, desc, &symbol_map(&self.ir))?)
    }

    /// Runs one compiled function in the simulator.
    pub fn run(&self, name: &str, args: &[u32], mem: &Memory, desc: &TargetDesc) -> Result<(u32, Memory), CompileError> {
        let words: Vec<u32> = self.words(name, desc)?.iter().map(|w| w.word).collect();
        let (r, mem, _) = run_function(&words, args, mem, DEFAULT_FUEL)?;
        Ok((r, mem))
    }
}

/// Parses and verifies IR text.
pub fn load_ir(text: &str) -> Result<IrModule, CompileError> {
    Ok(parse_ir(text)?)
}

/// Midend, then selection and codegen for every function.
pub fn compile_module(m: &IrModule, desc: &TargetDesc, opts: &CompileOptions) -> Result<CompiledModule, CompileError> {
    let (ir, stats) = run_pipeline(m, &opts.opt.pipeline())?;
    let iopts = IselOptions { ext: opts.ext, zba_threshold: opts.zba_threshold };
    let mut functions = Vec::new();
    for f in &ir.functions {
        let lowered = lower_function(&ir, f, desc, &opts.hooks, iopts, opts.dot_stage)
            .map_err(|error| CompileError::Isel { function: f.name.clone(), error })?;
        let mut mf = lowered.mf;
        let alloc = finish(&mut mf, desc)?;
        functions.push(CompiledFunction { mf, trace: lowered.trace, dot: lowered.dot, alloc });
    }
    Ok(CompiledModule { ir, stats, functions })
}

/// [`load_ir`] then [`compile_module`].
pub fn compile_text(text: &str, opts: &CompileOptions) -> Result<CompiledModule, CompileError> {
    compile_module(&load_ir(text)?, TargetDesc::shipped(), opts)
}

/// Opcode histogram of a compiled function, by lowercase mnemonic with the
/// `not`/`mv`/`li`/`ret` idioms counted under their alias names.
pub fn opcode_histogram(mf: &MachineFunction, desc: &TargetDesc) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for mi in &mf.instrs {
        let text = crate::target::print_instr(mi, desc, true);
        let m = text.split('\t').next().unwrap_or_default().to_string();
        *h.entry(m).or_insert(0) += 1;
    }
    h
}
