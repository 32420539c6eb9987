//! Register allocation, frame setup, assembly printing and object emission.

mod emit;
mod frame;
mod regalloc;


use thiserror::Error;

pub use emit::{emit_words, print_asm};
pub use frame::{aligned_frame, insert_prologue_epilogue};
pub use regalloc::{allocate_registers, allocation_order, AllocStats};

use crate::target::{EncodeError, MachineInstr, Reg, TargetDesc};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CodegenError {
    #[error("unresolved symbol '{0}'")]
    UnknownSymbol(String),
    #[error("{function}: frame of {bytes} bytes does not fit a 12-bit stack adjustment")]
    FrameTooLarge { function: String, bytes: u32 },
    #[error("{0}: {1}")]
    Encode(String, EncodeError),
}

/// Allocation followed by frame setup: scheduled SSA code in, code ready to
/// print or encode out.
pub fn finish(mf: &mut MachineFunction, desc: &TargetDesc) -> Result<AllocStats, CodegenError> {
    let stats = allocate_registers(mf, desc);
    insert_prologue_epilogue(mf)?;
    Ok(stats)
}

/// A function as a flat instruction list, first over virtual registers and
/// after allocation over physical ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineFunction {
    pub name: String,
    pub instrs: Vec<MachineInstr>,
    /// Bytes of stack the body addresses relative to `sp`: allocas first,
    /// then spill slots. Rounded up to 16 by the prologue.
    pub frame_size: u32,
    pub is_leaf: bool,
    pub num_params: usize,
    pub next_vreg: u32,
}

impl MachineFunction {
    pub fn new(name: &str, num_params: usize) -> Self {
        MachineFunction { name: name.into(), instrs: Vec::new(), frame_size: 0, is_leaf: true, num_params, next_vreg: 0 }
    }

    pub fn fresh_vreg(&mut self) -> Reg {
        self.next_vreg += 1;
        Reg::Virt(self.next_vreg - 1)
    }

    pub fn has_virtual_regs(&self) -> bool {
        self.instrs.iter().flat_map(|i| &i.ops).any(|o| matches!(o.reg(), Some(Reg::Virt(_))))
    }

    pub fn count_opcode(&self, def: &str) -> usize {
        self.instrs.iter().filter(|i| i.opcode == def).count()
    }
}
