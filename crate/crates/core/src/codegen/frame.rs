use super::{CodegenError, MachineFunction};
use crate::target::{MachineInstr, Reg, SP};

/// Stack adjustment the prologue makes: the frame rounded up to 16.
pub fn aligned_frame(frame_size: u32) -> u32 {
    frame_size.div_ceil(16) * 16
}

/// Brackets the body with `addi sp, sp, -N` / `addi sp, sp, N` when it
/// needs stack; a function without a frame is left untouched.
pub fn insert_prologue_epilogue(mf: &mut MachineFunction) -> Result<(), CodegenError> {
    if mf.frame_size == 0 {
        return Ok(());
    }
    let n = aligned_frame(mf.frame_size);
    if n > 2048 {
        return Err(CodegenError::FrameTooLarge { function: mf.name.clone(), bytes: n });
    }
    let sp = Reg::Phys(SP);
    let mut out = vec![MachineInstr::rri("ADDI", sp, sp, -(n as i32))];
    for mi in std::mem::take(&mut mf.instrs) {
        if mi.is_ret() {
            out.push(MachineInstr::rri("ADDI", sp, sp, n as i32));
        }
        out.push(mi);
    }
    mf.instrs = out;
    Ok(())
}
