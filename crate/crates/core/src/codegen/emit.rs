use std::collections::BTreeMap;
use std::fmt::Write;

use super::{CodegenError, MachineFunction};
use crate::target::{encode, hi_lo, print_instr, EncodedWord, MOperand, RelocKind, TargetDesc};

/// `name:` followed by one tab-indented instruction per line, aliases
/// (`ret`, `mv`, `li`, `not`) where they apply.
pub fn print_asm(mf: &MachineFunction, desc: &TargetDesc) -> String {
    let mut out = format!("{}:\n", mf.name);
    for mi in &mf.instrs {
        let _ = writeln!(out, "\t{}", print_instr(mi, desc, true));
    }
    out
}

/// Encodes every instruction, filling `%hi`/`%lo` fields from `symbols`.
/// Each word keeps the relocation it was resolved against.
pub fn emit_words(
    mf: &MachineFunction,
    desc: &TargetDesc,
    symbols: &BTreeMap<String, u32>,
) -> Result<Vec<EncodedWord>, CodegenError> {
    let mut words = Vec::with_capacity(mf.instrs.len());
    for mi in &mf.instrs {
        let mut resolved = mi.clone();
        let mut reloc = None;
        for op in &mut resolved.ops {
            if let MOperand::Sym(kind, name) = op {
                let addr = *symbols.get(name.as_str()).ok_or_else(|| CodegenError::UnknownSymbol(name.clone()))?;
                let (hi, lo) = hi_lo(addr);
                reloc = Some((*kind, name.clone()));
                *op = MOperand::Imm(match kind {
                    RelocKind::Hi20 => hi as i32,
                    RelocKind::Lo12 => lo,
                });
            }
        }
        let mut w = encode(&resolved, desc).map_err(|e| CodegenError::Encode(mf.name.clone(), e))?;
        w.reloc = reloc;
        words.push(w);
    }
    Ok(words)
}
