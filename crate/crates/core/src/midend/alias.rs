//! The alias lattice shared by CSE, InstCombine and DSE: two addresses are
//! provably the same, provably different, or may alias.

use crate::ir::{IrFunction, Op, Value};

/// Follows getelementptr chains down to a root pointer and byte offset.
pub fn resolve_address(f: &IrFunction, mut v: Value) -> (Value, i64) {
    let mut off = 0i64;
    while let Value::Inst(id) = v {
        match f.inst(id).map(|i| &i.op) {
            Some(Op::Gep { base, offset }) => {
                off += *offset as i64;
                v = *base;
            }
            _ => break,
        }
    }
    (v, off)
}

/// Roots that name a distinct object: globals and allocas.
fn is_identified_object(f: &IrFunction, v: Value) -> bool {
    match v {
        Value::Global(_) => true,
        Value::Inst(id) => matches!(f.inst(id).map(|i| &i.op), Some(Op::Alloca { .. })),
        _ => false,
    }
}

pub fn provably_same(f: &IrFunction, a: Value, b: Value) -> bool {
    a == b || resolve_address(f, a) == resolve_address(f, b)
}

/// True when 4-byte accesses at `a` and `b` cannot overlap.
pub fn provably_different(f: &IrFunction, a: Value, b: Value) -> bool {
    let (ra, oa) = resolve_address(f, a);
    let (rb, ob) = resolve_address(f, b);
    if ra == rb {
        return (oa - ob).abs() >= 4;
    }
    is_identified_object(f, ra) && is_identified_object(f, rb)
}
