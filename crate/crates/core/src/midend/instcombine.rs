use super::alias::{provably_different, provably_same};
use super::PassStats;
use crate::ir::{BinOp, Funnel, IrFunction, Op, Value};

/// Upper bound on sweeps before the pass gives up on reaching a fixpoint.
pub const MAX_ITERATIONS: usize = 10;

enum Rewrite {
    /// Every use of the instruction becomes this value.
    Replace(Value),
    /// The instruction keeps its id and name but computes this instead.
    Mutate(Op),
}

fn def(f: &IrFunction, v: Value) -> Option<&Op> {
    match v {
        Value::Inst(id) => f.inst(id).map(|i| &i.op),
        _ => None,
    }
}

fn is_not_of(f: &IrFunction, v: Value) -> Option<Value> {
    match def(f, v)? {
        Op::Bin { op: BinOp::Xor, lhs, rhs: Value::Const(-1) } => Some(*lhs),
        _ => None,
    }
}

fn canonicalize(op: &Op) -> Option<Rewrite> {
    use BinOp::*;
    match *op {
        Op::Bin { op, lhs: Value::Const(a), rhs: Value::Const(b) } => {
            Some(Rewrite::Replace(Value::Const(op.eval(a as u32, b as u32) as i32)))
        }
        Op::Bin { op, lhs: lhs @ Value::Const(_), rhs } if op.is_commutative() => {
            Some(Rewrite::Mutate(Op::Bin { op, lhs: rhs, rhs: lhs }))
        }
        Op::Bin { op: Sub, lhs, rhs: Value::Const(c) } if c != 0 && c != i32::MIN => {
            Some(Rewrite::Mutate(Op::Bin { op: Add, lhs, rhs: Value::Const(c.wrapping_neg()) }))
        }
        Op::Bin { op, lhs, rhs } => {
            let c = rhs.as_const();
            let keep = match (op, c) {
                (Add | Sub | Or | Xor | Shl | Lshr | Ashr, Some(0)) | (And, Some(-1)) | (Mul, Some(1)) => true,
                (And | Or, _) => lhs == rhs,
                _ => false,
            };
            if keep {
                return Some(Rewrite::Replace(lhs));
            }
            match (op, c) {
                (And | Mul, Some(0)) | (Or, Some(-1)) => Some(Rewrite::Replace(rhs)),
                (Xor | Sub, _) if lhs == rhs => Some(Rewrite::Replace(Value::Const(0))),
                _ => None,
            }
        }
        Op::Funnel { kind, hi, lo, amount: Value::Const(c) } => match (hi, lo) {
            (Value::Const(a), Value::Const(b)) => {
                Some(Rewrite::Replace(Value::Const(kind.eval(a as u32, b as u32, c as u32) as i32)))
            }
            _ if c & 31 == 0 => Some(Rewrite::Replace(if kind == Funnel::Fshl { hi } else { lo })),
            // Constant left funnel shifts are spelled as right ones.
            _ if kind == Funnel::Fshl => Some(Rewrite::Mutate(Op::Funnel {
                kind: Funnel::Fshr,
                hi,
                lo,
                amount: Value::Const(32 - (c & 31)),
            })),
            _ => None,
        },
        _ => None,
    }
}

fn double_not(f: &IrFunction, op: &Op) -> Option<Rewrite> {
    match *op {
        Op::Bin { op: BinOp::Xor, lhs, rhs: Value::Const(-1) } => is_not_of(f, lhs).map(Rewrite::Replace),
        _ => None,
    }
}

/// (a ^ b) & ~b  ==>  a & ~b, in every operand order.
fn xor_and_not(f: &IrFunction, op: &Op) -> Option<Rewrite> {
    let Op::Bin { op: BinOp::And, lhs, rhs } = *op else {
        return None;
    };
    for (p, q) in [(lhs, rhs), (rhs, lhs)] {
        let Some(b) = is_not_of(f, q) else { continue };
        if let Some(Op::Bin { op: BinOp::Xor, lhs: x0, rhs: x1 }) = def(f, p) {
            let a = if *x1 == b {
                *x0
            } else if *x0 == b {
                *x1
            } else {
                continue;
            };
            return Some(Rewrite::Mutate(Op::Bin { op: BinOp::And, lhs: a, rhs: q }));
        }
    }
    None
}

fn gep_fold(f: &IrFunction, op: &Op) -> Option<Rewrite> {
    let Op::Gep { base, offset } = *op else {
        return None;
    };
    if offset == 0 {
        return Some(Rewrite::Replace(base));
    }
    match def(f, base)? {
        Op::Gep { base: inner, offset: o1 } => {
            Some(Rewrite::Mutate(Op::Gep { base: *inner, offset: o1.wrapping_add(offset) }))
        }
        _ => None,
    }
}

/// or(shl x, c1; lshr y, c2) with c1 + c2 == 32 is fshr(x, y, c2); a rotate
/// when x == y. Both shifts must be single-use so nothing is duplicated.
fn funnel(f: &IrFunction, op: &Op) -> Option<Rewrite> {
    let Op::Bin { op: BinOp::Or, lhs, rhs } = *op else {
        return None;
    };
    let shift = |v: Value, want: BinOp| match def(f, v) {
        Some(&Op::Bin { op, lhs, rhs: Value::Const(c) }) if op == want && (1..32).contains(&c) && f.use_count(v) == 1 => {
            Some((lhs, c))
        }
        _ => None,
    };
    for (a, b) in [(lhs, rhs), (rhs, lhs)] {
        if let (Some((x, c1)), Some((y, c2))) = (shift(a, BinOp::Shl), shift(b, BinOp::Lshr)) {
            if c1 + c2 == 32 {
                return Some(Rewrite::Mutate(Op::Funnel { kind: Funnel::Fshr, hi: x, lo: y, amount: Value::Const(c2) }));
            }
        }
    }
    None
}

/// Looks backwards from the load at `at` for a value already known to be in
/// memory at its address, stopping at any store that may alias.
fn available_load(f: &IrFunction, at: usize) -> Option<Rewrite> {
    let Op::Load { addr, .. } = f.body.insts[at].op else {
        return None;
    };
    for prev in f.body.insts[..at].iter().rev() {
        match prev.op {
            Op::Store { value, addr: a, .. } => {
                if provably_same(f, a, addr) {
                    return Some(Rewrite::Replace(value));
                }
                if !provably_different(f, a, addr) {
                    return None;
                }
            }
            Op::Load { addr: a, .. } if provably_same(f, a, addr) => {
                return Some(Rewrite::Replace(Value::Inst(prev.id)));
            }
            _ => {}
        }
    }
    None
}

fn combine_one(f: &IrFunction, at: usize) -> Option<(Rewrite, &'static str)> {
    let op = &f.body.insts[at].op;
    if let Some(r) = canonicalize(op) {
        return Some((r, "combined"));
    }
    if let Some(r) = double_not(f, op).or_else(|| xor_and_not(f, op)).or_else(|| gep_fold(f, op)) {
        return Some((r, "combined"));
    }
    if let Some(r) = funnel(f, op) {
        return Some((r, "funnel-shifts"));
    }
    available_load(f, at).map(|r| (r, "loads-forwarded"))
}

/// Applies the rewrite rules in their fixed order until nothing changes,
/// then removes dead instructions.
pub fn pass_inst_combine(f: &mut IrFunction, stats: &mut PassStats) {
    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        let mut i = 0;
        while i < f.body.insts.len() {
            if let Some((r, counter)) = combine_one(f, i) {
                let id = f.body.insts[i].id;
                match r {
                    Rewrite::Replace(v) => f.replace_all_uses(Value::Inst(id), v),
                    Rewrite::Mutate(op) => f.body.insts[i].op = op,
                }
                stats.add(&format!("instcombine.{counter}"), 1);
                if counter != "combined" {
                    stats.add("instcombine.combined", 1);
                }
                changed = true;
                // Rewrites feeding back into themselves are retried in place.
                if f.use_count(Value::Inst(id)) > 0 && matches!(f.body.insts[i].op, Op::Bin { .. } | Op::Gep { .. } | Op::Funnel { .. }) {
                    continue;
                }
            }
            i += 1;
        }
        let removed = f.remove_dead();
        stats.add("instcombine.dce", removed as u64);
        if !changed && removed == 0 {
            return;
        }
    }
}
