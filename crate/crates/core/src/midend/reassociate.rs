use std::collections::HashMap;

use super::PassStats;
use crate::ir::{IrFunction, Op, Value};

/// Rank of every value the function mentions. Constants and globals rank 0,
/// argument i ranks i + 3 and an instruction one more than its highest
/// ranked operand.
pub fn rank_map(f: &IrFunction) -> HashMap<Value, u32> {
    let mut ranks = HashMap::new();
    for i in 0..f.params.len() as u32 {
        ranks.insert(Value::Arg(i), i + 3);
    }
    for inst in &f.body.insts {
        let r = inst.op.operands().iter().map(|v| rank(&ranks, *v)).max().unwrap_or(0) + 1;
        ranks.insert(Value::Inst(inst.id), r);
    }
    ranks
}

fn rank(ranks: &HashMap<Value, u32>, v: Value) -> u32 {
    ranks.get(&v).copied().unwrap_or(0)
}

/// Orders the operands of commutative operations by ascending rank, ties
/// broken by definition order. Constants stay on the right, where the
/// canonical form puts them.
pub fn pass_reassociate(f: &mut IrFunction, stats: &mut PassStats) {
    let ranks = rank_map(f);
    let pos: HashMap<Value, usize> = f
        .body
        .insts
        .iter()
        .enumerate()
        .map(|(i, inst)| (Value::Inst(inst.id), i + f.params.len()))
        .chain((0..f.params.len()).map(|i| (Value::Arg(i as u32), i)))
        .collect();
    let key = |v: Value| (v.is_const(), rank(&ranks, v), pos.get(&v).copied().unwrap_or(0));
    let mut n = 0;
    for inst in &mut f.body.insts {
        if let Op::Bin { op, lhs, rhs } = &mut inst.op {
            if op.is_commutative() && key(*rhs) < key(*lhs) {
                std::mem::swap(lhs, rhs);
                n += 1;
            }
        }
    }
    stats.add("reassociate.insts-reassociated", n);
}
