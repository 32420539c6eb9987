use std::collections::HashMap;

use super::PassStats;
use crate::ir::{InstId, IrFunction, Op, Value};

/// Allocas whose every use is the address operand of a load or store.
fn promotable(f: &IrFunction) -> Vec<InstId> {
    f.body
        .insts
        .iter()
        .filter(|i| matches!(i.op, Op::Alloca { .. }))
        .map(|i| i.id)
        .filter(|&id| {
            let a = Value::Inst(id);
            f.body.ret != Some(a)
                && f.body.insts.iter().all(|u| match &u.op {
                    Op::Load { .. } => true,
                    Op::Store { value, .. } => *value != a,
                    op => !op.operands().contains(&a),
                })
        })
        .collect()
}

/// Promotes single-block allocas to SSA values. Loads take the most recently
/// stored value, or poison when the slot is read before any write.
pub fn pass_sroa(f: &mut IrFunction, stats: &mut PassStats) {
    let slots = promotable(f);
    if slots.is_empty() {
        return;
    }
    let mut stores_to: HashMap<InstId, usize> = slots.iter().map(|&s| (s, 0)).collect();
    for inst in &f.body.insts {
        if let Op::Store { addr: Value::Inst(a), .. } = inst.op {
            if let Some(n) = stores_to.get_mut(&a) {
                *n += 1;
            }
        }
    }
    let mut current: HashMap<InstId, Value> = slots.iter().map(|&s| (s, Value::Poison)).collect();
    let mut replace: Vec<(InstId, Value)> = Vec::new();
    let mut deleted = Vec::new();
    for inst in &f.body.insts {
        match inst.op {
            Op::Alloca { .. } if current.contains_key(&inst.id) => deleted.push(inst.id),
            Op::Store { value, addr: Value::Inst(a), .. } if current.contains_key(&a) => {
                let v = resolve(&replace, value);
                current.insert(a, v);
                deleted.push(inst.id);
            }
            Op::Load { addr: Value::Inst(a), .. } if current.contains_key(&a) => {
                replace.push((inst.id, current[&a]));
                deleted.push(inst.id);
            }
            _ => {}
        }
    }
    for &(id, v) in &replace {
        let v = resolve(&replace, v);
        f.replace_all_uses(Value::Inst(id), v);
    }
    f.body.insts.retain(|i| !deleted.contains(&i.id));

    let single = slots.iter().filter(|s| stores_to[s] == 1).count() as u64;
    stats.add("sroa.allocas-promoted", slots.len() as u64);
    stats.add("sroa.insts-deleted", deleted.len() as u64);
    stats.add("mem2reg.single-store", single);
    stats.add("mem2reg.single-block", slots.len() as u64 - single);
}

/// Chases a value through already-decided load replacements.
fn resolve(replace: &[(InstId, Value)], mut v: Value) -> Value {
    while let Value::Inst(id) = v {
        match replace.iter().find(|(r, _)| *r == id) {
            Some(&(_, to)) => v = to,
            None => break,
        }
    }
    v
}
