use super::alias::{provably_different, provably_same};
use super::PassStats;
use crate::ir::{IrFunction, Op, Value};

/// Backward kill walk. Each surviving store becomes a killer for earlier
/// stores to the same address until a load that may read it intervenes.
pub fn pass_dse(f: &mut IrFunction, stats: &mut PassStats) {
    let mut killers: Vec<Value> = Vec::new();
    let mut dead = Vec::new();
    for inst in f.body.insts.iter().rev() {
        match inst.op {
            Op::Load { addr, .. } => killers.retain(|&k| provably_different(f, k, addr)),
            Op::Store { addr, .. } => {
                if killers.iter().any(|&k| provably_same(f, k, addr)) {
                    dead.push(inst.id);
                } else {
                    killers.push(addr);
                }
            }
            _ => {}
        }
    }
    f.body.insts.retain(|i| !dead.contains(&i.id));
    let remaining = f.body.insts.iter().filter(|i| matches!(i.op, Op::Store { .. })).count();
    stats.add("dse.stores-deleted", dead.len() as u64);
    stats.add("dse.stores-remaining", remaining as u64);
}
