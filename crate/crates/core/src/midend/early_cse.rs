use std::collections::HashMap;

use super::PassStats;
use crate::ir::{BinOp, Funnel, InstId, IrFunction, Op, Value};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Bin(BinOp, Value, Value),
    Funnel(Funnel, Value, Value, Value),
    Gep(Value, i32),
}

fn order(v: Value) -> (u8, i64) {
    match v {
        Value::Const(c) => (0, c as i64),
        Value::Poison => (1, 0),
        Value::Global(g) => (2, g.0 as i64),
        Value::Arg(a) => (3, a as i64),
        Value::Inst(i) => (4, i.0 as i64),
    }
}

fn key(op: &Op) -> Option<Key> {
    match *op {
        Op::Bin { op, lhs, rhs } => {
            let (a, b) = if op.is_commutative() && order(rhs) < order(lhs) { (rhs, lhs) } else { (lhs, rhs) };
            Some(Key::Bin(op, a, b))
        }
        Op::Funnel { kind, hi, lo, amount } => Some(Key::Funnel(kind, hi, lo, amount)),
        Op::Gep { base, offset } => Some(Key::Gep(base, offset)),
        _ => None,
    }
}

/// Forward scan removing recomputed pure values and reloads of addresses
/// whose contents are known. A store forgets every known load except the
/// one for its own address, which it forwards.
pub fn pass_early_cse(f: &mut IrFunction, stats: &mut PassStats) {
    let mut replaced: HashMap<InstId, Value> = HashMap::new();
    let mut exprs: HashMap<Key, Value> = HashMap::new();
    let mut loads: HashMap<Value, Value> = HashMap::new();
    let mut dead = Vec::new();
    let (mut n_loads, mut n_insts) = (0u64, 0u64);
    let subst = |replaced: &HashMap<InstId, Value>, v: &mut Value| {
        if let Value::Inst(id) = *v {
            if let Some(&to) = replaced.get(&id) {
                *v = to;
            }
        }
    };
    for inst in &mut f.body.insts {
        for v in inst.op.operands_mut() {
            subst(&replaced, v);
        }
        let me = Value::Inst(inst.id);
        match inst.op {
            Op::Load { addr, .. } => match loads.get(&addr) {
                Some(&v) => {
                    replaced.insert(inst.id, v);
                    dead.push(inst.id);
                    n_loads += 1;
                }
                None => {
                    loads.insert(addr, me);
                }
            },
            Op::Store { value, addr, .. } => {
                loads.clear();
                loads.insert(addr, value);
            }
            Op::Alloca { .. } => {}
            ref op => {
                let k = key(op).expect("pure op");
                match exprs.get(&k) {
                    Some(&v) => {
                        replaced.insert(inst.id, v);
                        dead.push(inst.id);
                        n_insts += 1;
                    }
                    None => {
                        exprs.insert(k, me);
                    }
                }
            }
        }
    }
    if let Some(r) = f.body.ret.as_mut() {
        subst(&replaced, r);
    }
    f.body.insts.retain(|i| !dead.contains(&i.id));
    stats.add("early-cse.loads", n_loads);
    stats.add("early-cse.insts", n_insts);
}
