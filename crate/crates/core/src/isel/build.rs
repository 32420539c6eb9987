use std::collections::HashMap;

use super::dag::{DagOp, DagValue, NodeKind, SelDag, ValueType};
use crate::ir::{BinOp, Funnel, IrFunction, IrModule, IrType, Op, Value};

fn vt(t: IrType) -> ValueType {
    if t == IrType::Ptr {
        ValueType::Ptr
    } else {
        ValueType::I32
    }
}

fn dag_op(op: BinOp) -> DagOp {
    match op {
        BinOp::Add => DagOp::Add,
        BinOp::Sub => DagOp::Sub,
        BinOp::Mul => DagOp::Mul,
        BinOp::And => DagOp::And,
        BinOp::Or => DagOp::Or,
        BinOp::Xor => DagOp::Xor,
        BinOp::Shl => DagOp::Shl,
        BinOp::Lshr => DagOp::Srl,
        BinOp::Ashr => DagOp::Sra,
    }
}

/// One node per IR instruction; memory operations threaded on a single
/// chain from the entry token to the return.
pub fn build_dag(m: &IrModule, f: &IrFunction) -> SelDag {
    let mut dag = SelDag::new();
    let mut vals: HashMap<u32, DagValue> = HashMap::new();
    let mut slots = 0u32;
    let mut chain = DagValue::chain(dag.entry);
    let get = |dag: &mut SelDag, vals: &HashMap<u32, DagValue>, v: Value| -> DagValue {
        match v {
            Value::Inst(id) => vals[&id.0],
            Value::Arg(i) => DagValue::val(dag.add(NodeKind::Register(i), vec![], None, vt(f.params[i as usize].ty))),
            Value::Global(g) => {
                DagValue::val(dag.add(NodeKind::GlobalAddress(m.global(g).name.clone()), vec![], None, ValueType::Ptr))
            }
            Value::Const(c) => dag.constant(c),
            // The verifier rejects poison before we get here; zero is as
            // good as any value.
            Value::Poison => dag.constant(0),
        }
    };
    for inst in &f.body.insts {
        let v = match &inst.op {
            Op::Alloca { .. } => {
                slots += 1;
                DagValue::val(dag.add(NodeKind::FrameIndex(slots - 1), vec![], None, ValueType::Ptr))
            }
            Op::Load { ty, addr } => {
                let a = get(&mut dag, &vals, *addr);
                let n = dag.add(NodeKind::Load, vec![a], Some(chain), vt(*ty));
                chain = DagValue::chain(n);
                DagValue::val(n)
            }
            Op::Store { value, addr, .. } => {
                let v = get(&mut dag, &vals, *value);
                let a = get(&mut dag, &vals, *addr);
                let n = dag.add(NodeKind::Store, vec![v, a], Some(chain), ValueType::Chain);
                chain = DagValue::chain(n);
                continue;
            }
            Op::Gep { base, offset } => {
                let b = get(&mut dag, &vals, *base);
                if *offset == 0 {
                    b
                } else {
                    let c = dag.constant(*offset);
                    dag.bin(DagOp::Add, b, c)
                }
            }
            Op::Bin { op, lhs, rhs } => {
                let a = get(&mut dag, &vals, *lhs);
                let b = get(&mut dag, &vals, *rhs);
                dag.bin(dag_op(*op), a, b)
            }
            Op::Funnel { kind, hi, lo, amount } => {
                let ops = vec![get(&mut dag, &vals, *hi), get(&mut dag, &vals, *lo), get(&mut dag, &vals, *amount)];
                let k = if *kind == Funnel::Fshl { NodeKind::Fshl } else { NodeKind::Fshr };
                DagValue::val(dag.add(k, ops, None, ValueType::I32))
            }
        };
        vals.insert(inst.id.0, v);
    }
    let ret_ops = match f.body.ret {
        Some(v) => vec![get(&mut dag, &vals, v)],
        None => vec![],
    };
    dag.root = dag.add(NodeKind::Ret, ret_ops, Some(chain), ValueType::Chain);
    dag
}

/// Stack bytes the function's allocas occupy.
pub fn alloca_bytes(f: &IrFunction) -> u32 {
    4 * f.count_opcode("alloca") as u32
}
