use std::collections::{BTreeSet, HashMap};

use super::dag::{DagValue, NodeKind, SelDag};
use super::IselError;
use crate::codegen::MachineFunction;
use crate::target::{MOperand, MachineInstr, Reg, RelocKind, TargetDesc, A0};

/// Linearizes a selected DAG. Kahn's algorithm over value and chain edges,
/// the ready node with the smallest (order, id) going first, so output is a
/// pure function of the DAG.
pub fn schedule(dag: &SelDag, desc: &TargetDesc, mf: &mut MachineFunction) -> Result<(), IselError> {
    let live: Vec<usize> = dag.topo_order();
    let mut preds: HashMap<usize, BTreeSet<usize>> = HashMap::new();
    let mut succs: HashMap<usize, Vec<usize>> = HashMap::new();
    for &n in &live {
        let node = &dag.nodes[n];
        let ps: BTreeSet<usize> = node.operands.iter().chain(node.chain.iter()).map(|v| v.node).collect();
        for &p in &ps {
            succs.entry(p).or_default().push(n);
        }
        preds.insert(n, ps);
    }
    let mut waiting: HashMap<usize, usize> = preds.iter().map(|(&n, p)| (n, p.len())).collect();
    let key = |n: usize| (dag.nodes[n].order, n);
    let mut ready: BTreeSet<(usize, usize)> = waiting.iter().filter(|(_, &c)| c == 0).map(|(&n, _)| key(n)).collect();
    let mut vals: HashMap<usize, MOperand> = HashMap::new();
    let mut emitted = 0;
    while let Some((_, n)) = ready.pop_first() {
        emitted += 1;
        emit(dag, desc, n, &mut vals, mf)?;
        for &s in succs.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
            let c = waiting.get_mut(&s).expect("successor is live");
            *c -= 1;
            if *c == 0 {
                ready.insert(key(s));
            }
        }
    }
    if emitted != live.len() {
        return Err(IselError::Internal("cycle in the selected DAG".into()));
    }
    Ok(())
}

fn operand(vals: &HashMap<usize, MOperand>, dag: &SelDag, v: DagValue, def: &str) -> Result<MOperand, IselError> {
    Ok(match &dag.nodes[v.node].kind {
        NodeKind::TargetConstant(c) => MOperand::Imm(*c),
        NodeKind::TargetGlobal(g) => {
            MOperand::Sym(if def == "LUI" { RelocKind::Hi20 } else { RelocKind::Lo12 }, g.clone())
        }
        k => vals.get(&v.node).cloned().ok_or_else(|| IselError::Internal(format!("{} used before it is defined", k.label())))?,
    })
}

fn emit(
    dag: &SelDag,
    desc: &TargetDesc,
    n: usize,
    vals: &mut HashMap<usize, MOperand>,
    mf: &mut MachineFunction,
) -> Result<(), IselError> {
    let node = &dag.nodes[n];
    match &node.kind {
        NodeKind::EntryToken | NodeKind::TargetConstant(_) | NodeKind::TargetGlobal(_) => {}
        NodeKind::PhysReg(r) => {
            vals.insert(n, MOperand::Reg(Reg::Phys(*r)));
        }
        NodeKind::Register(i) => {
            // Copy out of the argument register; the allocator coalesces it.
            let v = mf.fresh_vreg();
            mf.instrs.push(MachineInstr::rri("ADDI", v, Reg::Phys(A0 + *i as u8), 0));
            vals.insert(n, MOperand::Reg(v));
        }
        NodeKind::Machine(d) if d == "PseudoRET" => {
            if let Some(&v) = node.operands.first() {
                let MOperand::Reg(r) = operand(vals, dag, v, d)? else {
                    return Err(IselError::Internal("return value is not a register".into()));
                };
                mf.instrs.push(MachineInstr::rri("ADDI", Reg::Phys(A0), r, 0));
            }
            mf.instrs.push(MachineInstr::ret());
        }
        NodeKind::Machine(d) => {
            let def = desc.instr(d).ok_or_else(|| IselError::Internal(format!("unknown instruction {d}")))?;
            let mut ops = Vec::new();
            if def.defines_reg() {
                let v = mf.fresh_vreg();
                vals.insert(n, MOperand::Reg(v));
                ops.push(MOperand::Reg(v));
            }
            for &o in &node.operands {
                ops.push(operand(vals, dag, o, d)?);
            }
            mf.instrs.push(MachineInstr::new(d, ops));
        }
        k => return Err(IselError::CannotSelect(k.label())),
    }
    Ok(())
}
