use std::collections::HashMap;

use super::dag::{DagOp, DagValue, NodeKind, SelDag, ValueType};
use super::IselError;
use crate::target::{
    materialize_imm, Extension, ExtensionSet, LeafKind, MOperand, OutNode, PatNode, PatOp, Reg, SelPattern, TargetDesc,
    SP, ZERO,
};

/// An imperative matcher. Gets the DAG and the root node; returns the value
/// replacing the root, or `None` to let declarative patterns try.
pub type HookFn = fn(&mut SelDag, usize, &mut Vec<String>) -> Option<DagValue>;

#[derive(Clone)]
pub struct Hook {
    pub name: &'static str,
    pub root: NodeKind,
    /// Extensions the emitted instructions need.
    pub requires: ExtensionSet,
    pub run: HookFn,
}

/// Hand-written matchers, consulted before any declarative pattern.
#[derive(Clone)]
pub struct HookRegistry {
    hooks: Vec<Hook>,
}

impl HookRegistry {
    pub fn empty() -> Self {
        HookRegistry { hooks: Vec::new() }
    }

    /// The shipped hooks: the dependent-load xor.
    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Hook {
            name: "xor_dependent_loads",
            root: NodeKind::Bin(DagOp::Xor),
            requires: ExtensionSet::BASE.with(Extension::Xcrypt),
            run: hook_xor_dependent_loads,
        });
        r
    }

    pub fn register(&mut self, h: Hook) {
        self.hooks.push(h);
    }

    pub fn len(&self) -> usize {
        self.hooks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hooks.is_empty()
    }

    fn for_root<'a>(&'a self, kind: &'a NodeKind, ext: ExtensionSet) -> impl Iterator<Item = &'a Hook> {
        self.hooks.iter().filter(move |h| h.root == *kind && ext.contains(h.requires))
    }
}

impl Default for HookRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// The five checks for `xor(load p, load (add p, 16))`, then an ADDI/LXR pair
/// in place of the xor and both loads.
pub fn hook_xor_dependent_loads(dag: &mut SelDag, n: usize, trace: &mut Vec<String>) -> Option<DagValue> {
    trace.push(format!("t{n}: xor: trying hook xor_dependent_loads"));
    let [a, b] = dag.nodes[n].operands[..] else { return None };
    let step = |trace: &mut Vec<String>, i: usize, what: &str, ok: bool| {
        trace.push(format!("  [{i}] {what}: {}", yes(ok)));
        ok
    };
    let both_loads = a.res == 0 && b.res == 0 && *dag.kind(a) == NodeKind::Load && *dag.kind(b) == NodeKind::Load;
    if !step(trace, 1, "both operands are loads", both_loads) {
        return fall_through(trace);
    }
    let base = dag.node(a).operands[0];
    let addr = dag.node(b).operands[0];
    if !step(trace, 2, "second load's address is an add", *dag.kind(addr) == NodeKind::Bin(DagOp::Add)) {
        return fall_through(trace);
    }
    let [first, second] = dag.node(addr).operands[..] else { return None };
    if !step(trace, 3, "first addend is the first load's address", first == base) {
        return fall_through(trace);
    }
    let c = dag.as_const(second);
    if !step(trace, 4, "second addend is a constant", c.is_some()) {
        return fall_through(trace);
    }
    if !step(trace, 5, "constant equals 16", c.map(|c| c as u32) == Some(16)) {
        return fall_through(trace);
    }
    // Not one of the five checks: the loads disappear into LXR, so nothing
    // else may read them and no memory operation may sit between them.
    let Some((lo, hi)) = foldable_loads(dag, &[a.node, b.node]) else {
        trace.push("  loads can be merged into one memory access: no".into());
        return fall_through(trace);
    };
    let tc = dag.target_constant(16);
    let addi = dag.add(NodeKind::Machine("ADDI".into()), vec![base, tc], None, ValueType::Ptr);
    let lxr = dag.add(NodeKind::Machine("LXR".into()), vec![base, DagValue::val(addi)], None, ValueType::I32);
    merge_load_chains(dag, lo, hi, lxr);
    trace.push(format!("  => t{n} replaced by ADDI t{addi} + LXR t{lxr}"));
    Some(DagValue::val(lxr))
}

fn fall_through(trace: &mut Vec<String>) -> Option<DagValue> {
    trace.push("  => no match, falling through to patterns".into());
    None
}

/// For loads about to be absorbed into one machine node: each value used
/// once, and the loads consecutive on the chain with nothing else hanging
/// off the inner links. Returns (earliest, latest).
fn foldable_loads(dag: &SelDag, loads: &[usize]) -> Option<(usize, usize)> {
    if loads.iter().any(|&l| dag.use_count(DagValue::val(l)) != 1) {
        return None;
    }
    match *loads {
        [l] => Some((l, l)),
        [x, y] if x == y => None,
        [x, y] => {
            let after = |p: usize, q: usize| {
                dag.nodes[q].chain == Some(DagValue::chain(p)) && dag.use_count(DagValue::chain(p)) == 1
            };
            if after(x, y) {
                Some((x, y))
            } else if after(y, x) {
                Some((y, x))
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Gives `machine` the chain position of the loads `lo..=hi` and kills them.
fn merge_load_chains(dag: &mut SelDag, lo: usize, hi: usize, machine: usize) {
    dag.nodes[machine].chain = dag.nodes[lo].chain;
    dag.replace_all_uses(DagValue::chain(hi), DagValue::chain(machine));
    dag.nodes[lo].dead = true;
    dag.nodes[hi].dead = true;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Capture {
    Val(DagValue),
    Imm(i32),
}

struct Match {
    caps: HashMap<String, Capture>,
    loads: Vec<usize>,
}

fn dag_op(op: PatOp) -> Option<DagOp> {
    Some(match op {
        PatOp::Add => DagOp::Add,
        PatOp::Sub => DagOp::Sub,
        PatOp::Mul => DagOp::Mul,
        PatOp::And => DagOp::And,
        PatOp::Or => DagOp::Or,
        PatOp::Xor => DagOp::Xor,
        PatOp::Shl => DagOp::Shl,
        PatOp::Srl => DagOp::Srl,
        PatOp::Sra => DagOp::Sra,
        PatOp::Rotr => DagOp::Rotr,
        PatOp::Load => return None,
    })
}

fn in_range(c: i32, lo: i32, hi: i32) -> bool {
    (lo..=hi).contains(&c)
}

fn capture(m: &mut Match, name: &str, c: Capture) -> bool {
    match m.caps.get(name) {
        Some(old) => *old == c,
        None => {
            m.caps.insert(name.to_string(), c);
            true
        }
    }
}

fn match_node(dag: &SelDag, pat: &PatNode, v: DagValue, is_root: bool, m: &mut Match) -> bool {
    if v.res != 0 {
        return false;
    }
    match pat {
        PatNode::Const(c) => dag.as_const(v) == Some(*c),
        PatNode::Leaf { kind, name } => {
            let c = dag.as_const(v);
            let cap = match kind {
                LeafKind::Gpr => Capture::Val(v),
                LeafKind::Simm12 => match c {
                    Some(c) if in_range(c, -2048, 2047) => Capture::Imm(c),
                    _ => return false,
                },
                LeafKind::Uimm5 => match c {
                    Some(c) if in_range(c, 0, 31) => Capture::Imm(c),
                    _ => return false,
                },
                LeafKind::NonImm12 => match c {
                    Some(c) if in_range(c, -2048, 2047) => return false,
                    _ => Capture::Val(v),
                },
                LeafKind::ShXAddOp(k) => {
                    let node = dag.node(v);
                    if node.kind != NodeKind::Bin(DagOp::Shl) || dag.as_const(node.operands[1]) != Some(*k as i32) {
                        return false;
                    }
                    Capture::Val(node.operands[0])
                }
            };
            capture(m, name, cap)
        }
        PatNode::Op { op, one_use, children } => {
            let node = dag.node(v);
            let kind_ok = match dag_op(*op) {
                Some(d) => node.kind == NodeKind::Bin(d),
                None => node.kind == NodeKind::Load,
            };
            if !kind_ok || node.operands.len() != children.len() {
                return false;
            }
            if *one_use && !is_root && dag.use_count(v) != 1 {
                return false;
            }
            if *op == PatOp::Load {
                m.loads.push(v.node);
            }
            children.iter().zip(&node.operands).all(|(p, &o)| match_node(dag, p, o, false, m))
        }
    }
}

fn build_result(dag: &mut SelDag, out: &OutNode, caps: &HashMap<String, Capture>) -> DagValue {
    match out {
        OutNode::Capture(name) => match caps[name] {
            Capture::Val(v) => v,
            Capture::Imm(c) => dag.target_constant(c),
        },
        OutNode::Inst { def, args } => {
            let ops = args.iter().map(|a| build_result(dag, a, caps)).collect();
            DagValue::val(dag.add(NodeKind::Machine(def.clone()), ops, None, ValueType::I32))
        }
    }
}

fn try_pattern(dag: &mut SelDag, n: usize, p: &SelPattern) -> Option<DagValue> {
    for variant in &p.variants {
        let mut m = Match { caps: HashMap::new(), loads: Vec::new() };
        if !match_node(dag, variant, DagValue::val(n), true, &mut m) {
            continue;
        }
        let span = if m.loads.is_empty() {
            None
        } else {
            match foldable_loads(dag, &m.loads) {
                Some(s) => Some(s),
                None => continue,
            }
        };
        let out = build_result(dag, &p.result, &m.caps);
        if let Some((lo, hi)) = span {
            merge_load_chains(dag, lo, hi, out.node);
        }
        return Some(out);
    }
    None
}

/// Turns every generic node into machine nodes: hooks first, then
/// declarative patterns in priority order, then fixed per-kind fallbacks.
pub fn select(
    dag: &mut SelDag,
    desc: &TargetDesc,
    ext: ExtensionSet,
    hooks: &HookRegistry,
    zba_threshold: usize,
    trace: &mut Vec<String>,
) -> Result<(), IselError> {
    let patterns: Vec<&SelPattern> = desc.patterns_for(ext).collect();
    let order = dag.topo_order();
    // Users come before operands, so a pattern sees its whole tree intact.
    for &n in order.iter().rev() {
        let node = &dag.nodes[n];
        if node.dead || !node.kind.is_generic() {
            continue;
        }
        if n != dag.root && dag.use_count(DagValue::val(n)) + dag.use_count(DagValue::chain(n)) == 0 {
            dag.nodes[n].dead = true;
            continue;
        }
        let kind = node.kind.clone();
        let label = kind.label();
        let first_new = dag.nodes.len();

        let mut done = None;
        for h in hooks.for_root(&kind, ext) {
            if let Some(v) = (h.run)(dag, n, trace) {
                done = Some(v);
                break;
            }
        }
        if done.is_none() {
            for p in &patterns {
                if let Some(v) = try_pattern(dag, n, p) {
                    trace.push(format!("t{n}: {label} matched {} => {} (line {})", p.source, p.result, p.line));
                    done = Some(v);
                    break;
                }
            }
        }
        match done {
            Some(v) => {
                dag.replace_all_uses(DagValue::val(n), v);
                dag.nodes[n].dead = true;
                // Drop the covered interior so later one-use checks count
                // only real users.
                dag.remove_dead();
            }
            None => {
                let def = fallback(dag, n, ext, zba_threshold)?;
                trace.push(format!("t{n}: {label} selected by fallback => {def}"));
            }
        }
        let key = dag.nodes[n].order;
        for k in first_new..dag.nodes.len() {
            dag.nodes[k].order = key;
        }
    }
    dag.remove_dead();
    if let Some(left) = dag.live().find(|n| n.kind.is_generic()) {
        return Err(IselError::CannotSelect(left.kind.label()));
    }
    Ok(())
}

fn phys(dag: &mut SelDag, r: u8) -> DagValue {
    DagValue::val(dag.add(NodeKind::PhysReg(r), vec![], None, ValueType::I32))
}

fn machine(dag: &mut SelDag, def: &str, ops: Vec<DagValue>, chain: Option<DagValue>, vt: ValueType) -> usize {
    dag.add(NodeKind::Machine(def.into()), ops, chain, vt)
}

/// (base, offset) for a load or store address; the offset is a target
/// constant or a `%lo` symbol.
fn address_mode(dag: &mut SelDag, addr: DagValue) -> (DagValue, DagValue) {
    let node = dag.node(addr).clone();
    match node.kind {
        NodeKind::AddLo => (node.operands[0], node.operands[1]),
        NodeKind::FrameIndex(k) => {
            let sp = phys(dag, SP);
            (sp, dag.target_constant(4 * k as i32))
        }
        NodeKind::Bin(DagOp::Add) => {
            let [b, o] = node.operands[..] else { unreachable!() };
            match dag.as_const(o) {
                Some(c) if in_range(c, -2048, 2047) => {
                    if let NodeKind::FrameIndex(k) = dag.nodes[b.node].kind {
                        let off = 4 * k as i32 + c;
                        if in_range(off, -2048, 2047) {
                            let sp = phys(dag, SP);
                            return (sp, dag.target_constant(off));
                        }
                    }
                    (b, dag.target_constant(c))
                }
                _ => (addr, dag.target_constant(0)),
            }
        }
        _ => (addr, dag.target_constant(0)),
    }
}

/// Per-kind selection for whatever no hook or pattern claimed. Returns the
/// name of what was emitted, for the trace.
fn fallback(dag: &mut SelDag, n: usize, ext: ExtensionSet, zba_threshold: usize) -> Result<String, IselError> {
    let node = dag.nodes[n].clone();
    let (new, name) = match node.kind {
        NodeKind::Constant(0) => (phys(dag, ZERO), "zero".to_string()),
        NodeKind::Constant(c) => {
            let seq = materialize_imm(c, Reg::Virt(0), ext, zba_threshold);
            let mut prev: Option<DagValue> = None;
            let mut names = Vec::new();
            for mi in &seq {
                let ops = mi.ops[1..]
                    .iter()
                    .map(|o| match o {
                        MOperand::Reg(Reg::Virt(_)) => prev.expect("materialization reads its own result"),
                        MOperand::Reg(Reg::Phys(p)) => phys(dag, *p),
                        MOperand::Imm(i) => dag.target_constant(*i),
                        MOperand::Sym(..) => unreachable!("constants carry no symbols"),
                    })
                    .collect();
                prev = Some(DagValue::val(machine(dag, &mi.opcode, ops, None, ValueType::I32)));
                names.push(mi.opcode.clone());
            }
            (prev.expect("non-empty materialization"), names.join(" + "))
        }
        NodeKind::Hi => (DagValue::val(machine(dag, "LUI", node.operands.clone(), None, ValueType::Ptr)), "LUI".into()),
        NodeKind::AddLo => (DagValue::val(machine(dag, "ADDI", node.operands.clone(), None, ValueType::Ptr)), "ADDI".into()),
        NodeKind::FrameIndex(k) => {
            let sp = phys(dag, SP);
            let off = dag.target_constant(4 * k as i32);
            (DagValue::val(machine(dag, "ADDI", vec![sp, off], None, ValueType::Ptr)), "ADDI".into())
        }
        NodeKind::Load => {
            let (b, o) = address_mode(dag, node.operands[0]);
            let m = machine(dag, "LW", vec![b, o], node.chain, node.vt);
            dag.replace_all_uses(DagValue::chain(n), DagValue::chain(m));
            (DagValue::val(m), "LW".into())
        }
        NodeKind::Store => {
            let (b, o) = address_mode(dag, node.operands[1]);
            let m = machine(dag, "SW", vec![node.operands[0], b, o], node.chain, ValueType::Chain);
            dag.replace_all_uses(DagValue::chain(n), DagValue::chain(m));
            (DagValue::val(m), "SW".into())
        }
        NodeKind::Ret => {
            let m = machine(dag, "PseudoRET", node.operands.clone(), node.chain, ValueType::Chain);
            dag.root = m;
            (DagValue::val(m), "PseudoRET".into())
        }
        _ => return Err(IselError::CannotSelect(format!("{} (no instruction for it under {ext})", node.kind.label()))),
    };
    dag.replace_all_uses(DagValue::val(n), new);
    dag.nodes[n].dead = true;
    Ok(name)
}
