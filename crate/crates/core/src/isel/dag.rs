use std::collections::HashMap;
use std::fmt::Write;

/// Result type of a node's value result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueType {
    I32,
    Ptr,
    Chain,
}

impl ValueType {
    pub fn name(self) -> &'static str {
        match self {
            ValueType::I32 => "i32",
            ValueType::Ptr => "ptr",
            ValueType::Chain => "ch",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DagOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Shl,
    Srl,
    Sra,
    Rotr,
}

impl DagOp {
    pub fn name(self) -> &'static str {
        match self {
            DagOp::Add => "add",
            DagOp::Sub => "sub",
            DagOp::Mul => "mul",
            DagOp::And => "and",
            DagOp::Or => "or",
            DagOp::Xor => "xor",
            DagOp::Shl => "shl",
            DagOp::Srl => "srl",
            DagOp::Sra => "sra",
            DagOp::Rotr => "rotr",
        }
    }

    pub fn eval(self, a: u32, b: u32) -> u32 {
        match self {
            DagOp::Add => a.wrapping_add(b),
            DagOp::Sub => a.wrapping_sub(b),
            DagOp::Mul => a.wrapping_mul(b),
            DagOp::And => a & b,
            DagOp::Or => a | b,
            DagOp::Xor => a ^ b,
            DagOp::Shl => a << (b & 31),
            DagOp::Srl => a >> (b & 31),
            DagOp::Sra => ((a as i32) >> (b & 31)) as u32,
            DagOp::Rotr => a.rotate_right(b & 31),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    EntryToken,
    Constant(i32),
    GlobalAddress(String),
    /// Incoming argument register `a<i>`.
    Register(u32),
    /// Address of the i-th stack slot.
    FrameIndex(u32),
    Load,
    Store,
    Bin(DagOp),
    Fshl,
    Fshr,
    Ret,
    /// High 20 bits of a symbol's address.
    Hi,
    /// `hi + %lo(sym)`.
    AddLo,
    /// Operands that selection leaves alone.
    TargetConstant(i32),
    TargetGlobal(String),
    PhysReg(u8),
    /// A selected instruction, by definition name. `PseudoRET` is the
    /// return sequence.
    Machine(String),
}

impl NodeKind {
    /// Kinds that must be gone once selection finishes.
    pub fn is_generic(&self) -> bool {
        !matches!(
            self,
            NodeKind::EntryToken
                | NodeKind::Register(_)
                | NodeKind::TargetConstant(_)
                | NodeKind::TargetGlobal(_)
                | NodeKind::PhysReg(_)
                | NodeKind::Machine(_)
        )
    }

    pub fn label(&self) -> String {
        match self {
            NodeKind::EntryToken => "EntryToken".into(),
            NodeKind::Constant(c) => format!("Constant<{c}>"),
            NodeKind::GlobalAddress(g) => format!("GlobalAddress<@{g}>"),
            NodeKind::Register(i) => format!("Register<a{i}>"),
            NodeKind::FrameIndex(i) => format!("FrameIndex<{i}>"),
            NodeKind::Load => "load".into(),
            NodeKind::Store => "store".into(),
            NodeKind::Bin(op) => op.name().into(),
            NodeKind::Fshl => "fshl".into(),
            NodeKind::Fshr => "fshr".into(),
            NodeKind::Ret => "ret".into(),
            NodeKind::Hi => "RISCVISD::HI".into(),
            NodeKind::AddLo => "RISCVISD::ADD_LO".into(),
            NodeKind::TargetConstant(c) => format!("TargetConstant<{c}>"),
            NodeKind::TargetGlobal(g) => format!("TargetGlobalAddress<@{g}>"),
            NodeKind::PhysReg(r) => format!("Register<{}>", crate::target::ABI_NAMES[*r as usize]),
            NodeKind::Machine(d) => d.clone(),
        }
    }

    /// Pure nodes are uniqued: building an identical one returns the old one.
    fn is_pure(&self) -> bool {
        !matches!(self, NodeKind::EntryToken | NodeKind::Load | NodeKind::Store | NodeKind::Ret | NodeKind::Machine(_))
    }
}

/// One result of a node: index 0 is the value, 1 the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DagValue {
    pub node: usize,
    pub res: u8,
}

impl DagValue {
    pub fn val(node: usize) -> Self {
        DagValue { node, res: 0 }
    }

    pub fn chain(node: usize) -> Self {
        DagValue { node, res: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DagNode {
    pub kind: NodeKind,
    pub operands: Vec<DagValue>,
    pub chain: Option<DagValue>,
    pub vt: ValueType,
    /// Creation index.
    pub id: usize,
    /// Scheduling key. Starts as the id; machine nodes take the key of the
    /// generic node they replace so selection does not reshuffle the output.
    pub order: usize,
    pub dead: bool,
}

#[derive(Clone, Debug, Default)]
pub struct SelDag {
    pub nodes: Vec<DagNode>,
    pub root: usize,
    pub entry: usize,
    uniq: HashMap<(NodeKind, Vec<DagValue>), usize>,
}

impl SelDag {
    pub fn new() -> Self {
        let mut d = SelDag::default();
        d.entry = d.add(NodeKind::EntryToken, vec![], None, ValueType::Chain);
        d
    }

    /// Creates a node, returning an existing identical one for pure kinds.
    pub fn add(&mut self, kind: NodeKind, operands: Vec<DagValue>, chain: Option<DagValue>, vt: ValueType) -> usize {
        let key = (kind.clone(), operands.clone());
        if kind.is_pure() {
            if let Some(&n) = self.uniq.get(&key) {
                if !self.nodes[n].dead {
                    return n;
                }
            }
        }
        let id = self.nodes.len();
        self.nodes.push(DagNode { kind: kind.clone(), operands, chain, vt, id, order: id, dead: false });
        if kind.is_pure() {
            self.uniq.insert(key, id);
        }
        id
    }

    pub fn constant(&mut self, c: i32) -> DagValue {
        DagValue::val(self.add(NodeKind::Constant(c), vec![], None, ValueType::I32))
    }

    pub fn target_constant(&mut self, c: i32) -> DagValue {
        DagValue::val(self.add(NodeKind::TargetConstant(c), vec![], None, ValueType::I32))
    }

    pub fn bin(&mut self, op: DagOp, a: DagValue, b: DagValue) -> DagValue {
        let vt = self.nodes[a.node].vt;
        let vt = if vt == ValueType::Ptr && op == DagOp::Add { vt } else { ValueType::I32 };
        DagValue::val(self.add(NodeKind::Bin(op), vec![a, b], None, vt))
    }

    pub fn node(&self, v: DagValue) -> &DagNode {
        &self.nodes[v.node]
    }

    pub fn kind(&self, v: DagValue) -> &NodeKind {
        &self.nodes[v.node].kind
    }

    pub fn as_const(&self, v: DagValue) -> Option<i32> {
        match self.nodes[v.node].kind {
            NodeKind::Constant(c) => Some(c),
            _ => None,
        }
    }

    pub fn live(&self) -> impl Iterator<Item = &DagNode> {
        self.nodes.iter().filter(|n| !n.dead)
    }

    /// Number of live operand or chain slots referring to `v`.
    pub fn use_count(&self, v: DagValue) -> usize {
        self.live()
            .map(|n| n.operands.iter().chain(n.chain.iter()).filter(|&&o| o == v).count())
            .sum()
    }

    pub fn replace_all_uses(&mut self, from: DagValue, to: DagValue) {
        for n in self.nodes.iter_mut().filter(|n| !n.dead) {
            for o in n.operands.iter_mut().chain(n.chain.iter_mut()) {
                if *o == from {
                    *o = to;
                }
            }
        }
    }

    /// Nodes reachable from the root, operands before users.
    pub fn topo_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        // Iterative post-order DFS; children visited in operand order, the
        // chain last.
        let mut stack = vec![(self.root, 0usize)];
        seen[self.root] = true;
        while let Some(&mut (n, ref mut i)) = stack.last_mut() {
            let node = &self.nodes[n];
            let kids: Vec<usize> = node.operands.iter().chain(node.chain.iter()).map(|v| v.node).collect();
            if *i < kids.len() {
                let k = kids[*i];
                *i += 1;
                if !seen[k] {
                    seen[k] = true;
                    stack.push((k, 0));
                }
            } else {
                out.push(n);
                stack.pop();
            }
        }
        out
    }

    /// Marks everything unreachable from the root dead. Returns how many
    /// nodes died.
    pub fn remove_dead(&mut self) -> usize {
        let mut reach = vec![false; self.nodes.len()];
        for n in self.topo_order() {
            reach[n] = true;
        }
        let mut killed = 0;
        for (i, n) in self.nodes.iter_mut().enumerate() {
            if !n.dead && !reach[i] {
                n.dead = true;
                killed += 1;
            }
        }
        killed
    }

    pub fn live_count(&self) -> usize {
        self.live().count()
    }

    /// Histogram of live node labels, for tests and traces.
    pub fn count_kind(&self, label: &str) -> usize {
        self.live().filter(|n| n.kind.label() == label).count()
    }
}

/// Graphviz rendering: one box per live node labelled `kind:type`, value
/// edges solid, chain edges dashed.
pub fn emit_dot(dag: &SelDag, stage_label: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{stage_label}\" {{");
    let _ = writeln!(out, "  label=\"{stage_label}\";");
    let _ = writeln!(out, "  node [shape=box];");
    for n in dag.live() {
        let _ = writeln!(out, "  n{} [label=\"{}:{}\"];", n.id, n.kind.label(), n.vt.name());
    }
    for n in dag.live() {
        for o in &n.operands {
            let _ = writeln!(out, "  n{} -> n{};", n.id, o.node);
        }
        if let Some(c) = n.chain {
            let _ = writeln!(out, "  n{} -> n{} [style=dashed, color=blue];", n.id, c.node);
        }
    }
    out.push_str("}\n");
    out
}
