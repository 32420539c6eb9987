use std::collections::BTreeSet;
use std::fmt;

/// Scalar types of the IR. Everything is 32 bits wide; `Void` only appears
/// as a function return type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IrType {
    I32,
    Ptr,
    Void,
}

impl fmt::Display for IrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IrType::I32 => "i32",
            IrType::Ptr => "ptr",
            IrType::Void => "void",
        })
    }
}

/// Identifier of an instruction inside its function. Ids are never reused,
/// so a pass may delete instructions without invalidating other references.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Inst(InstId),
    Arg(u32),
    Global(GlobalId),
    Const(i32),
    /// Result of reading a promoted alloca before any store to it.
    Poison,
}

impl Value {
    pub fn as_const(self) -> Option<i32> {
        match self {
            Value::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_const(self) -> bool {
        matches!(self, Value::Const(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Shl,
    Lshr,
    Ashr,
}

impl BinOp {
    pub const ALL: [BinOp; 9] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::And,
        BinOp::Or,
        BinOp::Xor,
        BinOp::Shl,
        BinOp::Lshr,
        BinOp::Ashr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Xor => "xor",
            BinOp::Shl => "shl",
            BinOp::Lshr => "lshr",
            BinOp::Ashr => "ashr",
        }
    }

    pub fn from_name(s: &str) -> Option<BinOp> {
        BinOp::ALL.into_iter().find(|op| op.name() == s)
    }

    /// Commutative and associative; the ops Reassociate may reorder.
    pub fn is_commutative(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Mul | BinOp::And | BinOp::Or | BinOp::Xor)
    }

    /// Two's-complement wrapping evaluation. Shift amounts use their low
    /// five bits, which is also what the hardware does.
    pub fn eval(self, a: u32, b: u32) -> u32 {
        match self {
            BinOp::Add => a.wrapping_add(b),
            BinOp::Sub => a.wrapping_sub(b),
            BinOp::Mul => a.wrapping_mul(b),
            BinOp::And => a & b,
            BinOp::Or => a | b,
            BinOp::Xor => a ^ b,
            BinOp::Shl => a << (b & 31),
            BinOp::Lshr => a >> (b & 31),
            BinOp::Ashr => ((a as i32) >> (b & 31)) as u32,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Funnel {
    Fshl,
    Fshr,
}

impl Funnel {
    pub fn intrinsic(self) -> &'static str {
        match self {
            Funnel::Fshl => "llvm.fshl.i32",
            Funnel::Fshr => "llvm.fshr.i32",
        }
    }

    /// fshl(a, b, c) = high word of (a:b) << c; fshr(a, b, c) = low word of
    /// (a:b) >> c, amount taken modulo 32.
    pub fn eval(self, a: u32, b: u32, c: u32) -> u32 {
        let wide = ((a as u64) << 32) | b as u64;
        let c = c & 31;
        match self {
            Funnel::Fshl => ((wide << c) >> 32) as u32,
            Funnel::Fshr => (wide >> c) as u32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Op {
    Alloca { ty: IrType },
    Load { ty: IrType, addr: Value },
    Store { ty: IrType, value: Value, addr: Value },
    /// Flattened getelementptr: `base + offset` bytes.
    Gep { base: Value, offset: i32 },
    Bin { op: BinOp, lhs: Value, rhs: Value },
    Funnel { kind: Funnel, hi: Value, lo: Value, amount: Value },
}

impl Op {
    pub fn operands(&self) -> Vec<Value> {
        match self {
            Op::Alloca { .. } => vec![],
            Op::Load { addr, .. } => vec![*addr],
            Op::Store { value, addr, .. } => vec![*value, *addr],
            Op::Gep { base, .. } => vec![*base],
            Op::Bin { lhs, rhs, .. } => vec![*lhs, *rhs],
            Op::Funnel { hi, lo, amount, .. } => vec![*hi, *lo, *amount],
        }
    }

    pub fn operands_mut(&mut self) -> Vec<&mut Value> {
        match self {
            Op::Alloca { .. } => vec![],
            Op::Load { addr, .. } => vec![addr],
            Op::Store { value, addr, .. } => vec![value, addr],
            Op::Gep { base, .. } => vec![base],
            Op::Bin { lhs, rhs, .. } => vec![lhs, rhs],
            Op::Funnel { hi, lo, amount, .. } => vec![hi, lo, amount],
        }
    }

    pub fn opcode_name(&self) -> &'static str {
        match self {
            Op::Alloca { .. } => "alloca",
            Op::Load { .. } => "load",
            Op::Store { .. } => "store",
            Op::Gep { .. } => "getelementptr",
            Op::Bin { op, .. } => op.name(),
            Op::Funnel { kind: Funnel::Fshl, .. } => "fshl",
            Op::Funnel { kind: Funnel::Fshr, .. } => "fshr",
        }
    }

    pub fn has_side_effects(&self) -> bool {
        matches!(self, Op::Store { .. })
    }

    pub fn result_type(&self) -> Option<IrType> {
        match self {
            Op::Alloca { .. } | Op::Gep { .. } => Some(IrType::Ptr),
            Op::Load { ty, .. } => Some(*ty),
            Op::Store { .. } => None,
            Op::Bin { .. } | Op::Funnel { .. } => Some(IrType::I32),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inst {
    pub id: InstId,
    /// Source name without the leading `%`; `None` for stores.
    pub name: Option<String>,
    pub op: Op,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: IrType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicBlock {
    pub label: String,
    pub insts: Vec<Inst>,
    /// The terminator is always `ret`; `None` means `ret void`.
    pub ret: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IrFunction {
    pub name: String,
    pub params: Vec<Param>,
    pub ret_ty: IrType,
    pub body: BasicBlock,
    pub attrs: BTreeSet<String>,
    pub(crate) next_id: u32,
}

impl IrFunction {
    pub fn new(name: &str, params: Vec<Param>, ret_ty: IrType) -> Self {
        IrFunction {
            name: name.to_string(),
            params,
            ret_ty,
            body: BasicBlock { label: "entry".into(), insts: Vec::new(), ret: None },
            attrs: BTreeSet::new(),
            next_id: 0,
        }
    }

    pub fn fresh_id(&mut self) -> InstId {
        let id = InstId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Makes a new instruction with a name derived from `hint` that does not
    /// clash with any existing name.
    pub fn make_inst(&mut self, hint: Option<&str>, op: Op) -> Inst {
        let id = self.fresh_id();
        let name = hint.map(|h| self.unique_name(h));
        Inst { id, name, op }
    }

    pub fn unique_name(&self, hint: &str) -> String {
        let taken = |n: &str| {
            self.body.insts.iter().any(|i| i.name.as_deref() == Some(n))
                || self.params.iter().any(|p| p.name == n)
        };
        if !taken(hint) {
            return hint.to_string();
        }
        (1..).map(|k| format!("{hint}{k}")).find(|n| !taken(n)).unwrap()
    }

    pub fn position(&self, id: InstId) -> Option<usize> {
        self.body.insts.iter().position(|i| i.id == id)
    }

    pub fn inst(&self, id: InstId) -> Option<&Inst> {
        self.body.insts.iter().find(|i| i.id == id)
    }

    pub fn value_type(&self, v: Value) -> IrType {
        match v {
            Value::Inst(id) => self
                .inst(id)
                .and_then(|i| i.op.result_type())
                .unwrap_or(IrType::Void),
            Value::Arg(i) => self.params.get(i as usize).map(|p| p.ty).unwrap_or(IrType::Void),
            Value::Global(_) => IrType::Ptr,
            Value::Const(_) | Value::Poison => IrType::I32,
        }
    }

    pub fn replace_all_uses(&mut self, from: Value, to: Value) {
        for inst in &mut self.body.insts {
            for v in inst.op.operands_mut() {
                if *v == from {
                    *v = to;
                }
            }
        }
        if self.body.ret == Some(from) {
            self.body.ret = Some(to);
        }
    }

    pub fn use_count(&self, v: Value) -> usize {
        let in_insts: usize = self
            .body
            .insts
            .iter()
            .map(|i| i.op.operands().iter().filter(|&&o| o == v).count())
            .sum();
        in_insts + usize::from(self.body.ret == Some(v))
    }

    /// Deletes pure instructions whose results are unused, repeating until
    /// nothing changes. Loads count as pure. Returns how many were removed.
    pub fn remove_dead(&mut self) -> usize {
        let mut removed = 0;
        loop {
            let dead: Vec<InstId> = self
                .body
                .insts
                .iter()
                .filter(|i| !i.op.has_side_effects() && self.use_count(Value::Inst(i.id)) == 0)
                .map(|i| i.id)
                .collect();
            if dead.is_empty() {
                return removed;
            }
            removed += dead.len();
            self.body.insts.retain(|i| !dead.contains(&i.id));
        }
    }

    pub fn count_opcode(&self, name: &str) -> usize {
        self.body.insts.iter().filter(|i| i.op.opcode_name() == name).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalVar {
    pub name: String,
    pub ty: IrType,
    pub init: i32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IrModule {
    pub source_name: String,
    pub globals: Vec<GlobalVar>,
    pub functions: Vec<IrFunction>,
}

impl IrModule {
    pub fn global(&self, id: GlobalId) -> &GlobalVar {
        &self.globals[id.0 as usize]
    }

    pub fn global_id(&self, name: &str) -> Option<GlobalId> {
        self.globals.iter().position(|g| g.name == name).map(|i| GlobalId(i as u32))
    }

    pub fn function(&self, name: &str) -> Option<&IrFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Structural equality that ignores internal instruction ids: two modules
    /// are equal when they print identically modulo id numbering.
    pub fn structurally_eq(&self, other: &IrModule) -> bool {
        self.globals == other.globals
            && self.functions.len() == other.functions.len()
            && self
                .functions
                .iter()
                .zip(&other.functions)
                .all(|(a, b)| canonical(a) == canonical(b))
    }
}

/// Renumbers instruction ids by position so that functions that differ only
/// in id assignment compare equal.
fn canonical(f: &IrFunction) -> IrFunction {
    let mut g = f.clone();
    let map: std::collections::HashMap<InstId, InstId> = f
        .body
        .insts
        .iter()
        .enumerate()
        .map(|(i, inst)| (inst.id, InstId(i as u32)))
        .collect();
    let remap = |v: &mut Value| {
        if let Value::Inst(id) = v {
            *id = map[id];
        }
    };
    for inst in &mut g.body.insts {
        inst.id = map[&inst.id];
        for v in inst.op.operands_mut() {
            remap(v);
        }
    }
    if let Some(r) = g.body.ret.as_mut() {
        remap(r);
    }
    g.next_id = g.body.insts.len() as u32;
    g
}
