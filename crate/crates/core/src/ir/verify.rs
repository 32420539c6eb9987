use std::collections::{HashMap, HashSet};
use std::fmt;

use super::types::*;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub function: String,
    /// Instruction index within the block; `None` for function-level rules.
    pub index: Option<usize>,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "@{} instruction {}: {}", self.function, i, self.rule),
            None => write!(f, "@{}: {}", self.function, self.rule),
        }
    }
}

pub fn verify(m: &IrModule) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for g in &m.globals {
        if !seen.insert(g.name.as_str()) {
            out.push(Violation { function: String::new(), index: None, rule: format!("duplicate global @{}", g.name) });
        }
        if g.ty != IrType::I32 {
            out.push(Violation { function: String::new(), index: None, rule: format!("global @{} must be i32", g.name) });
        }
    }
    for f in &m.functions {
        if !seen.insert(f.name.as_str()) {
            out.push(Violation { function: f.name.clone(), index: None, rule: "duplicate function name".into() });
        }
        verify_function(m, f, &mut out);
    }
    out
}

fn verify_function(m: &IrModule, f: &IrFunction, out: &mut Vec<Violation>) {
    let mut push = |index: Option<usize>, rule: String| out.push(Violation { function: f.name.clone(), index, rule });
    let pos: HashMap<InstId, usize> = f.body.insts.iter().enumerate().map(|(i, inst)| (inst.id, i)).collect();
    let mut names = HashSet::new();
    for p in &f.params {
        if !names.insert(p.name.clone()) {
            push(None, format!("duplicate definition: %{}", p.name));
        }
        if p.ty == IrType::Void {
            push(None, format!("parameter %{} has void type", p.name));
        }
    }
    let label = |v: Value| -> String {
        match v {
            Value::Inst(id) => match f.inst(id).and_then(|i| i.name.clone()) {
                Some(n) => format!("%{n}"),
                None => format!("%<{}>", id.0),
            },
            Value::Arg(i) => format!("%{}", f.params.get(i as usize).map(|p| p.name.as_str()).unwrap_or("?")),
            Value::Global(g) => format!("@{}", m.globals.get(g.0 as usize).map(|g| g.name.as_str()).unwrap_or("?")),
            Value::Const(c) => c.to_string(),
            Value::Poison => "poison".into(),
        }
    };
    // Checks one operand for existence and dominance; returns its type if it
    // could be determined.
    let check_operand = |at: usize, v: Value, push: &mut dyn FnMut(Option<usize>, String)| -> Option<IrType> {
        match v {
            Value::Inst(id) => match pos.get(&id) {
                None => {
                    push(Some(at), format!("use of deleted value {}", label(v)));
                    None
                }
                Some(&p) if p >= at => {
                    push(Some(at), format!("use before def: {}", label(v)));
                    f.inst(id).and_then(|i| i.op.result_type())
                }
                Some(_) => f.inst(id).and_then(|i| i.op.result_type()),
            },
            Value::Arg(i) => match f.params.get(i as usize) {
                Some(p) => Some(p.ty),
                None => {
                    push(Some(at), format!("argument index {i} out of range"));
                    None
                }
            },
            Value::Global(g) => {
                if (g.0 as usize) < m.globals.len() {
                    Some(IrType::Ptr)
                } else {
                    push(Some(at), format!("reference to undeclared global #{}", g.0));
                    None
                }
            }
            Value::Const(_) => Some(IrType::I32),
            Value::Poison => {
                push(Some(at), "use of undefined value (poison)".into());
                Some(IrType::I32)
            }
        }
    };

    for (i, inst) in f.body.insts.iter().enumerate() {
        match (&inst.name, inst.op.result_type()) {
            (Some(n), Some(_)) => {
                if !names.insert(n.clone()) {
                    push(Some(i), format!("duplicate definition: %{n}"));
                }
            }
            (None, Some(_)) => push(Some(i), "value-producing instruction has no name".into()),
            (Some(n), None) => push(Some(i), format!("store cannot define %{n}")),
            (None, None) => {}
        }
        let expect = |v: Value, want: IrType, what: &str, push: &mut dyn FnMut(Option<usize>, String)| {
            if let Some(t) = check_operand(i, v, push) {
                if t != want {
                    push(Some(i), format!("type mismatch: {what} {} is {t}, expected {want}", label(v)));
                }
            }
        };
        match &inst.op {
            Op::Alloca { ty } => {
                if !matches!(ty, IrType::I32 | IrType::Ptr) {
                    push(Some(i), "alloca of unsized type".into());
                }
            }
            Op::Load { ty, addr } => {
                if !matches!(ty, IrType::I32 | IrType::Ptr) {
                    push(Some(i), "load of unsized type".into());
                }
                expect(*addr, IrType::Ptr, "load address", &mut push);
            }
            Op::Store { ty, value, addr } => {
                if !matches!(ty, IrType::I32 | IrType::Ptr) {
                    push(Some(i), "store of unsized type".into());
                }
                expect(*value, *ty, "stored value", &mut push);
                expect(*addr, IrType::Ptr, "store address", &mut push);
            }
            Op::Gep { base, .. } => expect(*base, IrType::Ptr, "getelementptr base", &mut push),
            Op::Bin { op, lhs, rhs } => {
                expect(*lhs, IrType::I32, op.name(), &mut push);
                expect(*rhs, IrType::I32, op.name(), &mut push);
            }
            Op::Funnel { hi, lo, amount, .. } => {
                for v in [hi, lo, amount] {
                    expect(*v, IrType::I32, "funnel shift operand", &mut push);
                }
            }
        }
    }
    let end = f.body.insts.len();
    match (f.ret_ty, f.body.ret) {
        (IrType::Void, None) => {}
        (IrType::Void, Some(_)) => push(None, "ret with a value in a void function".into()),
        (ty, None) => push(None, format!("ret void in a function returning {ty}")),
        (ty, Some(v)) => {
            if let Some(t) = check_operand(end, v, &mut push) {
                if t != ty {
                    push(None, format!("type mismatch: returned {} is {t}, expected {ty}", label(v)));
                }
            }
        }
    }
}
