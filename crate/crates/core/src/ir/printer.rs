use std::fmt::Write;

use super::types::*;

pub fn print_module(m: &IrModule) -> String {
    let mut out = String::new();
    if !m.source_name.is_empty() {
        let _ = writeln!(out, "source_filename = \"{}\"", m.source_name);
        out.push('\n');
    }
    for g in &m.globals {
        let _ = writeln!(out, "@{} = global {} {}", g.name, g.ty, g.init);
    }
    if !m.globals.is_empty() {
        out.push('\n');
    }
    for (i, f) in m.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&print_function(m, f));
    }
    out
}

pub fn value_str(m: &IrModule, f: &IrFunction, v: Value) -> String {
    match v {
        Value::Inst(id) => match f.inst(id).and_then(|i| i.name.as_deref()) {
            Some(n) => format!("%{n}"),
            None => format!("%<deleted {}>", id.0),
        },
        Value::Arg(i) => format!("%{}", f.params[i as usize].name),
        Value::Global(g) => format!("@{}", m.global(g).name),
        Value::Const(c) => c.to_string(),
        Value::Poison => "poison".into(),
    }
}

pub fn print_function(m: &IrModule, f: &IrFunction) -> String {
    let mut out = String::new();
    let params: Vec<String> = f.params.iter().map(|p| format!("{} %{}", p.ty, p.name)).collect();
    let _ = write!(out, "define {} @{}({})", f.ret_ty, f.name, params.join(", "));
    for a in &f.attrs {
        let _ = write!(out, " {a}");
    }
    out.push_str(" {\n");
    let _ = writeln!(out, "{}:", f.body.label);
    for inst in &f.body.insts {
        let _ = writeln!(out, "  {}", print_inst(m, f, inst));
    }
    match f.body.ret {
        Some(v) => {
            let _ = writeln!(out, "  ret {} {}", f.ret_ty, value_str(m, f, v));
        }
        None => out.push_str("  ret void\n"),
    }
    out.push_str("}\n");
    out
}

pub fn print_inst(m: &IrModule, f: &IrFunction, inst: &Inst) -> String {
    let v = |x: Value| value_str(m, f, x);
    let body = match &inst.op {
        Op::Alloca { ty } => format!("alloca {ty}"),
        Op::Load { ty, addr } => format!("load {ty}, ptr {}", v(*addr)),
        Op::Store { ty, value, addr } => format!("store {ty} {}, ptr {}", v(*value), v(*addr)),
        Op::Gep { base, offset } => format!("getelementptr inbounds i8, ptr {}, i32 {offset}", v(*base)),
        Op::Bin { op, lhs, rhs } => format!("{} i32 {}, {}", op.name(), v(*lhs), v(*rhs)),
        Op::Funnel { kind, hi, lo, amount } => format!(
            "call i32 @{}(i32 {}, i32 {}, i32 {})",
            kind.intrinsic(),
            v(*hi),
            v(*lo),
            v(*amount)
        ),
    };
    match &inst.name {
        Some(n) => format!("%{n} = {body}"),
        None => body,
    }
}
