//! Direct evaluation of IR functions, the reference side of every
//! differential test.

use std::collections::HashMap;

use super::memory::{layout, symbol_map, Memory};
use super::SimError;
use crate::ir::{IrFunction, IrModule, Op, Value};

/// Runs `f` on `args` starting from `mem`. Returns the return value (if
/// any) and the final memory. Allocas are carved out of the stack region.
pub fn ir_interpret(m: &IrModule, f: &IrFunction, args: &[u32], mem: &Memory) -> Result<(Option<u32>, Memory), SimError> {
    if args.len() != f.params.len() {
        return Err(SimError::BadArguments { expected: f.params.len(), got: args.len() });
    }
    let mut mem = mem.clone();
    let globals: Vec<u32> = {
        let map = symbol_map(m);
        m.globals.iter().map(|g| map[&g.name]).collect()
    };
    let mut vals: HashMap<u32, u32> = HashMap::new();
    let mut sp = layout::STACK_TOP;

    let get = |vals: &HashMap<u32, u32>, v: Value| -> Result<u32, SimError> {
        match v {
            Value::Inst(id) => vals.get(&id.0).copied().ok_or(SimError::UndefinedValue),
            Value::Arg(i) => Ok(args[i as usize]),
            Value::Global(g) => Ok(globals[g.0 as usize]),
            Value::Const(c) => Ok(c as u32),
            Value::Poison => Err(SimError::UndefinedValue),
        }
    };
    let aligned = |a: u32| if a.is_multiple_of(4) { Ok(a) } else { Err(SimError::Misaligned { addr: a, pc: None }) };

    for inst in &f.body.insts {
        let result = match &inst.op {
            Op::Alloca { .. } => {
                sp -= 4;
                Some(sp)
            }
            Op::Load { addr, .. } => Some(mem.read_u32(aligned(get(&vals, *addr)?)?)),
            Op::Store { value, addr, .. } => {
                let v = get(&vals, *value)?;
                mem.write_u32(aligned(get(&vals, *addr)?)?, v);
                None
            }
            Op::Gep { base, offset } => Some(get(&vals, *base)?.wrapping_add(*offset as u32)),
            Op::Bin { op, lhs, rhs } => Some(op.eval(get(&vals, *lhs)?, get(&vals, *rhs)?)),
            Op::Funnel { kind, hi, lo, amount } => {
                Some(kind.eval(get(&vals, *hi)?, get(&vals, *lo)?, get(&vals, *amount)?))
            }
        };
        if let Some(r) = result {
            vals.insert(inst.id.0, r);
        }
    }
    let ret = f.body.ret.map(|v| get(&vals, v)).transpose()?;
    Ok((ret, mem))
}
