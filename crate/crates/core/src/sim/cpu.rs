use super::memory::{layout, Memory};
use super::SimError;
use crate::target::{decode, print_instr, ExtensionSet, MachineInstr, Reg, TargetDesc};

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimState {
    pub regs: [u32; 32],
    pub pc: u32,
    pub mem: Memory,
    pub halted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Effect {
    Reg(u8, u32),
    Mem(u32, u32),
    Jump(u32),
    None,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub pc: u32,
    pub word: u32,
    pub effect: Effect,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExecTrace {
    pub steps: Vec<TraceStep>,
}

impl ExecTrace {
    /// One `pc: asm` line per step, effects appended.
    pub fn render(&self, desc: &TargetDesc) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let asm = decode(s.word, desc, ExtensionSet::ALL)
                .map(|mi| print_instr(&mi, desc, true).replace('\t', " "))
                .unwrap_or_else(|| format!(".word {:#010x}", s.word));
            let eff = match s.effect {
                Effect::Reg(r, v) => format!("  # {} = {v:#x}", Reg::Phys(r)),
                Effect::Mem(a, v) => format!("  # [{a:#x}] = {v:#x}"),
                Effect::Jump(t) => format!("  # -> {t:#x}"),
                Effect::None => String::new(),
            };
            out.push_str(&format!("{:08x}: {asm}{eff}\n", s.pc));
        }
        out
    }
}

impl SimState {
    pub fn new(mem: Memory) -> Self {
        SimState { regs: [0; 32], pc: layout::TEXT_BASE, mem, halted: false }
    }
}

fn load32(mem: &Memory, addr: u32, pc: u32) -> Result<u32, SimError> {
    if !addr.is_multiple_of(4) {
        return Err(SimError::Misaligned { addr, pc: Some(pc) });
    }
    Ok(mem.read_u32(addr))
}

/// Executes one instruction. Every instruction of the shipped catalog is
/// understood regardless of which extensions the compiler had enabled.
pub fn step(s: &mut SimState, desc: &TargetDesc) -> Result<TraceStep, SimError> {
    let pc = s.pc;
    if !pc.is_multiple_of(4) {
        return Err(SimError::Misaligned { addr: pc, pc: Some(pc) });
    }
    let word = s.mem.read_u32(pc);
    let mi = decode(word, desc, ExtensionSet::ALL).ok_or(SimError::Undecodable { word, pc })?;
    let effect = execute(s, &mi, pc).map_err(|e| match e {
        SimError::Undecodable { .. } => SimError::Undecodable { word, pc },
        e => e,
    })?;
    s.regs[0] = 0;
    Ok(TraceStep { pc, word, effect })
}

fn execute(s: &mut SimState, mi: &MachineInstr, pc: u32) -> Result<Effect, SimError> {
    let reg = |i: usize| match mi.ops[i] {
        crate::target::MOperand::Reg(Reg::Phys(r)) => r,
        _ => 0,
    };
    let imm = |i: usize| mi.ops[i].imm().unwrap_or(0) as u32;
    let x = |s: &SimState, i: usize| s.regs[reg(i) as usize];
    let mut next = pc.wrapping_add(4);
    let effect = match mi.opcode.as_str() {
        "SW" => {
            let addr = x(s, 1).wrapping_add(imm(2));
            if addr % 4 != 0 {
                return Err(SimError::Misaligned { addr, pc: Some(pc) });
            }
            let v = x(s, 0);
            s.mem.write_u32(addr, v);
            Effect::Mem(addr, v)
        }
        "JALR" => {
            let target = x(s, 1).wrapping_add(imm(2)) & !1;
            let rd = reg(0);
            s.regs[rd as usize] = next;
            next = target;
            if target == layout::HALT {
                s.halted = true;
            }
            Effect::Jump(target)
        }
        op => {
            let a = || x(s, 1);
            let b = || x(s, 2);
            let v = match op {
                "LUI" => imm(1) << 12,
                "ADDI" => a().wrapping_add(imm(2)),
                "XORI" => a() ^ imm(2),
                "ORI" => a() | imm(2),
                "ANDI" => a() & imm(2),
                "SLLI" => a() << (imm(2) & 31),
                "SRLI" => a() >> (imm(2) & 31),
                "SRAI" => ((a() as i32) >> (imm(2) & 31)) as u32,
                "RORI" | "ROTI" => a().rotate_right(imm(2) & 31),
                "ADD" => a().wrapping_add(b()),
                "SUB" => a().wrapping_sub(b()),
                "SLL" => a() << (b() & 31),
                "SRL" => a() >> (b() & 31),
                "SRA" => ((a() as i32) >> (b() & 31)) as u32,
                "XOR" => a() ^ b(),
                "OR" => a() | b(),
                "AND" => a() & b(),
                "MUL" => a().wrapping_mul(b()),
                "SH1ADD" => (a() << 1).wrapping_add(b()),
                "SH2ADD" => (a() << 2).wrapping_add(b()),
                "SH3ADD" => (a() << 3).wrapping_add(b()),
                "ROR" => a().rotate_right(b() & 31),
                "MLA" => a().wrapping_mul(b()).wrapping_add(x(s, 3)),
                "NAXOR" => (!a() & b()) ^ x(s, 3),
                "SHLXOR" => (a() << 1) ^ b(),
                "LXR" => load32(&s.mem, a(), pc)? ^ load32(&s.mem, b(), pc)?,
                "LW" => load32(&s.mem, a().wrapping_add(imm(2)), pc)?,
                _ => return Err(SimError::Undecodable { word: 0, pc }),
            };
            let rd = reg(0);
            s.regs[rd as usize] = v;
            if rd == 0 {
                Effect::None
            } else {
                Effect::Reg(rd, v)
            }
        }
    };
    s.pc = next;
    Ok(effect)
}

/// Steps until halted or out of fuel.
pub fn run_program(s: &mut SimState, desc: &TargetDesc, fuel: u64, trace: &mut ExecTrace) -> Result<(), SimError> {
    let mut n = 0;
    while !s.halted {
        if n == fuel {
            return Err(SimError::FuelExhausted(fuel));
        }
        trace.steps.push(step(s, desc)?);
        n += 1;
    }
    Ok(())
}

/// Loads `program` at the text base, passes `args` in a0.., sets ra to the
/// halt address and runs. Returns a0 and the final memory.
pub fn run_function(program: &[u32], args: &[u32], mem: &Memory, fuel: u64) -> Result<(u32, Memory, ExecTrace), SimError> {
    if args.len() > 8 {
        return Err(SimError::TooManyArguments(args.len()));
    }
    let mut s = SimState::new(mem.clone());
    for (i, w) in program.iter().enumerate() {
        s.mem.write_u32(layout::TEXT_BASE + 4 * i as u32, *w);
    }
    s.regs[1] = layout::HALT;
    s.regs[2] = layout::STACK_TOP;
    for (i, a) in args.iter().enumerate() {
        s.regs[10 + i] = *a;
    }
    let mut trace = ExecTrace::default();
    run_program(&mut s, TargetDesc::shipped(), fuel, &mut trace)?;
    // Drop the program text so memories compare against the IR interpreter.
    for i in 0..program.len() {
        s.mem.write_u32(layout::TEXT_BASE + 4 * i as u32, 0);
    }
    Ok((s.regs[10], s.mem, trace))
}
