//! Linear-scan allocation over SSA virtual registers.
//!
//! Positions: instruction `i` reads its operands at `2i` and writes its
//! result at `2i + 1`, so a value whose last use is in the instruction that
//! defines another can share its register.

use std::collections::{BTreeMap, HashMap};

use super::MachineFunction;
use crate::target::{reg_number, MOperand, MachineInstr, Reg, TargetDesc, A0, SP};

/// a0–a7, t0–t6, s1–s11.
pub fn allocation_order() -> Vec<u8> {
    let names = [
        "a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "t0", "t1", "t2", "t3", "t4", "t5", "t6", "s1", "s2", "s3",
        "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11",
    ];
    names.iter().map(|n| reg_number(n).expect("ABI name")).collect()
}

/// Registers kept out of the pool once anything spills, to reload into.
fn scratch() -> [u8; 3] {
    ["t4", "t5", "t6"].map(|n| reg_number(n).expect("ABI name"))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AllocStats {
    pub spilled: usize,
    pub copies_removed: usize,
}

#[derive(Clone, Debug)]
struct Interval {
    vreg: u32,
    start: i64,
    end: i64,
    /// Read positions, ascending.
    uses: Vec<i64>,
    hint: Option<u8>,
}

fn defs_and_uses(mi: &MachineInstr, desc: &TargetDesc) -> (Option<Reg>, Vec<Reg>) {
    let defines = desc.instr(&mi.opcode).is_some_and(|d| d.defines_reg());
    let mut regs = mi.ops.iter().filter_map(MOperand::reg);
    if defines {
        let d = regs.next();
        (d, regs.collect())
    } else {
        (None, regs.collect())
    }
}

fn is_copy(mi: &MachineInstr) -> Option<(Reg, Reg)> {
    match mi.ops.as_slice() {
        [MOperand::Reg(d), MOperand::Reg(s), MOperand::Imm(0)] if mi.opcode == "ADDI" => Some((*d, *s)),
        _ => None,
    }
}

fn intervals(mf: &MachineFunction, desc: &TargetDesc) -> Vec<Interval> {
    let mut by_vreg: BTreeMap<u32, Interval> = BTreeMap::new();
    for (i, mi) in mf.instrs.iter().enumerate() {
        let (d, uses) = defs_and_uses(mi, desc);
        let pos = 2 * i as i64;
        for u in uses {
            if let Reg::Virt(v) = u {
                let iv = by_vreg.get_mut(&v).expect("use of an undefined virtual register");
                iv.end = pos;
                iv.uses.push(pos);
            }
        }
        if let Some(Reg::Virt(v)) = d {
            by_vreg.insert(v, Interval { vreg: v, start: pos + 1, end: pos + 1, uses: Vec::new(), hint: None });
        }
        // Copies to and from fixed registers suggest where a value wants to be.
        if let Some((dst, src)) = is_copy(mi) {
            match (dst, src) {
                (Reg::Virt(v), Reg::Phys(p)) | (Reg::Phys(p), Reg::Virt(v)) => {
                    if let Some(iv) = by_vreg.get_mut(&v) {
                        iv.hint.get_or_insert(p);
                    }
                }
                _ => {}
            }
        }
    }
    let mut out: Vec<Interval> = by_vreg.into_values().collect();
    out.sort_by_key(|iv| (iv.start, iv.vreg));
    out
}

/// Live ranges of physical registers the code names directly: incoming
/// arguments and the return value.
fn fixed_ranges(mf: &MachineFunction, desc: &TargetDesc, pool: &[u8]) -> HashMap<u8, Vec<(i64, i64)>> {
    let mut ranges: HashMap<u8, Vec<(i64, i64)>> = HashMap::new();
    let mut open: HashMap<u8, (i64, i64)> = HashMap::new();
    for i in 0..mf.num_params.min(8) {
        open.insert(A0 + i as u8, (-1, -1));
    }
    let last = 2 * mf.instrs.len() as i64;
    for (i, mi) in mf.instrs.iter().enumerate() {
        let (d, uses) = defs_and_uses(mi, desc);
        let pos = 2 * i as i64;
        for u in uses {
            if let Reg::Phys(p) = u {
                if let Some(r) = open.get_mut(&p) {
                    r.1 = pos;
                }
            }
        }
        if let Some(Reg::Phys(p)) = d {
            if pool.contains(&p) {
                if let Some(r) = open.insert(p, (pos + 1, pos + 1)) {
                    ranges.entry(p).or_default().push(r);
                }
            }
        }
    }
    // A register written and then never read here is read by the caller:
    // a0 carries the return value through the final `ret`.
    for (p, (s, e)) in open {
        let e = if s >= 0 && e == s { last } else { e };
        ranges.entry(p).or_default().push((s, e));
    }
    ranges
}

fn overlaps(a: (i64, i64), b: (i64, i64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// Runs linear scan over `pool`. Returns the assignment and the spilled
/// virtual registers.
fn scan(ivs: &[Interval], fixed: &HashMap<u8, Vec<(i64, i64)>>, pool: &[u8]) -> (HashMap<u32, u8>, Vec<u32>) {
    let mut assign: HashMap<u32, u8> = HashMap::new();
    let mut spilled = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let free_of_fixed =
        |p: u8, iv: &Interval| fixed.get(&p).is_none_or(|rs| rs.iter().all(|&r| !overlaps(r, (iv.start, iv.end))));
    let next_use = |iv: &Interval, after: i64| iv.uses.iter().copied().find(|&u| u >= after).unwrap_or(i64::MAX);
    for (k, iv) in ivs.iter().enumerate() {
        active.retain(|&a| ivs[a].end >= iv.start);
        let taken: Vec<u8> = active.iter().filter_map(|a| assign.get(&ivs[*a].vreg).copied()).collect();
        let ok = |p: u8| !taken.contains(&p) && free_of_fixed(p, iv);
        let choice = iv.hint.filter(|&h| pool.contains(&h) && ok(h)).or_else(|| pool.iter().copied().find(|&p| ok(p)));
        if let Some(p) = choice {
            assign.insert(iv.vreg, p);
            active.push(k);
            continue;
        }
        // Out of registers: evict whichever candidate is needed furthest in
        // the future, among active intervals whose register this one could
        // take.
        let victim = active
            .iter()
            .copied()
            .filter(|&a| assign.get(&ivs[a].vreg).is_some_and(|&p| free_of_fixed(p, iv)))
            .max_by_key(|&a| (next_use(&ivs[a], iv.start), ivs[a].vreg));
        match victim {
            Some(a) if next_use(&ivs[a], iv.start) > next_use(iv, iv.start) => {
                let p = assign.remove(&ivs[a].vreg).expect("active intervals are assigned");
                spilled.push(ivs[a].vreg);
                active.retain(|&x| x != a);
                assign.insert(iv.vreg, p);
                active.push(k);
            }
            _ => spilled.push(iv.vreg),
        }
    }
    (assign, spilled)
}

/// Assigns physical registers to every virtual register, spilling to
/// sp-relative slots past the allocas when the pool runs out, and removes
/// copies that became moves of a register onto itself.
pub fn allocate_registers(mf: &mut MachineFunction, desc: &TargetDesc) -> AllocStats {
    let ivs = intervals(mf, desc);
    let full = allocation_order();
    let fixed = fixed_ranges(mf, desc, &full);
    let (mut assign, mut spilled) = scan(&ivs, &fixed, &full);
    if !spilled.is_empty() {
        let pool: Vec<u8> = full.iter().copied().filter(|p| !scratch().contains(p)).collect();
        (assign, spilled) = scan(&ivs, &fixed, &pool);
    }
    let mut stats = AllocStats { spilled: spilled.len(), copies_removed: 0 };

    let mut slots: HashMap<u32, i32> = HashMap::new();
    for v in &spilled {
        slots.insert(*v, mf.frame_size as i32);
        mf.frame_size += 4;
    }
    let [s0, s1, s2] = scratch();
    let sp = Reg::Phys(SP);
    let mut out = Vec::with_capacity(mf.instrs.len());
    for mi in std::mem::take(&mut mf.instrs) {
        let (d, _) = defs_and_uses(&mi, desc);
        let mut mi = mi;
        let mut reloads: Vec<(u32, u8)> = Vec::new();
        let mut store_after = None;
        for (i, op) in mi.ops.iter_mut().enumerate() {
            let MOperand::Reg(Reg::Virt(v)) = *op else { continue };
            let is_def = i == 0 && d == Some(Reg::Virt(v));
            let p = match assign.get(&v) {
                Some(&p) => p,
                None if is_def => {
                    store_after = Some((s0, slots[&v]));
                    s0
                }
                None => match reloads.iter().find(|(r, _)| *r == v) {
                    Some(&(_, p)) => p,
                    None => {
                        let p = [s0, s1, s2][reloads.len()];
                        reloads.push((v, p));
                        p
                    }
                },
            };
            *op = MOperand::Reg(Reg::Phys(p));
        }
        for (v, p) in reloads {
            out.push(MachineInstr::rri("LW", Reg::Phys(p), sp, slots[&v]));
        }
        match is_copy(&mi) {
            Some((dst, src)) if dst == src => stats.copies_removed += 1,
            _ => out.push(mi),
        }
        if let Some((p, off)) = store_after {
            out.push(MachineInstr::new("SW", vec![MOperand::Reg(Reg::Phys(p)), MOperand::Reg(sp), MOperand::Imm(off)]));
        }
    }
    mf.instrs = out;
    stats
}
