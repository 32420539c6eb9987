use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use crate::ir::{IrFunction, IrModule, IrType};

/// Where code, data and stacks live in the simulated address space. Both
/// the IR interpreter and the machine simulator use the same layout so that
/// their final memories can be compared directly.
pub mod layout {
    pub const TEXT_BASE: u32 = 0x0001_0000;
    /// Globals are packed here, one word each, in declaration order.
    pub const DATA_BASE: u32 = 0x0010_0000;
    /// Buffers that pointer arguments point into, `ARG_STRIDE` apart.
    pub const ARG_BASE: u32 = 0x0020_0000;
    pub const ARG_STRIDE: u32 = 0x1000;
    /// Stack region; excluded from memory comparisons because spill slots and
    /// IR allocas are implementation details.
    pub const STACK_LIMIT: u32 = 0x7ff0_0000;
    pub const STACK_TOP: u32 = 0x7fff_fff0;
    /// Return address that stops the simulator when jumped to.
    pub const HALT: u32 = 0xDEAD_0000;
}

/// Sparse little-endian byte memory. Unwritten bytes read as zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Memory {
    bytes: HashMap<u32, u8>,
}

impl Memory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn read_u8(&self, addr: u32) -> u8 {
        self.bytes.get(&addr).copied().unwrap_or(0)
    }

    pub fn write_u8(&mut self, addr: u32, v: u8) {
        self.bytes.insert(addr, v);
    }

    pub fn read_u32(&self, addr: u32) -> u32 {
        u32::from_le_bytes(std::array::from_fn(|i| self.read_u8(addr.wrapping_add(i as u32))))
    }

    pub fn write_u32(&mut self, addr: u32, v: u32) {
        for (i, b) in v.to_le_bytes().into_iter().enumerate() {
            self.write_u8(addr.wrapping_add(i as u32), b);
        }
    }

    pub fn write_bytes(&mut self, addr: u32, data: &[u8]) {
        for (i, &b) in data.iter().enumerate() {
            self.write_u8(addr.wrapping_add(i as u32), b);
        }
    }

    /// Non-zero bytes outside the stack region, in address order. Two runs
    /// agree on observable memory iff their snapshots are equal.
    pub fn snapshot(&self) -> BTreeMap<u32, u8> {
        self.bytes
            .iter()
            .filter(|(&a, &v)| v != 0 && !(layout::STACK_LIMIT..=layout::STACK_TOP + 16).contains(&a))
            .map(|(&a, &v)| (a, v))
            .collect()
    }
}

/// Addresses of a module's globals under the standard layout.
pub fn symbol_map(m: &IrModule) -> BTreeMap<String, u32> {
    m.globals
        .iter()
        .enumerate()
        .map(|(i, g)| (g.name.clone(), layout::DATA_BASE + 4 * i as u32))
        .collect()
}

/// Memory holding every global's initializer.
pub fn initial_memory(m: &IrModule) -> Memory {
    let mut mem = Memory::new();
    for (i, g) in m.globals.iter().enumerate() {
        mem.write_u32(layout::DATA_BASE + 4 * i as u32, g.init as u32);
    }
    mem
}

/// Random arguments and starting memory for `f`: globals get random
/// contents, each pointer argument points at its own buffer of 64 random
/// words and integer arguments are random.
pub fn random_inputs<R: Rng + ?Sized>(m: &IrModule, f: &IrFunction, rng: &mut R) -> (Vec<u32>, Memory) {
    let mut mem = Memory::new();
    for i in 0..m.globals.len() {
        mem.write_u32(layout::DATA_BASE + 4 * i as u32, rng.gen());
    }
    let args = f
        .params
        .iter()
        .enumerate()
        .map(|(i, p)| match p.ty {
            IrType::Ptr => {
                let base = layout::ARG_BASE + i as u32 * layout::ARG_STRIDE;
                for w in 0..64 {
                    mem.write_u32(base + 4 * w, rng.gen());
                }
                base
            }
            _ => rng.gen(),
        })
        .collect();
    (args, mem)
}
