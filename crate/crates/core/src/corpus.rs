//! The shipped IR corpus and target description, embedded at build time.

pub const SBOX: &str = include_str!("../../../corpus/sbox.ll");
pub const SBOX_UNOPT: &str = include_str!("../../../corpus/sbox_unopt.ll");
pub const MADD: &str = include_str!("../../../corpus/madd.ll");
pub const SHLXOR: &str = include_str!("../../../corpus/shlxor.ll");
pub const ROTATE: &str = include_str!("../../../corpus/rotate.ll");
pub const LXR: &str = include_str!("../../../corpus/lxr.ll");
pub const LXR_DEP: &str = include_str!("../../../corpus/lxr_dep.ll");
pub const SH1ADD: &str = include_str!("../../../corpus/sh1add.ll");
pub const IDENTITY: &str = include_str!("../../../corpus/identity.ll");
pub const ASCON_LINEAR: &str = include_str!("../../../corpus/ascon_linear.ll");
pub const PRESSURE: &str = include_str!("../../../corpus/pressure.ll");

/// Every corpus file by name.
pub const ALL: &[(&str, &str)] = &[
    ("sbox.ll", SBOX),
    ("sbox_unopt.ll", SBOX_UNOPT),
    ("madd.ll", MADD),
    ("shlxor.ll", SHLXOR),
    ("rotate.ll", ROTATE),
    ("lxr.ll", LXR),
    ("lxr_dep.ll", LXR_DEP),
    ("sh1add.ll", SH1ADD),
    ("identity.ll", IDENTITY),
    ("ascon_linear.ll", ASCON_LINEAR),
    ("pressure.ll", PRESSURE),
];
