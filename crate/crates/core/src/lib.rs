//! A miniature RV32 compiler backend with custom cryptography instructions.
//!
//! The pipeline is IR text → [`ir`] → [`midend`] passes → [`isel`] selection
//! DAG → [`codegen`] register allocation and emission, with [`target`]
//! holding the data-driven instruction catalog, [`sim`] executing both IR
//! and machine code, and [`testkit`] providing the lit/FileCheck harness.

pub mod codegen;
pub mod corpus;
pub mod driver;
pub mod ir;
pub mod isel;
pub mod midend;
pub mod sim;
pub mod target;
pub mod testkit;
