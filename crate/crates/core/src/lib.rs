//! High-rate code surgery for quantum LDPC codes.
//!
//! Data codes and ancilla systems are chain complexes over GF(2). A surgery
//! diagram attaches an ancilla to a data code through two chain maps; the
//! merged code, its measured operator space and its dressed distance follow
//! from the diagram. The [`randomized`] module grows distance-preserving
//! ancillas under a degree cap and [`analysis`] turns the result into
//! memory-normalized space-time overheads.

pub mod analysis;
pub mod cli;
pub mod codes;
pub mod constructions;
pub mod f2core;
pub mod io;
pub mod randomized;
pub mod surgery;
