//! Desk-scale toolkit for lattice phi^4 quantum simulation costing.
//!
//! The crate builds the interacting scalar-field Hamiltonian on small
//! periodic lattices in two bases (occupation number and field amplitude),
//! verifies LCU block encodings and Trotter product formulas against dense
//! linear algebra, and assembles end-to-end fault-tolerant gate and qubit
//! budgets for scattering phase estimation.
//!
//! Everything dense lives behind [`dense::CMatrix`]; nothing here needs a
//! quantum simulator. Closed-form resource tallies and their dense-matrix
//! witnesses are kept side by side so each can check the other.

pub mod amp;
pub mod arith;
pub mod budget;
pub mod dense;
pub mod dynamics;
pub mod encoding;
pub mod error;
pub mod lattice;
pub mod lcu;
pub mod occ;
pub mod pauli;
pub mod scattering;

pub use error::{Error, Result};
