//! Exact dense simulation of quantum codewords.
//!
//! A logical qubit `|z⟩` together with an `n`-qubit ancilla `|a⟩` is mapped by a
//! unitary encoding matrix `E` onto `n + 1` physical qubits. Errors drawn from
//! the span of the code's standard errors (coherent superpositions, mixtures,
//! or a physical qubit entangled with an environment) are undone by applying
//! `E†` without ever learning the syndrome.
//!
//! Modules:
//! - [`hilbert`]: dense states, operators, density matrices, Schmidt cuts, Haar sampling.
//! - [`codes`]: code specifications, encoding matrices, codeword structure checks.
//! - [`errors`]: coherent, mixed and environment-entangling corruptions.
//! - [`recovery`]: decoding-based and syndrome-transfer recovery.
//! - [`constraints`]: gauge transformations, constraint vectors and constraint operators.
//! - [`spec_file`]: the text format code specifications are exchanged in.

pub mod codes;
pub mod constraints;
pub mod error;
pub mod errors;
pub mod hilbert;
pub mod recovery;
pub mod spec_file;

pub use error::{Error, Result};
pub use hilbert::{DenseOperator, DensityMatrix, FactorizationReport, StateVector, C64};
