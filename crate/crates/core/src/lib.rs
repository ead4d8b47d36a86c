//! Variational preparation of critical quantum Rabi model ground states.
//!
//! The crate simulates a single bosonic mode coupled to a two-level system on
//! a truncated Fock space, prepares the ground state with a Hamiltonian
//! variational ansatz (alternating evolutions under `σ_z`, `a†a` and
//! `(a + a†)σ_x`), and analyzes the result through fidelities, Fock
//! distributions, quadrature squeezing and Wigner functions.
//!
//! Module map:
//!
//! - [`hilbert`]: truncated ladder operators, hybrid states, dense Hermitian
//!   eigendecomposition, spectral propagators, partial trace.
//! - [`model`]: the Rabi Hamiltonian, its generator decomposition, parity,
//!   the effective low-energy Hamiltonian and squeezed-state references.
//! - [`ansatz`]: compiled ansatz circuits with adjoint-mode gradients.
//! - [`vqe`]: layerwise warm-started quasi-Newton optimization.
//! - [`analysis`]: fidelity, Wigner grids, Fock statistics, quadrature
//!   statistics, power-law fits and per-block traces.
//! - [`experiment`]: configuration, orchestration and file output used by
//!   the `rabi-vqe` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod ansatz;
pub mod error;
pub mod experiment;
pub mod hilbert;
pub mod model;
pub mod optim;
pub mod vqe;

pub use error::{Error, Result};
pub use num_complex::Complex64;
