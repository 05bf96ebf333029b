//! Lattice Thirring and Gross–Neveu models on qubits.
//!
//! The crate builds Jordan–Wigner Hamiltonians for multi-flavor four-fermion
//! lattice models, solves them exactly, prepares ground states with adaptive
//! variational imaginary-time evolution, measures condensate correlators,
//! computes dynamical Lie algebras and estimates simulation resources.

pub mod avqite;
pub mod dla;
pub mod error;
pub mod exact;
pub mod fermion;
pub mod model;
pub mod observables;
pub mod pauli;
pub mod resources;
pub mod statevector;

pub use avqite::{AnsatzState, AvqiteConfig, AvqiteResult, OperatorPool, PoolKind};
pub use error::{Error, Result};
pub use exact::{ground_state, SolverConfig, SolverMethod, SpectrumResult};
pub use fermion::{FermionTerm, Ladder, Layout, ModeIndex};
pub use model::{ModelKind, ModelSpec, TermCountReport};
pub use pauli::{Pauli, PauliOperator, PauliString, PauliSum};
pub use statevector::{CompiledOperator, ParitySector, StateVector};
