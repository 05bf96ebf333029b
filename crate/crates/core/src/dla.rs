//! Dynamical Lie algebras generated by Pauli strings.
//!
//! The commutator of two Pauli strings is zero or proportional to their
//! product, so the Lie closure of a set of strings is itself a set of
//! strings and its dimension is an exact count.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, ModelKind, ModelSpec};
use crate::pauli::PauliString;

/// Registers above this size are refused by default.
pub const DEFAULT_MAX_QUBITS: usize = 8;
/// Closure elements kept before giving up.
pub const DEFAULT_MAX_ELEMENTS: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DlaReport {
    /// Distinct generators after removing duplicates.
    pub generators: usize,
    pub closure_dimension: usize,
    pub predicted_dimension: Option<u128>,
    /// Frontier expansions performed.
    pub iterations: usize,
    pub saturated: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct ClosureLimits {
    pub max_qubits: usize,
    pub max_elements: usize,
}

impl Default for ClosureLimits {
    fn default() -> Self {
        Self {
            max_qubits: DEFAULT_MAX_QUBITS,
            max_elements: DEFAULT_MAX_ELEMENTS,
        }
    }
}

/// The closure as a list of strings, generators first.
#[derive(Clone, Debug)]
pub struct Closure {
    pub n_qubits: usize,
    pub elements: Vec<PauliString>,
    pub report: DlaReport,
}

pub fn lie_closure(generators: &[PauliString]) -> Result<DlaReport> {
    Ok(lie_closure_with(generators, ClosureLimits::default())?.report)
}

pub fn lie_closure_with(generators: &[PauliString], limits: ClosureLimits) -> Result<Closure> {
    let first = generators
        .first()
        .ok_or_else(|| Error::Argument("Lie closure needs at least one generator".into()))?;
    let n = first.n_qubits();
    if n > limits.max_qubits || n > 64 {
        return Err(Error::Capacity {
            what: "Lie closure qubits",
            requested: n,
            limit: limits.max_qubits.min(64),
        });
    }
    let mut seen: HashSet<(u64, u64)> = HashSet::new();
    let mut elems: Vec<(u64, u64)> = Vec::new();
    for g in generators {
        if g.n_qubits() != n {
            return Err(Error::Dimension {
                expected: n,
                found: g.n_qubits(),
            });
        }
        let m = g.masks().expect("register checked above");
        if seen.insert(m) {
            elems.push(m);
        }
    }
    let n_gens = elems.len();
    let anticommute = |a: (u64, u64), b: (u64, u64)| ((a.0 & b.1).count_ones() + (a.1 & b.0).count_ones()) % 2 == 1;

    let mut frontier_start = 0;
    let mut iterations = 0;
    while frontier_start < elems.len() {
        let frontier_end = elems.len();
        iterations += 1;
        for f in frontier_start..frontier_end {
            let a = elems[f];
            // Pairs inside the frontier are visited once; older elements were
            // already closed among themselves.
            let mut k = 0;
            while k < frontier_end {
                if k >= frontier_start && k < frontier_end && k <= f {
                    k += 1;
                    continue;
                }
                let b = elems[k];
                if anticommute(a, b) {
                    let c = (a.0 ^ b.0, a.1 ^ b.1);
                    if seen.insert(c) {
                        if elems.len() >= limits.max_elements {
                            return Err(Error::ClosureCapacity {
                                partial: elems.len(),
                                limit: limits.max_elements,
                            });
                        }
                        elems.push(c);
                    }
                }
                k += 1;
            }
        }
        frontier_start = frontier_end;
    }
    let elements = elems
        .iter()
        .map(|&(x, z)| PauliString::from_masks(n, x, z))
        .collect::<Result<Vec<_>>>()?;
    Ok(Closure {
        n_qubits: n,
        report: DlaReport {
            generators: n_gens,
            closure_dimension: elements.len(),
            predicted_dimension: None,
            iterations,
            saturated: true,
        },
        elements,
    })
}

/// Direct-sum dimension: GN `2^{2Nf} (4^{2NfL-2Nf} - 1)`, Thirring
/// `2^{Nf+1} (4^{2NfL-Nf-1} - 1)`. `None` on overflow.
pub fn predicted_dla_dimension(spec: &ModelSpec) -> Option<u128> {
    let (l, nf) = (spec.l as u32, spec.nf as u32);
    let n = 2u32.checked_mul(nf)?.checked_mul(l)?;
    let (copies_exp, block_exp) = match spec.model {
        ModelKind::GrossNeveu => (2 * nf, n.checked_sub(2 * nf)?),
        ModelKind::Thirring => (nf + 1, n.checked_sub(nf + 1)?),
    };
    let copies = 2u128.checked_pow(copies_exp)?;
    let block = 4u128.checked_pow(block_exp)?.checked_sub(1)?;
    copies.checked_mul(block)
}

/// The Hamiltonian's strings, identity excluded.
pub fn hamiltonian_generators(spec: &ModelSpec) -> Result<Vec<PauliString>> {
    Ok(build_hamiltonian(spec)?.without_identity().strings())
}

/// Closes the Hamiltonian's strings and compares with the predicted
/// dimension.
pub fn verify_dla(spec: &ModelSpec) -> Result<(bool, DlaReport)> {
    spec.validate()?;
    let gens = hamiltonian_generators(spec)?;
    let mut report = lie_closure(&gens)?;
    report.predicted_dimension = predicted_dla_dimension(spec);
    let ok = report.predicted_dimension == Some(report.closure_dimension as u128);
    Ok((ok, report))
}

/// Closure of the non-interacting model; requires `g = 0`.
pub fn free_theory_dla(spec: &ModelSpec) -> Result<DlaReport> {
    spec.validate()?;
    if spec.g != 0.0 {
        return Err(Error::Argument(format!("free theory requires g = 0, got {}", spec.g)));
    }
    lie_closure(&hamiltonian_generators(spec)?)
}
