//! Fermion condensate observables.
//!
//! The local condensate at site `i` is `𝒩_i = Σ_f (n_{i,f,0} - n_{i,f,1})`.
//! It is diagonal in the occupation basis, so correlators are computed from
//! the basis-state probabilities in a single pass.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{jordan_wigner_sum, FermionTerm, ModeIndex};
use crate::model::ModelSpec;
use crate::pauli::PauliSum;
use crate::statevector::StateVector;

/// `𝒩_i` as a qubit operator.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteCondensateOperator {
    pub site: usize,
    pub operator: PauliSum,
}

fn check_site(i: usize, spec: &ModelSpec) -> Result<()> {
    if i >= spec.l {
        return Err(Error::Index(format!("site {i} outside lattice of {} sites", spec.l)));
    }
    Ok(())
}

pub fn site_operator(i: usize, spec: &ModelSpec) -> Result<SiteCondensateOperator> {
    spec.validate()?;
    check_site(i, spec)?;
    let terms: Vec<FermionTerm> = (0..spec.nf)
        .flat_map(|f| {
            [
                FermionTerm::number(1.0, ModeIndex::new(i, f, 0)),
                FermionTerm::number(-1.0, ModeIndex::new(i, f, 1)),
            ]
        })
        .collect();
    Ok(SiteCondensateOperator {
        site: i,
        operator: jordan_wigner_sum(&terms, &spec.layout())?,
    })
}

/// Qubit masks of the component-0 and component-1 modes at each site.
fn site_masks(spec: &ModelSpec) -> Result<Vec<(usize, usize)>> {
    let layout = spec.layout();
    (0..spec.l)
        .map(|i| {
            let mut m0 = 0usize;
            let mut m1 = 0usize;
            for f in 0..spec.nf {
                m0 |= 1 << layout.qubit_index(ModeIndex::new(i, f, 0))?;
                m1 |= 1 << layout.qubit_index(ModeIndex::new(i, f, 1))?;
            }
            Ok((m0, m1))
        })
        .collect()
}

fn check_state(psi: &StateVector, spec: &ModelSpec) -> Result<()> {
    spec.validate()?;
    if psi.n_qubits() != spec.n_qubits() {
        return Err(Error::Dimension {
            expected: spec.n_qubits(),
            found: psi.n_qubits(),
        });
    }
    Ok(())
}

/// All connected correlators `C(i,j) = ⟨𝒩_i𝒩_j⟩ - ⟨𝒩_i⟩⟨𝒩_j⟩` as an
/// `L × L` matrix.
pub fn correlator_matrix(psi: &StateVector, spec: &ModelSpec) -> Result<DMatrix<f64>> {
    check_state(psi, spec)?;
    let masks = site_masks(spec)?;
    let l = spec.l;
    let norm: f64 = psi.amplitudes().iter().map(Complex64::norm_sqr).sum();
    let mut mean = vec![0.0; l];
    let mut second = DMatrix::<f64>::zeros(l, l);
    let mut vals = vec![0.0; l];
    for (b, a) in psi.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for (v, &(m0, m1)) in vals.iter_mut().zip(&masks) {
            *v = (b & m0).count_ones() as f64 - (b & m1).count_ones() as f64;
        }
        for i in 0..l {
            mean[i] += p * vals[i];
            for j in i..l {
                second[(i, j)] += p * vals[i] * vals[j];
            }
        }
    }
    let mut c = DMatrix::zeros(l, l);
    for i in 0..l {
        for j in i..l {
            let v = second[(i, j)] / norm - mean[i] * mean[j] / (norm * norm);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

pub fn connected_correlator(psi: &StateVector, i: usize, j: usize, spec: &ModelSpec) -> Result<f64> {
    check_site(i, spec)?;
    check_site(j, spec)?;
    Ok(correlator_matrix(psi, spec)?[(i.min(j), i.max(j))])
}

fn average_at(c: &DMatrix<f64>, r: usize) -> f64 {
    let l = c.nrows();
    (0..l - r).map(|i| c[(i, i + r)]).sum::<f64>() / (l - r) as f64
}

/// `C(r) = (1/(L-r)) Σ_{i<L-r} C(i, i+r)`.
pub fn averaged_correlator(psi: &StateVector, r: usize, spec: &ModelSpec) -> Result<f64> {
    check_r(r, spec)?;
    Ok(average_at(&correlator_matrix(psi, spec)?, r))
}

fn check_r(r: usize, spec: &ModelSpec) -> Result<()> {
    if r >= spec.l {
        return Err(Error::Index(format!("distance {r} outside 0..{}", spec.l)));
    }
    Ok(())
}

/// `C(r) / C(0)`; errors when `C(0)` vanishes.
pub fn normalized_correlator(psi: &StateVector, r: usize, spec: &ModelSpec) -> Result<f64> {
    check_r(r, spec)?;
    let c = correlator_matrix(psi, spec)?;
    let c0 = average_at(&c, 0);
    if c0.abs() <= 1e-14 {
        return Err(Error::Argument("C(0) vanishes; the state has no condensate fluctuations".into()));
    }
    Ok(average_at(&c, r) / c0)
}

/// One row of a correlator profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorPoint {
    pub r: usize,
    pub raw: f64,
    /// `|C(r)/C(0)|`, zero when `C(0)` vanishes.
    pub normalized: f64,
}

/// `C(r)` for `r = 0..L-1`.
pub fn correlator_profile(psi: &StateVector, spec: &ModelSpec) -> Result<Vec<CorrelatorPoint>> {
    let c = correlator_matrix(psi, spec)?;
    let c0 = average_at(&c, 0);
    Ok((0..spec.l)
        .map(|r| {
            let raw = average_at(&c, r);
            let normalized = if c0.abs() > 1e-14 { (raw / c0).abs() } else { 0.0 };
            CorrelatorPoint { r, raw, normalized }
        })
        .collect())
}

pub fn profile_csv(points: &[CorrelatorPoint]) -> String {
    let mut s = String::from("r,C_raw,C_normalized\n");
    for p in points {
        s.push_str(&format!("{},{:.15e},{:.15e}\n", p.r, p.raw, p.normalized));
    }
    s
}
