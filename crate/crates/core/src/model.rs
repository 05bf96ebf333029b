//! Multi-flavor Thirring and Gross–Neveu lattice Hamiltonians.
//!
//! With `c_{n,f,k}` the component-`k` mode of flavor `f` on site `n`, open
//! boundaries and lattice spacing 1:
//!
//! ```text
//! H_kin  = -(i/2) Σ_{n,f} [ c†_{n,0} c_{n+1,1} + c†_{n,1} c_{n+1,0}
//!                          - c†_{n+1,0} c_{n,1} - c†_{n+1,1} c_{n,0} ]
//! H_mass = m Σ_{n,f} (n_{n,f,0} - n_{n,f,1})
//! H_GN   = -g Σ_n [ Σ_f (n_{n,f,0} - n_{n,f,1}) ]²
//! H_Th   =  g Σ_n ( [ Σ_f (n_{n,f,0} + n_{n,f,1}) ]²
//!                 - [ Σ_f (c†_{n,f,0} c_{n,f,1} + c†_{n,f,1} c_{n,f,0}) ]² )
//! ```
//!
//! Squares are expanded into ordered quartic products before the
//! Jordan–Wigner map, so fermionic term counts are exact closed forms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{jordan_wigner_sum, FermionTerm, Layout, ModeIndex};
use crate::pauli::{PauliSum, MAX_QUBITS};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "thirring")]
    Thirring,
    #[serde(rename = "gn", alias = "gross-neveu", alias = "grossneveu")]
    GrossNeveu,
}

impl ModelKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::Thirring => "thirring",
            ModelKind::GrossNeveu => "gn",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "thirring" => Ok(ModelKind::Thirring),
            "gn" | "gross-neveu" | "grossneveu" => Ok(ModelKind::GrossNeveu),
            other => Err(Error::Spec(format!("unknown model {other:?}"))),
        }
    }
}

/// A fully specified lattice model. Boundaries are always open.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: ModelKind,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "Nf")]
    pub nf: usize,
    pub m: f64,
    pub g: f64,
}

impl ModelSpec {
    pub fn new(model: ModelKind, l: usize, nf: usize, m: f64, g: f64) -> Result<Self> {
        let s = Self { model, l, nf, m, g };
        s.validate()?;
        Ok(s)
    }

    pub fn gn(l: usize, nf: usize, m: f64, g: f64) -> Result<Self> {
        Self::new(ModelKind::GrossNeveu, l, nf, m, g)
    }

    pub fn thirring(l: usize, nf: usize, m: f64, g: f64) -> Result<Self> {
        Self::new(ModelKind::Thirring, l, nf, m, g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::Spec("L must be at least 1".into()));
        }
        if self.nf == 0 {
            return Err(Error::Spec("Nf must be at least 1".into()));
        }
        if !self.m.is_finite() || !self.g.is_finite() {
            return Err(Error::Spec("m and g must be finite".into()));
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.nf * self.l
    }

    pub fn layout(&self) -> Layout {
        Layout {
            sites: self.l,
            flavors: self.nf,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }
}

/// Closed-form or measured term statistics.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermCountReport {
    pub fermionic_terms: usize,
    pub pauli_terms_excluding_identity: usize,
    pub pauli_terms_including_identity: usize,
    pub max_weight: usize,
}

fn mode(n: usize, f: usize, k: usize) -> ModeIndex {
    ModeIndex::new(n, f, k)
}

/// Nearest-neighbour kinetic terms, `4 Nf (L-1)` of them.
pub fn build_kinetic(spec: &ModelSpec) -> Result<Vec<FermionTerm>> {
    spec.validate()?;
    let minus = Complex64::new(0.0, -0.5);
    let plus = Complex64::new(0.0, 0.5);
    let mut out = Vec::with_capacity(4 * spec.nf * (spec.l - 1));
    for n in 0..spec.l - 1 {
        for f in 0..spec.nf {
            out.push(FermionTerm::hop(minus, mode(n, f, 0), mode(n + 1, f, 1)));
            out.push(FermionTerm::hop(minus, mode(n, f, 1), mode(n + 1, f, 0)));
            out.push(FermionTerm::hop(plus, mode(n + 1, f, 0), mode(n, f, 1)));
            out.push(FermionTerm::hop(plus, mode(n + 1, f, 1), mode(n, f, 0)));
        }
    }
    Ok(out)
}

/// On-site mass terms, `2 Nf L` of them.
pub fn build_mass(spec: &ModelSpec) -> Result<Vec<FermionTerm>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(2 * spec.nf * spec.l);
    for n in 0..spec.l {
        for f in 0..spec.nf {
            out.push(FermionTerm::number(spec.m, mode(n, f, 0)));
            out.push(FermionTerm::number(-spec.m, mode(n, f, 1)));
        }
    }
    Ok(out)
}

/// Four-fermion interaction: `4 L Nf²` terms for Gross–Neveu, `8 L Nf²` for
/// Thirring.
pub fn build_interaction(spec: &ModelSpec) -> Result<Vec<FermionTerm>> {
    spec.validate()?;
    let g = spec.g;
    let sign = |k: usize| if k == 0 { 1.0 } else { -1.0 };
    let mut out = Vec::new();
    for n in 0..spec.l {
        for a in 0..spec.nf {
            for b in 0..spec.nf {
                for ka in 0..2 {
                    for kb in 0..2 {
                        let (ma, mb) = (mode(n, a, ka), mode(n, b, kb));
                        match spec.model {
                            ModelKind::GrossNeveu => {
                                let c = -g * sign(ka) * sign(kb);
                                out.push(FermionTerm::quartic(c, ma, ma, mb, mb));
                            }
                            ModelKind::Thirring => {
                                out.push(FermionTerm::quartic(g, ma, ma, mb, mb));
                            }
                        }
                    }
                }
            }
        }
        if spec.model == ModelKind::Thirring {
            for a in 0..spec.nf {
                for b in 0..spec.nf {
                    for ka in 0..2 {
                        for kb in 0..2 {
                            out.push(FermionTerm::quartic(
                                -g,
                                mode(n, a, ka),
                                mode(n, a, 1 - ka),
                                mode(n, b, kb),
                                mode(n, b, 1 - kb),
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// All fermionic terms: kinetic, mass, interaction.
pub fn build_fermion_terms(spec: &ModelSpec) -> Result<Vec<FermionTerm>> {
    let mut terms = build_kinetic(spec)?;
    terms.extend(build_mass(spec)?);
    terms.extend(build_interaction(spec)?);
    Ok(terms)
}

/// The Jordan–Wigner Hamiltonian on `2 Nf L` qubits.
pub fn build_hamiltonian(spec: &ModelSpec) -> Result<PauliSum> {
    build_hamiltonian_with_capacity(spec, MAX_QUBITS)
}

pub fn build_hamiltonian_with_capacity(spec: &ModelSpec, max_qubits: usize) -> Result<PauliSum> {
    spec.validate()?;
    if spec.n_qubits() > max_qubits {
        return Err(Error::Capacity {
            what: "Hamiltonian register",
            requested: spec.n_qubits(),
            limit: max_qubits,
        });
    }
    jordan_wigner_sum(&build_fermion_terms(spec)?, &spec.layout())
}

/// Closed-form counts for generic nonzero `m` and `g`.
pub fn term_counts(spec: &ModelSpec) -> Result<TermCountReport> {
    spec.validate()?;
    let (l, nf) = (spec.l, spec.nf);
    let (fermionic, pauli) = match spec.model {
        ModelKind::GrossNeveu => (
            6 * nf * l + 4 * l * nf * nf - 4 * nf,
            5 * nf * l + 2 * l * nf * nf - 4 * nf,
        ),
        ModelKind::Thirring => (
            6 * nf * l + 8 * l * nf * nf - 4 * nf,
            3 * nf * l + 4 * l * nf * nf - 4 * nf,
        ),
    };
    let max_weight = if l >= 2 {
        2 * nf + 2
    } else {
        match spec.model {
            ModelKind::Thirring if nf >= 2 => 4,
            _ => 2,
        }
    };
    Ok(TermCountReport {
        fermionic_terms: fermionic,
        pauli_terms_excluding_identity: pauli,
        pauli_terms_including_identity: pauli + 1,
        max_weight,
    })
}

/// Counts measured on the built objects.
pub fn measured_term_counts(spec: &ModelSpec) -> Result<TermCountReport> {
    let fermionic = build_fermion_terms(spec)?.len();
    let h = build_hamiltonian(spec)?;
    let excl = h.without_identity().len();
    Ok(TermCountReport {
        fermionic_terms: fermionic,
        pauli_terms_excluding_identity: excl,
        pauli_terms_including_identity: h.len(),
        max_weight: h.max_weight(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;

    fn gn(l: usize, nf: usize) -> ModelSpec {
        ModelSpec::gn(l, nf, 0.5, 0.2).unwrap()
    }

    fn th(l: usize, nf: usize) -> ModelSpec {
        ModelSpec::thirring(l, nf, 0.5, 0.2).unwrap()
    }

    #[test]
    fn kinetic_counts() {
        assert_eq!(build_kinetic(&gn(2, 2)).unwrap().len(), 8);
        assert_eq!(build_kinetic(&gn(2, 1)).unwrap().len(), 4);
        assert_eq!(build_kinetic(&gn(10, 2)).unwrap().len(), 72);
    }

    #[test]
    fn kinetic_string_weights() {
        // Hops 0 -> 1 between neighbouring sites span 2Nf+2 qubits, hops
        // 1 -> 0 span 2Nf; half the strings have each weight.
        let spec = ModelSpec::gn(10, 2, 0.0, 0.0).unwrap();
        let h = jordan_wigner_sum(&build_kinetic(&spec).unwrap(), &spec.layout()).unwrap();
        assert_eq!(h.len(), 72);
        let heavy = h.iter().filter(|(p, _)| p.weight() == 6).count();
        let light = h.iter().filter(|(p, _)| p.weight() == 4).count();
        assert_eq!((heavy, light), (36, 36));
        assert_eq!(h.max_weight(), 6);
    }

    #[test]
    fn appendix_kinetic_layout() {
        // L=2, Nf=2: flavor-0 hop from (site 0, comp 0) = q0 to (site 1, comp 1) = q5.
        let spec = ModelSpec::gn(2, 2, 0.0, 0.0).unwrap();
        let h = jordan_wigner_sum(&build_kinetic(&spec).unwrap(), &spec.layout()).unwrap();
        let xy = PauliString::from_label("XZZZZYII").unwrap();
        let yx = PauliString::from_label("YZZZZXII").unwrap();
        // -(i/2)(c†0 c5 - c†5 c0) = (X0 Z.. Y5 - Y0 Z.. X5)/4 with these signs.
        assert!((h.coefficient(&xy).abs() - 0.25).abs() < 1e-15);
        assert!((h.coefficient(&xy) + h.coefficient(&yx)).abs() < 1e-15);
    }

    #[test]
    fn mass_terms() {
        let spec = ModelSpec::gn(2, 2, 0.5, 0.2).unwrap();
        let mass = build_mass(&spec).unwrap();
        assert_eq!(mass.len(), 8);
        assert_eq!(build_mass(&gn(3, 1)).unwrap().len(), 6);
        let h = jordan_wigner_sum(&mass, &spec.layout()).unwrap();
        // m(n0 - n1) = m(Z1 - Z0)/2 per flavor and site; constants cancel.
        assert_eq!(h.len(), 8);
        assert_eq!(h.coefficient(&PauliString::from_label("ZIIIIIII").unwrap()), -0.25);
        assert_eq!(h.coefficient(&PauliString::from_label("IZIIIIII").unwrap()), 0.25);
        let zero = ModelSpec::gn(2, 2, 0.0, 0.2).unwrap();
        assert!(jordan_wigner_sum(&build_mass(&zero).unwrap(), &zero.layout())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn interaction_counts() {
        assert_eq!(build_interaction(&gn(2, 2)).unwrap().len(), 32);
        assert_eq!(build_interaction(&th(2, 2)).unwrap().len(), 64);
    }

    #[test]
    fn single_site_gn_is_diagonal() {
        let spec = gn(1, 1);
        let h = jordan_wigner_sum(&build_interaction(&spec).unwrap(), &spec.layout()).unwrap();
        assert!(h.iter().all(|(p, _)| p.is_diagonal()));
        // -g (n0 - n1)^2 on the occupation basis |00>,|10>,|01>,|11> (qubit 0 first bit).
        let d = h.to_dense().unwrap();
        let occ = |b: usize, q: usize| (b >> q & 1) as f64;
        for b in 0..4 {
            let v = -0.2 * (occ(b, 0) - occ(b, 1)).powi(2);
            assert!((d[(b, b)].re - v).abs() < 1e-15);
        }
    }

    #[test]
    fn table_counts_match_closed_forms() {
        let cases = [
            (gn(10, 2), 272, 173),
            (gn(20, 2), 0, 353),
            (gn(40, 2), 0, 713),
            (gn(100, 2), 2792, 1793),
            (gn(10, 4), 0, 505),
            (gn(10, 6), 0, 997),
            (gn(10, 8), 0, 1649),
            (th(10, 2), 0, 213),
            (th(20, 2), 0, 433),
            (th(40, 2), 0, 873),
            (th(100, 2), 0, 2193),
            (th(10, 4), 0, 745),
            (th(10, 6), 0, 1597),
            (th(10, 8), 5568, 2769),
        ];
        for (spec, fermionic, pauli) in cases {
            let closed = term_counts(&spec).unwrap();
            let measured = measured_term_counts(&spec).unwrap();
            assert_eq!(closed, measured, "{spec:?}");
            assert_eq!(measured.pauli_terms_including_identity, pauli, "{spec:?}");
            if fermionic > 0 {
                assert_eq!(measured.fermionic_terms, fermionic);
            }
        }
    }

    #[test]
    fn small_lattices_match_closed_forms() {
        for l in 1..=4 {
            for nf in 1..=3 {
                for spec in [gn(l, nf), th(l, nf)] {
                    assert_eq!(term_counts(&spec).unwrap(), measured_term_counts(&spec).unwrap(), "{spec:?}");
                }
            }
        }
    }

    #[test]
    fn capacity_guard() {
        assert!(matches!(
            build_hamiltonian_with_capacity(&gn(4, 2), 12),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn spec_json() {
        let s = ModelSpec::from_json(r#"{"model": "gn", "L": 4, "Nf": 2, "m": 0.5, "g": 0.2}"#).unwrap();
        assert_eq!(s, gn(4, 2));
        let back: ModelSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(ModelSpec::from_json(r#"{"model": "qcd", "L": 4, "Nf": 2, "m": 0.5, "g": 0.2}"#).is_err());
        assert!(ModelSpec::from_json(r#"{"model": "gn", "L": 0, "Nf": 2, "m": 0.5, "g": 0.2}"#).is_err());
        assert!(ModelSpec::from_json("{").is_err());
    }

    fn apply(h: &PauliSum, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        h.apply(v, &mut out).unwrap();
        out
    }

    #[test]
    fn hermitian_and_number_conserving() {
        for spec in [gn(2, 2), th(2, 2), gn(3, 1), th(3, 2)] {
            let h = build_hamiltonian(&spec).unwrap();
            let n = spec.n_qubits();
            let dim = 1usize << n;
            // Dense Hermiticity on the smaller registers.
            if n <= 8 {
                let d = h.to_dense().unwrap();
                let diff = (&d - d.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
                assert!(diff < 1e-14);
            }
            // [H, N] = 0: H maps each particle-number sector into itself.
            for b in (0..dim).step_by(7) {
                let mut e = vec![Complex64::new(0.0, 0.0); dim];
                e[b] = Complex64::new(1.0, 0.0);
                let he = apply(&h, &e);
                for (k, v) in he.iter().enumerate() {
                    if v.norm() > 1e-14 {
                        assert_eq!((k as u64).count_ones(), (b as u64).count_ones());
                    }
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn closed_form_scaling(l in 2usize..=64, nf in 2usize..=64, thirring in any::<bool>()) {
                let spec = if thirring { th(l, nf) } else { gn(l, nf) };
                let c = term_counts(&spec).unwrap();
                let ratio = c.pauli_terms_including_identity as f64 / (l * nf * nf) as f64;
                prop_assert!((1.0..=6.0).contains(&ratio));
                prop_assert!(c.max_weight <= 2 * nf + 2);
            }

            #[test]
            fn built_max_weight_is_2nf_plus_2(l in 2usize..=6, nf in 1usize..=3, thirring in any::<bool>()) {
                let spec = if thirring { th(l, nf) } else { gn(l, nf) };
                prop_assert_eq!(build_hamiltonian(&spec).unwrap().max_weight(), 2 * nf + 2);
            }
        }
    }
}
