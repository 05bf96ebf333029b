//! Flavored lattice fermion modes and the Jordan–Wigner map.
//!
//! Modes are ordered site-major, then flavor, then spinor component, so
//! qubit `q = 2*Nf*site + 2*flavor + component`. Qubit value 1 means the
//! mode is occupied and
//!
//! ```text
//! c_q  = Z_0 ... Z_{q-1} (X_q + i Y_q) / 2
//! c†_q = Z_0 ... Z_{q-1} (X_q - i Y_q) / 2
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliOperator, PauliString, PauliSum, DEFAULT_PRUNE_TOL};

/// Largest imaginary residue tolerated when folding a fermionic sum into a
/// real Pauli sum.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// One fermionic mode `(site, flavor, component)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub site: usize,
    pub flavor: usize,
    pub component: usize,
}

impl ModeIndex {
    pub fn new(site: usize, flavor: usize, component: usize) -> Self {
        Self {
            site,
            flavor,
            component,
        }
    }
}

/// Lattice shape: `sites` sites, each with `flavors` two-component spinors.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub sites: usize,
    pub flavors: usize,
}

impl Layout {
    pub fn new(sites: usize, flavors: usize) -> Result<Self> {
        if sites == 0 || flavors == 0 {
            return Err(Error::Argument(format!(
                "layout needs at least one site and one flavor, got ({sites}, {flavors})"
            )));
        }
        Ok(Self { sites, flavors })
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.flavors * self.sites
    }

    pub fn qubit_index(&self, m: ModeIndex) -> Result<usize> {
        if m.site >= self.sites || m.flavor >= self.flavors || m.component > 1 {
            return Err(Error::Index(format!(
                "mode (site {}, flavor {}, component {}) outside a {}-site, {}-flavor lattice",
                m.site, m.flavor, m.component, self.sites, self.flavors
            )));
        }
        Ok(2 * self.flavors * m.site + 2 * m.flavor + m.component)
    }

    /// Inverse of [`Layout::qubit_index`].
    pub fn mode(&self, q: usize) -> Result<ModeIndex> {
        if q >= self.n_qubits() {
            return Err(Error::Index(format!(
                "qubit {q} outside {}-qubit register",
                self.n_qubits()
            )));
        }
        let per_site = 2 * self.flavors;
        Ok(ModeIndex::new(q / per_site, (q % per_site) / 2, q % 2))
    }
}

/// Qubit index of a mode for a lattice with `nf` flavors (sites unbounded).
pub fn qubit_index(m: ModeIndex, nf: usize) -> Result<usize> {
    if nf == 0 || m.flavor >= nf || m.component > 1 {
        return Err(Error::Index(format!(
            "mode (flavor {}, component {}) invalid for Nf = {nf}",
            m.flavor, m.component
        )));
    }
    Ok(2 * nf * m.site + 2 * m.flavor + m.component)
}

/// A creation (`dagger = true`) or annihilation operator.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ladder {
    pub mode: ModeIndex,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(mode: ModeIndex) -> Self {
        Self { mode, dagger: true }
    }

    pub fn annihilate(mode: ModeIndex) -> Self {
        Self { mode, dagger: false }
    }
}

/// `coefficient * f_1 f_2 ... f_k`, acting right to left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FermionTerm {
    pub coefficient: Complex64,
    pub factors: Vec<Ladder>,
}

impl FermionTerm {
    pub fn new(coefficient: Complex64, factors: Vec<Ladder>) -> Self {
        Self {
            coefficient,
            factors,
        }
    }

    /// `coefficient * c†_a c_b`.
    pub fn hop(coefficient: Complex64, a: ModeIndex, b: ModeIndex) -> Self {
        Self::new(coefficient, vec![Ladder::create(a), Ladder::annihilate(b)])
    }

    /// `coefficient * n_a`.
    pub fn number(coefficient: f64, a: ModeIndex) -> Self {
        Self::hop(Complex64::new(coefficient, 0.0), a, a)
    }

    /// `coefficient * c†_a c_b c†_c c_d`.
    pub fn quartic(coefficient: f64, a: ModeIndex, b: ModeIndex, c: ModeIndex, d: ModeIndex) -> Self {
        Self::new(
            Complex64::new(coefficient, 0.0),
            vec![
                Ladder::create(a),
                Ladder::annihilate(b),
                Ladder::create(c),
                Ladder::annihilate(d),
            ],
        )
    }
}

/// Jordan–Wigner image of a single ladder operator on qubit `q`.
pub fn ladder_operator(q: usize, dagger: bool, n_qubits: usize) -> Result<PauliOperator> {
    if q >= n_qubits {
        return Err(Error::Index(format!(
            "qubit {q} outside {n_qubits}-qubit register"
        )));
    }
    let tail: Vec<(usize, Pauli)> = (0..q).map(|k| (k, Pauli::Z)).collect();
    let with = |p: Pauli| {
        let mut ops = tail.clone();
        ops.push((q, p));
        PauliString::from_ops(n_qubits, &ops)
    };
    let half = Complex64::new(0.5, 0.0);
    let y = if dagger {
        Complex64::new(0.0, -0.5)
    } else {
        Complex64::new(0.0, 0.5)
    };
    let mut op = PauliOperator::new(n_qubits)?;
    op.add_term(half, &with(Pauli::X)?);
    op.add_term(y, &with(Pauli::Y)?);
    Ok(op)
}

/// Jordan–Wigner image of a product of ladder operators given by qubit index.
pub fn jordan_wigner_qubits(
    coefficient: Complex64,
    factors: &[(usize, bool)],
    n_qubits: usize,
) -> Result<PauliOperator> {
    let mut acc = PauliOperator::identity(n_qubits, coefficient)?;
    for &(q, dagger) in factors {
        acc = acc.multiply(&ladder_operator(q, dagger, n_qubits)?);
        acc.prune(DEFAULT_PRUNE_TOL * 1e-3);
    }
    acc.prune(DEFAULT_PRUNE_TOL);
    Ok(acc)
}

/// Jordan–Wigner image of one term. The result is generally complex; use
/// [`jordan_wigner_sum`] for Hermitian combinations.
pub fn jordan_wigner(t: &FermionTerm, layout: &Layout) -> Result<PauliOperator> {
    let factors = t
        .factors
        .iter()
        .map(|f| Ok((layout.qubit_index(f.mode)?, f.dagger)))
        .collect::<Result<Vec<_>>>()?;
    jordan_wigner_qubits(t.coefficient, &factors, layout.n_qubits())
}

/// Maps and merges a Hermitian list of terms into a real Pauli sum.
pub fn jordan_wigner_sum(terms: &[FermionTerm], layout: &Layout) -> Result<PauliSum> {
    let mut acc = PauliOperator::new(layout.n_qubits())?;
    for t in terms {
        acc.add_assign(&jordan_wigner(t, layout)?);
    }
    acc.into_hermitian(DEFAULT_PRUNE_TOL, HERMITIAN_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_abs(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Independent oracle: ladder operators built directly on the occupation
    /// basis, with sign (-1)^{number of occupied modes below q}.
    fn occupation_annihilator(q: usize, n: usize) -> DMatrix<Complex64> {
        let dim = 1usize << n;
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            if b >> q & 1 == 1 {
                let below = (b & ((1 << q) - 1)).count_ones();
                let sign = if below.is_multiple_of(2) { 1.0 } else { -1.0 };
                m[(b ^ (1 << q), b)] = c(sign, 0.0);
            }
        }
        m
    }

    fn dense(op: &PauliOperator) -> DMatrix<Complex64> {
        op.to_dense_with_limit(8).unwrap()
    }

    #[test]
    fn qubit_index_examples() {
        assert_eq!(qubit_index(ModeIndex::new(0, 0, 0), 2).unwrap(), 0);
        assert_eq!(qubit_index(ModeIndex::new(1, 0, 0), 2).unwrap(), 4);
        assert_eq!(qubit_index(ModeIndex::new(0, 0, 1), 1).unwrap(), 1);
        let lay = Layout::new(2, 2).unwrap();
        let second: Vec<usize> = (0..2)
            .flat_map(|f| (0..2).map(move |k| ModeIndex::new(1, f, k)))
            .map(|m| lay.qubit_index(m).unwrap())
            .collect();
        assert_eq!(second, vec![4, 5, 6, 7]);
        assert!(lay.qubit_index(ModeIndex::new(2, 0, 0)).is_err());
        assert!(lay.qubit_index(ModeIndex::new(0, 2, 0)).is_err());
        assert!(qubit_index(ModeIndex::new(0, 0, 2), 1).is_err());
    }

    #[test]
    fn layout_round_trip() {
        let lay = Layout::new(3, 2).unwrap();
        for q in 0..lay.n_qubits() {
            assert_eq!(lay.qubit_index(lay.mode(q).unwrap()).unwrap(), q);
        }
    }

    #[test]
    fn ladder_matches_occupation_oracle() {
        for n in 1..=4 {
            for q in 0..n {
                let jw = dense(&ladder_operator(q, false, n).unwrap());
                assert!(max_abs(&(jw - occupation_annihilator(q, n))) < 1e-15);
            }
        }
    }

    #[test]
    fn number_operator() {
        let lay = Layout::new(1, 1).unwrap();
        let h = jordan_wigner_sum(&[FermionTerm::number(1.0, ModeIndex::new(0, 0, 0))], &lay).unwrap();
        let want = PauliSum::from_terms(
            2,
            [
                (0.5, PauliString::identity(2).unwrap()),
                (-0.5, PauliString::from_label("ZI").unwrap()),
            ],
        )
        .unwrap();
        assert_eq!(h, want);
    }

    #[test]
    fn adjacent_hopping() {
        let lay = Layout::new(1, 1).unwrap();
        let (a, b) = (ModeIndex::new(0, 0, 0), ModeIndex::new(0, 0, 1));
        let h = jordan_wigner_sum(&[FermionTerm::hop(c(1.0, 0.0), a, b), FermionTerm::hop(c(1.0, 0.0), b, a)], &lay)
            .unwrap();
        let want = PauliSum::from_terms(
            2,
            [
                (0.5, PauliString::from_label("XX").unwrap()),
                (0.5, PauliString::from_label("YY").unwrap()),
            ],
        )
        .unwrap();
        assert_eq!(h, want);
    }

    #[test]
    fn hopping_with_string() {
        let lay = Layout::new(2, 1).unwrap();
        let (a, b) = (ModeIndex::new(0, 0, 0), ModeIndex::new(1, 0, 0));
        let h = jordan_wigner_sum(&[FermionTerm::hop(c(1.0, 0.0), a, b), FermionTerm::hop(c(1.0, 0.0), b, a)], &lay)
            .unwrap();
        let want = PauliSum::from_terms(
            4,
            [
                (0.5, PauliString::from_label("XZXI").unwrap()),
                (0.5, PauliString::from_label("YZYI").unwrap()),
            ],
        )
        .unwrap();
        assert_eq!(h, want);
    }

    #[test]
    fn non_hermitian_sum_is_rejected() {
        let lay = Layout::new(1, 1).unwrap();
        let t = FermionTerm::hop(c(1.0, 0.0), ModeIndex::new(0, 0, 0), ModeIndex::new(0, 0, 1));
        assert!(matches!(jordan_wigner_sum(&[t], &lay), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn mode_outside_register() {
        let lay = Layout::new(1, 1).unwrap();
        let t = FermionTerm::number(1.0, ModeIndex::new(3, 0, 0));
        assert!(matches!(jordan_wigner(&t, &lay), Err(Error::Index(_))));
        assert!(ladder_operator(5, true, 3).is_err());
    }

    #[test]
    fn canonical_anticommutation_up_to_six_modes() {
        let n = 6;
        let id = DMatrix::<Complex64>::identity(1 << n, 1 << n);
        let ann: Vec<_> = (0..n).map(|q| dense(&ladder_operator(q, false, n).unwrap())).collect();
        let cre: Vec<_> = (0..n).map(|q| dense(&ladder_operator(q, true, n).unwrap())).collect();
        for p in 0..n {
            assert!(max_abs(&(cre[p].adjoint() - &ann[p])) < 1e-15);
            for q in 0..n {
                let cc = &ann[p] * &ann[q] + &ann[q] * &ann[p];
                assert!(max_abs(&cc) < 1e-14);
                let cd = &ann[p] * &cre[q] + &cre[q] * &ann[p];
                let want = if p == q { id.clone() } else { DMatrix::zeros(1 << n, 1 << n) };
                assert!(max_abs(&(cd - want)) < 1e-14);
            }
        }
    }

    #[test]
    fn number_operator_is_projector() {
        let op = jordan_wigner_qubits(c(1.0, 0.0), &[(2, true), (2, false)], 4).unwrap();
        let m = dense(&op);
        assert!(max_abs(&(&m * &m - &m)) < 1e-15);
        for k in 0..16 {
            let v = m[(k, k)].re;
            assert!(v.abs() < 1e-15 || (v - 1.0).abs() < 1e-15);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn linear_in_coefficient(re in -3.0f64..3.0, im in -3.0f64..3.0, k in -2.0f64..2.0, p in 0usize..4, q in 0usize..4) {
                let base = jordan_wigner_qubits(c(re, im), &[(p, true), (q, false)], 4).unwrap();
                let scaled = jordan_wigner_qubits(c(re, im) * k, &[(p, true), (q, false)], 4).unwrap();
                let d = dense(&base) * c(k, 0.0) - dense(&scaled);
                prop_assert!(max_abs(&d) < 1e-13);
            }

            #[test]
            fn products_match_occupation_oracle(ops in proptest::collection::vec((0usize..4, any::<bool>()), 1..5)) {
                let jw = dense(&jordan_wigner_qubits(c(1.0, 0.0), &ops, 4).unwrap());
                let mut want = DMatrix::<Complex64>::identity(16, 16);
                for &(q, dag) in &ops {
                    let a = occupation_annihilator(q, 4);
                    want *= if dag { a.adjoint() } else { a };
                }
                prop_assert!(max_abs(&(jw - want)) < 1e-14);
            }
        }
    }
}
