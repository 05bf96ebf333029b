//! Bit-packed Pauli strings and real-weighted Pauli sums.
//!
//! A string on `n` qubits is stored symplectically in 64-bit words: bit `q`
//! of the X words marks an X component on qubit `q`, bit `q` of the Z words a
//! Z component, and a qubit with both bits set carries Y. The operator is
//! `i^phase * P_0 ⊗ P_1 ⊗ ...` with each `P_q` one of the Hermitian matrices
//! I, X, Y, Z. Registers up to 64 qubits keep their words inline.
//!
//! Basis convention: computational basis index `b` has qubit `q` equal to
//! bit `q` of `b`. Textual labels put qubit 0 leftmost.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

/// Largest register a Pauli string may act on.
pub const MAX_QUBITS: usize = 1 << 16;

/// Absolute tolerance below which summed coefficients are dropped.
pub const DEFAULT_PRUNE_TOL: f64 = 1e-12;

/// Largest register materialized densely unless a caller overrides it.
pub const DEFAULT_DENSE_LIMIT: usize = 14;

/// Largest register for statevector kernels.
pub const MAX_STATE_QUBITS: usize = 30;

pub(crate) type Words = SmallVec<[u64; 1]>;

/// Single-qubit Pauli label.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// `i^k` for `k` taken mod 4.
#[inline]
pub fn i_pow(k: u32) -> Complex64 {
    match k & 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[inline]
fn n_words(n: usize) -> usize {
    n.div_ceil(64)
}

#[inline]
fn zero_words(n: usize) -> Words {
    smallvec![0; n_words(n)]
}

#[inline]
fn and_count(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(u, v)| (u & v).count_ones()).sum()
}

#[inline]
fn xor_words(a: &[u64], b: &[u64]) -> Words {
    a.iter().zip(b).map(|(u, v)| u ^ v).collect()
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Argument(format!(
            "register size must be in 1..={MAX_QUBITS}, got {n}"
        )));
    }
    Ok(())
}

/// An n-qubit Pauli string with a phase in {+1, +i, -1, -i}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_qubits: u32,
    x: Words,
    z: Words,
    /// Exponent of `i`, mod 4.
    phase: u8,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_n(n_qubits)?;
        Ok(Self {
            n_qubits: n_qubits as u32,
            x: zero_words(n_qubits),
            z: zero_words(n_qubits),
            phase: 0,
        })
    }

    /// Builds a string on at most 64 qubits from raw masks.
    pub fn from_masks(n_qubits: usize, x_mask: u64, z_mask: u64) -> Result<Self> {
        if n_qubits > 64 {
            return Err(Error::Argument(format!(
                "single-word masks cover at most 64 qubits, got {n_qubits}"
            )));
        }
        Self::from_words(n_qubits, &[x_mask], &[z_mask])
    }

    /// Builds a string from little-endian mask words.
    pub fn from_words(n_qubits: usize, x: &[u64], z: &[u64]) -> Result<Self> {
        check_n(n_qubits)?;
        let w = n_words(n_qubits);
        if x.len() != w || z.len() != w {
            return Err(Error::Dimension {
                expected: w,
                found: x.len().min(z.len()),
            });
        }
        let rem = n_qubits % 64;
        if rem != 0 {
            let high = !((1u64 << rem) - 1);
            if x[w - 1] & high != 0 || z[w - 1] & high != 0 {
                return Err(Error::Index(format!(
                    "mask has bits beyond qubit {}",
                    n_qubits - 1
                )));
            }
        }
        Ok(Self {
            n_qubits: n_qubits as u32,
            x: x.iter().copied().collect(),
            z: z.iter().copied().collect(),
            phase: 0,
        })
    }

    /// A single Pauli on qubit `q`.
    pub fn single(n_qubits: usize, q: usize, p: Pauli) -> Result<Self> {
        Self::from_ops(n_qubits, &[(q, p)])
    }

    /// Product of single-qubit Paulis on distinct qubits.
    pub fn from_ops(n_qubits: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity(n_qubits)?;
        for &(q, p) in ops {
            if q >= n_qubits {
                return Err(Error::Index(format!(
                    "qubit {q} outside {n_qubits}-qubit register"
                )));
            }
            if s.get(q) != Pauli::I {
                return Err(Error::Argument(format!("qubit {q} given twice")));
            }
            let (x, z) = p.bits();
            let bit = 1u64 << (q % 64);
            if x {
                s.x[q / 64] |= bit;
            }
            if z {
                s.z[q / 64] |= bit;
            }
        }
        Ok(s)
    }

    /// Parses a label such as `"XIZY"` (qubit 0 leftmost).
    pub fn from_label(label: &str) -> Result<Self> {
        let n = label.chars().count();
        check_n(n)?;
        let mut ops = Vec::with_capacity(n);
        for (q, c) in label.chars().enumerate() {
            let p = Pauli::from_char(c)
                .ok_or_else(|| Error::Argument(format!("bad Pauli character {c:?}")))?;
            if p != Pauli::I {
                ops.push((q, p));
            }
        }
        Self::from_ops(n, &ops)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits as usize
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    /// `(x_mask, z_mask)` as single words, available up to 64 qubits.
    pub fn masks(&self) -> Option<(u64, u64)> {
        (self.n_qubits <= 64).then(|| (self.x[0], self.z[0]))
    }

    /// Phase as an exponent of `i` in 0..4.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn phase_factor(&self) -> Complex64 {
        i_pow(self.phase as u32)
    }

    /// Same masks with phase reset to +1.
    pub fn canonical(&self) -> Self {
        self.with_phase(0)
    }

    pub fn with_phase(&self, phase: u8) -> Self {
        Self {
            phase: phase & 3,
            ..self.clone()
        }
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    /// Qubits with a non-identity factor, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n_qubits()).filter(|&q| self.get(q) != Pauli::I).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    /// True when only I and Z factors appear.
    pub fn is_diagonal(&self) -> bool {
        self.x.iter().all(|&w| w == 0)
    }

    /// Number of Y factors.
    pub fn y_count(&self) -> usize {
        and_count(&self.x, &self.z) as usize
    }

    /// Number of X or Y factors.
    pub fn x_count(&self) -> usize {
        self.x.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn get(&self, q: usize) -> Pauli {
        let bit = 1u64 << (q % 64);
        Pauli::from_bits(self.x[q / 64] & bit != 0, self.z[q / 64] & bit != 0)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits as usize,
                found: other.n_qubits as usize,
            });
        }
        Ok(())
    }

    /// Operator product `self * other`, phase included.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.mul_unchecked(other))
    }

    /// Each Hermitian factor is `i^{x z} X^x Z^z`; moving `Z^{z1}` past
    /// `X^{x2}` costs `(-1)^{z1 x2}`.
    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let x = xor_words(&self.x, &other.x);
        let z = xor_words(&self.z, &other.z);
        let k = self.phase as u32
            + other.phase as u32
            + and_count(&self.x, &self.z)
            + and_count(&other.x, &other.z)
            + 2 * and_count(&self.z, &other.x)
            + 3 * and_count(&x, &z);
        Self {
            n_qubits: self.n_qubits,
            x,
            z,
            phase: (k & 3) as u8,
        }
    }

    /// True iff the strings commute (symplectic form vanishes mod 2).
    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check_same(other)?;
        Ok(self.commutes_unchecked(other))
    }

    #[inline]
    pub(crate) fn commutes_unchecked(&self, other: &Self) -> bool {
        (and_count(&self.x, &other.z) + and_count(&self.z, &other.x)) & 1 == 0
    }

    fn state_masks(&self) -> Result<(usize, usize)> {
        if self.n_qubits() > MAX_STATE_QUBITS {
            return Err(Error::Capacity {
                what: "statevector register",
                requested: self.n_qubits(),
                limit: MAX_STATE_QUBITS,
            });
        }
        Ok((self.x[0] as usize, self.z[0] as usize))
    }

    /// Amplitude factor picked up by basis state `b`: `P|b> = factor(b) |b ^ x>`.
    /// Only meaningful for registers of at most 64 qubits.
    #[inline]
    pub fn basis_factor(&self, b: u64) -> Complex64 {
        let k = self.phase as u32
            + (self.x[0] & self.z[0]).count_ones()
            + 2 * (self.z[0] & b).count_ones();
        i_pow(k)
    }

    /// `out = P * input` on a dense statevector.
    pub fn apply(&self, input: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let (x, z) = self.state_masks()?;
        let dim = 1usize << self.n_qubits;
        if input.len() != dim || out.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: input.len().min(out.len()),
            });
        }
        let base = i_pow(self.phase as u32 + (x & z).count_ones());
        let neg = -base;
        for (b, &amp) in input.iter().enumerate() {
            let f = if (b & z).count_ones() & 1 == 0 { base } else { neg };
            out[b ^ x] = f * amp;
        }
        Ok(())
    }

    /// Dense `2^n x 2^n` matrix.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.to_dense_with_limit(DEFAULT_DENSE_LIMIT)
    }

    pub fn to_dense_with_limit(&self, limit: usize) -> Result<DMatrix<Complex64>> {
        let n = self.n_qubits();
        if n > limit {
            return Err(Error::Capacity {
                what: "dense Pauli string",
                requested: n,
                limit,
            });
        }
        let dim = 1usize << n;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for b in 0..dim {
            m[((b as u64 ^ self.x[0]) as usize, b)] = self.basis_factor(b as u64);
        }
        Ok(m)
    }

    /// Label over {I,X,Y,Z}, qubit 0 leftmost, phase omitted.
    pub fn label(&self) -> String {
        (0..self.n_qubits()).map(|q| self.get(q).as_char()).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}{}", self.label())
    }
}

type Key = (Words, Words);

fn key_of(p: &PauliString) -> Key {
    (p.x.clone(), p.z.clone())
}

fn string_of(n: usize, k: &Key) -> PauliString {
    PauliString {
        n_qubits: n as u32,
        x: k.0.clone(),
        z: k.1.clone(),
        phase: 0,
    }
}

fn dense_accumulate<'a, I>(n: usize, limit: usize, what: &'static str, terms: I) -> Result<DMatrix<Complex64>>
where
    I: Iterator<Item = (PauliString, Complex64)> + 'a,
{
    if n > limit {
        return Err(Error::Capacity {
            what,
            requested: n,
            limit,
        });
    }
    let dim = 1usize << n;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (p, c) in terms {
        let x = p.x[0];
        for b in 0..dim {
            let r = (b as u64 ^ x) as usize;
            m[(r, b)] += p.basis_factor(b as u64) * c;
        }
    }
    Ok(m)
}

/// Real-weighted sum of phase-free Pauli strings (a Hermitian operator).
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<Key, f64>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Result<Self> {
        check_n(n_qubits)?;
        Ok(Self {
            n_qubits,
            terms: BTreeMap::new(),
        })
    }

    /// Sums `(coefficient, string)` pairs and prunes at the default tolerance.
    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, PauliString)>,
    {
        let mut s = Self::new(n_qubits)?;
        for (c, p) in terms {
            s.add_term(c, &p)?;
        }
        s.prune(DEFAULT_PRUNE_TOL);
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `coeff * p`. A phase of -1 flips the sign; a phase of ±i would
    /// make the term anti-Hermitian and is rejected.
    pub fn add_term(&mut self, coeff: f64, p: &PauliString) -> Result<()> {
        if p.n_qubits() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: p.n_qubits(),
            });
        }
        let c = match p.phase() {
            0 => coeff,
            2 => -coeff,
            _ => return Err(Error::NotHermitian(coeff.abs())),
        };
        *self.terms.entry(key_of(p)).or_insert(0.0) += c;
        Ok(())
    }

    /// Drops entries with `|c| <= tol`.
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, c| c.abs() > tol);
    }

    pub fn coefficient(&self, p: &PauliString) -> f64 {
        self.terms.get(&key_of(p)).copied().unwrap_or(0.0)
    }

    pub fn identity_coefficient(&self) -> f64 {
        let z = zero_words(self.n_qubits);
        self.terms.get(&(z.clone(), z)).copied().unwrap_or(0.0)
    }

    pub fn contains_identity(&self) -> bool {
        let z = zero_words(self.n_qubits);
        self.terms.contains_key(&(z.clone(), z))
    }

    /// Terms in canonical mask order.
    pub fn iter(&self) -> impl Iterator<Item = (PauliString, f64)> + '_ {
        let n = self.n_qubits;
        self.terms.iter().map(move |(k, &c)| (string_of(n, k), c))
    }

    pub fn strings(&self) -> Vec<PauliString> {
        self.iter().map(|(p, _)| p).collect()
    }

    /// Copy with the identity term removed.
    pub fn without_identity(&self) -> Self {
        let mut s = self.clone();
        let z = zero_words(self.n_qubits);
        s.terms.remove(&(z.clone(), z));
        s
    }

    /// Σ|c| over all stored terms, identity included.
    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    pub fn max_weight(&self) -> usize {
        self.iter().map(|(p, _)| p.weight()).max().unwrap_or(0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        for c in s.terms.values_mut() {
            *c *= factor;
        }
        s.prune(DEFAULT_PRUNE_TOL);
        s
    }

    /// `self + other`, merged and pruned.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        let mut s = self.clone();
        for (k, c) in &other.terms {
            *s.terms.entry(k.clone()).or_insert(0.0) += c;
        }
        s.prune(DEFAULT_PRUNE_TOL);
        Ok(s)
    }

    /// `out = H * input` without materializing the matrix.
    pub fn apply(&self, input: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        if self.n_qubits > MAX_STATE_QUBITS {
            return Err(Error::Capacity {
                what: "statevector register",
                requested: self.n_qubits,
                limit: MAX_STATE_QUBITS,
            });
        }
        let dim = 1usize << self.n_qubits;
        if input.len() != dim || out.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: input.len().min(out.len()),
            });
        }
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (k, &c) in &self.terms {
            let x = k.0[0] as usize;
            let z = k.1[0] as usize;
            let base = i_pow((x & z).count_ones()) * c;
            for (b, &amp) in input.iter().enumerate() {
                let f = if (b & z).count_ones() & 1 == 0 { base } else { -base };
                out[b ^ x] += f * amp;
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.to_dense_with_limit(DEFAULT_DENSE_LIMIT)
    }

    pub fn to_dense_with_limit(&self, limit: usize) -> Result<DMatrix<Complex64>> {
        dense_accumulate(
            self.n_qubits,
            limit,
            "dense Pauli sum",
            self.iter().map(|(p, c)| (p, Complex64::new(c, 0.0))),
        )
    }

    /// One `coefficient label` line per term.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, c) in self.iter() {
            out.push_str(&format!("{c:?} {}\n", p.label()));
        }
        out
    }

    /// Parses the format written by [`PauliSum::to_text`]. Blank lines and
    /// lines starting with `#` are skipped. Duplicate strings add.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let mut it = line.split_whitespace();
            let (Some(c), Some(label), None) = (it.next(), it.next(), it.next()) else {
                return Err(parse_err("expected `<coefficient> <label>`".into()));
            };
            let c: f64 = c
                .parse()
                .map_err(|e| parse_err(format!("bad coefficient {c:?}: {e}")))?;
            let p = PauliString::from_label(label).map_err(|e| parse_err(e.to_string()))?;
            match n {
                None => n = Some(p.n_qubits()),
                Some(k) if k != p.n_qubits() => {
                    return Err(parse_err(format!(
                        "label length {} differs from {k}",
                        p.n_qubits()
                    )))
                }
                _ => {}
            }
            entries.push((c, p));
        }
        let n = n.ok_or_else(|| Error::Parse {
            line: 0,
            message: "no terms".into(),
        })?;
        let mut s = Self::new(n)?;
        for (c, p) in entries {
            s.add_term(c, &p)?;
        }
        Ok(s)
    }
}

/// Complex-weighted sum of phase-free strings; the Jordan–Wigner image of a
/// single fermionic monomial is generally of this form.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliOperator {
    n_qubits: usize,
    terms: BTreeMap<Key, Complex64>,
}

impl PauliOperator {
    pub fn new(n_qubits: usize) -> Result<Self> {
        check_n(n_qubits)?;
        Ok(Self {
            n_qubits,
            terms: BTreeMap::new(),
        })
    }

    pub fn identity(n_qubits: usize, coeff: Complex64) -> Result<Self> {
        let mut s = Self::new(n_qubits)?;
        s.terms
            .insert((zero_words(n_qubits), zero_words(n_qubits)), coeff);
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `coeff * p`, folding the string's phase into the coefficient.
    pub fn add_term(&mut self, coeff: Complex64, p: &PauliString) {
        let c = coeff * p.phase_factor();
        *self
            .terms
            .entry(key_of(p))
            .or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (k, c) in &other.terms {
            *self
                .terms
                .entry(k.clone())
                .or_insert(Complex64::new(0.0, 0.0)) += c;
        }
    }

    pub fn scale(&mut self, factor: Complex64) {
        for c in self.terms.values_mut() {
            *c *= factor;
        }
    }

    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, c| c.norm() > tol);
    }

    /// Operator product `self * other`.
    pub fn multiply(&self, other: &Self) -> Self {
        let n = self.n_qubits;
        let mut out = Self {
            n_qubits: n,
            terms: BTreeMap::new(),
        };
        for (ka, &ca) in &self.terms {
            let a = string_of(n, ka);
            for (kb, &cb) in &other.terms {
                out.add_term(ca * cb, &a.mul_unchecked(&string_of(n, kb)));
            }
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (PauliString, Complex64)> + '_ {
        let n = self.n_qubits;
        self.terms.iter().map(move |(k, &c)| (string_of(n, k), c))
    }

    /// Converts to a [`PauliSum`]: fails if any imaginary part exceeds
    /// `imag_tol`, then keeps real parts above `prune_tol`.
    pub fn into_hermitian(self, prune_tol: f64, imag_tol: f64) -> Result<PauliSum> {
        let worst = self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max);
        if worst > imag_tol {
            return Err(Error::NotHermitian(worst));
        }
        let mut s = PauliSum::new(self.n_qubits)?;
        for (k, c) in self.terms {
            s.terms.insert(k, c.re);
        }
        s.prune(prune_tol);
        Ok(s)
    }

    pub fn to_dense_with_limit(&self, limit: usize) -> Result<DMatrix<Complex64>> {
        dense_accumulate(self.n_qubits, limit, "dense Pauli operator", self.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli_matrix(p: Pauli) -> DMatrix<Complex64> {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        let i = c(0.0, 1.0);
        match p {
            Pauli::I => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
            Pauli::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            Pauli::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            Pauli::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    }

    /// Kronecker-product oracle: qubit 0 is the least significant index bit,
    /// so it is the rightmost Kronecker factor.
    fn kron_oracle(p: &PauliString) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
        for q in 0..p.n_qubits() {
            m = pauli_matrix(p.get(q)).kronecker(&m);
        }
        m * p.phase_factor()
    }

    fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn x_times_x_is_identity() {
        let x = PauliString::from_label("X").unwrap();
        let r = x.multiply(&x).unwrap();
        assert!(r.is_identity());
        assert_eq!(r.phase(), 0);
    }

    #[test]
    fn x_times_z_is_minus_i_y() {
        let x = PauliString::from_label("X").unwrap();
        let z = PauliString::from_label("Z").unwrap();
        let r = x.multiply(&z).unwrap();
        assert_eq!(r.label(), "Y");
        assert_eq!(r.phase(), 3);
        let dense = pauli_matrix(Pauli::X) * pauli_matrix(Pauli::Z);
        assert!(max_diff(&dense, &kron_oracle(&r)) < 1e-15);
    }

    #[test]
    fn two_qubit_product_matches_dense() {
        // (X0 Z1)(Z0 Z1) = (XZ)_0 (ZZ)_1 = -i Y0
        let a = PauliString::from_label("XZ").unwrap();
        let b = PauliString::from_label("ZZ").unwrap();
        let r = a.multiply(&b).unwrap();
        assert_eq!(r.label(), "YI");
        assert_eq!(r.phase(), 3);
        let dense = kron_oracle(&a) * kron_oracle(&b);
        assert!(max_diff(&dense, &kron_oracle(&r)) < 1e-15);
    }

    #[test]
    fn commutation_examples() {
        let x = PauliString::from_label("X").unwrap();
        let z = PauliString::from_label("Z").unwrap();
        assert!(x.commutes(&x).unwrap());
        assert!(!x.commutes(&z).unwrap());
        let xx = PauliString::from_label("XX").unwrap();
        let zz = PauliString::from_label("ZZ").unwrap();
        assert!(xx.commutes(&zz).unwrap());
        let d = kron_oracle(&xx) * kron_oracle(&zz) - kron_oracle(&zz) * kron_oracle(&xx);
        assert!(d.iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn size_mismatch_is_dimension_error() {
        let a = PauliString::from_label("X").unwrap();
        let b = PauliString::from_label("XX").unwrap();
        assert!(matches!(a.multiply(&b), Err(Error::Dimension { .. })));
        assert!(matches!(a.commutes(&b), Err(Error::Dimension { .. })));
    }

    #[test]
    fn dense_examples() {
        let z = PauliSum::from_terms(1, [(1.0, PauliString::from_label("Z").unwrap())]).unwrap();
        let d = z.to_dense().unwrap();
        assert_eq!(d[(0, 0)], c(1.0, 0.0));
        assert_eq!(d[(1, 1)], c(-1.0, 0.0));
        let h = PauliSum::from_terms(
            1,
            [
                (0.5, PauliString::from_label("X").unwrap()),
                (0.5, PauliString::from_label("Z").unwrap()),
            ],
        )
        .unwrap();
        let d = h.to_dense().unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(-0.5, 0.0)]);
        assert!(max_diff(&d, &want) < 1e-15);
    }

    #[test]
    fn dense_guard() {
        let h = PauliSum::new(15).unwrap();
        assert!(matches!(h.to_dense(), Err(Error::Capacity { .. })));
    }

    #[test]
    fn sum_merges_and_prunes() {
        let x = PauliString::from_label("XI").unwrap();
        let h = PauliSum::from_terms(2, [(0.5, x.clone()), (-0.5, x.clone()), (1e-13, PauliString::from_label("ZZ").unwrap())])
            .unwrap();
        assert!(h.is_empty());
        let mut h = PauliSum::new(2).unwrap();
        h.add_term(1.0, &x).unwrap();
        h.add_term(2.0, &x.with_phase(2)).unwrap();
        assert_eq!(h.coefficient(&x), -1.0);
        assert!(h.add_term(1.0, &x.with_phase(1)).is_err());
    }

    #[test]
    fn identity_is_kept() {
        let h = PauliSum::from_terms(2, [(0.3, PauliString::identity(2).unwrap())]).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.identity_coefficient(), 0.3);
        assert!(h.without_identity().is_empty());
    }

    #[test]
    fn text_parse_errors_carry_line_numbers() {
        let err = PauliSum::from_text("0.5 XX\n\nabc ZZ\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        assert!(PauliSum::from_text("0.5 XX\n0.5 X\n").is_err());
        assert!(PauliSum::from_text("0.5 XQ\n").is_err());
        let h = PauliSum::from_text("# header\n0.25 XY\n-1e-3 ZI\n").unwrap();
        assert_eq!(h.len(), 2);
    }

    #[test]
    fn apply_matches_dense_on_small_sum() {
        let h = PauliSum::from_terms(
            3,
            [
                (0.7, PauliString::from_label("XYZ").unwrap()),
                (-0.2, PauliString::from_label("IZZ").unwrap()),
                (0.4, PauliString::from_label("YIX").unwrap()),
            ],
        )
        .unwrap();
        let psi: Vec<Complex64> = (0..8).map(|k| c(k as f64 * 0.1, 1.0 - k as f64 * 0.05)).collect();
        let mut out = vec![c(0.0, 0.0); 8];
        h.apply(&psi, &mut out).unwrap();
        let d = h.to_dense().unwrap();
        let v = nalgebra::DVector::from_vec(psi.clone());
        let want = d * v;
        for k in 0..8 {
            assert!((want[k] - out[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn strings_beyond_one_word() {
        let n = 130;
        let a = PauliString::from_ops(n, &[(0, Pauli::X), (70, Pauli::Y), (129, Pauli::Z)]).unwrap();
        let b = PauliString::from_ops(n, &[(0, Pauli::Z), (70, Pauli::Y), (128, Pauli::X)]).unwrap();
        assert_eq!(a.weight(), 3);
        assert_eq!(a.support(), vec![0, 70, 129]);
        assert!(a.masks().is_none());
        // X0 Z0 = -i Y0, Y70 Y70 = I, disjoint factors commute in the product.
        let r = a.multiply(&b).unwrap();
        assert_eq!(r.get(0), Pauli::Y);
        assert_eq!(r.get(70), Pauli::I);
        assert_eq!(r.get(128), Pauli::X);
        assert_eq!(r.get(129), Pauli::Z);
        assert_eq!(r.phase(), 3);
        assert!(!a.commutes(&b).unwrap());
        let h = PauliSum::from_terms(n, [(0.25, a.clone()), (0.5, b)]).unwrap();
        assert_eq!(PauliSum::from_text(&h.to_text()).unwrap(), h);
        assert!(PauliString::from_words(n, &[0, 0, 1 << 2], &[0, 0, 0]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn string(n: usize) -> impl Strategy<Value = PauliString> {
            let m = (1u64 << n) - 1;
            (any::<u64>(), any::<u64>(), 0u8..4)
                .prop_map(move |(x, z, ph)| PauliString::from_masks(n, x & m, z & m).unwrap().with_phase(ph))
        }

        proptest! {
            #[test]
            fn product_matches_kronecker(a in string(3), b in string(3)) {
                let r = a.multiply(&b).unwrap();
                let d = kron_oracle(&a) * kron_oracle(&b);
                prop_assert!(max_diff(&d, &kron_oracle(&r)) < 1e-14);
            }

            #[test]
            fn exactly_one_of_commute_or_anticommute(a in string(3), b in string(3)) {
                let ab = kron_oracle(&a) * kron_oracle(&b);
                let ba = kron_oracle(&b) * kron_oracle(&a);
                let comm = (&ab - &ba).iter().all(|v| v.norm() < 1e-12);
                let anti = (&ab + &ba).iter().all(|v| v.norm() < 1e-12);
                prop_assert!(comm ^ anti);
                prop_assert_eq!(a.commutes(&b).unwrap(), comm);
            }

            #[test]
            fn product_is_associative(a in string(3), b in string(3), c in string(3)) {
                let l = a.multiply(&b).unwrap().multiply(&c).unwrap();
                let r = a.multiply(&b.multiply(&c).unwrap()).unwrap();
                prop_assert_eq!(&l, &r);
                prop_assert!(max_diff(&kron_oracle(&l), &(kron_oracle(&a) * kron_oracle(&b) * kron_oracle(&c))) < 1e-13);
            }

            #[test]
            fn dense_sum_matches_kronecker(coeffs in proptest::collection::vec(-1.0f64..1.0, 6), strs in proptest::collection::vec(string(3), 6)) {
                let terms: Vec<(f64, PauliString)> = coeffs.iter().copied().zip(strs.iter().map(|s| s.canonical())).collect();
                let h = PauliSum::from_terms(3, terms.clone()).unwrap();
                let mut want = DMatrix::<Complex64>::zeros(8, 8);
                for (cf, s) in &terms {
                    want += kron_oracle(s) * c(*cf, 0.0);
                }
                prop_assert!(max_diff(&h.to_dense().unwrap(), &want) < 1e-14);
            }

            #[test]
            fn text_round_trip(coeffs in proptest::collection::vec(-1e3f64..1e3, 1..8), strs in proptest::collection::vec(string(5), 8)) {
                let h = PauliSum::from_terms(5, coeffs.iter().copied().zip(strs.iter().map(|s| s.canonical()))).unwrap();
                prop_assume!(!h.is_empty());
                let back = PauliSum::from_text(&h.to_text()).unwrap();
                prop_assert_eq!(back, h);
            }

            #[test]
            fn one_norm_ignores_order(coeffs in proptest::collection::vec(-1.0f64..1.0, 5), strs in proptest::collection::vec(string(4), 5)) {
                let terms: Vec<(f64, PauliString)> = coeffs.iter().copied().zip(strs.iter().map(|s| s.canonical())).collect();
                let fwd = PauliSum::from_terms(4, terms.clone()).unwrap();
                let rev = PauliSum::from_terms(4, terms.into_iter().rev()).unwrap();
                prop_assert!((fwd.one_norm() - rev.one_norm()).abs() < 1e-14);
            }
        }
    }
}
