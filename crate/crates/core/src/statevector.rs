//! Dense statevectors and matrix-free Pauli-sum kernels.
//!
//! Reductions are summed over fixed 4096-amplitude blocks and then combined
//! in block order, so results do not depend on the worker count.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{i_pow, PauliString, PauliSum, MAX_STATE_QUBITS};

const BLOCK: usize = 4096;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

static THREADS: AtomicUsize = AtomicUsize::new(1);

/// Caps the worker count used by statevector kernels (minimum 1).
pub fn set_threads(n: usize) {
    THREADS.store(n.max(1), Ordering::Relaxed);
}

pub fn threads() -> usize {
    THREADS.load(Ordering::Relaxed)
}

/// Runs `f(offset, chunk)` over contiguous chunks of `out`.
fn par_chunks<F>(out: &mut [Complex64], f: F)
where
    F: Fn(usize, &mut [Complex64]) + Sync,
{
    let t = threads();
    if t <= 1 || out.len() < 4 * BLOCK {
        f(0, out);
        return;
    }
    let per = out.len().div_ceil(t).next_multiple_of(BLOCK);
    std::thread::scope(|s| {
        for (k, chunk) in out.chunks_mut(per).enumerate() {
            let f = &f;
            s.spawn(move || f(k * per, chunk));
        }
    });
}

/// Sums `f(block_start, block_end)` over fixed blocks in block order.
fn block_sum<F>(len: usize, f: F) -> Complex64
where
    F: Fn(usize, usize) -> Complex64 + Sync,
{
    let n_blocks = len.div_ceil(BLOCK);
    let t = threads();
    let partials: Vec<Complex64> = if t <= 1 || n_blocks < 4 {
        (0..n_blocks)
            .map(|k| f(k * BLOCK, ((k + 1) * BLOCK).min(len)))
            .collect()
    } else {
        let mut parts = vec![ZERO; n_blocks];
        let per = n_blocks.div_ceil(t);
        std::thread::scope(|s| {
            for (c, chunk) in parts.chunks_mut(per).enumerate() {
                let f = &f;
                s.spawn(move || {
                    for (i, p) in chunk.iter_mut().enumerate() {
                        let k = c * per + i;
                        *p = f(k * BLOCK, ((k + 1) * BLOCK).min(len));
                    }
                });
            }
        });
        parts
    };
    partials.into_iter().fold(ZERO, |a, b| a + b)
}

/// `⟨a|b⟩` with deterministic blocked summation.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    block_sum(a.len(), |s, e| {
        let mut acc = ZERO;
        for k in s..e {
            acc += a[k].conj() * b[k];
        }
        acc
    })
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    block_sum(a.len(), |s, e| {
        Complex64::new(a[s..e].iter().map(|v| v.norm_sqr()).sum(), 0.0)
    })
    .re
}

/// `y += alpha * x`.
pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn check_state_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_STATE_QUBITS {
        return Err(Error::Capacity {
            what: "statevector register",
            requested: n,
            limit: MAX_STATE_QUBITS,
        });
    }
    Ok(())
}

/// `2^n` complex amplitudes; basis index bit `q` is qubit `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_state_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Index(format!("basis index {index} >= {dim}")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_state_qubits(n_qubits)?;
        if amps.len() != 1usize << n_qubits {
            return Err(Error::Dimension {
                expected: 1 << n_qubits,
                found: amps.len(),
            });
        }
        Ok(Self { n_qubits, amps })
    }

    /// The alternating product state with every odd qubit set.
    pub fn neel(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, neel_index(n_qubits))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amps).sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::Argument(format!("cannot normalize state of norm {n}")));
        }
        let inv = 1.0 / n;
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_same(other)?;
        Ok(inner(&self.amps, &other.amps))
    }

    /// `|⟨a|b⟩|² / (‖a‖² ‖b‖²)`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        let o = self.inner(other)?;
        let f = o.norm_sqr() / (norm_sqr(&self.amps) * norm_sqr(&other.amps));
        Ok(f.clamp(0.0, 1.0))
    }

    /// Little-endian: `u64` qubit count, then interleaved `(re, im)` doubles.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 16 * self.amps.len());
        out.extend_from_slice(&(self.n_qubits as u64).to_le_bytes());
        for a in &self.amps {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(Error::Parse {
                line: 0,
                message: "statevector header truncated".into(),
            });
        }
        let n = u64::from_le_bytes(bytes[..8].try_into().expect("8-byte header")) as usize;
        check_state_qubits(n)?;
        let dim = 1usize << n;
        let body = &bytes[8..];
        if body.len() != 16 * dim {
            return Err(Error::Dimension {
                expected: 16 * dim,
                found: body.len(),
            });
        }
        let f = |k: usize| f64::from_le_bytes(body[8 * k..8 * k + 8].try_into().expect("8 bytes"));
        let amps = (0..dim).map(|i| Complex64::new(f(2 * i), f(2 * i + 1))).collect();
        Ok(Self { n_qubits: n, amps })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

/// Basis index of `|0101...⟩` read from qubit 0: all odd qubits set.
pub fn neel_index(n_qubits: usize) -> usize {
    (0..n_qubits).filter(|q| q % 2 == 1).map(|q| 1usize << q).sum()
}

/// Strings sharing one X mask: `(Pψ)[b] = Σ_t c_t (-1)^{|z_t & b|} ψ[b ^ x]`.
#[derive(Clone, Debug)]
struct FlipGroup {
    x: usize,
    terms: Vec<(usize, Complex64)>,
}

/// A Pauli sum compiled for repeated application to statevectors: the
/// diagonal is tabulated and the remaining strings are grouped by X mask.
#[derive(Clone, Debug)]
pub struct CompiledOperator {
    n_qubits: usize,
    diag: Vec<f64>,
    groups: Vec<FlipGroup>,
}

impl CompiledOperator {
    pub fn new(h: &PauliSum) -> Result<Self> {
        let n = h.n_qubits();
        check_state_qubits(n)?;
        let mut terms = Vec::with_capacity(h.len());
        for (p, c) in h.iter() {
            let k = PauliKernel::new(&p)?;
            terms.push((k.x, k.z, k.base * c));
        }
        Ok(Self::from_parts(n, terms))
    }

    /// Builds `Σ_t c_t (-1)^{|z_t & b|} ψ[b ^ x_t]` on `2^n_qubits` amplitudes.
    fn from_parts(n_qubits: usize, terms: Vec<(usize, usize, Complex64)>) -> Self {
        let dim = 1usize << n_qubits;
        let mut diag_terms: Vec<(usize, f64)> = Vec::new();
        let mut groups: Vec<FlipGroup> = Vec::new();
        for (x, z, coeff) in terms {
            if x == 0 {
                diag_terms.push((z, coeff.re));
                continue;
            }
            match groups.iter_mut().find(|g| g.x == x) {
                Some(g) => g.terms.push((z, coeff)),
                None => groups.push(FlipGroup {
                    x,
                    terms: vec![(z, coeff)],
                }),
            }
        }
        let mut diag = vec![0.0; dim];
        for (b, d) in diag.iter_mut().enumerate() {
            *d = diag_terms
                .iter()
                .map(|&(z, c)| if (b & z).count_ones() & 1 == 0 { c } else { -c })
                .sum();
        }
        Self {
            n_qubits,
            diag,
            groups,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// `out = H input`.
    pub fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(input.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        par_chunks(out, |off, chunk| {
            for (i, o) in chunk.iter_mut().enumerate() {
                let b = off + i;
                let mut acc = input[b] * self.diag[b];
                for g in &self.groups {
                    let mut f = ZERO;
                    for &(z, c) in &g.terms {
                        if (b & z).count_ones() & 1 == 0 {
                            f += c;
                        } else {
                            f -= c;
                        }
                    }
                    acc += f * input[b ^ g.x];
                }
                *o = acc;
            }
        });
    }

    pub fn apply_state(&self, psi: &StateVector) -> Result<StateVector> {
        self.check(psi)?;
        let mut out = vec![ZERO; self.dim()];
        self.apply(psi.amplitudes(), &mut out);
        StateVector::from_amplitudes(self.n_qubits, out)
    }

    fn check(&self, psi: &StateVector) -> Result<()> {
        if psi.n_qubits() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: psi.n_qubits(),
            });
        }
        Ok(())
    }

    /// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩` and `⟨ψ|H²|ψ⟩ / ⟨ψ|ψ⟩ - ⟨H⟩²` from one application.
    pub fn mean_and_variance(&self, psi: &[Complex64]) -> (f64, f64) {
        let mut h = vec![ZERO; self.dim()];
        self.apply(psi, &mut h);
        let nn = norm_sqr(psi);
        let e = inner(psi, &h).re / nn;
        let h2 = norm_sqr(&h) / nn;
        (e, (h2 - e * e).max(0.0))
    }

    /// Real part of `⟨ψ|H|ψ⟩` for a normalized state; errors if the
    /// imaginary part exceeds `1e-10`.
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        self.check(psi)?;
        let mut h = vec![ZERO; self.dim()];
        self.apply(psi.amplitudes(), &mut h);
        let v = inner(psi.amplitudes(), &h);
        if v.im.abs() > 1e-10 * (1.0 + v.re.abs()) {
            return Err(Error::NotHermitian(v.im.abs()));
        }
        Ok(v.re)
    }
}

/// `⟨ψ|h|ψ⟩` for a Hermitian Pauli sum.
pub fn expectation(h: &PauliSum, psi: &StateVector) -> Result<f64> {
    if h.n_qubits() != psi.n_qubits() {
        return Err(Error::Dimension {
            expected: h.n_qubits(),
            found: psi.n_qubits(),
        });
    }
    CompiledOperator::new(h)?.expectation(psi)
}

/// A Pauli string prepared for statevector kernels: `(Pψ)[b] = f(b) ψ[b^x]`
/// with `f(b) = base · (-1)^{|z & b|}`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PauliKernel {
    pub x: usize,
    pub z: usize,
    pub base: Complex64,
}

impl PauliKernel {
    pub fn new(p: &PauliString) -> Result<Self> {
        check_state_qubits(p.n_qubits())?;
        let (x, z) = p.masks().expect("register checked above");
        let (x, z) = (x as usize, z as usize);
        let k = p.phase() as u32 + (x & z).count_ones() + 2 * (x & z).count_ones();
        Ok(Self {
            x,
            z,
            base: i_pow(k),
        })
    }

    #[inline]
    pub fn factor(&self, b: usize) -> Complex64 {
        if (b & self.z).count_ones() & 1 == 0 {
            self.base
        } else {
            -self.base
        }
    }

    /// `out = P input`.
    pub fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        par_chunks(out, |off, chunk| {
            for (i, o) in chunk.iter_mut().enumerate() {
                let b = off + i;
                *o = self.factor(b) * input[b ^ self.x];
            }
        });
    }

    /// `⟨a|P|b⟩`.
    pub fn matrix_element(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        block_sum(a.len(), |s, e| {
            let mut acc = ZERO;
            for k in s..e {
                acc += a[k].conj() * self.factor(k) * b[k ^ self.x];
            }
            acc
        })
    }

    /// In place `ψ ← exp(-iθP) ψ = cos θ ψ - i sin θ Pψ` for Hermitian `P`.
    pub fn rotate(&self, theta: f64, psi: &mut [Complex64]) {
        let (s, c) = theta.sin_cos();
        let ms = Complex64::new(0.0, -s);
        if self.x == 0 {
            for (b, a) in psi.iter_mut().enumerate() {
                *a = *a * c + ms * self.factor(b) * *a;
            }
            return;
        }
        let hb = 1usize << (usize::BITS - 1 - self.x.leading_zeros());
        let dim = psi.len();
        let mut b = 0usize;
        while b < dim {
            if b & hb != 0 {
                b += hb;
                continue;
            }
            let j = b ^ self.x;
            let (u, v) = (psi[b], psi[j]);
            psi[b] = u * c + ms * self.factor(b) * v;
            psi[j] = v * c + ms * self.factor(j) * u;
            b += 1;
        }
    }
}

/// The half of the register whose basis states have a fixed popcount
/// parity. Basis state `b` is stored at `b` with the top qubit dropped; the
/// top bit is recovered from the parity. Operators whose X mask has even
/// weight act within the sector and map to Pauli-type kernels on `n - 1`
/// bits.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct ParitySector {
    n_qubits: usize,
    parity: u32,
}

impl ParitySector {
    pub fn new(n_qubits: usize, parity: u32) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::Argument("parity sectors need at least 2 qubits".into()));
        }
        check_state_qubits(n_qubits)?;
        Ok(Self {
            n_qubits,
            parity: parity & 1,
        })
    }

    /// The sector containing every nonzero amplitude, if there is one.
    pub fn of_amplitudes(n_qubits: usize, amps: &[Complex64]) -> Option<Self> {
        let mut found: Option<u32> = None;
        for (b, a) in amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let p = b.count_ones() & 1;
            match found {
                None => found = Some(p),
                Some(q) if q != p => return None,
                _ => {}
            }
        }
        Self::new(n_qubits, found?).ok()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn parity(&self) -> u32 {
        self.parity
    }

    /// Number of stored amplitudes, `2^{n-1}`.
    pub fn dim(&self) -> usize {
        1usize << (self.n_qubits - 1)
    }

    pub fn full_index(&self, c: usize) -> usize {
        let t = ((self.parity ^ c.count_ones()) & 1) as usize;
        c | (t << (self.n_qubits - 1))
    }

    pub fn compress(&self, full: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim()).map(|c| full[self.full_index(c)]).collect()
    }

    pub fn expand(&self, comp: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; 1 << self.n_qubits];
        for (c, a) in comp.iter().enumerate() {
            out[self.full_index(c)] = *a;
        }
        out
    }

    /// True when the string maps the sector into itself.
    pub fn preserves(p: &PauliString) -> bool {
        p.x_count().is_multiple_of(2)
    }

    fn map(&self, k: PauliKernel) -> PauliKernel {
        let low = self.dim() - 1;
        let top = 1usize << (self.n_qubits - 1);
        let z_top = k.z & top != 0;
        let z = (k.z & low) ^ if z_top { low } else { 0 };
        let base = if z_top && self.parity == 1 { -k.base } else { k.base };
        PauliKernel {
            x: k.x & low,
            z,
            base,
        }
    }

    pub fn kernel(&self, p: &PauliString) -> Result<PauliKernel> {
        if p.n_qubits() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: p.n_qubits(),
            });
        }
        if !Self::preserves(p) {
            return Err(Error::Argument(format!("{p} leaves the parity sector")));
        }
        Ok(self.map(PauliKernel::new(p)?))
    }

    pub fn operator(&self, h: &PauliSum) -> Result<CompiledOperator> {
        let mut terms = Vec::with_capacity(h.len());
        for (p, c) in h.iter() {
            let k = self.kernel(&p)?;
            terms.push((k.x, k.z, k.base * c));
        }
        Ok(CompiledOperator::from_parts(self.n_qubits - 1, terms))
    }
}
