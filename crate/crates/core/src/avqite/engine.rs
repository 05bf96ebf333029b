//! Statevector machinery behind the variational updates.
//!
//! Tangent vectors `h_μ = U_{>μ} A_μ U_{≤μ} |ref⟩` (so that `∂_μ ψ = -i h_μ`)
//! are built in one forward sweep and stored amplitude-major with separate
//! real and imaginary rows. Every rotation then acts on all stored tangents
//! as a pair of real AXPYs, and the metric is a single real Gram product.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::statevector::{inner, norm_sqr, CompiledOperator, ParitySector, PauliKernel, StateVector};
use crate::PauliSum;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The operator content of an ansatz, compiled into one working space
/// (a parity sector when everything preserves parity, the full register
/// otherwise).
pub(crate) struct Engine {
    sector: Option<ParitySector>,
    n_qubits: usize,
    dim: usize,
    h: CompiledOperator,
    reference: Vec<Complex64>,
    kernels: Vec<PauliKernel>,
    pub(crate) thetas: Vec<f64>,
    memory_budget: usize,
}

impl Engine {
    pub(crate) fn new(
        reference: &StateVector,
        generators: &[PauliString],
        thetas: &[f64],
        h: &PauliSum,
        extra: &[PauliString],
        memory_budget: usize,
    ) -> Result<Self> {
        let n = reference.n_qubits();
        if h.n_qubits() != n {
            return Err(Error::Dimension {
                expected: n,
                found: h.n_qubits(),
            });
        }
        for g in generators.iter().chain(extra) {
            if g.n_qubits() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: g.n_qubits(),
                });
            }
        }
        if generators.len() != thetas.len() {
            return Err(Error::Dimension {
                expected: generators.len(),
                found: thetas.len(),
            });
        }
        let sector = ParitySector::of_amplitudes(n, reference.amplitudes()).filter(|_| {
            generators.iter().chain(extra).all(ParitySector::preserves)
                && h.iter().all(|(p, _)| ParitySector::preserves(&p))
        });
        let (op, refv) = match &sector {
            Some(s) => (s.operator(h)?, s.compress(reference.amplitudes())),
            None => (CompiledOperator::new(h)?, reference.amplitudes().to_vec()),
        };
        let mut e = Self {
            sector,
            n_qubits: n,
            dim: refv.len(),
            h: op,
            reference: refv,
            kernels: Vec::with_capacity(generators.len()),
            thetas: Vec::with_capacity(thetas.len()),
            memory_budget,
        };
        for (g, &t) in generators.iter().zip(thetas) {
            e.push(g, t)?;
        }
        Ok(e)
    }

    pub(crate) fn kernel(&self, p: &PauliString) -> Result<PauliKernel> {
        match &self.sector {
            Some(s) => s.kernel(p),
            None => PauliKernel::new(p),
        }
    }

    pub(crate) fn push(&mut self, g: &PauliString, theta: f64) -> Result<()> {
        let k = self.kernel(g)?;
        self.kernels.push(k);
        self.thetas.push(theta);
        Ok(())
    }

    pub(crate) fn len(&self) -> usize {
        self.kernels.len()
    }

    /// The working-space state for the given parameters.
    pub(crate) fn prepare(&self, thetas: &[f64]) -> Vec<Complex64> {
        let mut psi = self.reference.clone();
        for (k, &t) in self.kernels.iter().zip(thetas) {
            k.rotate(t, &mut psi);
        }
        psi
    }

    pub(crate) fn expand(&self, psi: Vec<Complex64>) -> Result<StateVector> {
        let amps = match &self.sector {
            Some(s) => s.expand(&psi),
            None => psi,
        };
        StateVector::from_amplitudes(self.n_qubits, amps)
    }

    pub(crate) fn energy(&self, psi: &[Complex64]) -> f64 {
        self.h.mean_and_variance(psi).0
    }

    pub(crate) fn moments(&self, psi: &[Complex64]) -> (f64, f64) {
        self.h.mean_and_variance(psi)
    }

    /// Everything the update and selection rules need at the current
    /// parameters, with room for `extra` appended generators.
    pub(crate) fn snapshot(&self, extra: usize) -> Result<Snapshot> {
        let n = self.len();
        let stride = n + extra;
        let rows = 2 * self.dim;
        let bytes = rows
            .checked_mul(stride.max(1))
            .and_then(|v| v.checked_mul(8))
            .ok_or(Error::Capacity {
                what: "tangent storage",
                requested: usize::MAX,
                limit: self.memory_budget,
            })?;
        if bytes > self.memory_budget {
            return Err(Error::Capacity {
                what: "tangent storage",
                requested: bytes,
                limit: self.memory_budget,
            });
        }
        let mut x = vec![0.0f64; rows * stride];
        let mut psi = self.reference.clone();
        let mut k0 = 0;
        while k0 < n {
            let group = fusable_run(&self.kernels[k0..], stride);
            for k in k0..k0 + group {
                let (kern, t) = (&self.kernels[k], self.thetas[k]);
                kern.rotate(t, &mut psi);
                for b in 0..self.dim {
                    let v = kern.factor(b) * psi[b ^ kern.x];
                    x[2 * b * stride + k] = v.re;
                    x[(2 * b + 1) * stride + k] = v.im;
                }
            }
            if group == 1 {
                rotate_rows(&mut x, stride, 0..k0, &self.kernels[k0], self.thetas[k0]);
            } else {
                rotate_fused(&mut x, stride, k0, &self.kernels[k0..k0 + group], &self.thetas[k0..k0 + group]);
            }
            k0 += group;
        }
        let mut g = vec![ZERO; self.dim];
        self.h.apply(&psi, &mut g);
        let energy = inner(&psi, &g).re;
        let variance = (norm_sqr(&g) - energy * energy).max(0.0);

        let gram = gram(&x, stride, n, rows);
        // a_μ = -Re⟨ψ|h_μ⟩, V_μ = 2 Im⟨h_μ|Hψ⟩
        let mut a = vec![0.0; n];
        let mut v = vec![0.0; n];
        for b in 0..self.dim {
            let re = &x[2 * b * stride..2 * b * stride + n];
            let im = &x[(2 * b + 1) * stride..(2 * b + 1) * stride + n];
            let (pr, pi, gr, gi) = (psi[b].re, psi[b].im, g[b].re, g[b].im);
            for k in 0..n {
                a[k] -= pr * re[k] + pi * im[k];
                v[k] += re[k] * gi - im[k] * gr;
            }
        }
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = 2.0 * gram[i * n + j] - 2.0 * a[i] * a[j];
            }
        }
        for k in &mut v {
            *k *= 2.0;
        }
        Ok(Snapshot {
            dim: self.dim,
            stride,
            n,
            x,
            psi,
            g,
            energy,
            variance,
            a,
            m,
            v: DVector::from_vec(v),
        })
    }
}

/// Rows of tangent data kept hot while a fused group of rotations runs.
const FUSED_CACHE_BYTES: usize = 1 << 20;
const MAX_FUSED: usize = 6;

/// Length of the leading run of kernels whose X masks are nonzero and
/// linearly independent over GF(2), capped so that one coset of rows fits
/// in cache. Always at least one.
fn fusable_run(kernels: &[PauliKernel], stride: usize) -> usize {
    let row_bytes = 16 * stride.max(1);
    let mut cap = 1;
    while cap < MAX_FUSED && (row_bytes << (cap + 1)) <= FUSED_CACHE_BYTES {
        cap += 1;
    }
    let mut basis: Vec<usize> = Vec::new();
    let mut len = 0;
    for k in kernels.iter().take(cap) {
        let mut v = k.x;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v == 0 {
            break;
        }
        basis.push(v);
        basis.sort_unstable_by(|a, b| b.cmp(a));
        len += 1;
    }
    len.max(1)
}

/// Rotates rows `r` and `j = r ^ x` of columns `0..ncols` by
/// `exp(-iθA)`, given `m_r = -i sinθ f(r)` and `m_j = -i sinθ f(j)`.
#[inline]
#[allow(clippy::too_many_arguments)]
fn rotate_pair(x: &mut [f64], stride: usize, r: usize, j: usize, ncols: usize, c: f64, mr: Complex64, mj: Complex64) {
    let (lo_row, hi_row, mlo, mhi) = if r < j { (r, j, mr, mj) } else { (j, r, mj, mr) };
    let (lo, hi) = x.split_at_mut(2 * hi_row * stride);
    let (br, bi) = lo[2 * lo_row * stride..(2 * lo_row + 2) * stride].split_at_mut(stride);
    let (jr, ji) = hi[..2 * stride].split_at_mut(stride);
    let (br, bi, jr, ji) = (&mut br[..ncols], &mut bi[..ncols], &mut jr[..ncols], &mut ji[..ncols]);
    for (((br, bi), jr), ji) in br.iter_mut().zip(bi.iter_mut()).zip(jr.iter_mut()).zip(ji.iter_mut()) {
        let (ur, ui, vr, vi) = (*br, *bi, *jr, *ji);
        *br = c * ur + mlo.re * vr - mlo.im * vi;
        *bi = c * ui + mlo.re * vi + mlo.im * vr;
        *jr = c * vr + mhi.re * ur - mhi.im * ui;
        *ji = c * vi + mhi.re * ui + mhi.im * ur;
    }
}

/// Applies the rotations of `kernels` in order, the `i`-th one to tangent
/// columns `0..k0 + i`, visiting the rows one coset of the span of their X
/// masks at a time so that each coset stays in cache across the group.
fn rotate_fused(x: &mut [f64], stride: usize, k0: usize, kernels: &[PauliKernel], thetas: &[f64]) {
    let f = kernels.len();
    let dim = x.len() / (2 * stride);
    let mut comb = vec![0usize; 1 << f];
    for s in 1..comb.len() {
        let i = s.trailing_zeros() as usize;
        comb[s] = comb[s & (s - 1)] ^ kernels[i].x;
    }
    let mut basis: Vec<usize> = Vec::new();
    for k in kernels {
        let mut v = k.x;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        basis.push(v);
        basis.sort_unstable_by(|a, b| b.cmp(a));
    }
    let pivots = basis.iter().fold(0usize, |m, &b| m | 1 << (usize::BITS - 1 - b.leading_zeros()));
    let rot: Vec<(f64, Complex64)> = thetas
        .iter()
        .map(|t| {
            let (s, c) = t.sin_cos();
            (c, Complex64::new(0.0, -s))
        })
        .collect();
    for b in (0..dim).filter(|b| b & pivots == 0) {
        for (i, k) in kernels.iter().enumerate() {
            let ncols = k0 + i;
            if ncols == 0 {
                continue;
            }
            let (c, ms) = rot[i];
            let bit = 1 << i;
            for s in (0..comb.len()).filter(|s| s & bit == 0) {
                let r = b ^ comb[s];
                let j = b ^ comb[s | bit];
                rotate_pair(x, stride, r, j, ncols, c, ms * k.factor(r), ms * k.factor(j));
            }
        }
    }
}

/// Applies `exp(-iθA)` to the tangent columns in `cols`.
fn rotate_rows(x: &mut [f64], stride: usize, cols: std::ops::Range<usize>, k: &PauliKernel, theta: f64) {
    if cols.is_empty() {
        return;
    }
    let (s, c) = theta.sin_cos();
    let dim = x.len() / (2 * stride);
    let ms = Complex64::new(0.0, -s);
    if k.x == 0 {
        for b in 0..dim {
            let f = Complex64::new(c, 0.0) + ms * k.factor(b);
            let (re, im) = x[2 * b * stride..(2 * b + 2) * stride].split_at_mut(stride);
            for (ur, ui) in re[cols.clone()].iter_mut().zip(&mut im[cols.clone()]) {
                let (r, i) = (*ur, *ui);
                *ur = f.re * r - f.im * i;
                *ui = f.re * i + f.im * r;
            }
        }
        return;
    }
    let hb = 1usize << (usize::BITS - 1 - k.x.leading_zeros());
    for b in 0..dim {
        if b & hb != 0 {
            continue;
        }
        let j = b ^ k.x;
        let mb = ms * k.factor(b);
        let mj = ms * k.factor(j);
        let (lo, hi) = x.split_at_mut(2 * j * stride);
        let (br, bi) = lo[2 * b * stride..(2 * b + 2) * stride].split_at_mut(stride);
        let (jr, ji) = hi[..2 * stride].split_at_mut(stride);
        let (br, bi) = (&mut br[cols.clone()], &mut bi[cols.clone()]);
        let (jr, ji) = (&mut jr[cols.clone()], &mut ji[cols.clone()]);
        for (((br, bi), jr), ji) in br.iter_mut().zip(bi.iter_mut()).zip(jr.iter_mut()).zip(ji.iter_mut()) {
            let (ur, ui, vr, vi) = (*br, *bi, *jr, *ji);
            *br = c * ur + mb.re * vr - mb.im * vi;
            *bi = c * ui + mb.re * vi + mb.im * vr;
            *jr = c * vr + mj.re * ur - mj.im * ui;
            *ji = c * vi + mj.re * ui + mj.im * ur;
        }
    }
}

/// `C = X[:, cols_a]ᵀ Y`, with `Y` a `rows × ny` row-major block read with
/// row stride `ldy`; `C` is written row-major with row stride `ldc`.
#[allow(clippy::too_many_arguments)]
fn xt_times(x: &[f64], stride: usize, rows: usize, cols_a: std::ops::Range<usize>, y: &[f64], ldy: usize, ny: usize, c: &mut [f64], ldc: usize) {
    let m = cols_a.len();
    if m == 0 || ny == 0 || rows == 0 {
        return;
    }
    assert!(cols_a.end <= stride && x.len() >= rows * stride);
    assert!(ny <= ldy && y.len() >= (rows - 1) * ldy + ny);
    assert!(ny <= ldc && c.len() >= (m - 1) * ldc + ny);
    // SAFETY: A = X[:, cols_a]ᵀ (m × rows) reads x[l * stride + cols_a.start + i]
    // for i < m, l < rows; B = Y (rows × ny) reads y[l * ldy + j] for j < ny;
    // C writes c[i * ldc + j]. The assertions above keep all of these in
    // bounds, and C does not alias the inputs.
    unsafe {
        matrixmultiply::dgemm(
            m,
            rows,
            ny,
            1.0,
            x.as_ptr().add(cols_a.start),
            1,
            stride as isize,
            y.as_ptr(),
            ldy as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            ldc as isize,
            1,
        );
    }
}

/// Candidates whose metric rows are formed in one product.
const COUPLING_BATCH: usize = 16;

/// Column block used for the symmetric Gram product.
const GRAM_BLOCK: usize = 64;

/// `G = XᵀX` restricted to the first `n` columns, row-major `n × n`. Only
/// the upper block triangle is multiplied.
fn gram(x: &[f64], stride: usize, n: usize, rows: usize) -> Vec<f64> {
    let mut g = vec![0.0; n * n];
    if n == 0 || rows == 0 {
        return g;
    }
    let mut block = vec![0.0; GRAM_BLOCK * GRAM_BLOCK];
    for i0 in (0..n).step_by(GRAM_BLOCK) {
        let i1 = (i0 + GRAM_BLOCK).min(n);
        for j0 in (i0..n).step_by(GRAM_BLOCK) {
            let j1 = (j0 + GRAM_BLOCK).min(n);
            let w = j1 - j0;
            xt_times(x, stride, rows, i0..i1, &x[j0..], stride, w, &mut block, w);
            for i in i0..i1 {
                for j in j0..j1 {
                    let v = block[(i - i0) * w + (j - j0)];
                    g[i * n + j] = v;
                    g[j * n + i] = v;
                }
            }
        }
    }
    g
}

/// Tangents, metric, gradient and energy moments at one parameter point.
pub(crate) struct Snapshot {
    dim: usize,
    stride: usize,
    n: usize,
    x: Vec<f64>,
    pub(crate) psi: Vec<Complex64>,
    g: Vec<Complex64>,
    pub(crate) energy: f64,
    pub(crate) variance: f64,
    a: Vec<f64>,
    pub(crate) m: DMatrix<f64>,
    pub(crate) v: DVector<f64>,
}

/// A scored candidate generator.
#[derive(Clone, Debug)]
pub(crate) struct Scored {
    pub(crate) index: usize,
    pub(crate) decrease: f64,
}

impl Snapshot {
    pub(crate) fn len(&self) -> usize {
        self.n
    }

    pub(crate) fn max_abs_v(&self) -> f64 {
        self.v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Cholesky factor of `M + λI`; the shift grows tenfold if roundoff
    /// leaves the matrix indefinite.
    pub(crate) fn factor(&self, ridge: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
        let mut lam = ridge;
        for _ in 0..12 {
            let mut k = self.m.clone();
            for i in 0..self.n {
                k[(i, i)] += lam;
            }
            if let Some(ch) = k.cholesky() {
                return Ok((ch, lam));
            }
            lam = if lam > 0.0 { lam * 10.0 } else { 1e-14 };
        }
        Err(Error::Argument("metric is not positive semidefinite".into()))
    }

    /// `θ̇ = (M + λI)⁻¹ V` and the McLachlan distance `2 Var(H) - Vᵀθ̇`.
    pub(crate) fn solve(&self, ridge: f64) -> Result<(DVector<f64>, f64)> {
        if self.n == 0 {
            return Ok((DVector::zeros(0), 2.0 * self.variance));
        }
        let (ch, _) = self.factor(ridge)?;
        let y = ch.solve(&self.v);
        let l2 = clamp_l2(2.0 * self.variance - self.v.dot(&y));
        Ok((y, l2))
    }

    /// Exact change in the McLachlan distance from appending each candidate
    /// at zero angle. With `screen` below the pool size only the candidates
    /// with the largest lower bound `num² / (c + λ)` get the exact Schur
    /// denominator.
    pub(crate) fn score(&self, kernels: &[PauliKernel], ridge: f64, screen: usize) -> Result<Vec<Scored>> {
        let (ch, lam) = if self.n > 0 {
            let (c, l) = self.factor(ridge)?;
            (Some(c), l)
        } else {
            (None, ridge)
        };
        let y = match &ch {
            Some(c) => c.solve(&self.v),
            None => DVector::zeros(0),
        };
        let sa: f64 = self.a.iter().zip(y.iter()).map(|(a, y)| a * y).sum();
        // r = -i Hψ - Σ y_μ h_μ - (a·y) ψ, so num = 2 Re⟨r|A|ψ⟩.
        let mut r = vec![ZERO; self.dim];
        for (b, rb) in r.iter_mut().enumerate() {
            let re = &self.x[2 * b * self.stride..2 * b * self.stride + self.n];
            let im = &self.x[(2 * b + 1) * self.stride..(2 * b + 1) * self.stride + self.n];
            let mut pr = 0.0;
            let mut pi = 0.0;
            for k in 0..self.n {
                pr += y[k] * re[k];
                pi += y[k] * im[k];
            }
            let g = self.g[b];
            *rb = Complex64::new(g.im - pr - sa * self.psi[b].re, -g.re - pi - sa * self.psi[b].im);
        }
        let mut pre: Vec<(usize, f64, f64, f64)> = Vec::with_capacity(kernels.len());
        for (idx, k) in kernels.iter().enumerate() {
            let (e1, e2) = pair_elements(k, &r, &self.psi);
            let num = 2.0 * e1.re;
            let c = 2.0 * (1.0 - e2.re * e2.re);
            pre.push((idx, num, c, e2.re));
        }
        let mut order: Vec<usize> = (0..pre.len()).collect();
        let bound = |i: usize| {
            let (_, num, c, _) = pre[i];
            num * num / (c + lam)
        };
        order.sort_by(|&i, &j| bound(j).total_cmp(&bound(i)).then(i.cmp(&j)));
        let width = screen.min(order.len());
        let mut out = Vec::with_capacity(width);
        for chunk in order[..width].chunks(COUPLING_BATCH) {
            let couplings = match &ch {
                None => Vec::new(),
                Some(_) => self.couplings(chunk.iter().map(|&i| (&kernels[pre[i].0], -pre[i].3))),
            };
            for (slot, &i) in chunk.iter().enumerate() {
                let (idx, num, c, _) = pre[i];
                let s = match &ch {
                    None => c + lam,
                    Some(ch) => {
                        let b = &couplings[slot];
                        c + lam - b.dot(&ch.solve(b))
                    }
                };
                let decrease = if s > 0.0 { num * num / s } else { 0.0 };
                out.push(Scored { index: idx, decrease });
            }
        }
        out.sort_by(|p, q| q.decrease.total_cmp(&p.decrease).then(p.index.cmp(&q.index)));
        Ok(out)
    }

    /// [`Self::coupling`] for several candidates with one pass over the
    /// stored tangents.
    fn couplings<'k>(&self, cands: impl Iterator<Item = (&'k PauliKernel, f64)>) -> Vec<DVector<f64>> {
        let cands: Vec<(&PauliKernel, f64)> = cands.collect();
        let w = cands.len();
        let rows = 2 * self.dim;
        let mut y = vec![0.0; rows * w];
        for (slot, (k, _)) in cands.iter().enumerate() {
            for b in 0..self.dim {
                let v = k.factor(b) * self.psi[b ^ k.x];
                y[2 * b * w + slot] = v.re;
                y[(2 * b + 1) * w + slot] = v.im;
            }
        }
        let mut prod = vec![0.0; self.n * w];
        xt_times(&self.x, self.stride, rows, 0..self.n, &y, w, w, &mut prod, w);
        cands
            .iter()
            .enumerate()
            .map(|(slot, (_, a_new))| {
                DVector::from_iterator(self.n, (0..self.n).map(|t| 2.0 * prod[t * w + slot] - 2.0 * self.a[t] * a_new))
            })
            .collect()
    }

    /// Metric row `b_μ = 2 Re⟨h_μ|Aψ⟩ - 2 a_μ a_new` for a zero-angle
    /// candidate applied last.
    fn coupling(&self, k: &PauliKernel, a_new: f64) -> DVector<f64> {
        let mut b = vec![0.0; self.n];
        for row in 0..self.dim {
            let hv = k.factor(row) * self.psi[row ^ k.x];
            let re = &self.x[2 * row * self.stride..2 * row * self.stride + self.n];
            let im = &self.x[(2 * row + 1) * self.stride..(2 * row + 1) * self.stride + self.n];
            for t in 0..self.n {
                b[t] += re[t] * hv.re + im[t] * hv.im;
            }
        }
        DVector::from_iterator(self.n, b.iter().zip(&self.a).map(|(g, a)| 2.0 * g - 2.0 * a * a_new))
    }

    /// Appends a zero-angle generator with kernel `k`, extending the stored
    /// tangents, metric and gradient.
    pub(crate) fn append(&mut self, k: &PauliKernel) -> Result<()> {
        if self.n >= self.stride {
            return Err(Error::Capacity {
                what: "appended generators",
                requested: self.n + 1,
                limit: self.stride,
            });
        }
        let (_, mean) = pair_elements(k, &self.psi, &self.psi);
        let a_new = -mean.re;
        let b = self.coupling(k, a_new);
        let col = self.n;
        let mut v_new = 0.0;
        for row in 0..self.dim {
            let hv = k.factor(row) * self.psi[row ^ k.x];
            self.x[2 * row * self.stride + col] = hv.re;
            self.x[(2 * row + 1) * self.stride + col] = hv.im;
            v_new += hv.re * self.g[row].im - hv.im * self.g[row].re;
        }
        let n = self.n + 1;
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (self.n, self.n)).copy_from(&self.m);
        for t in 0..self.n {
            m[(t, col)] = b[t];
            m[(col, t)] = b[t];
        }
        m[(col, col)] = 2.0 * (1.0 - a_new * a_new);
        self.m = m;
        self.v = self.v.clone().insert_row(col, 2.0 * v_new);
        self.a.push(a_new);
        self.n = n;
        Ok(())
    }
}

/// `(⟨r|A|ψ⟩, ⟨ψ|A|ψ⟩)` in one pass.
fn pair_elements(k: &PauliKernel, r: &[Complex64], psi: &[Complex64]) -> (Complex64, Complex64) {
    let mut e1 = ZERO;
    let mut e2 = ZERO;
    for b in 0..psi.len() {
        let ap = k.factor(b) * psi[b ^ k.x];
        e1 += r[b].conj() * ap;
        e2 += psi[b].conj() * ap;
    }
    (e1, e2)
}

/// Tiny negative distances are roundoff.
pub(crate) fn clamp_l2(l2: f64) -> f64 {
    if l2 < 0.0 && l2 > -1e-10 {
        0.0
    } else {
        l2
    }
}
