//! Exact ground states, gaps and imaginary-time evolution.
//!
//! Small registers are diagonalized densely. Larger ones use a thick-restart
//! Lanczos iteration with full reorthogonalization whose projected matrix is
//! assembled explicitly from `⟨v_i|H v_j⟩`; the first excited level comes
//! from a second run deflated against the converged ground state, so
//! degenerate ground spaces show up as a vanishing gap.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, ModelSpec};
use crate::pauli::PauliSum;
use crate::statevector::{axpy, inner, neel_index, norm_sqr, CompiledOperator, StateVector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Gaps below this are reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    /// Dense up to `auto_dense_max`, Lanczos beyond.
    Auto,
    Dense,
    Lanczos,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Registers at or below this size are solved densely under `Auto`.
    pub auto_dense_max: usize,
    /// Hard limit for the dense path.
    pub dense_limit: usize,
    /// Required `‖Hψ - Eψ‖` for each reported Lanczos eigenpair.
    pub residual_tol: f64,
    /// Krylov basis size before a restart.
    pub basis_size: usize,
    pub max_restarts: usize,
    /// Seed of the random Lanczos start vector.
    pub seed: u64,
    /// Bytes the Krylov basis may occupy; shrinks `basis_size` if needed.
    pub memory_budget: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::Auto,
            auto_dense_max: 8,
            dense_limit: 12,
            residual_tol: 1e-8,
            basis_size: 48,
            max_restarts: 400,
            seed: 42,
            memory_budget: 1 << 31,
        }
    }
}

/// Lowest eigenvalue, gap and ground state.
#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub ground_energy: f64,
    pub gap: f64,
    pub ground_state: StateVector,
    pub residual: f64,
    pub method: SolverMethod,
    pub seed: u64,
    pub matvecs: usize,
}

/// JSON view of a [`SpectrumResult`] without the amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub n_qubits: usize,
    pub ground_energy: f64,
    pub gap: f64,
    pub degenerate: bool,
    pub residual: f64,
    pub method: SolverMethod,
    pub seed: u64,
    pub matvecs: usize,
}

impl SpectrumResult {
    pub fn summary(&self) -> SpectrumSummary {
        SpectrumSummary {
            n_qubits: self.ground_state.n_qubits(),
            ground_energy: self.ground_energy,
            gap: self.gap,
            degenerate: self.gap < DEGENERACY_TOL,
            residual: self.residual,
            method: self.method,
            seed: self.seed,
            matvecs: self.matvecs,
        }
    }
}

pub fn ground_state(h: &PauliSum) -> Result<SpectrumResult> {
    ground_state_with(h, &SolverConfig::default())
}

pub fn ground_state_with(h: &PauliSum, cfg: &SolverConfig) -> Result<SpectrumResult> {
    let n = h.n_qubits();
    let method = match cfg.method {
        SolverMethod::Auto if n <= cfg.auto_dense_max.min(cfg.dense_limit) => SolverMethod::Dense,
        SolverMethod::Auto => SolverMethod::Lanczos,
        m => m,
    };
    match method {
        SolverMethod::Dense => dense_ground_state(h, cfg),
        _ => lanczos_ground_state(h, cfg),
    }
}

/// Full spectrum of a small Hamiltonian, ascending, with eigenvectors as columns.
pub fn dense_eigen(h: &PauliSum, limit: usize) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    hermitian_eigen(&h.to_dense_with_limit(limit)?)
}

/// Eigenvalues (ascending) and orthonormal eigenvector columns of a
/// Hermitian matrix; only the lower triangle is read.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    let a = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    let eig = a
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Argument(format!("eigendecomposition failed: {e:?}")))?;
    let (u, s) = (eig.U(), eig.S().column_vector());
    let vals = (0..n).map(|k| s[k].re).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| {
        let z = u[(r, c)];
        Complex64::new(z.re, z.im)
    });
    Ok((vals, vecs))
}

fn dense_ground_state(h: &PauliSum, cfg: &SolverConfig) -> Result<SpectrumResult> {
    let n = h.n_qubits();
    let (vals, vecs) = dense_eigen(h, cfg.dense_limit)?;
    let gs: Vec<Complex64> = vecs.column(0).iter().copied().collect();
    let mut state = StateVector::from_amplitudes(n, gs)?;
    state.normalize()?;
    let op = CompiledOperator::new(h)?;
    let residual = residual_norm(&op, state.amplitudes(), vals[0]);
    let gap = if vals.len() > 1 { (vals[1] - vals[0]).max(0.0) } else { 0.0 };
    Ok(SpectrumResult {
        ground_energy: vals[0],
        gap,
        ground_state: state,
        residual,
        method: SolverMethod::Dense,
        seed: cfg.seed,
        matvecs: 0,
    })
}

fn residual_norm(op: &CompiledOperator, x: &[Complex64], e: f64) -> f64 {
    let mut hx = vec![ZERO; x.len()];
    op.apply(x, &mut hx);
    axpy(Complex64::new(-e, 0.0), x, &mut hx);
    norm_sqr(&hx).sqrt()
}

fn project_out(v: &mut [Complex64], against: &[&[Complex64]]) {
    for u in against {
        let h = inner(u, v);
        axpy(-h, u, v);
    }
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let nrm = norm_sqr(v).sqrt();
    if nrm > 0.0 {
        let inv = 1.0 / nrm;
        v.iter_mut().for_each(|a| *a *= inv);
    }
    nrm
}

struct EigenPair {
    value: f64,
    vector: Vec<Complex64>,
    residual: f64,
    matvecs: usize,
}

/// Lowest eigenpair of `H` restricted to the complement of `deflate`
/// (orthonormal vectors).
fn lanczos_lowest(
    op: &CompiledOperator,
    deflate: &[&[Complex64]],
    start: Vec<Complex64>,
    cfg: &SolverConfig,
) -> Result<EigenPair> {
    let dim = op.dim();
    let avail = dim - deflate.len();
    let by_memory = (cfg.memory_budget / (16 * dim)).max(8);
    let m = cfg.basis_size.min(by_memory).min(avail).max(2.min(avail));
    let keep = 3.min(m.saturating_sub(1)).max(1);

    let mut v0 = start;
    project_out(&mut v0, deflate);
    project_out(&mut v0, deflate);
    if normalize(&mut v0) == 0.0 {
        return Err(Error::Argument("Lanczos start vector lies in the deflated space".into()));
    }

    let mut basis: Vec<Vec<Complex64>> = vec![v0];
    let mut t = DMatrix::<Complex64>::zeros(m, m);
    let mut j0 = 0usize;
    let mut matvecs = 0usize;
    let mut best = (f64::INFINITY, f64::INFINITY);
    let mut w = vec![ZERO; dim];

    for _restart in 0..=cfg.max_restarts {
        let mut m_eff = m;
        let mut beta_last = 0.0;
        let mut next: Option<Vec<Complex64>> = None;
        for j in j0..m {
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            project_out(&mut w, deflate);
            for (i, vi) in basis.iter().enumerate().take(j + 1) {
                let h = inner(vi, &w);
                t[(i, j)] = h;
                t[(j, i)] = h.conj();
            }
            t[(j, j)] = Complex64::new(t[(j, j)].re, 0.0);
            for (i, vi) in basis.iter().enumerate().take(j + 1) {
                axpy(-t[(i, j)], vi, &mut w);
            }
            for vi in basis.iter().take(j + 1) {
                let h = inner(vi, &w);
                axpy(-h, vi, &mut w);
            }
            project_out(&mut w, deflate);
            let beta = normalize(&mut w);
            let scale = t[(j, j)].norm().max(1.0);
            if beta <= 1e-13 * scale {
                m_eff = j + 1;
                beta_last = 0.0;
                break;
            }
            if j + 1 < m {
                basis.push(w.clone());
            } else {
                beta_last = beta;
                next = Some(w.clone());
            }
        }

        let tt = t.view((0, 0), (m_eff, m_eff)).into_owned();
        let (ritz_vals, ritz_vecs) = hermitian_eigen(&tt)?;
        let ritz = |k: usize| -> Vec<Complex64> {
            let y = ritz_vecs.column(k);
            let mut x = vec![ZERO; dim];
            for (i, vi) in basis.iter().enumerate().take(m_eff) {
                axpy(y[i], vi, &mut x);
            }
            x
        };
        let theta0 = ritz_vals[0];
        let est = beta_last * ritz_vecs[(m_eff - 1, 0)].norm();

        if est <= cfg.residual_tol || m_eff < m || next.is_none() {
            let mut x = ritz(0);
            project_out(&mut x, deflate);
            normalize(&mut x);
            let mut hx = vec![ZERO; dim];
            op.apply(&x, &mut hx);
            matvecs += 1;
            project_out(&mut hx, deflate);
            let e = inner(&x, &hx).re;
            axpy(Complex64::new(-e, 0.0), &x, &mut hx);
            let res = norm_sqr(&hx).sqrt();
            best = (res, e);
            if res <= cfg.residual_tol {
                return Ok(EigenPair {
                    value: e,
                    vector: x,
                    residual: res,
                    matvecs,
                });
            }
            if m_eff < m || next.is_none() {
                // Invariant subspace found but residual not met: restart from x.
                basis = vec![x];
                t.fill(ZERO);
                j0 = 0;
                continue;
            }
        } else {
            best = (est, theta0);
        }

        // Thick restart: lowest `keep` Ritz vectors plus the residual direction.
        let k = keep.min(m_eff - 1).max(1);
        let mut new_basis: Vec<Vec<Complex64>> = (0..k).map(ritz).collect();
        t.fill(ZERO);
        for (i, &v) in ritz_vals.iter().take(k).enumerate() {
            t[(i, i)] = Complex64::new(v, 0.0);
        }
        let mut r = next.expect("full basis has a residual vector");
        for u in &new_basis {
            let h = inner(u, &r);
            axpy(-h, u, &mut r);
        }
        normalize(&mut r);
        new_basis.push(r);
        basis = new_basis;
        j0 = k;
    }
    Err(Error::IterationLimit {
        iterations: matvecs,
        residual: best.0,
    })
}

fn random_start(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn lanczos_ground_state(h: &PauliSum, cfg: &SolverConfig) -> Result<SpectrumResult> {
    let n = h.n_qubits();
    let op = CompiledOperator::new(h)?;
    let dim = op.dim();
    let g = lanczos_lowest(&op, &[], random_start(dim, cfg.seed), cfg)?;
    let mut matvecs = g.matvecs;
    let gap = if dim > 1 {
        let e1 = lanczos_lowest(
            &op,
            &[&g.vector],
            random_start(dim, cfg.seed.wrapping_add(1)),
            cfg,
        )?;
        matvecs += e1.matvecs;
        (e1.value - g.value).max(0.0)
    } else {
        0.0
    };
    Ok(SpectrumResult {
        ground_energy: g.value,
        gap,
        ground_state: StateVector::from_amplitudes(n, g.vector)?,
        residual: g.residual,
        method: SolverMethod::Lanczos,
        seed: cfg.seed,
        matvecs,
    })
}

/// Options for [`imaginary_time_evolve_with`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImaginaryTimeConfig {
    /// Registers at or below this size use the dense exponential.
    pub dense_max: usize,
    /// Target global error of the integrated state.
    pub tol: f64,
    /// Smallest step before the integrator gives up.
    pub min_step: f64,
}

impl Default for ImaginaryTimeConfig {
    fn default() -> Self {
        Self {
            dense_max: 10,
            tol: 1e-8,
            min_step: 1e-9,
        }
    }
}

/// Normalized `e^{-τH} ψ0`.
pub fn imaginary_time_evolve(h: &PauliSum, psi0: &StateVector, tau: f64, dtau: f64) -> Result<StateVector> {
    imaginary_time_evolve_with(h, psi0, tau, dtau, &ImaginaryTimeConfig::default())
}

pub fn imaginary_time_evolve_with(
    h: &PauliSum,
    psi0: &StateVector,
    tau: f64,
    dtau: f64,
    cfg: &ImaginaryTimeConfig,
) -> Result<StateVector> {
    if tau < 0.0 || !tau.is_finite() {
        return Err(Error::Argument(format!("tau must be >= 0, got {tau}")));
    }
    if dtau <= 0.0 || !dtau.is_finite() {
        return Err(Error::Argument(format!("dtau must be > 0, got {dtau}")));
    }
    if h.n_qubits() != psi0.n_qubits() {
        return Err(Error::Dimension {
            expected: h.n_qubits(),
            found: psi0.n_qubits(),
        });
    }
    let mut psi = psi0.clone();
    psi.normalize()?;
    if tau == 0.0 {
        return Ok(psi);
    }
    if h.n_qubits() <= cfg.dense_max {
        let (vals, vecs) = dense_eigen(h, cfg.dense_max)?;
        let evolver = DenseEvolver { vals, vecs };
        return evolver.evolve(&psi, tau);
    }
    rk4_evolve(&CompiledOperator::new(h)?, psi, tau, dtau, cfg)
}

/// Spectral decomposition reused across many imaginary times.
pub struct DenseEvolver {
    vals: Vec<f64>,
    vecs: DMatrix<Complex64>,
}

impl DenseEvolver {
    pub fn new(h: &PauliSum, limit: usize) -> Result<Self> {
        let (vals, vecs) = dense_eigen(h, limit)?;
        Ok(Self { vals, vecs })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.vals
    }

    pub fn eigenvector(&self, k: usize) -> StateVector {
        let n = self.vals.len().trailing_zeros() as usize;
        StateVector::from_amplitudes(n, self.vecs.column(k).iter().copied().collect())
            .expect("dimension is a power of two")
    }

    /// Normalized `e^{-τH} ψ`, shifted by the ground energy to avoid overflow.
    pub fn evolve(&self, psi: &StateVector, tau: f64) -> Result<StateVector> {
        let v = DVector::from_column_slice(psi.amplitudes());
        let mut c = self.vecs.adjoint() * v;
        let e0 = self.vals[0];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck *= (-(self.vals[k] - e0) * tau).exp();
        }
        let out = &self.vecs * c;
        let mut s = StateVector::from_amplitudes(psi.n_qubits(), out.iter().copied().collect())?;
        s.normalize()?;
        Ok(s)
    }
}

fn rk4_step(op: &CompiledOperator, psi: &[Complex64], shift: f64, dt: f64) -> Vec<Complex64> {
    let dim = psi.len();
    let deriv = |x: &[Complex64], out: &mut Vec<Complex64>| {
        op.apply(x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = -(*o - xi * shift);
        }
    };
    let mut k1 = vec![ZERO; dim];
    let mut k2 = vec![ZERO; dim];
    let mut k3 = vec![ZERO; dim];
    let mut k4 = vec![ZERO; dim];
    let mut tmp = psi.to_vec();
    deriv(psi, &mut k1);
    axpy(Complex64::new(dt / 2.0, 0.0), &k1, &mut tmp);
    deriv(&tmp, &mut k2);
    tmp.copy_from_slice(psi);
    axpy(Complex64::new(dt / 2.0, 0.0), &k2, &mut tmp);
    deriv(&tmp, &mut k3);
    tmp.copy_from_slice(psi);
    axpy(Complex64::new(dt, 0.0), &k3, &mut tmp);
    deriv(&tmp, &mut k4);
    let mut out = psi.to_vec();
    for i in 0..dim {
        out[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
    }
    normalize(&mut out);
    out
}

fn rk4_evolve(
    op: &CompiledOperator,
    psi: StateVector,
    tau: f64,
    dtau: f64,
    cfg: &ImaginaryTimeConfig,
) -> Result<StateVector> {
    let n = psi.n_qubits();
    let mut x = psi.into_amplitudes();
    let mut t = 0.0;
    let mut dt = dtau.min(tau);
    while t < tau * (1.0 - 1e-14) {
        dt = dt.min(tau - t);
        let (shift, _) = op.mean_and_variance(&x);
        let full = rk4_step(op, &x, shift, dt);
        let half = rk4_step(op, &x, shift, dt / 2.0);
        let (shift2, _) = op.mean_and_variance(&half);
        let two = rk4_step(op, &half, shift2, dt / 2.0);
        let mut diff = 0.0f64;
        for (a, b) in full.iter().zip(&two) {
            diff += (a - b).norm_sqr();
        }
        let err = diff.sqrt() / 15.0;
        let local_tol = cfg.tol * dt / tau;
        if err <= local_tol {
            x = two;
            t += dt;
            if err < local_tol / 32.0 {
                dt = (dt * 2.0).min(dtau);
            }
        } else {
            dt /= 2.0;
            if dt < cfg.min_step {
                return Err(Error::IterationLimit {
                    iterations: 0,
                    residual: err,
                });
            }
        }
    }
    StateVector::from_amplitudes(n, x)
}

/// Imaginary time after which the fidelity bound `1 - (1/δ² - 1) e^{-2Δτ}`
/// reaches `1 - ε`; zero when the bound already holds at τ = 0.
pub fn qite_time_bound(delta_sq: f64, gap: f64, eps: f64) -> Result<f64> {
    if !(delta_sq > 0.0 && delta_sq <= 1.0) {
        return Err(Error::Argument(format!("overlap δ² must lie in (0, 1], got {delta_sq}")));
    }
    if gap <= 0.0 || !gap.is_finite() {
        return Err(Error::Argument(format!("gap must be > 0, got {gap}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Argument(format!("ε must lie in (0, 1), got {eps}")));
    }
    let arg = (1.0 / delta_sq - 1.0) / eps;
    if arg <= 1.0 {
        return Ok(0.0);
    }
    Ok(arg.ln() / (2.0 * gap))
}

/// Lower bound on the ground-state fidelity after imaginary time `tau`.
pub fn qite_fidelity_bound(delta_sq: f64, gap: f64, tau: f64) -> f64 {
    1.0 - (1.0 / delta_sq - 1.0) * (-2.0 * gap * tau).exp()
}

/// `|⟨Néel|g⟩|` for the model's exact ground state.
pub fn initial_overlap(spec: &ModelSpec) -> Result<f64> {
    initial_overlap_with(spec, &SolverConfig::default())
}

pub fn initial_overlap_with(spec: &ModelSpec, cfg: &SolverConfig) -> Result<f64> {
    let h = build_hamiltonian(spec)?;
    let r = ground_state_with(&h, cfg)?;
    Ok(overlap_with_neel(&r.ground_state))
}

pub fn overlap_with_neel(state: &StateVector) -> f64 {
    let a = state.amplitudes()[neel_index(state.n_qubits())];
    (a.norm() / state.norm()).min(1.0)
}
