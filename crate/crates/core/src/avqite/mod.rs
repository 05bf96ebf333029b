//! Adaptive variational quantum imaginary-time evolution (AVQITE).
//!
//! The ansatz is `|ψ(θ)⟩ = e^{-iθ_N A_N} ⋯ e^{-iθ_1 A_1} |ref⟩` with Pauli
//! generators `A_k` drawn from an operator pool. Each iteration evaluates
//! the McLachlan metric `M` and gradient `V`, grows the ansatz while the
//! McLachlan distance `L²` exceeds its threshold, and takes an Euler step
//! `θ ← θ + δτ (M + λI)⁻¹ V`.

mod engine;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ground_state_with, SolverConfig};
use crate::model::ModelSpec;
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::statevector::StateVector;

use engine::{clamp_l2, Engine};

/// Which two-qubit strings accompany the `Y Y Z` three-qubit strings.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PoolKind {
    #[serde(rename = "XY_YYZ")]
    XyYyz,
    #[serde(rename = "YY_YYZ")]
    YyYyz,
}

impl PoolKind {
    pub fn tag(self) -> &'static str {
        match self {
            PoolKind::XyYyz => "XY_YYZ",
            PoolKind::YyYyz => "YY_YYZ",
        }
    }
}

impl fmt::Display for PoolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for PoolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "XY_YYZ" | "XY" => Ok(PoolKind::XyYyz),
            "YY_YYZ" | "YY" => Ok(PoolKind::YyYyz),
            _ => Err(Error::Argument(format!("unknown pool '{s}', expected XY_YYZ or YY_YYZ"))),
        }
    }
}

/// The candidate generators: every two-qubit string on a pair `i < j`
/// (`X_i Y_j` or `Y_i Y_j`), then every `Y_i Y_j Z_k` with `i < j` and
/// `k ∉ {i, j}`.
#[derive(Clone, Debug)]
pub struct OperatorPool {
    kind: PoolKind,
    n_qubits: usize,
    generators: Vec<PauliString>,
    two_local: usize,
}

impl OperatorPool {
    pub fn new(n_qubits: usize, kind: PoolKind) -> Result<Self> {
        if n_qubits < 3 {
            return Err(Error::Argument(format!(
                "three-local pool strings need at least 3 qubits, got {n_qubits}"
            )));
        }
        let first = match kind {
            PoolKind::XyYyz => Pauli::X,
            PoolKind::YyYyz => Pauli::Y,
        };
        let mut generators = Vec::with_capacity(pool_size(n_qubits));
        for i in 0..n_qubits {
            for j in i + 1..n_qubits {
                generators.push(PauliString::from_ops(n_qubits, &[(i, first), (j, Pauli::Y)])?);
            }
        }
        let two_local = generators.len();
        for i in 0..n_qubits {
            for j in i + 1..n_qubits {
                for k in (0..n_qubits).filter(|&k| k != i && k != j) {
                    generators.push(PauliString::from_ops(
                        n_qubits,
                        &[(i, Pauli::Y), (j, Pauli::Y), (k, Pauli::Z)],
                    )?);
                }
            }
        }
        Ok(Self {
            kind,
            n_qubits,
            generators,
            two_local,
        })
    }

    pub fn kind(&self) -> PoolKind {
        self.kind
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    pub fn two_local_count(&self) -> usize {
        self.two_local
    }
}

/// `n(n-1)/2 + n(n-1)(n-2)/2`.
pub fn pool_size(n_qubits: usize) -> usize {
    let n = n_qubits;
    n * n.saturating_sub(1) / 2 + n * n.saturating_sub(1) * n.saturating_sub(2) / 2
}

pub fn build_pool(n_qubits: usize, kind: PoolKind) -> Result<OperatorPool> {
    OperatorPool::new(n_qubits, kind)
}

/// Generators and angles applied to a fixed reference state, first entry
/// first. Generators may repeat.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzState {
    reference: StateVector,
    generators: Vec<PauliString>,
    thetas: Vec<f64>,
}

/// Serializable form of an ansatz (the reference is not included).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzRecord {
    pub n_qubits: usize,
    pub generators: Vec<String>,
    pub thetas: Vec<f64>,
}

impl AnsatzState {
    pub fn new(reference: StateVector) -> Self {
        Self {
            reference,
            generators: Vec::new(),
            thetas: Vec::new(),
        }
    }

    /// Starts from the Néel basis state (odd qubits occupied).
    pub fn neel(n_qubits: usize) -> Result<Self> {
        Ok(Self::new(StateVector::neel(n_qubits)?))
    }

    pub fn with_generators(reference: StateVector, generators: Vec<PauliString>, thetas: Vec<f64>) -> Result<Self> {
        let mut s = Self::new(reference);
        if generators.len() != thetas.len() {
            return Err(Error::Dimension {
                expected: generators.len(),
                found: thetas.len(),
            });
        }
        for (g, t) in generators.into_iter().zip(thetas) {
            s.push(g, t)?;
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.reference.n_qubits()
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn reference(&self) -> &StateVector {
        &self.reference
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn set_thetas(&mut self, thetas: &[f64]) -> Result<()> {
        if thetas.len() != self.thetas.len() {
            return Err(Error::Dimension {
                expected: self.thetas.len(),
                found: thetas.len(),
            });
        }
        self.thetas.copy_from_slice(thetas);
        Ok(())
    }

    /// Appends a generator applied after all existing ones.
    pub fn push(&mut self, generator: PauliString, theta: f64) -> Result<()> {
        if generator.n_qubits() != self.n_qubits() {
            return Err(Error::Dimension {
                expected: self.n_qubits(),
                found: generator.n_qubits(),
            });
        }
        self.generators.push(generator.canonical());
        self.thetas.push(theta);
        Ok(())
    }

    /// The prepared state `U(θ)|ref⟩`.
    pub fn state(&self) -> Result<StateVector> {
        let mut amps = self.reference.amplitudes().to_vec();
        for (g, &t) in self.generators.iter().zip(&self.thetas) {
            crate::statevector::PauliKernel::new(g)?.rotate(t, &mut amps);
        }
        StateVector::from_amplitudes(self.n_qubits(), amps)
    }

    pub fn two_local_count(&self) -> usize {
        self.generators.iter().filter(|g| g.weight() == 2).count()
    }

    pub fn three_local_count(&self) -> usize {
        self.generators.iter().filter(|g| g.weight() == 3).count()
    }

    pub fn to_record(&self) -> AnsatzRecord {
        AnsatzRecord {
            n_qubits: self.n_qubits(),
            generators: self.generators.iter().map(|g| g.label()).collect(),
            thetas: self.thetas.clone(),
        }
    }

    pub fn from_record(record: &AnsatzRecord, reference: StateVector) -> Result<Self> {
        let gens = record
            .generators
            .iter()
            .map(|l| PauliString::from_label(l))
            .collect::<Result<Vec<_>>>()?;
        Self::with_generators(reference, gens, record.thetas.clone())
    }

    fn engine(&self, h: &PauliSum, extra: &[PauliString], budget: usize) -> Result<Engine> {
        Engine::new(&self.reference, &self.generators, &self.thetas, h, extra, budget)
    }
}

/// Update, growth and stopping parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AvqiteConfig {
    /// Euler time step `δτ`.
    pub dtau: f64,
    /// Grow the ansatz while `L²` exceeds this.
    pub l2_cut: f64,
    /// Stop once every gradient component is below this.
    pub v_cut: f64,
    /// Tikhonov shift `λ` added to the metric before solving.
    pub ridge: f64,
    /// Most generators appended per iteration.
    pub max_ops_per_step: usize,
    /// Iteration cap.
    pub max_steps: usize,
    /// Optional cap on accumulated imaginary time.
    pub max_tau: Option<f64>,
    /// Step halvings allowed when the energy rises.
    pub max_halvings: usize,
    /// Energy increase tolerated without halving.
    pub energy_tol: f64,
    /// Candidates given the exact Schur score after screening; the whole
    /// pool when this is at least the pool size.
    pub screen_width: usize,
    /// Bytes available for stored tangent vectors.
    pub memory_budget: usize,
    /// Also solve exactly for the reference energy and fidelity.
    pub compare_exact: bool,
}

impl Default for AvqiteConfig {
    fn default() -> Self {
        Self {
            dtau: 0.02,
            l2_cut: 1e-2,
            v_cut: 1e-4,
            ridge: 1e-6,
            max_ops_per_step: 5,
            max_steps: 5000,
            max_tau: None,
            max_halvings: 4,
            energy_tol: 1e-6,
            screen_width: 64,
            memory_budget: 3 << 30,
            compare_exact: true,
        }
    }
}

impl AvqiteConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Argument(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos(self.dtau, "dtau")?;
        pos(self.l2_cut, "l2_cut")?;
        pos(self.v_cut, "v_cut")?;
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(Error::Argument(format!("ridge must be non-negative, got {}", self.ridge)));
        }
        if self.screen_width == 0 {
            return Err(Error::Argument("screen_width must be at least 1".into()));
        }
        Ok(())
    }
}

/// One iteration of the run, recorded after growth and before the step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub tau: f64,
    pub energy: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    pub n_ops: usize,
    pub max_abs_v: f64,
    pub added: usize,
    pub halvings: usize,
}

pub const TRACE_HEADER: &str = "step,tau,energy,L2,n_ops,max_abs_V";

/// Outcome of [`run`].
#[derive(Clone, Debug)]
pub struct AvqiteResult {
    pub model: ModelSpec,
    pub pool: PoolKind,
    pub energy: f64,
    pub exact_energy: Option<f64>,
    pub relative_error: Option<f64>,
    pub fidelity: Option<f64>,
    pub converged: bool,
    pub steps: usize,
    pub tau: f64,
    pub ansatz: AnsatzState,
    pub trace: Vec<TraceRecord>,
    pub warnings: Vec<String>,
}

/// Serializable digest of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvqiteSummary {
    pub model: ModelSpec,
    pub pool: PoolKind,
    pub energy: f64,
    pub exact_energy: Option<f64>,
    pub relative_error: Option<f64>,
    pub fidelity: Option<f64>,
    pub converged: bool,
    pub steps: usize,
    pub tau: f64,
    pub n_ops: usize,
    pub two_local: usize,
    pub three_local: usize,
    pub warnings: Vec<String>,
}

impl AvqiteResult {
    pub fn summary(&self) -> AvqiteSummary {
        AvqiteSummary {
            model: self.model,
            pool: self.pool,
            energy: self.energy,
            exact_energy: self.exact_energy,
            relative_error: self.relative_error,
            fidelity: self.fidelity,
            converged: self.converged,
            steps: self.steps,
            tau: self.tau,
            n_ops: self.ansatz.len(),
            two_local: self.ansatz.two_local_count(),
            three_local: self.ansatz.three_local_count(),
            warnings: self.warnings.clone(),
        }
    }

    pub fn trace_csv(&self) -> String {
        let mut s = String::from(TRACE_HEADER);
        s.push('\n');
        for r in &self.trace {
            s.push_str(&format!(
                "{},{},{:.12},{:.6e},{},{:.6e}\n",
                r.step, r.tau, r.energy, r.l2, r.n_ops, r.max_abs_v
            ));
        }
        s
    }
}

/// `M_{μν} = 2 Re[⟨∂_μψ|∂_νψ⟩ + ⟨∂_μψ|ψ⟩⟨∂_νψ|ψ⟩]`, derivatives by
/// generator insertion.
pub fn metric_matrix(state: &AnsatzState) -> Result<DMatrix<f64>> {
    let h = PauliSum::new(state.n_qubits())?;
    let e = state.engine(&h, &[], usize::MAX)?;
    Ok(e.snapshot(0)?.m)
}

/// `V_μ = -2 Re⟨∂_μψ|H|ψ⟩ = -∂⟨H⟩/∂θ_μ`.
pub fn gradient_vector(state: &AnsatzState, h: &PauliSum) -> Result<DVector<f64>> {
    let e = state.engine(h, &[], usize::MAX)?;
    Ok(e.snapshot(0)?.v)
}

/// `⟨H⟩` and `Var(H)` in the prepared state.
pub fn energy_moments(state: &AnsatzState, h: &PauliSum) -> Result<(f64, f64)> {
    let e = state.engine(h, &[], usize::MAX)?;
    Ok(e.moments(&e.prepare(&e.thetas)))
}

/// `L² = 2 Var(H) - Vᵀ (M + λI)⁻¹ V`, with roundoff below zero clamped.
pub fn mclachlan_distance(m: &DMatrix<f64>, v: &DVector<f64>, var_h: f64, ridge: f64) -> Result<f64> {
    let n = v.len();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            found: m.nrows(),
        });
    }
    if n == 0 {
        return Ok(2.0 * var_h);
    }
    let mut k = m.clone();
    for i in 0..n {
        k[(i, i)] += ridge;
    }
    let ch = k
        .cholesky()
        .ok_or_else(|| Error::Argument("M + λI is not positive definite".into()))?;
    Ok(clamp_l2(2.0 * var_h - v.dot(&ch.solve(v))))
}

/// Result of one Euler update.
#[derive(Clone, Debug)]
pub struct StepReport {
    pub state: AnsatzState,
    pub energy_before: f64,
    pub energy_after: f64,
    pub dtau_used: f64,
    pub halvings: usize,
    pub l2: f64,
}

/// One Euler step `θ ← θ + δτ (M + λI)⁻¹ V`, halving `δτ` while the energy
/// rises by more than the tolerance.
pub fn step(state: &AnsatzState, h: &PauliSum, cfg: &AvqiteConfig) -> Result<StepReport> {
    cfg.validate()?;
    let e = state.engine(h, &[], cfg.memory_budget)?;
    let snap = e.snapshot(0)?;
    let (rate, l2) = snap.solve(cfg.ridge)?;
    let (thetas, energy_after, dtau_used, halvings) = euler(&e, &rate, snap.energy, cfg);
    let mut next = state.clone();
    next.set_thetas(&thetas)?;
    Ok(StepReport {
        state: next,
        energy_before: snap.energy,
        energy_after,
        dtau_used,
        halvings,
        l2,
    })
}

fn euler(e: &Engine, rate: &DVector<f64>, energy: f64, cfg: &AvqiteConfig) -> (Vec<f64>, f64, f64, usize) {
    let mut dt = cfg.dtau;
    let mut halvings = 0;
    loop {
        let trial: Vec<f64> = e.thetas.iter().zip(rate.iter()).map(|(t, r)| t + dt * r).collect();
        let en = e.energy(&e.prepare(&trial));
        if en <= energy + cfg.energy_tol || halvings >= cfg.max_halvings {
            return (trial, en, dt, halvings);
        }
        dt *= 0.5;
        halvings += 1;
    }
}

/// Result of growing an ansatz.
#[derive(Clone, Debug)]
pub struct AdaptReport {
    pub state: AnsatzState,
    /// Pool indices appended, in order.
    pub added: Vec<usize>,
    pub l2_before: f64,
    pub l2_after: f64,
}

/// Appends, at zero angle, the pool generators that most decrease `L²`
/// while `L²` exceeds the threshold, at most `max_ops_per_step` of them.
pub fn adapt(state: &AnsatzState, h: &PauliSum, pool: &OperatorPool, cfg: &AvqiteConfig) -> Result<AdaptReport> {
    cfg.validate()?;
    let mut e = state.engine(h, pool.generators(), cfg.memory_budget)?;
    let kernels = pool
        .generators()
        .iter()
        .map(|g| e.kernel(g))
        .collect::<Result<Vec<_>>>()?;
    let mut snap = e.snapshot(cfg.max_ops_per_step)?;
    let (_, l2_before) = snap.solve(cfg.ridge)?;
    let mut next = state.clone();
    let (added, l2_after) = grow(&mut e, &mut snap, pool, &kernels, cfg, l2_before, &mut next)?;
    Ok(AdaptReport {
        state: next,
        added,
        l2_before,
        l2_after,
    })
}

/// Smallest decrease worth a new parameter.
const MIN_DECREASE: f64 = 1e-14;

fn grow(
    e: &mut Engine,
    snap: &mut engine::Snapshot,
    pool: &OperatorPool,
    kernels: &[crate::statevector::PauliKernel],
    cfg: &AvqiteConfig,
    mut l2: f64,
    state: &mut AnsatzState,
) -> Result<(Vec<usize>, f64)> {
    let mut added = Vec::new();
    while l2 > cfg.l2_cut && added.len() < cfg.max_ops_per_step {
        let scores = snap.score(kernels, cfg.ridge, cfg.screen_width)?;
        let Some(best) = scores.first() else { break };
        if best.decrease <= MIN_DECREASE {
            break;
        }
        let g = pool.generators()[best.index].clone();
        snap.append(&kernels[best.index])?;
        e.push(&g, 0.0)?;
        state.push(g, 0.0)?;
        added.push(best.index);
        l2 = snap.solve(cfg.ridge)?.1;
    }
    Ok((added, l2))
}

/// Exact `L²` after appending each pool generator, for every candidate;
/// the reference for selection checks on small registers.
pub fn candidate_distances(state: &AnsatzState, h: &PauliSum, pool: &OperatorPool, ridge: f64) -> Result<Vec<f64>> {
    let e = state.engine(h, pool.generators(), usize::MAX)?;
    let kernels = pool
        .generators()
        .iter()
        .map(|g| e.kernel(g))
        .collect::<Result<Vec<_>>>()?;
    let snap = e.snapshot(0)?;
    let (_, l2) = snap.solve(ridge)?;
    let mut out = vec![l2; pool.len()];
    for s in snap.score(&kernels, ridge, pool.len())? {
        out[s.index] = clamp_l2(l2 - s.decrease);
    }
    Ok(out)
}

/// Runs AVQITE from the Néel state on the model Hamiltonian.
pub fn run(spec: &ModelSpec, pool_kind: PoolKind, cfg: &AvqiteConfig) -> Result<AvqiteResult> {
    run_with_observer(spec, pool_kind, cfg, |_| {})
}

/// [`run`], calling `observe` with each trace record as it is produced.
pub fn run_with_observer<F>(spec: &ModelSpec, pool_kind: PoolKind, cfg: &AvqiteConfig, mut observe: F) -> Result<AvqiteResult>
where
    F: FnMut(&TraceRecord),
{
    spec.validate()?;
    cfg.validate()?;
    let h = crate::model::build_hamiltonian(spec)?;
    let n = spec.n_qubits();
    let pool = OperatorPool::new(n, pool_kind)?;
    let mut state = AnsatzState::neel(n)?;
    let mut e = state.engine(&h, pool.generators(), cfg.memory_budget)?;
    let kernels = pool
        .generators()
        .iter()
        .map(|g| e.kernel(g))
        .collect::<Result<Vec<_>>>()?;

    let mut trace = Vec::new();
    let mut warnings = Vec::new();
    let mut tau = 0.0;
    let mut converged = false;
    let mut steps = 0;
    let mut energy;
    loop {
        let mut snap = e.snapshot(cfg.max_ops_per_step)?;
        energy = snap.energy;
        let (_, l2) = snap.solve(cfg.ridge)?;
        if steps >= cfg.max_steps || cfg.max_tau.is_some_and(|t| tau >= t - 1e-12) {
            let record = TraceRecord {
                step: steps,
                tau,
                energy,
                l2,
                n_ops: snap.len(),
                max_abs_v: snap.max_abs_v(),
                added: 0,
                halvings: 0,
            };
            observe(&record);
            trace.push(record);
            break;
        }
        let (added, l2) = grow(&mut e, &mut snap, &pool, &kernels, cfg, l2, &mut state)?;
        if l2 > cfg.l2_cut && added.len() < cfg.max_ops_per_step {
            warnings.push(format!(
                "step {steps}: no pool generator lowers L² = {l2:.3e} further"
            ));
        }
        let max_v = snap.max_abs_v();
        let mut record = TraceRecord {
            step: steps,
            tau,
            energy,
            l2,
            n_ops: snap.len(),
            max_abs_v: max_v,
            added: added.len(),
            halvings: 0,
        };
        if max_v < cfg.v_cut {
            converged = true;
            observe(&record);
            trace.push(record);
            break;
        }
        let (rate, _) = snap.solve(cfg.ridge)?;
        let (thetas, en, dt, halvings) = euler(&e, &rate, energy, cfg);
        if en > energy + cfg.energy_tol {
            warnings.push(format!(
                "step {steps}: energy rose by {:.3e} after {halvings} halvings",
                en - energy
            ));
        }
        record.halvings = halvings;
        observe(&record);
        trace.push(record);
        e.thetas = thetas;
        state.set_thetas(&e.thetas)?;
        tau += dt;
        steps += 1;
    }

    let psi = e.expand(e.prepare(&e.thetas))?;
    let (exact_energy, fidelity) = if cfg.compare_exact {
        let exact = ground_state_with(&h, &SolverConfig::default())?;
        let f = exact.ground_state.fidelity(&psi)?;
        (Some(exact.ground_energy), Some(f))
    } else {
        (None, None)
    };
    let relative_error = exact_energy.map(|e0| ((energy - e0) / e0).abs());
    Ok(AvqiteResult {
        model: *spec,
        pool: pool_kind,
        energy,
        exact_energy,
        relative_error,
        fidelity,
        converged,
        steps,
        tau,
        ansatz: state,
        trace,
        warnings,
    })
}
