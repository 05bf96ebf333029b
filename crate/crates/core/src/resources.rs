//! Resource estimates for simulating `exp(-iHt)`.
//!
//! Covers commuting-cluster partitions and their Trotter commutator
//! bounds, per-step gate counts under an explicit circuit convention, the
//! LCU normalization with the QSVT degree, and the asymptotic cost curves
//! comparing product formulas with QSVT.
//!
//! Logarithms inside cost formulas are natural logarithms, and every unit
//! constant hidden by big-O notation is set to one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::dense_eigen;
use crate::model::{build_hamiltonian, ModelKind, ModelSpec};
use crate::pauli::{PauliOperator, PauliString, PauliSum};
use num_complex::Complex64;

/// Largest register for which commutator norms are computed densely.
pub const EXACT_DENSE_MAX_QUBITS: usize = 10;
/// Trotter orders accepted by [`trotter_steps`].
pub const SUPPORTED_ORDERS: [u32; 6] = [1, 2, 4, 6, 8, 10];
/// Coefficient groups loaded by PREP in the block encoding.
pub const DEFAULT_PREP_GROUPS: u64 = 3;

/// Hamiltonian terms split into internally commuting clusters.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterPartition {
    pub clusters: Vec<PauliSum>,
}

impl ClusterPartition {
    /// Number of clusters, `Γ`.
    pub fn gamma(&self) -> usize {
        self.clusters.len()
    }

    pub fn n_terms(&self) -> usize {
        self.clusters.iter().map(PauliSum::len).sum()
    }
}

/// Greedy coloring of the anticommutation graph: vertices are visited by
/// decreasing degree (ties by term order) and take the smallest color not
/// used by an already colored neighbour. The identity is dropped.
pub fn color_clusters(h: &PauliSum) -> ClusterPartition {
    let terms: Vec<(PauliString, f64)> = h.iter().filter(|(p, _)| !p.is_identity()).collect();
    let n = terms.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if !terms[i].0.commutes(&terms[j].0).expect("terms share a register") {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| adj[b].len().cmp(&adj[a].len()).then(a.cmp(&b)));
    let mut color = vec![usize::MAX; n];
    let mut used = Vec::new();
    for &v in &order {
        used.clear();
        used.extend(adj[v].iter().map(|&u| color[u]).filter(|&c| c != usize::MAX));
        used.sort_unstable();
        used.dedup();
        let mut c = 0;
        while used.binary_search(&c).is_ok() {
            c += 1;
        }
        color[v] = c;
    }
    let gamma = color.iter().map(|&c| c + 1).max().unwrap_or(0);
    let mut clusters = vec![PauliSum::new(h.n_qubits()).expect("register already valid"); gamma];
    for (v, (p, c)) in terms.iter().enumerate() {
        clusters[color[v]].add_term(*c, p).expect("register already valid");
    }
    ClusterPartition { clusters }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommutatorMode {
    /// Spectral norms of the pairwise commutators, from dense matrices.
    ExactDense,
    /// `‖[A,B]‖ ≤ 2‖A‖‖B‖` with coefficient 1-norms for each cluster.
    NormProduct,
}

impl CommutatorMode {
    pub fn tag(&self) -> &'static str {
        match self {
            CommutatorMode::ExactDense => "exact_dense",
            CommutatorMode::NormProduct => "norm_product",
        }
    }
}

impl fmt::Display for CommutatorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for CommutatorMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_dense" | "exact" => Ok(CommutatorMode::ExactDense),
            "norm_product" | "bound" => Ok(CommutatorMode::NormProduct),
            _ => Err(Error::Argument(format!("unknown commutator mode {s:?}"))),
        }
    }
}

fn to_operator(h: &PauliSum) -> PauliOperator {
    let mut op = PauliOperator::new(h.n_qubits()).expect("register already valid");
    for (p, c) in h.iter() {
        op.add_term(Complex64::new(c, 0.0), &p);
    }
    op
}

/// `‖[A, B]‖` computed as the largest eigenvalue magnitude of `i[A, B]`.
fn commutator_norm(a: &PauliSum, b: &PauliSum) -> Result<f64> {
    let (oa, ob) = (to_operator(a), to_operator(b));
    let mut c = oa.multiply(&ob);
    let mut ba = ob.multiply(&oa);
    ba.scale(Complex64::new(-1.0, 0.0));
    c.add_assign(&ba);
    c.scale(Complex64::new(0.0, 1.0));
    let herm = c.into_hermitian(1e-12, 1e-9)?;
    if herm.is_empty() {
        return Ok(0.0);
    }
    let (vals, _) = dense_eigen(&herm, EXACT_DENSE_MAX_QUBITS)?;
    Ok(vals.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// `α̃ = Σ_{j<k} ‖[H_j, H_k]‖`, exactly or as the norm-product bound.
pub fn commutator_bound(partition: &ClusterPartition, mode: CommutatorMode) -> Result<f64> {
    let cl = &partition.clusters;
    if mode == CommutatorMode::ExactDense {
        if let Some(n) = cl.first().map(PauliSum::n_qubits) {
            if n > EXACT_DENSE_MAX_QUBITS {
                return Err(Error::Capacity {
                    what: "dense commutator norm qubits",
                    requested: n,
                    limit: EXACT_DENSE_MAX_QUBITS,
                });
            }
        }
    }
    let mut total = 0.0;
    for j in 0..cl.len() {
        for k in j + 1..cl.len() {
            total += match mode {
                CommutatorMode::ExactDense => commutator_norm(&cl[j], &cl[k])?,
                CommutatorMode::NormProduct => 2.0 * cl[j].one_norm() * cl[k].one_norm(),
            };
        }
    }
    Ok(total)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Argument(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn ceil_count(v: f64) -> Result<u64> {
    if !v.is_finite() || v >= u64::MAX as f64 {
        return Err(Error::Argument(format!("step count {v:e} does not fit in 64 bits")));
    }
    Ok(v.ceil() as u64)
}

/// Trotter steps for error `ε` at time `t`.
///
/// First order: `⌈t² α̃ / (2ε)⌉`. Order `p > 1`:
/// `⌈Γ t (t/ε)^{1/p} α̃^{(p+1)/p} 2^{1/p}⌉`, using the nested commutator
/// chain `α̃_{p+1} ≤ 2^p α̃^{p+1}`.
pub fn trotter_steps(alpha: f64, t: f64, eps: f64, p: u32, gamma: usize) -> Result<u64> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::Argument(format!("commutator norm must be non-negative, got {alpha}")));
    }
    positive("t", t)?;
    positive("epsilon", eps)?;
    if !SUPPORTED_ORDERS.contains(&p) {
        return Err(Error::Argument(format!("Trotter order {p} not in {SUPPORTED_ORDERS:?}")));
    }
    let pf = p as f64;
    let steps = if p == 1 {
        t * t * alpha / (2.0 * eps)
    } else {
        gamma as f64 * t * (t / eps).powf(1.0 / pf) * alpha.powf((pf + 1.0) / pf) * 2f64.powf(1.0 / pf)
    };
    ceil_count(steps)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateConvention {
    /// Basis change to Z, CX parity ladder, one Z rotation, then undo.
    RotationLadder,
}

impl GateConvention {
    pub fn tag(&self) -> &'static str {
        match self {
            GateConvention::RotationLadder => "rotation_ladder",
        }
    }
}

/// Gate totals for one first-order Trotter step.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub pauli_terms: u64,
    pub cx: u64,
    pub rotations: u64,
    pub basis_changes: u64,
}

impl GateCounts {
    /// CX, basis-change Cliffords and rotations, each counted as one gate.
    pub fn clifford_t(&self) -> u64 {
        self.cx + self.basis_changes + self.rotations
    }
}

impl std::ops::Add for GateCounts {
    type Output = GateCounts;
    fn add(self, o: GateCounts) -> GateCounts {
        GateCounts {
            pauli_terms: self.pauli_terms + o.pauli_terms,
            cx: self.cx + o.cx,
            rotations: self.rotations + o.rotations,
            basis_changes: self.basis_changes + o.basis_changes,
        }
    }
}

/// A weight-`w` string costs `2(w-1)` CX, one rotation and two Cliffords
/// per X or Y factor. The identity costs nothing.
pub fn gate_counts(h: &PauliSum, convention: GateConvention) -> GateCounts {
    match convention {
        GateConvention::RotationLadder => h
            .iter()
            .filter(|(p, _)| !p.is_identity())
            .map(|(p, _)| GateCounts {
                pauli_terms: 1,
                cx: 2 * (p.weight() as u64 - 1),
                rotations: 1,
                basis_changes: 2 * p.x_count() as u64,
            })
            .fold(GateCounts::default(), |a, b| a + b),
    }
}

/// One row of the published gate-count tables.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceCounts {
    /// Pauli strings including the identity.
    pub pauli_strings: u64,
    pub cx: u64,
    pub clifford_t: u64,
}

/// (model, L, Nf, strings, CX, Clifford+T) for every published row.
const REFERENCE_TABLE: [(ModelKind, usize, usize, u64, u64, u64); 14] = [
    (ModelKind::GrossNeveu, 10, 2, 173, 624, 1400),
    (ModelKind::GrossNeveu, 20, 2, 353, 1304, 2940),
    (ModelKind::GrossNeveu, 40, 2, 713, 2664, 6020),
    (ModelKind::GrossNeveu, 100, 2, 1793, 6744, 15260),
    (ModelKind::GrossNeveu, 10, 4, 505, 1604, 3291),
    (ModelKind::GrossNeveu, 10, 6, 997, 2994, 5538),
    (ModelKind::GrossNeveu, 10, 8, 1649, 4902, 8348),
    (ModelKind::Thirring, 10, 2, 213, 704, 1960),
    (ModelKind::Thirring, 20, 2, 433, 1464, 3460),
    (ModelKind::Thirring, 40, 2, 873, 2984, 8260),
    (ModelKind::Thirring, 100, 2, 2193, 7544, 20860),
    (ModelKind::Thirring, 10, 4, 745, 2124, 4811),
    (ModelKind::Thirring, 10, 6, 1597, 4474, 8398),
    (ModelKind::Thirring, 10, 8, 2769, 8022, 13228),
];

/// Published counts for `(model, L, Nf)`, when tabulated.
pub fn reference_counts(model: ModelKind, l: usize, nf: usize) -> Option<ReferenceCounts> {
    REFERENCE_TABLE
        .iter()
        .find(|r| r.0 == model && r.1 == l && r.2 == nf)
        .map(|r| ReferenceCounts {
            pauli_strings: r.3,
            cx: r.4,
            clifford_t: r.5,
        })
}

/// `Σ |c_j|` over the non-identity terms.
pub fn lcu_one_norm(h: &PauliSum) -> f64 {
    h.iter().filter(|(p, _)| !p.is_identity()).map(|(_, c)| c.abs()).sum()
}

/// `d = ⌈α t + ln(1/ε)⌉`.
pub fn qsvt_degree(alpha: f64, t: f64, eps: f64) -> Result<u64> {
    positive("alpha", alpha)?;
    positive("t", t)?;
    positive("epsilon", eps)?;
    ceil_count(alpha * t + (1.0 / eps).ln())
}

/// `g(L, Nf) = Nf + ln(L Nf²)`.
pub fn qsvt_g(l: f64, nf: f64) -> f64 {
    nf + (l * nf * nf).ln()
}

/// `(Cost_PF, Cost_QSVT)` with `Cost_PF = L² Nf⁴ t^{1+1/p} ε^{-1/p}` and
/// `Cost_QSVT = L Nf² (t g + g ln(1/ε))`.
pub fn cost_models(l: f64, nf: f64, t: f64, eps: f64, p: u32) -> Result<(f64, f64)> {
    positive("L", l)?;
    positive("Nf", nf)?;
    positive("t", t)?;
    positive("epsilon", eps)?;
    if p == 0 {
        return Err(Error::Argument("product-formula order must be at least 1".into()));
    }
    let inv_p = 1.0 / p as f64;
    let pf = l * l * nf.powi(4) * t.powf(1.0 + inv_p) * eps.powf(-inv_p);
    let g = qsvt_g(l, nf);
    let qsvt = l * nf * nf * (t * g + g * (1.0 / eps).ln());
    Ok((pf, qsvt))
}

/// Abstract gate units for one block-encoding query.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockEncodingCost {
    pub prep: u64,
    pub select: u64,
    pub walk_query: u64,
}

fn ceil_log2(v: u64) -> u64 {
    if v <= 1 {
        0
    } else {
        (64 - (v - 1).leading_zeros()) as u64
    }
}

/// PREP `⌈log₂K⌉ + ⌈log₂(L Nf²)⌉` with `K = 3`, SELECT
/// `(2Nf + 2) + ⌈log₂(L Nf²)⌉`, and a walk query of one SELECT and two
/// PREPs.
pub fn select_prep_cost_model(l: u64, nf: u64) -> Result<BlockEncodingCost> {
    select_prep_cost_model_with_groups(l, nf, DEFAULT_PREP_GROUPS)
}

pub fn select_prep_cost_model_with_groups(l: u64, nf: u64, groups: u64) -> Result<BlockEncodingCost> {
    if l == 0 || nf == 0 || groups == 0 {
        return Err(Error::Argument(format!(
            "L, Nf and group count must be positive, got {l}, {nf}, {groups}"
        )));
    }
    let terms = l
        .checked_mul(nf)
        .and_then(|v| v.checked_mul(nf))
        .ok_or_else(|| Error::Argument("L·Nf² overflows".into()))?;
    let index = ceil_log2(terms);
    let prep = ceil_log2(groups) + index;
    let select = 2 * nf + 2 + index;
    Ok(BlockEncodingCost {
        prep,
        select,
        walk_query: select + 2 * prep,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostAxis {
    L,
    #[serde(rename = "t")]
    T,
}

impl CostAxis {
    pub fn tag(&self) -> &'static str {
        match self {
            CostAxis::L => "L",
            CostAxis::T => "t",
        }
    }
}

impl FromStr for CostAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" | "l" => Ok(CostAxis::L),
            "t" | "T" => Ok(CostAxis::T),
            _ => Err(Error::Argument(format!("cost axis must be L or t, got {s:?}"))),
        }
    }
}

/// Parameters held fixed along a cost curve.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub l: f64,
    pub nf: f64,
    pub t: f64,
    pub epsilon: f64,
    pub order: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostPoint {
    pub x: f64,
    pub cost_pf: f64,
    pub cost_qsvt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostCurve {
    pub axis: CostAxis,
    pub params: CostParams,
    pub points: Vec<CostPoint>,
}

impl CostCurve {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},cost_pf,cost_qsvt\n", self.axis.tag());
        for p in &self.points {
            s.push_str(&format!("{},{:.10e},{:.10e}\n", p.x, p.cost_pf, p.cost_qsvt));
        }
        s
    }
}

/// Evaluates both cost models at each `x` along `axis`, the other
/// parameters fixed by `params`.
pub fn cost_curve(axis: CostAxis, xs: &[f64], params: CostParams) -> Result<CostCurve> {
    let points = xs
        .iter()
        .map(|&x| {
            let (l, t) = match axis {
                CostAxis::L => (x, params.t),
                CostAxis::T => (params.l, x),
            };
            let (cost_pf, cost_qsvt) = cost_models(l, params.nf, t, params.epsilon, params.order)?;
            Ok(CostPoint { x, cost_pf, cost_qsvt })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CostCurve { axis, params, points })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn scaling_exponent(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Argument("need at least two matching points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Argument("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("x values are all equal".into()));
    }
    Ok(sxy / sxx)
}

/// Inputs for [`resource_report`].
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceConfig {
    pub t: f64,
    pub epsilon: f64,
    pub order: u32,
    /// Exact norms up to the dense limit and the product bound beyond it
    /// when unset.
    pub commutator_mode: Option<CommutatorMode>,
}

impl Default for ResourceConfig {
    fn default() -> Self {
        Self {
            t: 1.0,
            epsilon: 1e-3,
            order: 1,
            commutator_mode: None,
        }
    }
}

/// Tool counts next to the published ones.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceComparison {
    pub reference: ReferenceCounts,
    /// Tool CX count over the published one.
    pub cx_ratio: f64,
    pub clifford_t_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub pauli_terms: u64,
    pub cx_count: u64,
    pub clifford_t_count: u64,
    pub rotations: u64,
    pub basis_changes: u64,
    pub convention: String,
    pub gamma: usize,
    pub commutator_mode: CommutatorMode,
    pub commutator_bound: f64,
    pub trotter_steps_p1: u64,
    pub trotter_order: u32,
    pub trotter_steps: u64,
    pub lcu_one_norm: f64,
    pub qsvt_degree: u64,
    pub block_encoding: BlockEncodingCost,
    pub t: f64,
    pub epsilon: f64,
    /// All big-O unit constants are taken as this value.
    pub unit_constant: f64,
    pub log_base: String,
    pub reference_counts: Option<ReferenceComparison>,
}

/// Full estimate for a model: clusters, commutator norm, step counts,
/// ladder gate counts, LCU norm, QSVT degree and the published counts
/// when tabulated.
pub fn resource_report(spec: &ModelSpec, cfg: &ResourceConfig) -> Result<ResourceReport> {
    spec.validate()?;
    let h = build_hamiltonian(spec)?;
    let partition = color_clusters(&h);
    let mode = cfg.commutator_mode.unwrap_or(if h.n_qubits() <= EXACT_DENSE_MAX_QUBITS {
        CommutatorMode::ExactDense
    } else {
        CommutatorMode::NormProduct
    });
    let alpha_comm = commutator_bound(&partition, mode)?;
    let gamma = partition.gamma();
    let steps_p1 = trotter_steps(alpha_comm, cfg.t, cfg.epsilon, 1, gamma)?;
    let steps = trotter_steps(alpha_comm, cfg.t, cfg.epsilon, cfg.order, gamma)?;
    let counts = gate_counts(&h, GateConvention::RotationLadder);
    let alpha = lcu_one_norm(&h);
    let reference = reference_counts(spec.model, spec.l, spec.nf).map(|r| ReferenceComparison {
        reference: r,
        cx_ratio: counts.cx as f64 / r.cx as f64,
        clifford_t_ratio: counts.clifford_t() as f64 / r.clifford_t as f64,
    });
    Ok(ResourceReport {
        pauli_terms: counts.pauli_terms,
        cx_count: counts.cx,
        clifford_t_count: counts.clifford_t(),
        rotations: counts.rotations,
        basis_changes: counts.basis_changes,
        convention: GateConvention::RotationLadder.tag().to_string(),
        gamma,
        commutator_mode: mode,
        commutator_bound: alpha_comm,
        trotter_steps_p1: steps_p1,
        trotter_order: cfg.order,
        trotter_steps: steps,
        lcu_one_norm: alpha,
        qsvt_degree: qsvt_degree(alpha, cfg.t, cfg.epsilon)?,
        block_encoding: select_prep_cost_model(spec.l as u64, spec.nf as u64)?,
        t: cfg.t,
        epsilon: cfg.epsilon,
        unit_constant: 1.0,
        log_base: "e".into(),
        reference_counts: reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum(n: usize, terms: &[(f64, &str)]) -> PauliSum {
        PauliSum::from_terms(n, terms.iter().map(|(c, l)| (*c, PauliString::from_label(l).unwrap()))).unwrap()
    }

    #[test]
    fn ceil_log2_values() {
        let got: Vec<u64> = [1, 2, 3, 4, 5, 40, 64, 65].iter().map(|&v| ceil_log2(v)).collect();
        assert_eq!(got, [0, 1, 2, 2, 3, 6, 6, 7]);
    }

    #[test]
    fn single_term_gate_counts() {
        let z = gate_counts(&sum(1, &[(1.0, "Z")]), GateConvention::RotationLadder);
        assert_eq!((z.cx, z.rotations, z.basis_changes), (0, 1, 0));
        let xx = gate_counts(&sum(2, &[(1.0, "XX")]), GateConvention::RotationLadder);
        assert_eq!((xx.cx, xx.rotations, xx.basis_changes), (2, 1, 4));
        let yzy = gate_counts(&sum(3, &[(1.0, "YZY")]), GateConvention::RotationLadder);
        assert_eq!((yzy.cx, yzy.rotations, yzy.basis_changes), (4, 1, 4));
        let id = gate_counts(&sum(2, &[(3.0, "II")]), GateConvention::RotationLadder);
        assert_eq!(id, GateCounts::default());
    }

    #[test]
    fn pauli_x_z_commutator() {
        let p = color_clusters(&sum(1, &[(1.0, "X"), (1.0, "Z")]));
        assert_eq!(p.gamma(), 2);
        let exact = commutator_bound(&p, CommutatorMode::ExactDense).unwrap();
        let bound = commutator_bound(&p, CommutatorMode::NormProduct).unwrap();
        assert!((exact - 2.0).abs() < 1e-12);
        assert!((bound - 2.0).abs() < 1e-12);
    }
}
