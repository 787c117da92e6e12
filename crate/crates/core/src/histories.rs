//! Consistent-histories calculus over finite-dimensional carriers.
//!
//! A history `a = (a_1, ..., a_n)` at times `t_1 < ... < t_n` has chain operator
//! `C_a = P_{a_1}(t_1) ... P_{a_n}(t_n)` with `P(t) = e^{-iHt} P e^{iHt}`,
//! decoherence matrix `M(a, a') = C_a^dag rho C_a'` and functional `D = Tr M`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::pointer::{to_pointer_frame, PointerFrame};
use crate::spectral::{SpectralModel, StateFunctional};

/// Tolerance on the projector algebra.
pub const FAMILY_TOL: f64 = 1e-12;

/// Tolerance on trace, Hermiticity and positivity of density matrices.
pub const STATE_TOL: f64 = 1e-8;

/// Exhaustive, exclusive projectors on a `dim`-dimensional space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorFamily {
    pub dim: usize,
    pub projectors: Vec<CMat>,
}

/// Largest defects of a projector family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FamilyDefects {
    pub hermiticity: f64,
    /// `max |P_a P_b - delta_ab P_a|`.
    pub orthogonality: f64,
    /// `max |sum P_a - I|`.
    pub completeness: f64,
}

impl FamilyDefects {
    pub fn max(&self) -> f64 {
        self.hermiticity.max(self.orthogonality).max(self.completeness)
    }
}

impl ProjectorFamily {
    /// Validated family.
    pub fn new(projectors: Vec<CMat>) -> Result<Self> {
        let f = Self::unchecked(projectors)?;
        let d = f.defects();
        if d.max() > FAMILY_TOL {
            return Err(Error::InvalidArgument(format!(
                "not an exhaustive exclusive projector family: {d:?}"
            )));
        }
        Ok(f)
    }

    /// Family without the algebraic checks, for diagnosing broken inputs.
    pub fn unchecked(projectors: Vec<CMat>) -> Result<Self> {
        let dim = projectors.first().map_or(0, |p| p.nrows());
        if dim == 0 || projectors.iter().any(|p| p.shape() != (dim, dim)) {
            return Err(Error::Dimension(
                "projectors must be nonempty square matrices of one size".into(),
            ));
        }
        Ok(Self { dim, projectors })
    }

    /// `{I}`.
    pub fn trivial(dim: usize) -> Self {
        Self {
            dim,
            projectors: vec![linalg::identity(dim)],
        }
    }

    /// Rank-one projectors on the canonical basis.
    pub fn canonical(dim: usize) -> Self {
        Self::from_basis(&linalg::identity(dim), &(0..dim).map(|i| vec![i]).collect::<Vec<_>>())
            .expect("canonical basis is a valid family")
    }

    /// Projectors onto groups of columns of the unitary `u`.
    pub fn from_basis(u: &CMat, groups: &[Vec<usize>]) -> Result<Self> {
        let n = u.nrows();
        let mut projectors = Vec::with_capacity(groups.len());
        for g in groups {
            let mut p = CMat::zeros(n, n);
            for &c in g {
                if c >= u.ncols() {
                    return Err(Error::Dimension(format!("column {c} outside the basis")));
                }
                let v = u.column(c);
                p += v * v.adjoint();
            }
            projectors.push(p);
        }
        Self::new(projectors)
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn defects(&self) -> FamilyDefects {
        let mut d = FamilyDefects {
            hermiticity: 0.0,
            orthogonality: 0.0,
            completeness: 0.0,
        };
        let mut sum = CMat::zeros(self.dim, self.dim);
        for (a, pa) in self.projectors.iter().enumerate() {
            d.hermiticity = d.hermiticity.max(linalg::hermiticity_violation(pa));
            sum += pa;
            for (b, pb) in self.projectors.iter().enumerate() {
                let mut prod = pa * pb;
                if a == b {
                    prod -= pa;
                }
                d.orthogonality = d.orthogonality.max(linalg::max_abs(&prod));
            }
        }
        d.completeness = linalg::max_abs(&(sum - linalg::identity(self.dim)));
        d
    }
}

/// Times, labels and the Hamiltonian generating the projector evolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryChain {
    pub times: Vec<f64>,
    pub labels: Vec<usize>,
    pub hamiltonian: CMat,
}

impl HistoryChain {
    pub fn new(times: Vec<f64>, labels: Vec<usize>, hamiltonian: CMat) -> Result<Self> {
        let c = Self {
            times,
            labels,
            hamiltonian,
        };
        c.validate(None)?;
        Ok(c)
    }

    fn validate(&self, family: Option<&ProjectorFamily>) -> Result<()> {
        if self.times.is_empty() || self.times.len() != self.labels.len() {
            return Err(Error::Dimension("a chain needs one label per time".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("chain times must be strictly increasing".into()));
        }
        let h = &self.hamiltonian;
        if h.nrows() != h.ncols() || linalg::hermiticity_violation(h) > FAMILY_TOL * linalg::max_abs(h).max(1.0) {
            return Err(Error::InvalidArgument(
                "chain Hamiltonian must be a Hermitian matrix".into(),
            ));
        }
        if let Some(f) = family {
            if h.nrows() != f.dim {
                return Err(Error::Dimension(format!(
                    "Hamiltonian of size {} on a {}-dimensional family",
                    h.nrows(),
                    f.dim
                )));
            }
            if let Some(l) = self.labels.iter().find(|&&l| l >= f.len()) {
                return Err(Error::InvalidArgument(format!(
                    "label {l} outside a family of {}",
                    f.len()
                )));
            }
        }
        Ok(())
    }
}

fn commutes(a: &CMat, b: &CMat) -> bool {
    linalg::max_abs(&linalg::commutator(a, b)) <= FAMILY_TOL * linalg::max_abs(b).max(1.0)
}

/// Evolves projectors with a precomputed Hamiltonian; constant projectors skip the exponential.
struct Evolver<'a> {
    h: &'a CMat,
    family: &'a ProjectorFamily,
    constant: Vec<bool>,
}

impl<'a> Evolver<'a> {
    fn new(h: &'a CMat, family: &'a ProjectorFamily) -> Self {
        let constant = family.projectors.iter().map(|p| commutes(p, h)).collect();
        Self { h, family, constant }
    }

    fn chain(&self, times: &[f64], labels: &[usize]) -> CMat {
        let mut c = linalg::identity(self.family.dim);
        for (&t, &l) in times.iter().zip(labels) {
            let p = &self.family.projectors[l];
            if self.constant[l] {
                c *= p;
            } else {
                let u = linalg::unitary_propagator(self.h, t);
                c *= &u * p * u.adjoint();
            }
        }
        c
    }
}

/// `C_a = P_{a_1}(t_1) ... P_{a_n}(t_n)`.
pub fn chain_operator(h: &HistoryChain, family: &ProjectorFamily) -> Result<CMat> {
    h.validate(Some(family))?;
    Ok(Evolver::new(&h.hamiltonian, family).chain(&h.times, &h.labels))
}

fn check_state(rho: &CMat, dim: usize) -> Result<()> {
    if rho.shape() != (dim, dim) {
        return Err(Error::Dimension(format!(
            "state of shape {:?} on a {dim}-dimensional family",
            rho.shape()
        )));
    }
    let herm = linalg::hermiticity_violation(rho);
    if herm > STATE_TOL {
        return Err(Error::NotHermitian {
            block: "density matrix",
            violation: herm,
            location: None,
        });
    }
    let tr = rho.trace();
    let (values, _) = linalg::hermitian_eigen(rho);
    let lowest = values.iter().copied().fold(f64::INFINITY, f64::min);
    if (tr.re - 1.0).abs() > STATE_TOL || lowest < -STATE_TOL {
        return Err(Error::InvalidArgument(format!(
            "density matrix must have unit trace and no negative eigenvalue (trace {tr}, lowest {lowest:.3e})"
        )));
    }
    Ok(())
}

/// `M(a, a') = C_a^dag rho C_a'`.
pub fn decoherence_matrix(rho: &CMat, h: &HistoryChain, h2: &HistoryChain, family: &ProjectorFamily) -> Result<CMat> {
    check_state(rho, family.dim)?;
    let c = chain_operator(h, family)?;
    let c2 = chain_operator(h2, family)?;
    Ok(c.adjoint() * rho * c2)
}

/// `D(a, a') = Tr M(a, a')`.
pub fn decoherence_functional(
    rho: &CMat,
    h: &HistoryChain,
    h2: &HistoryChain,
    family: &ProjectorFamily,
) -> Result<Complex64> {
    Ok(decoherence_matrix(rho, h, h2, family)?.trace())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConsistencyLevel {
    None,
    Weak,
    Medium,
    Matrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub weak: f64,
    pub medium: f64,
    pub matrix: f64,
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Self {
            weak: tol,
            medium: tol,
            matrix: tol,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::uniform(1e-10)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violations {
    /// `max |Re D(a, a')|` over distinct histories.
    pub weak: f64,
    /// `max |D(a, a')|`.
    pub medium: f64,
    /// `max ||M(a, a')||_1` (trace norm), which bounds `|D|`.
    pub matrix: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyVerdict {
    pub level: ConsistencyLevel,
    pub max_violation: Violations,
    /// Every history, in lexicographic label order.
    pub histories: Vec<Vec<usize>>,
    /// `p(a) = D(a, a)`, present when the set is at least weakly consistent.
    pub probabilities: Option<Vec<f64>>,
}

/// All label strings of length `n` over `f` alternatives.
fn label_strings(f: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..f).map(move |l| {
                    let mut t = s.clone();
                    t.push(l);
                    t
                })
            })
            .collect();
    }
    out
}

fn trace_norm(m: &CMat) -> f64 {
    m.clone().svd(false, false).singular_values.sum()
}

/// Largest number of histories a classification run enumerates.
pub const MAX_HISTORIES: usize = 4096;

/// Classifies the complete set of histories of `family` at `times` under the
/// evolution generated by `hamiltonian`.
pub fn classify(
    rho: &CMat,
    family: &ProjectorFamily,
    times: &[f64],
    hamiltonian: &CMat,
    tol: Tolerances,
) -> Result<ConsistencyVerdict> {
    check_state(rho, family.dim)?;
    if !(tol.weak > 0.0 && tol.medium > 0.0 && tol.matrix > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerances must be positive: {tol:?}")));
    }
    let count = family.len().checked_pow(times.len() as u32).unwrap_or(usize::MAX);
    if count > MAX_HISTORIES {
        return Err(Error::InvalidArgument(format!(
            "{count} histories exceed the limit of {MAX_HISTORIES}"
        )));
    }
    let probe = HistoryChain {
        times: times.to_vec(),
        labels: vec![0; times.len()],
        hamiltonian: hamiltonian.clone(),
    };
    probe.validate(Some(family))?;
    let ev = Evolver::new(hamiltonian, family);
    let histories = label_strings(family.len(), times.len());
    let chains: Vec<CMat> = histories.iter().map(|l| ev.chain(times, l)).collect();
    let left: Vec<CMat> = chains.iter().map(|c| c.adjoint() * rho).collect();

    let mut v = Violations {
        weak: 0.0,
        medium: 0.0,
        matrix: 0.0,
    };
    let mut diag = Vec::with_capacity(chains.len());
    for (a, l) in left.iter().enumerate() {
        for (b, c) in chains.iter().enumerate() {
            let m = l * c;
            if a == b {
                diag.push(m.trace());
                continue;
            }
            let d = m.trace();
            v.weak = v.weak.max(d.re.abs());
            v.medium = v.medium.max(d.norm());
            v.matrix = v.matrix.max(trace_norm(&m));
        }
    }
    // each level implies the weaker ones
    let level = if v.weak >= tol.weak {
        ConsistencyLevel::None
    } else if v.medium >= tol.medium {
        ConsistencyLevel::Weak
    } else if v.matrix >= tol.matrix {
        ConsistencyLevel::Medium
    } else {
        ConsistencyLevel::Matrix
    };
    let probabilities = (level >= ConsistencyLevel::Weak).then(|| diag.iter().map(|z| z.re).collect());
    Ok(ConsistencyVerdict {
        level,
        max_violation: v,
        histories,
        probabilities,
    })
}

/// `max_a |Re Tr[P_a rho (1 - P_a) P_a]|`; vanishes for idempotent projectors.
pub fn griffiths_omnes_check(rho: &CMat, family: &ProjectorFamily) -> Result<f64> {
    check_state(rho, family.dim)?;
    let id = linalg::identity(family.dim);
    Ok(family
        .projectors
        .iter()
        .map(|p| (p * rho * (&id - p) * p).trace().re.abs())
        .fold(0.0, f64::max))
}

/// `rho_after = sum_a P_a rho P_a` and `||rho_after - rho||_F`.
pub fn insensitivity_check(rho: &CMat, family: &ProjectorFamily) -> Result<(CMat, f64)> {
    check_state(rho, family.dim)?;
    let mut after = CMat::zeros(family.dim, family.dim);
    for p in &family.projectors {
        after += p * rho * p;
    }
    let dev = (&after - rho).norm();
    Ok((after, dev))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecordsReport {
    /// `max ||C_a^dag rho - R_a rho||` over the chains, with `R_a = P_a` for a
    /// chain repeating one label and `0` otherwise.
    pub record_residual: f64,
    /// `max ||P_a P_b - delta_ab P_a||` over the family.
    pub orthogonality: f64,
    /// `max |Tr(R_a rho R_a') - D(a, a')|` over chain pairs.
    pub trace_identity: f64,
    /// Largest off-diagonal `|Tr(R_a rho R_a')|`: medium decoherence via records.
    pub medium_from_records: f64,
    /// Records and `classify` agree on medium decoherence.
    pub agrees_with_classify: bool,
}

fn record(chain: &HistoryChain, family: &ProjectorFamily) -> CMat {
    let first = chain.labels[0];
    if chain.labels.iter().all(|&l| l == first) {
        family.projectors[first].clone()
    } else {
        CMat::zeros(family.dim, family.dim)
    }
}

pub fn records_check(
    rho: &CMat,
    family: &ProjectorFamily,
    chains: &[HistoryChain],
    tol: Tolerances,
) -> Result<RecordsReport> {
    check_state(rho, family.dim)?;
    if chains.is_empty() {
        return Err(Error::InvalidArgument("records need at least one chain".into()));
    }
    let ops: Vec<CMat> = chains
        .iter()
        .map(|c| chain_operator(c, family))
        .collect::<Result<_>>()?;
    let recs: Vec<CMat> = chains.iter().map(|c| record(c, family)).collect();
    let record_residual = ops
        .iter()
        .zip(&recs)
        .map(|(c, r)| (c.adjoint() * rho - r * rho).norm())
        .fold(0.0, f64::max);
    let orthogonality = family.defects().orthogonality;
    let (mut trace_identity, mut medium) = (0.0f64, 0.0f64);
    for (a, (ca, ra)) in ops.iter().zip(&recs).enumerate() {
        for (b, (cb, rb)) in ops.iter().zip(&recs).enumerate() {
            let via_records = (ra * rho * rb).trace();
            let d = (ca.adjoint() * rho * cb).trace();
            trace_identity = trace_identity.max((via_records - d).norm());
            if a != b && chains[a].labels != chains[b].labels {
                medium = medium.max(via_records.norm());
            }
        }
    }
    let times = &chains[0].times;
    let same_times = chains
        .iter()
        .all(|c| &c.times == times && c.hamiltonian == chains[0].hamiltonian);
    let agrees_with_classify = if same_times {
        let v = classify(rho, family, times, &chains[0].hamiltonian, tol)?;
        let records_medium = medium < tol.medium;
        let classify_medium = v.max_violation.medium < tol.medium;
        if chains.len() == v.histories.len() {
            records_medium == classify_medium
        } else {
            // a subset of chains can only confirm what the full set shows
            !classify_medium || records_medium
        }
    } else {
        true
    };
    Ok(RecordsReport {
        record_residual,
        orthogonality,
        trace_identity,
        medium_from_records: medium,
        agrees_with_classify,
    })
}

/// Label of a basis vector of a flattened spectral state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameLabel {
    Bound { rank: usize },
    Node { node: usize, rank: usize },
}

/// A five-block state written as a finite matrix over the labels
/// `(bound, r)` and `(w_i, r)` of a frame.
///
/// `delta(w - w')` is realized as `1 / weight_i` times a Kronecker delta, so
/// the singular block enters as the probability mass `weight_i rho(w_i)`,
/// cross blocks as `sqrt(weight_i) rho(w_i, w0)` and the regular kernel, off
/// its diagonal, as `sqrt(weight_i weight_j) rho(w_i, w_j)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlattenedState {
    pub rho: CMat,
    pub labels: Vec<FrameLabel>,
    /// Energy of each label.
    pub energies: Vec<f64>,
}

impl FlattenedState {
    /// Diagonal Hamiltonian `H |w, r> = w |w, r>`.
    pub fn hamiltonian(&self) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            self.energies.len(),
            self.energies.iter().map(|&e| Complex64::from(e)),
        ))
    }

    /// One projector per label (the pointer family when flattened in the pointer frame).
    pub fn label_family(&self) -> ProjectorFamily {
        ProjectorFamily::canonical(self.rho.nrows())
    }

    /// One projector per energy (bound level or node), summing over ranks.
    pub fn energy_family(&self) -> ProjectorFamily {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut last: Option<Option<usize>> = None;
        for (i, l) in self.labels.iter().enumerate() {
            let key = match l {
                FrameLabel::Bound { .. } => None,
                FrameLabel::Node { node, .. } => Some(*node),
            };
            if last == Some(key) {
                groups.last_mut().expect("group exists").push(i);
            } else {
                groups.push(vec![i]);
                last = Some(key);
            }
        }
        ProjectorFamily::from_basis(&linalg::identity(self.rho.nrows()), &groups)
            .expect("canonical groups form a family")
    }
}

/// Flattens `state` in `frame` (use `PointerFrame::identity` for the original basis).
pub fn flatten_state(state: &StateFunctional, frame: &PointerFrame, model: &SpectralModel) -> Result<FlattenedState> {
    let s = to_pointer_frame(state, frame)?;
    let b = &s.blocks;
    let (m, k) = (model.m(), model.k());
    let dim = m * (k + 1);
    let mut rho = CMat::zeros(dim, dim);
    rho.view_mut((0, 0), (m, m)).copy_from(&b.bound);
    for i in 0..k {
        let w = model.weights[i];
        let o = m * (i + 1);
        rho.view_mut((o, o), (m, m))
            .copy_from(&(&b.diag[i] * Complex64::from(w)));
        rho.view_mut((o, 0), (m, m))
            .copy_from(&(&b.cross_up[i] * Complex64::from(w.sqrt())));
        rho.view_mut((0, o), (m, m))
            .copy_from(&(&b.cross_down[i] * Complex64::from(w.sqrt())));
        for j in 0..k {
            if i != j {
                let s = Complex64::from((w * model.weights[j]).sqrt());
                rho.view_mut((o, m * (j + 1)), (m, m))
                    .copy_from(&(b.kernel_block(i, j) * s));
            }
        }
    }
    let mut labels = Vec::with_capacity(dim);
    let mut energies = Vec::with_capacity(dim);
    for r in 0..m {
        labels.push(FrameLabel::Bound { rank: r });
        energies.push(model.omega0);
    }
    for i in 0..k {
        for r in 0..m {
            labels.push(FrameLabel::Node { node: i, rank: r });
            energies.push(model.grid[i]);
        }
    }
    Ok(FlattenedState { rho, labels, energies })
}
