//! Measurement-occurrence instances and their goal-QOMDP encoding.
//!
//! A QMOP instance is a superoperator `{K_1, …, K_𝒦}` on dimension `d`; it is
//! "null" for an outcome sequence `i_1 … i_n` when
//! `K_{i_1}† ⋯ K_{i_n}† K_{i_n} ⋯ K_{i_1} = 0`. [`qmop_to_goal_qomdp`] builds
//! the goal QOMDP `Q(S)` on dimension `d+1` in which action `i` either follows
//! `K_i` (observation `d+2`) or jumps to the goal `|d+1⟩⟨d+1|` (observations
//! `1 … d+1`). Reaching the goal with certainty along an action sequence is
//! then equivalent to that outcome sequence being null.
//!
//! Whether a null sequence exists at all is undecidable, so only a bounded
//! search is offered.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classical::Pomdp;
use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, pad_embed, ComplexMatrix, ToleranceConfig};
use crate::quantum::{validate_superoperator, DensityMatrix, GoalQomdp, Qomdp, Superoperator};

/// A superoperator whose outcome sequences are being queried.
#[derive(Debug, Clone)]
pub struct QmopInstance {
    op: Superoperator,
}

impl QmopInstance {
    pub fn new(kraus: Vec<ComplexMatrix>, tol: &ToleranceConfig) -> Result<Self> {
        Ok(Self {
            op: Superoperator::new(kraus, tol)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Number of Kraus operators 𝒦.
    pub fn num_kraus(&self) -> usize {
        self.op.len()
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        self.op.kraus()
    }

    pub fn superoperator(&self) -> &Superoperator {
        &self.op
    }
}

/// Outcome / action indices `i_1 … i_n`, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionSequence(pub Vec<usize>);

impl ActionSequence {
    pub fn new(indices: Vec<usize>) -> Self {
        Self(indices)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub(crate) fn check_range(&self, count: usize) -> Result<()> {
        match self.0.iter().find(|&&i| i == 0 || i > count) {
            Some(&bad) => Err(Error::out_of_range("action", bad, format!("1..={count}"))),
            None => Ok(()),
        }
    }
}

impl fmt::Display for ActionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Builds `Q(S)`.
///
/// For each `K_i`: `A^i_{d+2} = K_i ⊕ 0`; `Z^i = I − A^i_{d+2}† A^i_{d+2}`
/// is eigendecomposed as `Σ_j z_j |z_j⟩⟨z_j|` (ascending), and `A^i_j`,
/// `j ≤ d+1`, has zero rows except the last, which is `√z_j ⟨z_j|`.
/// Eigenvalues below `eps_structural` are treated as exactly zero.
pub fn qmop_to_goal_qomdp(s: &QmopInstance, tol: &ToleranceConfig) -> Result<GoalQomdp> {
    let report = validate_superoperator(s.kraus(), tol)?;
    if !report.complete {
        return Err(Error::InvalidKraus(report.max_deviation));
    }
    let d = s.dim();
    let n = d + 1;
    let mut actions = Vec::with_capacity(s.num_kraus());
    for k in s.kraus() {
        let stay = pad_embed(k)?;
        let z = &ComplexMatrix::identity(n) - &(&stay.adjoint() * &stay);
        let eig = eig_hermitian(&z, tol)?;
        let mut ops = Vec::with_capacity(n + 1);
        for (j, &zj) in eig.eigenvalues.iter().enumerate() {
            let mut a = ComplexMatrix::zeros(n, n);
            if zj >= tol.eps_structural {
                let amp = zj.sqrt();
                for q in 0..n {
                    a[(d, q)] = eig.eigenvectors[(q, j)].conj() * amp;
                }
            }
            ops.push(a);
        }
        ops.push(stay);
        actions.push(Superoperator::new(ops, tol)?);
    }
    GoalQomdp::new(
        n,
        n + 1,
        actions,
        DensityMatrix::maximally_mixed(n),
        DensityMatrix::basis(n, d),
        tol,
    )
}

/// `d(ρ0) = I_d / (d+1)`: top-left block of the maximally mixed `(d+1)`-state.
fn truncated_start(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d).scale_real(1.0 / (d + 1) as f64)
}

/// `Tr(K_{i_k} ⋯ K_{i_1} d(ρ0) K_{i_1}† ⋯ K_{i_k}†)` for every prefix length `k = 1..=n`.
pub fn nongoal_prefix_traces(s: &QmopInstance, seq: &ActionSequence) -> Result<Vec<f64>> {
    seq.check_range(s.num_kraus())?;
    let mut m = truncated_start(s.dim());
    Ok(seq
        .indices()
        .iter()
        .map(|&i| {
            m = m.conjugate_by(&s.kraus()[i - 1]);
            m.trace().re
        })
        .collect())
}

/// Probability that `Q(S)` is not in the goal after following `seq` from `ρ0`.
pub fn nongoal_probability(s: &QmopInstance, seq: &ActionSequence) -> Result<f64> {
    let traces = nongoal_prefix_traces(s, seq)?;
    let last = traces.last().copied().unwrap_or(s.dim() as f64 / (s.dim() + 1) as f64);
    Ok(last.clamp(0.0, 1.0))
}

/// `K_{i_n} ⋯ K_{i_1}`.
fn sequence_product(s: &QmopInstance, seq: &[usize]) -> ComplexMatrix {
    seq.iter().fold(ComplexMatrix::identity(s.dim()), |acc, &i| &s.kraus()[i - 1] * &acc)
}

fn is_null_product(p: &ComplexMatrix, tol: &ToleranceConfig) -> bool {
    (&p.adjoint() * p).max_abs() <= tol.eps_zero
}

/// Whether `K_{i_1}† ⋯ K_{i_n}† K_{i_n} ⋯ K_{i_1}` vanishes entrywise within `eps_zero`.
pub fn qmop_sequence_is_null(s: &QmopInstance, seq: &ActionSequence, tol: &ToleranceConfig) -> Result<bool> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    seq.check_range(s.num_kraus())?;
    Ok(is_null_product(&sequence_product(s, seq.indices()), tol))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchOptions {
    /// Skip extensions of non-empty prefixes whose product has full rank.
    ///
    /// If `P` is invertible, `Q·P = 0` forces `Q = 0`, so every null extension of
    /// the prefix has a strictly shorter null suffix. Existence of a null
    /// sequence within the bound is preserved, but the returned witness may no
    /// longer be the lexicographically first one.
    pub rank_pruning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub witness: Option<ActionSequence>,
    pub nodes_expanded: u64,
}

/// Depth-first, lexicographic search for a null sequence of length ≤ `max_len`.
///
/// Prefixes are visited in preorder, which is lexicographic order, so the
/// first hit is the lexicographically first null sequence; once a prefix is
/// null every extension is too, so the search never descends below one.
pub fn qmop_bounded_search(
    s: &QmopInstance,
    max_len: usize,
    options: SearchOptions,
    tol: &ToleranceConfig,
) -> SearchOutcome {
    let mut nodes = 0u64;
    let mut path = Vec::with_capacity(max_len);
    let witness = search_from(
        s,
        &ComplexMatrix::identity(s.dim()),
        &mut path,
        max_len,
        options,
        tol,
        &mut nodes,
    );
    SearchOutcome {
        witness: witness.map(ActionSequence),
        nodes_expanded: nodes,
    }
}

fn search_from(
    s: &QmopInstance,
    product: &ComplexMatrix,
    path: &mut Vec<usize>,
    max_len: usize,
    options: SearchOptions,
    tol: &ToleranceConfig,
    nodes: &mut u64,
) -> Option<Vec<usize>> {
    if path.len() == max_len {
        return None;
    }
    for i in 1..=s.num_kraus() {
        *nodes += 1;
        let next = &s.kraus()[i - 1] * product;
        path.push(i);
        if is_null_product(&next, tol) {
            return Some(path.clone());
        }
        let prune = options.rank_pruning && has_full_rank(&next, tol);
        if !prune {
            if let Some(found) = search_from(s, &next, path, max_len, options, tol, nodes) {
                return Some(found);
            }
        }
        path.pop();
    }
    None
}

fn has_full_rank(p: &ComplexMatrix, tol: &ToleranceConfig) -> bool {
    eig_hermitian(&(&p.adjoint() * p), tol)
        .map(|e| e.eigenvalues[0] > tol.eps_zero)
        .unwrap_or(false)
}

/// The policy path `σ_1 … σ_n` of `Q(S)` under `seq`:
/// `σ_k = (K_{i_k} ⋯ K_{i_1} d(ρ0) K_{i_1}† ⋯ K_{i_k}† ⊕ 0) / trace`.
pub fn policy_path(s: &QmopInstance, seq: &ActionSequence, tol: &ToleranceConfig) -> Result<Vec<DensityMatrix>> {
    seq.check_range(s.num_kraus())?;
    let mut m = truncated_start(s.dim());
    let mut out = Vec::with_capacity(seq.len());
    for (k, &i) in seq.indices().iter().enumerate() {
        m = m.conjugate_by(&s.kraus()[i - 1]);
        let tr = m.trace().re;
        if tr <= tol.eps_zero {
            return Err(Error::PathExtinguished(k + 1));
        }
        out.push(DensityMatrix::from_trusted(pad_embed(&m.scale_real(1.0 / tr))?));
    }
    Ok(out)
}

/// Embeds a POMDP whose `τ^{ao}` square roots form a Kraus family.
///
/// `(K^{ao})_{ij} = √τ^{ao}_{ij}`; rewards become `diag(R(·, a))` and
/// `ρ0 = diag(b0)`. Succeeds exactly when `Σ_o K^{ao}† K^{ao} = I` for every
/// action, e.g. permutation-deterministic transitions with any observation model.
pub fn embed_pomdp(p: &Pomdp, tol: &ToleranceConfig) -> Result<Qomdp> {
    let d = &p.dynamics;
    let mut actions = Vec::with_capacity(d.num_actions);
    let mut worst = 0.0_f64;
    for a in 0..d.num_actions {
        let kraus: Vec<ComplexMatrix> = (0..d.num_obs)
            .map(|o| {
                let rows: Vec<Vec<f64>> = d
                    .tau_real(a, o)
                    .into_iter()
                    .map(|r| r.into_iter().map(|x| x.max(0.0).sqrt()).collect())
                    .collect();
                ComplexMatrix::from_real_rows(&rows)
            })
            .collect();
        let report = validate_superoperator(&kraus, tol)?;
        worst = worst.max(report.max_deviation);
        actions.push(Superoperator::new_unchecked(kraus)?);
    }
    if worst > tol.eps_structural {
        return Err(Error::NotEmbeddable(worst));
    }
    let rewards = (0..d.num_actions)
        .map(|a| {
            let diag: Vec<f64> = p.reward.iter().map(|r| r[a]).collect();
            ComplexMatrix::from_diag_real(&diag)
        })
        .collect();
    let rho0 = DensityMatrix::new(ComplexMatrix::from_diag_real(d.b0.probs()), tol)?;
    Qomdp::new(d.num_states, d.num_obs, actions, rewards, p.gamma, rho0, tol)
}

/// `diag(b)` as a density matrix.
pub fn diagonal_state(probs: &[f64]) -> DensityMatrix {
    DensityMatrix::from_trusted(ComplexMatrix::from_diag_real(probs))
}
