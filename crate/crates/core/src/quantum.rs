//! Density matrices, Kraus superoperators and quantum observable decision processes.
//!
//! Observation (Kraus) indices in this module are 1-based: observation `o_i`
//! means Kraus matrix `i` was applied. File formats store plain arrays, so the
//! first matrix of an action is observation 1.

use rand::Rng;

use crate::error::{Error, Result, Violation};
use crate::numerics::{is_psd_hermitian, ComplexMatrix, ToleranceConfig, C64};
use crate::sampling::{clamp_probability, sample_index};

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates every density-matrix invariant within `eps_structural`.
    pub fn new(mat: ComplexMatrix, tol: &ToleranceConfig) -> Result<Self> {
        Error::check(density_violations(&mat, "rho", tol))?;
        Ok(Self {
            mat: mat.hermitian_part(),
        })
    }

    /// Wraps a matrix already known to be a state, e.g. a normalized branch of
    /// a valid superoperator. The Hermitian part is taken to drop roundoff.
    pub(crate) fn from_trusted(mat: ComplexMatrix) -> Self {
        Self {
            mat: mat.hermitian_part(),
        }
    }

    /// `|k⟩⟨k|` in dimension `dim` (0-based `k`).
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self { mat: m }
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// `|ψ⟩⟨ψ|` for a state vector, normalized first.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if psi.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("state vector must be non-zero".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self {
            mat: ComplexMatrix::outer(&v),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    /// Entrywise max-norm distance.
    pub fn distance(&self, other: &Self) -> f64 {
        self.mat.max_abs_diff(&other.mat)
    }

    pub fn approx_eq(&self, other: &Self, eps: f64) -> bool {
        self.dim() == other.dim() && self.distance(other) <= eps
    }
}

pub(crate) fn density_violations(
    m: &ComplexMatrix,
    name: &str,
    tol: &ToleranceConfig,
) -> Vec<Violation> {
    let mut v = Vec::new();
    if !m.is_square() {
        v.push(Violation::new("square", name, f64::INFINITY));
        return v;
    }
    let herm = m.hermitian_deviation();
    if herm > tol.eps_structural {
        v.push(Violation::new("hermitian", name, herm));
        return v;
    }
    let tr = (m.trace().re - 1.0).abs();
    if tr > tol.eps_structural {
        v.push(Violation::new("unit-trace", name, tr));
    }
    if !is_psd_hermitian(m, tol) {
        let min_eig = crate::numerics::eig_hermitian(m, tol)
            .map(|e| e.eigenvalues[0])
            .unwrap_or(f64::NAN);
        v.push(Violation::new("positive-semidefinite", name, -min_eig));
    }
    v
}

/// Outcome of a Kraus completeness check.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletenessReport {
    pub complete: bool,
    /// `max |Σ K†K − I|` over entries.
    pub max_deviation: f64,
    /// 1-based (row, col) of the worst entry.
    pub entry: (usize, usize),
}

/// Checks `Σ_i K_i† K_i = I` within `eps_structural`.
pub fn validate_superoperator(
    kraus: &[ComplexMatrix],
    tol: &ToleranceConfig,
) -> Result<CompletenessReport> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::DimensionMismatch("superoperator needs at least one Kraus matrix".into()))?;
    let d = first.require_square()?;
    for (i, k) in kraus.iter().enumerate() {
        if k.rows() != d || k.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "Kraus matrix {} is {}x{}, expected {d}x{d}",
                i + 1,
                k.rows(),
                k.cols()
            )));
        }
    }
    let mut sum = ComplexMatrix::zeros(d, d);
    for k in kraus {
        sum = &sum + &(&k.adjoint() * k);
    }
    let residual = &sum - &ComplexMatrix::identity(d);
    let mut worst = (0, 0);
    let mut max_deviation = 0.0;
    for i in 0..d {
        for j in 0..d {
            let x = residual[(i, j)].norm();
            if x > max_deviation {
                max_deviation = x;
                worst = (i, j);
            }
        }
    }
    Ok(CompletenessReport {
        complete: max_deviation <= tol.eps_structural,
        max_deviation,
        entry: (worst.0 + 1, worst.1 + 1),
    })
}

/// Ordered Kraus matrices with `Σ K†K = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    kraus: Vec<ComplexMatrix>,
    /// `K_i† K_i`, cached for outcome probabilities.
    effects: Vec<ComplexMatrix>,
}

impl Superoperator {
    pub fn new(kraus: Vec<ComplexMatrix>, tol: &ToleranceConfig) -> Result<Self> {
        let report = validate_superoperator(&kraus, tol)?;
        if !report.complete {
            return Err(Error::InvalidKraus(report.max_deviation));
        }
        Ok(Self::assemble(kraus))
    }

    /// Shape checks only; completeness is not enforced.
    pub fn new_unchecked(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        validate_superoperator(&kraus, &ToleranceConfig::default())?;
        Ok(Self::assemble(kraus))
    }

    fn assemble(kraus: Vec<ComplexMatrix>) -> Self {
        let effects = kraus.iter().map(|k| &k.adjoint() * k).collect();
        Self { kraus, effects }
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].rows()
    }

    pub fn len(&self) -> usize {
        self.kraus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kraus.is_empty()
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Kraus matrix for 1-based observation `i`.
    pub fn kraus_at(&self, i: usize) -> Result<&ComplexMatrix> {
        if i == 0 || i > self.kraus.len() {
            return Err(Error::out_of_range(
                "observation",
                i,
                format!("1..={}", self.kraus.len()),
            ));
        }
        Ok(&self.kraus[i - 1])
    }
}

fn check_dims(rho: &DensityMatrix, action: &Superoperator) -> Result<()> {
    if rho.dim() != action.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {}, action acts on {}",
            rho.dim(),
            action.dim()
        )));
    }
    Ok(())
}

/// `Tr(E ρ)` without forming the product.
fn effect_trace(rho: &DensityMatrix, effect: &ComplexMatrix) -> f64 {
    let m = rho.matrix();
    let n = m.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (effect[(i, j)] * m[(j, i)]).re;
        }
    }
    acc
}

/// `Tr(A_i ρ A_i†)` for 1-based observation `i`.
pub fn observation_prob(
    rho: &DensityMatrix,
    action: &Superoperator,
    i: usize,
    tol: &ToleranceConfig,
) -> Result<f64> {
    check_dims(rho, action)?;
    action.kraus_at(i)?;
    clamp_probability(effect_trace(rho, &action.effects[i - 1]), tol.eps_structural)
}

/// All observation probabilities of `action` on `rho`, in observation order.
pub fn observation_probs(
    rho: &DensityMatrix,
    action: &Superoperator,
    tol: &ToleranceConfig,
) -> Result<Vec<f64>> {
    (1..=action.len())
        .map(|i| observation_prob(rho, action, i, tol))
        .collect()
}

/// Post-measurement state `A_i ρ A_i† / Tr(A_i ρ A_i†)`.
pub fn evolve(
    rho: &DensityMatrix,
    action: &Superoperator,
    i: usize,
    tol: &ToleranceConfig,
) -> Result<DensityMatrix> {
    check_dims(rho, action)?;
    let k = action.kraus_at(i)?;
    let unnormalized = rho.matrix().conjugate_by(k);
    let tr = unnormalized.trace().re;
    if tr <= tol.eps_zero {
        return Err(Error::ZeroProbabilityBranch(tr));
    }
    Ok(DensityMatrix::from_trusted(unnormalized.scale_real(1.0 / tr)))
}

/// Expected value `Tr(ρ R)` of a Hermitian reward operator.
pub fn reward(rho: &DensityMatrix, r_op: &ComplexMatrix, tol: &ToleranceConfig) -> Result<f64> {
    if r_op.rows() != rho.dim() || r_op.cols() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "reward operator is {}x{}, state has dimension {}",
            r_op.rows(),
            r_op.cols(),
            rho.dim()
        )));
    }
    let dev = r_op.hermitian_deviation();
    if dev > tol.eps_structural {
        return Err(Error::NonHermitianReward(dev));
    }
    let value = (rho.matrix() * r_op).trace();
    // Tr of a product of Hermitian matrices is real up to roundoff
    debug_assert!(value.im.abs() <= 1e-6 * (1.0 + value.re.abs()));
    Ok(value.re)
}

/// Applies `action` to `rho`, drawing the outcome by inverse CDF over the Kraus order.
///
/// Returns the 1-based observation and the post-measurement state.
pub fn sample_step<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    action: &Superoperator,
    rng: &mut R,
    tol: &ToleranceConfig,
) -> Result<(usize, DensityMatrix)> {
    let probs = observation_probs(rho, action, tol)?;
    let idx = sample_index(&probs, rng, tol.eps_structural)?;
    let next = evolve(rho, action, idx + 1, tol)?;
    Ok((idx + 1, next))
}

fn qomdp_action_violations(
    dim: usize,
    num_obs: usize,
    actions: &[Superoperator],
    tol: &ToleranceConfig,
) -> Vec<Violation> {
    let mut v = Vec::new();
    if actions.is_empty() {
        v.push(Violation::new("non-empty-actions", "actions", f64::INFINITY));
    }
    for (a, act) in actions.iter().enumerate() {
        if act.len() != num_obs {
            v.push(Violation::new(
                "kraus-count",
                format!("actions[{a}] has {} Kraus matrices, num_obs={num_obs}", act.len()),
                (act.len() as f64 - num_obs as f64).abs(),
            ));
        }
        if act.dim() != dim {
            v.push(Violation::new(
                "dimension",
                format!("actions[{a}] acts on dimension {}, dim={dim}", act.dim()),
                (act.dim() as f64 - dim as f64).abs(),
            ));
            continue;
        }
        match validate_superoperator(act.kraus(), tol) {
            Ok(r) if !r.complete => v.push(Violation::new(
                "kraus-completeness",
                format!("actions[{a}] entry ({}, {})", r.entry.0, r.entry.1),
                r.max_deviation,
            )),
            Ok(_) => {}
            Err(e) => v.push(Violation::new(
                "kraus-shape",
                format!("actions[{a}]: {e}"),
                f64::INFINITY,
            )),
        }
    }
    v
}

/// Quantum observable MDP with operator rewards.
#[derive(Debug, Clone)]
pub struct Qomdp {
    pub dim: usize,
    pub num_obs: usize,
    pub actions: Vec<Superoperator>,
    /// One Hermitian operator per action.
    pub rewards: Vec<ComplexMatrix>,
    pub gamma: f64,
    pub rho0: DensityMatrix,
}

impl Qomdp {
    pub fn new(
        dim: usize,
        num_obs: usize,
        actions: Vec<Superoperator>,
        rewards: Vec<ComplexMatrix>,
        gamma: f64,
        rho0: DensityMatrix,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let q = Self {
            dim,
            num_obs,
            actions,
            rewards,
            gamma,
            rho0,
        };
        Error::check(q.violations(tol))?;
        Ok(q)
    }

    pub fn violations(&self, tol: &ToleranceConfig) -> Vec<Violation> {
        let mut v = qomdp_action_violations(self.dim, self.num_obs, &self.actions, tol);
        if self.rewards.len() != self.actions.len() {
            v.push(Violation::new(
                "reward-count",
                format!("{} rewards for {} actions", self.rewards.len(), self.actions.len()),
                f64::INFINITY,
            ));
        }
        for (a, r) in self.rewards.iter().enumerate() {
            if r.rows() != self.dim || r.cols() != self.dim {
                v.push(Violation::new("dimension", format!("rewards[{a}]"), f64::INFINITY));
                continue;
            }
            let dev = r.hermitian_deviation();
            if dev > tol.eps_structural {
                v.push(Violation::new("hermitian", format!("rewards[{a}]"), dev));
            }
        }
        if !(0.0..1.0).contains(&self.gamma) {
            v.push(Violation::new("discount-range", "gamma", self.gamma));
        }
        if self.rho0.dim() != self.dim {
            v.push(Violation::new("dimension", "rho0", f64::INFINITY));
        }
        v
    }
}

/// Goal QOMDP: no rewards, an absorbing goal state instead.
#[derive(Debug, Clone)]
pub struct GoalQomdp {
    pub dim: usize,
    pub num_obs: usize,
    pub actions: Vec<Superoperator>,
    pub rho0: DensityMatrix,
    pub rho_g: DensityMatrix,
}

impl GoalQomdp {
    /// Validates structure and the absorbing-goal condition.
    pub fn new(
        dim: usize,
        num_obs: usize,
        actions: Vec<Superoperator>,
        rho0: DensityMatrix,
        rho_g: DensityMatrix,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let q = Self::from_parts(dim, num_obs, actions, rho0, rho_g, tol)?;
        Error::check(q.absorption_violations(tol))?;
        Ok(q)
    }

    /// Structural checks only; the goal need not be absorbing.
    pub fn from_parts(
        dim: usize,
        num_obs: usize,
        actions: Vec<Superoperator>,
        rho0: DensityMatrix,
        rho_g: DensityMatrix,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let mut v = qomdp_action_violations(dim, num_obs, &actions, tol);
        if rho0.dim() != dim {
            v.push(Violation::new("dimension", "rho0", f64::INFINITY));
        }
        if rho_g.dim() != dim {
            v.push(Violation::new("dimension", "rho_g", f64::INFINITY));
        }
        Error::check(v)?;
        Ok(Self {
            dim,
            num_obs,
            actions,
            rho0,
            rho_g,
        })
    }

    pub fn is_goal(&self, rho: &DensityMatrix, tol: &ToleranceConfig) -> bool {
        rho.approx_eq(&self.rho_g, tol.eps_zero)
    }

    fn absorption_violations(&self, tol: &ToleranceConfig) -> Vec<Violation> {
        is_absorbing_goal(self, tol)
            .violations
            .into_iter()
            .map(|(a, j, dist)| {
                Violation::new(
                    "absorbing-goal",
                    format!("action {}, observation {}", a + 1, j),
                    dist,
                )
            })
            .collect()
    }
}

/// Result of the absorbing-goal check.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionReport {
    pub absorbing: bool,
    /// `(0-based action, 1-based observation, distance of post-state from ρ_g)`.
    pub violations: Vec<(usize, usize, f64)>,
}

/// Every branch out of `ρ_g` either has probability ≤ `eps_zero` or returns to `ρ_g`.
pub fn is_absorbing_goal(q: &GoalQomdp, tol: &ToleranceConfig) -> AbsorptionReport {
    let mut violations = Vec::new();
    for (a, action) in q.actions.iter().enumerate() {
        for (j, k) in action.kraus().iter().enumerate() {
            if k.rows() != q.rho_g.dim() {
                violations.push((a, j + 1, f64::INFINITY));
                continue;
            }
            let post = q.rho_g.matrix().conjugate_by(k);
            let p = post.trace().re;
            if p <= tol.eps_zero {
                continue;
            }
            let dist = post.scale_real(1.0 / p).max_abs_diff(q.rho_g.matrix());
            if dist > tol.eps_zero {
                violations.push((a, j + 1, dist));
            }
        }
    }
    AbsorptionReport {
        absorbing: violations.is_empty(),
        violations,
    }
}
