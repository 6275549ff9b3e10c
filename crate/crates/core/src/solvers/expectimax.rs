//! Finite-horizon policy trees for POMDPs (belief states) and QOMDPs (density matrices).
//!
//! Search is exact depth-first expectimax: working memory is linear in the
//! horizon apart from the returned tree itself.

use serde::{Deserialize, Serialize};

use crate::classical::{Belief, Pomdp};
use crate::error::{Error, Result};
use crate::numerics::ToleranceConfig;
use crate::quantum::{self, DensityMatrix, Qomdp};

/// Default cap on search nodes for [`best_policy_value`].
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Relative gap below which two action values count as tied.
///
/// Values that agree in exact arithmetic can differ by a few ulps once summed
/// in floating point; this keeps "lowest action wins ties" meaningful.
pub const TIE_RTOL: f64 = 1e-12;

/// Whether `candidate` beats `incumbent` by more than the tie tolerance.
pub fn strictly_better(candidate: f64, incumbent: f64) -> bool {
    candidate > incumbent + TIE_RTOL * incumbent.abs().max(1.0)
}

/// A reward-bearing decision process whose information state is fully known.
pub trait DecisionModel {
    type State: Clone;

    fn initial_state(&self) -> Self::State;
    fn num_actions(&self) -> usize;
    fn num_obs(&self) -> usize;
    fn gamma(&self) -> f64;
    fn reward(&self, state: &Self::State, action: usize, tol: &ToleranceConfig) -> Result<f64>;
    /// `(0-based observation, probability, successor)` for every branch with
    /// probability above `eps_zero`, in observation order.
    fn branches(
        &self,
        state: &Self::State,
        action: usize,
        tol: &ToleranceConfig,
    ) -> Result<Vec<(usize, f64, Self::State)>>;
}

impl DecisionModel for Pomdp {
    type State = Belief;

    fn initial_state(&self) -> Belief {
        self.dynamics.b0.clone()
    }

    fn num_actions(&self) -> usize {
        self.dynamics.num_actions
    }

    fn num_obs(&self) -> usize {
        self.dynamics.num_obs
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn reward(&self, b: &Belief, a: usize, _tol: &ToleranceConfig) -> Result<f64> {
        self.belief_reward(b, a)
    }

    fn branches(&self, b: &Belief, a: usize, tol: &ToleranceConfig) -> Result<Vec<(usize, f64, Belief)>> {
        self.dynamics.belief_branches(b, a, tol)
    }
}

impl DecisionModel for Qomdp {
    type State = DensityMatrix;

    fn initial_state(&self) -> DensityMatrix {
        self.rho0.clone()
    }

    fn num_actions(&self) -> usize {
        self.actions.len()
    }

    fn num_obs(&self) -> usize {
        self.num_obs
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn reward(&self, rho: &DensityMatrix, a: usize, tol: &ToleranceConfig) -> Result<f64> {
        let op = self
            .rewards
            .get(a)
            .ok_or_else(|| Error::out_of_range("action", a, format!("0..{}", self.rewards.len())))?;
        quantum::reward(rho, op, tol)
    }

    fn branches(
        &self,
        rho: &DensityMatrix,
        a: usize,
        tol: &ToleranceConfig,
    ) -> Result<Vec<(usize, f64, DensityMatrix)>> {
        let action = self
            .actions
            .get(a)
            .ok_or_else(|| Error::out_of_range("action", a, format!("0..{}", self.actions.len())))?;
        let probs = quantum::observation_probs(rho, action, tol)?;
        let mut out = Vec::new();
        for (o, p) in probs.into_iter().enumerate() {
            if p > tol.eps_zero {
                out.push((o, p, quantum::evolve(rho, action, o + 1, tol)?));
            }
        }
        Ok(out)
    }
}

/// Contingency plan: an action, then one subtree per observation.
///
/// Actions and child positions are 0-based. A `None` child means the branch is
/// unreachable or the horizon ends there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyTree {
    pub action: usize,
    pub children: Vec<Option<PolicyTree>>,
}

impl PolicyTree {
    pub fn leaf(action: usize, num_obs: usize) -> Self {
        Self {
            action,
            children: vec![None; num_obs],
        }
    }

    /// Number of decision levels.
    pub fn depth(&self) -> usize {
        1 + self
            .children
            .iter()
            .flatten()
            .map(PolicyTree::depth)
            .max()
            .unwrap_or(0)
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().flatten().map(PolicyTree::node_count).sum::<usize>()
    }
}

/// `r + γ Σ p·v`, summed in branch order. Shared by evaluation and search so
/// both produce bit-identical values for the same tree.
fn backup(reward: f64, gamma: f64, terms: &[(f64, f64)]) -> f64 {
    let mut future = 0.0;
    for &(p, v) in terms {
        future += p * v;
    }
    reward + gamma * future
}

/// Expected discounted reward of `tree` over `horizon` steps from `start`.
pub fn evaluate_policy_tree<M: DecisionModel>(
    model: &M,
    start: &M::State,
    tree: &PolicyTree,
    horizon: usize,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let depth = tree.depth();
    if depth > horizon || horizon == 0 {
        return Err(Error::TreeTooDeep { depth, horizon });
    }
    evaluate_node(model, start, tree, horizon, tol)
}

fn evaluate_node<M: DecisionModel>(
    model: &M,
    state: &M::State,
    tree: &PolicyTree,
    remaining: usize,
    tol: &ToleranceConfig,
) -> Result<f64> {
    if tree.action >= model.num_actions() {
        return Err(Error::out_of_range("action", tree.action, format!("0..{}", model.num_actions())));
    }
    let r = model.reward(state, tree.action, tol)?;
    if remaining == 1 {
        return Ok(backup(r, model.gamma(), &[]));
    }
    let mut terms = Vec::new();
    for (o, p, next) in model.branches(state, tree.action, tol)? {
        let child = tree
            .children
            .get(o)
            .and_then(Option::as_ref)
            .ok_or(Error::MissingChild {
                observation: o,
                remaining: remaining - 1,
            })?;
        terms.push((p, evaluate_node(model, &next, child, remaining - 1, tol)?));
    }
    Ok(backup(r, model.gamma(), &terms))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestPolicy {
    pub value: f64,
    pub tree: PolicyTree,
    pub nodes_expanded: u64,
}

/// Exact optimum over all depth-`horizon` policy trees; ties (see [`TIE_RTOL`])
/// go to the lowest action at every node.
pub fn best_policy_value<M: DecisionModel>(
    model: &M,
    start: &M::State,
    horizon: usize,
    node_budget: u64,
    tol: &ToleranceConfig,
) -> Result<BestPolicy> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    let mut nodes = 0;
    let (value, tree) = best_from(model, start, horizon, node_budget, tol, &mut nodes)?;
    Ok(BestPolicy {
        value,
        tree,
        nodes_expanded: nodes,
    })
}

fn best_from<M: DecisionModel>(
    model: &M,
    state: &M::State,
    remaining: usize,
    budget: u64,
    tol: &ToleranceConfig,
    nodes: &mut u64,
) -> Result<(f64, PolicyTree)> {
    *nodes += 1;
    if *nodes > budget {
        return Err(Error::BudgetExceeded(*nodes - 1));
    }
    let mut best: Option<(f64, PolicyTree)> = None;
    for a in 0..model.num_actions() {
        let r = model.reward(state, a, tol)?;
        let mut tree = PolicyTree::leaf(a, model.num_obs());
        let mut terms = Vec::new();
        if remaining > 1 {
            for (o, p, next) in model.branches(state, a, tol)? {
                let (v, sub) = best_from(model, &next, remaining - 1, budget, tol, nodes)?;
                terms.push((p, v));
                tree.children[o] = Some(sub);
            }
        }
        let value = backup(r, model.gamma(), &terms);
        if best.as_ref().is_none_or(|(v, _)| strictly_better(value, *v)) {
            best = Some((value, tree));
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("model has no actions".into()))
}

/// Whether some depth-`horizon` policy reaches value ≥ `threshold − eps_zero` from `start`.
pub fn policy_exists<M: DecisionModel>(
    model: &M,
    start: &M::State,
    horizon: usize,
    threshold: f64,
    node_budget: u64,
    tol: &ToleranceConfig,
) -> Result<bool> {
    let best = best_policy_value(model, start, horizon, node_budget, tol)?;
    Ok(best.value >= threshold - tol.eps_zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{PomdpDynamics, Tensor3};
    use crate::numerics::ComplexMatrix;
    use crate::quantum::Superoperator;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    /// Tiger-style problem: listen (a0) or guess (a1).
    fn tiger() -> Pomdp {
        let d = PomdpDynamics::from_parts(
            Tensor3::from_nested(&[
                vec![vec![1.0, 0.0], vec![0.5, 0.5]],
                vec![vec![0.0, 1.0], vec![0.5, 0.5]],
            ])
            .unwrap(),
            Tensor3::from_nested(&[
                vec![vec![0.85, 0.15], vec![0.5, 0.5]],
                vec![vec![0.15, 0.85], vec![0.5, 0.5]],
            ])
            .unwrap(),
            vec![0.5, 0.5],
        );
        Pomdp::new(d, vec![vec![-1.0, 10.0], vec![-1.0, -100.0]], 0.95, &tol()).unwrap()
    }

    fn qubit_model() -> Qomdp {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let measure = Superoperator::new(
            vec![
                ComplexMatrix::from_diag_real(&[1.0, 0.0]),
                ComplexMatrix::from_diag_real(&[0.0, 1.0]),
            ],
            &tol(),
        )
        .unwrap();
        let hadamard = Superoperator::new(
            vec![
                ComplexMatrix::from_real_rows(&[vec![h, h], vec![h, -h]]),
                ComplexMatrix::zeros(2, 2),
            ],
            &tol(),
        )
        .unwrap();
        Qomdp::new(
            2,
            2,
            vec![measure, hadamard],
            vec![
                ComplexMatrix::from_diag_real(&[1.0, 0.0]),
                ComplexMatrix::from_diag_real(&[0.0, 0.5]),
            ],
            0.9,
            DensityMatrix::basis(2, 1),
            &tol(),
        )
        .unwrap()
    }

    #[test]
    fn depth_one_is_immediate_reward() {
        let p = tiger();
        let b0 = p.initial_state();
        let v = evaluate_policy_tree(&p, &b0, &PolicyTree::leaf(1, 2), 1, &tol()).unwrap();
        assert_eq!(v, p.belief_reward(&b0, 1).unwrap());

        let q = qubit_model();
        let v = evaluate_policy_tree(&q, &q.rho0, &PolicyTree::leaf(1, 2), 1, &tol()).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn horizon_one_optimum() {
        let p = tiger();
        let best = best_policy_value(&p, &p.initial_state(), 1, DEFAULT_NODE_BUDGET, &tol()).unwrap();
        // listen: −1; guess: (10 − 100)/2
        assert_eq!(best.value, -1.0);
        assert_eq!(best.tree, PolicyTree::leaf(0, 2));
    }

    #[test]
    fn missing_child_detected() {
        let p = tiger();
        let tree = PolicyTree {
            action: 0,
            children: vec![Some(PolicyTree::leaf(0, 2)), None],
        };
        assert!(matches!(
            evaluate_policy_tree(&p, &p.initial_state(), &tree, 2, &tol()),
            Err(Error::MissingChild { observation: 1, .. })
        ));
        assert!(matches!(
            evaluate_policy_tree(&p, &p.initial_state(), &tree, 1, &tol()),
            Err(Error::TreeTooDeep { .. })
        ));
    }

    #[test]
    fn threshold_queries() {
        let q = qubit_model();
        let best = best_policy_value(&q, &q.rho0, 3, DEFAULT_NODE_BUDGET, &tol()).unwrap();
        let exists = |t| policy_exists(&q, &q.rho0, 3, t, DEFAULT_NODE_BUDGET, &tol()).unwrap();
        assert!(exists(best.value));
        assert!(!exists(best.value + 1.0));
        assert!(exists(-1e300));
    }

    #[test]
    fn budget_is_enforced() {
        let p = tiger();
        assert!(matches!(
            best_policy_value(&p, &p.initial_state(), 6, 10, &tol()),
            Err(Error::BudgetExceeded(10))
        ));
    }

    #[test]
    fn optimal_tree_evaluates_to_its_value() {
        let p = tiger();
        let b0 = p.initial_state();
        let best = best_policy_value(&p, &b0, 4, DEFAULT_NODE_BUDGET, &tol()).unwrap();
        assert_eq!(best.tree.depth(), 4);
        let v = evaluate_policy_tree(&p, &b0, &best.tree, 4, &tol()).unwrap();
        assert_eq!(v, best.value);
    }
}
