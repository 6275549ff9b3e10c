//! Kind-dispatching entry points shared by the CLI and the C ABI.
//!
//! Each function takes a loaded [`Model`], rejects kinds it does not apply to
//! with [`Error::Unsupported`], and returns a [`Report`] or a new model.

use crate::classical::Belief;
use crate::error::{Error, Result};
use crate::model_file::Model;
use crate::numerics::ToleranceConfig;
use crate::reductions::{embed_pomdp, qmop_bounded_search, qmop_to_goal_qomdp, SearchOptions};
use crate::report::{to_value, Report};
use crate::solvers::{
    best_policy_value, decide_goal_reachability_pomdp, decide_goal_reachability_qomdp_bounded,
    estimate_goal_probability, BestPolicy, Decision, GoalEstimate, GoalModel, Policy, ReachabilityVerdict, Witness,
    DEFAULT_NODE_BUDGET, DEFAULT_SUPPORT_CAP,
};

fn unsupported(command: &str, m: &Model) -> Error {
    Error::Unsupported(format!("`{command}` does not accept {} models", m.kind().as_str()))
}

/// Optimal depth-`horizon` policy tree of a POMDP (from `b0`) or QOMDP (from `ρ0`).
pub fn best_policy(m: &Model, horizon: usize, tol: &ToleranceConfig) -> Result<BestPolicy> {
    match m {
        Model::Pomdp(p) => {
            let b0: Belief = p.dynamics.b0.clone();
            best_policy_value(p, &b0, horizon, DEFAULT_NODE_BUDGET, tol)
        }
        Model::Qomdp(q) => best_policy_value(q, &q.rho0, horizon, DEFAULT_NODE_BUDGET, tol),
        other => Err(unsupported("solve", other)),
    }
}

/// Optimal value and tree; `decided` compares the value with `threshold − eps_zero` when given.
pub fn solve(m: &Model, horizon: usize, threshold: Option<f64>, tol: &ToleranceConfig) -> Result<Report> {
    Ok(solution_report(best_policy(m, horizon, tol)?, threshold, tol))
}

/// Report for an already computed optimum.
pub fn solution_report(best: BestPolicy, threshold: Option<f64>, tol: &ToleranceConfig) -> Report {
    Report {
        decided: threshold.map(|t| {
            if best.value >= t - tol.eps_zero {
                Decision::Yes
            } else {
                Decision::No
            }
        }),
        value: Some(best.value.into()),
        witness: Some(to_value(best.tree)),
        nodes_expanded: Some(best.nodes_expanded),
        ..Default::default()
    }
}

/// Goal reachability: exact for goal POMDPs, bounded by `depth` (required) for goal QOMDPs.
pub fn decide_reach(m: &Model, depth: Option<usize>, tol: &ToleranceConfig) -> Result<Report> {
    let verdict = match m {
        Model::GoalPomdp(p) => decide_goal_reachability_pomdp(p, DEFAULT_SUPPORT_CAP, tol)?,
        Model::GoalQomdp(q) => {
            let depth =
                depth.ok_or_else(|| Error::InvalidArgument("a depth is required for goal_qomdp models".into()))?;
            decide_goal_reachability_qomdp_bounded(q, depth, tol)?
        }
        other => return Err(unsupported("decide-reach", other)),
    };
    Ok(verdict_report(&verdict))
}

fn verdict_report(v: &ReachabilityVerdict) -> Report {
    Report {
        decided: Some(v.decided),
        witness: v.witness.as_ref().map(to_value),
        nodes_expanded: Some(v.nodes_expanded),
        bound_used: v.bound_used,
        ..Default::default()
    }
}

/// Lexicographically first null sequence of length ≤ `max_len`; `unknown` when there is none.
pub fn qmop_search(m: &Model, max_len: usize, tol: &ToleranceConfig) -> Result<Report> {
    let Model::Qmop(s) = m else {
        return Err(unsupported("qmop-search", m));
    };
    let found = qmop_bounded_search(s, max_len, SearchOptions::default(), tol);
    Ok(Report {
        decided: Some(if found.witness.is_some() { Decision::Yes } else { Decision::Unknown }),
        witness: found.witness.map(|w| to_value(Witness::ActionSequence(w))),
        nodes_expanded: Some(found.nodes_expanded),
        bound_used: Some(max_len),
        ..Default::default()
    })
}

/// The goal QOMDP encoding a QMOP instance.
pub fn reduce_qmop(m: &Model, tol: &ToleranceConfig) -> Result<Model> {
    match m {
        Model::Qmop(s) => Ok(Model::GoalQomdp(qmop_to_goal_qomdp(s, tol)?)),
        other => Err(unsupported("reduce-qmop", other)),
    }
}

/// The QOMDP embedding of a POMDP.
pub fn embed(m: &Model, tol: &ToleranceConfig) -> Result<Model> {
    match m {
        Model::Pomdp(p) => Ok(Model::Qomdp(embed_pomdp(p, tol)?)),
        other => Err(unsupported("embed", other)),
    }
}

/// Monte Carlo goal probability of a goal POMDP or goal QOMDP under `policy`.
pub fn estimate(
    m: &Model,
    policy: &Policy,
    steps: usize,
    trials: u64,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<GoalEstimate> {
    let model = match m {
        Model::GoalPomdp(p) => GoalModel::Pomdp(p),
        Model::GoalQomdp(q) => GoalModel::Qomdp(q),
        other => return Err(unsupported("simulate", other)),
    };
    estimate_goal_probability(model, policy, steps, trials, seed, tol)
}

/// [`estimate`] as a report that also records the run parameters.
pub fn simulate(
    m: &Model,
    policy: &Policy,
    steps: usize,
    trials: u64,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<Report> {
    let est = estimate(m, policy, steps, trials, seed, tol)?;
    Ok(Report::default()
        .with("probability", est.probability)
        .with("std_error", est.std_error)
        .with("trials", est.trials)
        .with("steps", steps)
        .with("seed", seed))
}
