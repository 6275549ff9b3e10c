//! Seeded Monte Carlo estimates of goal-reaching probability.

use serde::Serialize;

use crate::classical::GoalPomdp;
use crate::error::{Error, Result};
use crate::numerics::ToleranceConfig;
use crate::quantum::{sample_step, GoalQomdp};
use crate::reductions::ActionSequence;
use crate::sampling::{sample_index, trial_rng};
use crate::solvers::reach::{initial_support, SupportModel, SupportPolicy};

/// Goal model being simulated.
#[derive(Debug, Clone, Copy)]
pub enum GoalModel<'a> {
    Pomdp(&'a GoalPomdp),
    Qomdp(&'a GoalQomdp),
}

/// Policy driving a simulation.
#[derive(Debug, Clone)]
pub enum Policy {
    /// 1-based actions applied in order; the trajectory stops when the sequence runs out.
    Sequence(ActionSequence),
    /// 0-based action per belief support; the trajectory stops at a support with no entry.
    Support(SupportPolicy),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoalEstimate {
    pub probability: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Fraction of `trials` seeded trajectories in the goal after at most `steps` steps.
///
/// Trial `k` draws from its own stream of the master `seed`, so results do not
/// depend on evaluation order.
pub fn estimate_goal_probability(
    model: GoalModel<'_>,
    policy: &Policy,
    steps: usize,
    trials: u64,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<GoalEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let support_model = match (model, policy) {
        (GoalModel::Qomdp(_), Policy::Support(_)) => {
            return Err(Error::Unsupported("support policies apply to goal POMDPs only".into()))
        }
        (GoalModel::Pomdp(p), Policy::Support(_)) => Some(SupportModel::new(p, tol)),
        _ => None,
    };
    if let Policy::Sequence(seq) = policy {
        let count = match model {
            GoalModel::Pomdp(p) => p.dynamics.num_actions,
            GoalModel::Qomdp(q) => q.actions.len(),
        };
        seq.check_range(count)?;
    }
    let mut hits = 0u64;
    for k in 0..trials {
        let reached = match model {
            GoalModel::Qomdp(q) => qomdp_trial(q, policy, steps, seed, k, tol)?,
            GoalModel::Pomdp(p) => pomdp_trial(p, support_model.as_ref(), policy, steps, seed, k, tol)?,
        };
        hits += reached as u64;
    }
    let n = trials as f64;
    let probability = hits as f64 / n;
    Ok(GoalEstimate {
        probability,
        std_error: (probability * (1.0 - probability) / n).sqrt(),
        trials,
    })
}

fn qomdp_trial(
    q: &GoalQomdp,
    policy: &Policy,
    steps: usize,
    seed: u64,
    trial: u64,
    tol: &ToleranceConfig,
) -> Result<bool> {
    let Policy::Sequence(seq) = policy else {
        unreachable!("checked by the caller")
    };
    let mut rng = trial_rng(seed, trial);
    let mut rho = q.rho0.clone();
    for &a in seq.indices().iter().take(steps) {
        if q.is_goal(&rho, tol) {
            break;
        }
        rho = sample_step(&rho, &q.actions[a - 1], &mut rng, tol)?.1;
    }
    Ok(q.is_goal(&rho, tol))
}

fn pomdp_trial(
    p: &GoalPomdp,
    supports: Option<&SupportModel>,
    policy: &Policy,
    steps: usize,
    seed: u64,
    trial: u64,
    tol: &ToleranceConfig,
) -> Result<bool> {
    let d = &p.dynamics;
    let goal = p.goal();
    let mut rng = trial_rng(seed, trial);
    let mut hidden = sample_index(d.b0.probs(), &mut rng, tol.eps_structural)?;
    let mut z = initial_support(p, tol);
    for k in 0..steps {
        if hidden == goal {
            break;
        }
        let a = match policy {
            Policy::Sequence(seq) => match seq.indices().get(k) {
                Some(&a) => a - 1,
                None => break,
            },
            Policy::Support(pi) => match pi.action_for(&z) {
                Some(a) if a < d.num_actions => a,
                Some(a) => return Err(Error::out_of_range("action", a, format!("0..{}", d.num_actions))),
                None => break,
            },
        };
        let (next, obs) = d.sample_step(hidden, a, &mut rng, tol)?;
        hidden = next;
        if let Some(model) = supports {
            // a sampled observation always has positive probability, hence a non-empty support
            z = model
                .update(&z, a, obs)
                .ok_or(Error::ZeroProbabilityObservation(0.0))?;
        }
    }
    Ok(hidden == goal)
}
