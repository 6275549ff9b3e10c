use serde::{Deserialize, Serialize};

use crate::classical::Mdp;
use crate::error::{Error, Result};

/// Sweep cap for value iteration; with γ < 1 the contraction reaches any
/// positive epsilon long before this.
const MAX_SWEEPS: usize = 1_000_000;

/// Action per state of a finite MDP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationaryPolicy {
    pub action_for_state: Vec<usize>,
}

impl StationaryPolicy {
    pub fn new(action_for_state: Vec<usize>) -> Self {
        Self { action_for_state }
    }

    pub fn action(&self, s: usize) -> usize {
        self.action_for_state[s]
    }
}

/// Greedy policy and `max_a` lookahead at `values`; ties go to the lowest action.
fn greedy(m: &Mdp, values: &[f64]) -> (Vec<f64>, StationaryPolicy) {
    let mut next = vec![0.0; m.num_states];
    let mut actions = vec![0; m.num_states];
    for s in 0..m.num_states {
        let mut best = f64::NEG_INFINITY;
        for a in 0..m.num_actions {
            let q = m.lookahead(values, s, a);
            if q > best {
                best = q;
                actions[s] = a;
            }
        }
        next[s] = best;
    }
    (next, StationaryPolicy::new(actions))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Max-norm Bellman residual `‖T V − V‖_∞`.
pub fn bellman_residual(m: &Mdp, values: &[f64]) -> f64 {
    max_diff(&greedy(m, values).0, values)
}

/// Iterates the Bellman operator from zero until successive iterates differ by
/// at most `epsilon`; the returned values then have residual ≤ γ·epsilon.
pub fn value_iteration(m: &Mdp, epsilon: f64) -> Result<(Vec<f64>, StationaryPolicy)> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
    }
    let mut values = vec![0.0; m.num_states];
    for _ in 0..MAX_SWEEPS {
        let (next, _) = greedy(m, &values);
        let delta = max_diff(&next, &values);
        values = next;
        if delta <= epsilon {
            let (_, policy) = greedy(m, &values);
            return Ok((values, policy));
        }
    }
    Err(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        off_norm: bellman_residual(m, &values),
    })
}

/// Finite-horizon value of a stationary policy: `V(·, 0) = 0` and
/// `V(s, h) = R(s, π(s)) + γ Σ_s' T(s, π(s), s') V(s', h−1)`, so horizon 1 is the immediate reward.
pub fn mdp_policy_value(m: &Mdp, pi: &StationaryPolicy, horizon: usize) -> Vec<f64> {
    let mut values = vec![0.0; m.num_states];
    for _ in 0..horizon {
        values = (0..m.num_states).map(|s| m.lookahead(&values, s, pi.action(s))).collect();
    }
    values
}
