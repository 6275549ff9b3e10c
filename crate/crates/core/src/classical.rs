//! Finite MDPs and POMDPs, belief states and the belief-MDP equations.
//!
//! States, actions and observations are 0-based here. For goal POMDPs the goal
//! is always stored as the last state and the goal observation as the last
//! observation; [`GoalPomdp::new`] permutes states to that convention.

use rand::Rng;

use crate::error::{Error, Result, Violation};
use crate::numerics::{ComplexMatrix, ToleranceConfig};
use crate::sampling::sample_index;

/// Dense rank-3 tensor of reals, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    shape: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(shape: [usize; 3]) -> Self {
        Self {
            shape,
            data: vec![0.0; shape[0] * shape[1] * shape[2]],
        }
    }

    /// From nested `[i][j][k]` vectors; every inner vector must have the same length.
    pub fn from_nested(nested: &[Vec<Vec<f64>>]) -> Result<Self> {
        let d0 = nested.len();
        let d1 = nested.first().map_or(0, Vec::len);
        let d2 = nested.first().and_then(|x| x.first()).map_or(0, Vec::len);
        let mut data = Vec::with_capacity(d0 * d1 * d2);
        for (i, plane) in nested.iter().enumerate() {
            if plane.len() != d1 {
                return Err(Error::DimensionMismatch(format!("[{i}] has length {}, expected {d1}", plane.len())));
            }
            for (j, row) in plane.iter().enumerate() {
                if row.len() != d2 {
                    return Err(Error::DimensionMismatch(format!(
                        "[{i}][{j}] has length {}, expected {d2}",
                        row.len()
                    )));
                }
                data.extend_from_slice(row);
            }
        }
        Ok(Self {
            shape: [d0, d1, d2],
            data,
        })
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        let [d0, d1, d2] = self.shape;
        (0..d0)
            .map(|i| (0..d1).map(|j| (0..d2).map(|k| self.get(i, j, k)).collect()).collect())
            .collect()
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.shape[1] + j) * self.shape[2] + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.shape[1] + j) * self.shape[2] + k] = v;
    }

    /// The innermost vector at `[i][j]`.
    pub fn fiber(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.shape[1] + j) * self.shape[2];
        &self.data[start..start + self.shape[2]]
    }
}

/// Checks `t[i][j][·]` is a probability vector for every `(i, j)`.
fn stochastic_violations(t: &Tensor3, name: &str, tol: &ToleranceConfig) -> Vec<Violation> {
    let mut v = Vec::new();
    let [d0, d1, _] = t.shape;
    for i in 0..d0 {
        for j in 0..d1 {
            let fiber = t.fiber(i, j);
            let worst_range = fiber
                .iter()
                .map(|&x| {
                    if !x.is_finite() {
                        f64::INFINITY
                    } else {
                        (-x).max(x - 1.0).max(0.0)
                    }
                })
                .fold(0.0, f64::max);
            if worst_range > tol.eps_structural {
                v.push(Violation::new("probability-range", format!("{name}[{i}][{j}]"), worst_range));
            }
            let dev = (fiber.iter().sum::<f64>() - 1.0).abs();
            if dev > tol.eps_structural || dev.is_nan() {
                v.push(Violation::new("row-stochastic", format!("{name}[{i}][{j}]"), dev));
            }
        }
    }
    v
}

fn shape_violation(name: &str, got: [usize; 3], want: [usize; 3]) -> Option<Violation> {
    (got != want).then(|| {
        Violation::new(
            "shape",
            format!("{name} is {got:?}, expected {want:?}"),
            f64::INFINITY,
        )
    })
}

/// Probability distribution over states.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    probs: Vec<f64>,
}

impl Belief {
    /// Clamps roundoff negatives (≥ −eps_structural) to zero; rejects anything
    /// further off the simplex.
    pub fn new(probs: Vec<f64>, tol: &ToleranceConfig) -> Result<Self> {
        Error::check(belief_violations(&probs, "belief", tol))?;
        Ok(Self {
            probs: probs.into_iter().map(|x| x.max(0.0)).collect(),
        })
    }

    pub fn point(num_states: usize, s: usize) -> Self {
        let mut probs = vec![0.0; num_states];
        probs[s] = 1.0;
        Self { probs }
    }

    pub fn uniform(num_states: usize) -> Self {
        Self {
            probs: vec![1.0 / num_states as f64; num_states],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, eps: f64) -> bool {
        self.len() == other.len() && self.max_abs_diff(other) <= eps
    }
}

fn belief_violations(probs: &[f64], name: &str, tol: &ToleranceConfig) -> Vec<Violation> {
    let mut v = Vec::new();
    if probs.is_empty() {
        v.push(Violation::new("non-empty", name, f64::INFINITY));
        return v;
    }
    let most_negative = probs.iter().fold(0.0_f64, |m, &x| m.max(-x));
    if most_negative > tol.eps_structural || probs.iter().any(|x| !x.is_finite()) {
        v.push(Violation::new("non-negative", name, most_negative));
    }
    let dev = (probs.iter().sum::<f64>() - 1.0).abs();
    if dev > tol.eps_structural || dev.is_nan() {
        v.push(Violation::new("sums-to-one", name, dev));
    }
    v
}

/// Finite discounted MDP.
#[derive(Debug, Clone)]
pub struct Mdp {
    pub num_states: usize,
    pub num_actions: usize,
    /// `[s][a][s']`
    pub transition: Tensor3,
    /// `reward[s][a]`
    pub reward: Vec<Vec<f64>>,
    pub gamma: f64,
}

impl Mdp {
    pub fn new(transition: Tensor3, reward: Vec<Vec<f64>>, gamma: f64, tol: &ToleranceConfig) -> Result<Self> {
        let [ns, na, _] = transition.shape();
        let m = Self {
            num_states: ns,
            num_actions: na,
            transition,
            reward,
            gamma,
        };
        Error::check(m.violations(tol))?;
        Ok(m)
    }

    pub fn violations(&self, tol: &ToleranceConfig) -> Vec<Violation> {
        let (ns, na) = (self.num_states, self.num_actions);
        let mut v = Vec::new();
        if ns == 0 || na == 0 {
            v.push(Violation::new("non-empty", "states/actions", f64::INFINITY));
            return v;
        }
        v.extend(shape_violation("transition", self.transition.shape(), [ns, na, ns]));
        if v.is_empty() {
            v.extend(stochastic_violations(&self.transition, "transition", tol));
        }
        v.extend(reward_shape_violations(&self.reward, ns, na));
        if !(0.0..1.0).contains(&self.gamma) {
            v.push(Violation::new("discount-range", "gamma", self.gamma));
        }
        v
    }

    /// `R(s,a) + γ Σ_s' T(s,a,s') V(s')`.
    pub fn lookahead(&self, values: &[f64], s: usize, a: usize) -> f64 {
        let future: f64 = self
            .transition
            .fiber(s, a)
            .iter()
            .zip(values)
            .map(|(p, v)| p * v)
            .sum();
        self.reward[s][a] + self.gamma * future
    }
}

fn reward_shape_violations(reward: &[Vec<f64>], ns: usize, na: usize) -> Vec<Violation> {
    let mut v = Vec::new();
    if reward.len() != ns || reward.iter().any(|r| r.len() != na) {
        v.push(Violation::new(
            "shape",
            format!("reward must be {ns}x{na}"),
            f64::INFINITY,
        ));
    } else if reward.iter().flatten().any(|x| !x.is_finite()) {
        v.push(Violation::new("finite", "reward", f64::INFINITY));
    }
    v
}

/// MDP with an absorbing goal state and no rewards.
#[derive(Debug, Clone)]
pub struct GoalMdp {
    pub num_states: usize,
    pub num_actions: usize,
    pub transition: Tensor3,
    pub goal: usize,
}

impl GoalMdp {
    pub fn new(transition: Tensor3, goal: usize, tol: &ToleranceConfig) -> Result<Self> {
        let [ns, na, _] = transition.shape();
        let m = Self {
            num_states: ns,
            num_actions: na,
            transition,
            goal,
        };
        Error::check(m.violations(tol))?;
        Ok(m)
    }

    pub fn violations(&self, tol: &ToleranceConfig) -> Vec<Violation> {
        let (ns, na) = (self.num_states, self.num_actions);
        let mut v = Vec::new();
        if ns == 0 || na == 0 {
            v.push(Violation::new("non-empty", "states/actions", f64::INFINITY));
            return v;
        }
        v.extend(shape_violation("transition", self.transition.shape(), [ns, na, ns]));
        if !v.is_empty() {
            return v;
        }
        v.extend(stochastic_violations(&self.transition, "transition", tol));
        if self.goal >= ns {
            v.push(Violation::new("goal-index", format!("goal={}", self.goal), f64::INFINITY));
            return v;
        }
        for a in 0..na {
            let dev = (self.transition.get(self.goal, a, self.goal) - 1.0).abs();
            if dev > tol.eps_structural {
                v.push(Violation::new("absorbing-goal", format!("transition[{}][{a}]", self.goal), dev));
            }
        }
        v
    }
}

/// Transition, observation and start-belief structure shared by POMDPs and goal POMDPs.
#[derive(Debug, Clone)]
pub struct PomdpDynamics {
    pub num_states: usize,
    pub num_actions: usize,
    pub num_obs: usize,
    /// `T[s][a][s']`
    pub transition: Tensor3,
    /// `O[s'][a][o]`
    pub observation: Tensor3,
    pub b0: Belief,
}

impl PomdpDynamics {
    /// Assembles dynamics without validating them; see [`PomdpDynamics::violations`].
    pub fn from_parts(transition: Tensor3, observation: Tensor3, b0: Vec<f64>) -> Self {
        let [ns, na, _] = transition.shape();
        let no = observation.shape()[2];
        Self {
            num_states: ns,
            num_actions: na,
            num_obs: no,
            transition,
            observation,
            b0: Belief { probs: b0 },
        }
    }

    pub fn violations(&self, tol: &ToleranceConfig) -> Vec<Violation> {
        let (ns, na, no) = (self.num_states, self.num_actions, self.num_obs);
        let mut v = Vec::new();
        if ns == 0 || na == 0 || no == 0 {
            v.push(Violation::new("non-empty", "states/actions/observations", f64::INFINITY));
            return v;
        }
        v.extend(shape_violation("transition", self.transition.shape(), [ns, na, ns]));
        v.extend(shape_violation("observation", self.observation.shape(), [ns, na, no]));
        if self.b0.len() != ns {
            v.push(Violation::new("shape", format!("b0 has length {}, expected {ns}", self.b0.len()), f64::INFINITY));
        }
        if !v.is_empty() {
            return v;
        }
        v.extend(stochastic_violations(&self.transition, "transition", tol));
        v.extend(stochastic_violations(&self.observation, "observation", tol));
        v.extend(belief_violations(&self.b0.probs, "b0", tol));
        v
    }

    fn check_action_obs(&self, a: usize, o: usize) -> Result<()> {
        if a >= self.num_actions {
            return Err(Error::out_of_range("action", a, format!("0..{}", self.num_actions)));
        }
        if o >= self.num_obs {
            return Err(Error::out_of_range("observation", o, format!("0..{}", self.num_obs)));
        }
        Ok(())
    }

    fn check_belief(&self, b: &Belief) -> Result<()> {
        if b.len() != self.num_states {
            return Err(Error::DimensionMismatch(format!(
                "belief has {} entries, model has {} states",
                b.len(),
                self.num_states
            )));
        }
        Ok(())
    }

    /// `τ^{ao}_{ij} = O(s_i, a, o) · T(s_j, a, s_i)` as a real `Vec` of rows.
    pub(crate) fn tau_real(&self, a: usize, o: usize) -> Vec<Vec<f64>> {
        let n = self.num_states;
        (0..n)
            .map(|i| {
                let obs = self.observation.get(i, a, o);
                (0..n).map(|j| obs * self.transition.get(j, a, i)).collect()
            })
            .collect()
    }

    /// The belief-update matrix `τ^{ao}`.
    pub fn tau_matrix(&self, a: usize, o: usize) -> Result<ComplexMatrix> {
        self.check_action_obs(a, o)?;
        Ok(ComplexMatrix::from_real_rows(&self.tau_real(a, o)))
    }

    /// Unnormalized posterior `τ^{ao} b`.
    fn propagate(&self, b: &Belief, a: usize, o: usize) -> Vec<f64> {
        let n = self.num_states;
        (0..n)
            .map(|i| {
                let obs = self.observation.get(i, a, o);
                if obs == 0.0 {
                    return 0.0;
                }
                let predicted: f64 = (0..n).map(|j| self.transition.get(j, a, i) * b.probs[j]).sum();
                obs * predicted
            })
            .collect()
    }

    /// `Pr(o | a, b) = |τ^{ao} b|_1`.
    pub fn belief_obs_prob(&self, b: &Belief, a: usize, o: usize) -> Result<f64> {
        self.check_action_obs(a, o)?;
        self.check_belief(b)?;
        Ok(self.propagate(b, a, o).iter().sum::<f64>().clamp(0.0, 1.0))
    }

    /// Bayes update `τ^{ao} b / |τ^{ao} b|_1`.
    pub fn belief_update(&self, b: &Belief, a: usize, o: usize, tol: &ToleranceConfig) -> Result<Belief> {
        self.check_action_obs(a, o)?;
        self.check_belief(b)?;
        let raw = self.propagate(b, a, o);
        let norm: f64 = raw.iter().sum();
        if norm <= tol.eps_zero {
            return Err(Error::ZeroProbabilityObservation(norm));
        }
        Ok(Belief {
            probs: raw.into_iter().map(|x| (x / norm).max(0.0)).collect(),
        })
    }

    /// Posterior and probability for every observation with `Pr(o|a,b) > eps_zero`, in observation order.
    pub fn belief_branches(&self, b: &Belief, a: usize, tol: &ToleranceConfig) -> Result<Vec<(usize, f64, Belief)>> {
        let mut out = Vec::new();
        for o in 0..self.num_obs {
            let p = self.belief_obs_prob(b, a, o)?;
            if p > tol.eps_zero {
                out.push((o, p, self.belief_update(b, a, o, tol)?));
            }
        }
        Ok(out)
    }

    /// `τ(b, a, b')`: total probability of the observations whose posterior equals `b_next`.
    pub fn belief_transition_prob(&self, b: &Belief, a: usize, b_next: &Belief, tol: &ToleranceConfig) -> Result<f64> {
        self.check_belief(b_next)?;
        Ok(self
            .belief_branches(b, a, tol)?
            .into_iter()
            .filter(|(_, _, post)| post.approx_eq(b_next, tol.eps_zero))
            .map(|(_, p, _)| p)
            .sum())
    }

    /// One step of the hidden world: `s' ~ T(s, a, ·)`, then `o ~ O(s', a, ·)`.
    pub fn sample_step<R: Rng + ?Sized>(
        &self,
        hidden: usize,
        a: usize,
        rng: &mut R,
        tol: &ToleranceConfig,
    ) -> Result<(usize, usize)> {
        if hidden >= self.num_states {
            return Err(Error::out_of_range("state", hidden, format!("0..{}", self.num_states)));
        }
        self.check_action_obs(a, 0)?;
        let next = sample_index(self.transition.fiber(hidden, a), rng, tol.eps_structural)?;
        let obs = sample_index(self.observation.fiber(next, a), rng, tol.eps_structural)?;
        Ok((next, obs))
    }
}

/// POMDP with state rewards and a discount factor.
#[derive(Debug, Clone)]
pub struct Pomdp {
    pub dynamics: PomdpDynamics,
    /// `reward[s][a]`
    pub reward: Vec<Vec<f64>>,
    pub gamma: f64,
}

impl Pomdp {
    pub fn new(dynamics: PomdpDynamics, reward: Vec<Vec<f64>>, gamma: f64, tol: &ToleranceConfig) -> Result<Self> {
        let p = Self {
            dynamics,
            reward,
            gamma,
        };
        Error::check(p.violations(tol))?;
        Ok(Self {
            dynamics: PomdpDynamics {
                b0: Belief::new(p.dynamics.b0.probs.clone(), tol)?,
                ..p.dynamics
            },
            ..p
        })
    }

    pub fn violations(&self, tol: &ToleranceConfig) -> Vec<Violation> {
        let mut v = self.dynamics.violations(tol);
        v.extend(reward_shape_violations(
            &self.reward,
            self.dynamics.num_states,
            self.dynamics.num_actions,
        ));
        if !(0.0..1.0).contains(&self.gamma) {
            v.push(Violation::new("discount-range", "gamma", self.gamma));
        }
        v
    }

    /// `r(b, a) = Σ_i b_i R(s_i, a)`.
    pub fn belief_reward(&self, b: &Belief, a: usize) -> Result<f64> {
        self.dynamics.check_belief(b)?;
        if a >= self.dynamics.num_actions {
            return Err(Error::out_of_range("action", a, format!("0..{}", self.dynamics.num_actions)));
        }
        Ok(b.probs.iter().zip(&self.reward).map(|(p, r)| p * r[a]).sum())
    }
}

/// POMDP with an absorbing, announced goal state.
///
/// Internally the goal is the last state and `o_|Ω|` the last observation.
#[derive(Debug, Clone)]
pub struct GoalPomdp {
    pub dynamics: PomdpDynamics,
    /// `state_order[k]` is the caller's index of internal state `k`.
    pub state_order: Vec<usize>,
}

impl GoalPomdp {
    /// Moves state `goal` to the last position and validates every goal-POMDP invariant.
    pub fn new(dynamics: PomdpDynamics, goal: usize, tol: &ToleranceConfig) -> Result<Self> {
        let mut v = dynamics.violations(tol);
        if goal >= dynamics.num_states {
            v.push(Violation::new("goal-index", format!("goal={goal}"), f64::INFINITY));
        }
        Error::check(v)?;
        let p = Self::permuted(dynamics, goal);
        Error::check(p.goal_violations(tol))?;
        let b0 = Belief::new(p.dynamics.b0.probs.clone(), tol)?;
        Ok(Self {
            dynamics: PomdpDynamics { b0, ..p.dynamics },
            ..p
        })
    }

    /// Permutes the goal to the end without checking anything.
    pub fn new_unchecked(dynamics: PomdpDynamics, goal: usize) -> Self {
        Self::permuted(dynamics, goal)
    }

    fn permuted(d: PomdpDynamics, goal: usize) -> Self {
        let n = d.num_states;
        let order: Vec<usize> = (0..n).filter(|&s| s != goal).chain(std::iter::once(goal)).collect();
        if order.iter().enumerate().all(|(k, &s)| k == s) {
            return Self {
                dynamics: d,
                state_order: order,
            };
        }
        let [_, na, _] = d.transition.shape();
        let no = d.observation.shape()[2];
        let mut t = Tensor3::zeros([n, na, n]);
        let mut obs = Tensor3::zeros([n, na, no]);
        for (i, &si) in order.iter().enumerate() {
            for a in 0..na {
                for (j, &sj) in order.iter().enumerate() {
                    t.set(i, a, j, d.transition.get(si, a, sj));
                }
                for o in 0..no {
                    obs.set(i, a, o, d.observation.get(si, a, o));
                }
            }
        }
        let b0 = order.iter().map(|&s| d.b0.probs[s]).collect();
        Self {
            dynamics: PomdpDynamics {
                transition: t,
                observation: obs,
                b0: Belief { probs: b0 },
                ..d
            },
            state_order: order,
        }
    }

    pub fn goal(&self) -> usize {
        self.dynamics.num_states - 1
    }

    pub fn goal_obs(&self) -> usize {
        self.dynamics.num_obs - 1
    }

    pub fn goal_belief(&self) -> Belief {
        Belief::point(self.dynamics.num_states, self.goal())
    }

    fn goal_violations(&self, tol: &ToleranceConfig) -> Vec<Violation> {
        let d = &self.dynamics;
        let (g, og) = (self.goal(), self.goal_obs());
        let mut v = Vec::new();
        for a in 0..d.num_actions {
            let dev = (d.transition.get(g, a, g) - 1.0).abs();
            if dev > tol.eps_structural {
                v.push(Violation::new("absorbing-goal", format!("transition[goal][{a}][goal]"), dev));
            }
            let dev = (d.observation.get(g, a, og) - 1.0).abs();
            if dev > tol.eps_structural {
                v.push(Violation::new("goal-observation", format!("observation[goal][{a}][last]"), dev));
            }
            for s in 0..g {
                let x = d.observation.get(s, a, og).abs();
                if x > tol.eps_structural {
                    v.push(Violation::new(
                        "goal-observation-exclusive",
                        format!("observation[{}][{a}][last]", self.state_order[s]),
                        x,
                    ));
                }
            }
        }
        v
    }
}

/// From `b_g`, every action yields the goal observation with probability one and posterior `b_g`.
pub fn check_goal_belief_absorbing(p: &GoalPomdp, tol: &ToleranceConfig) -> bool {
    let d = &p.dynamics;
    let bg = p.goal_belief();
    (0..d.num_actions).all(|a| {
        let prob = match d.belief_obs_prob(&bg, a, p.goal_obs()) {
            Ok(x) => x,
            Err(_) => return false,
        };
        if (prob - 1.0).abs() > tol.eps_structural {
            return false;
        }
        d.belief_update(&bg, a, p.goal_obs(), tol)
            .map(|post| post.approx_eq(&bg, tol.eps_structural))
            .unwrap_or(false)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng_from_seed;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    /// 2 states, 1 action, identity T, O(s_i, a, o_j) = δ_ij.
    fn perfect_sensor() -> PomdpDynamics {
        PomdpDynamics::from_parts(
            Tensor3::from_nested(&[vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]]).unwrap(),
            Tensor3::from_nested(&[vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]]).unwrap(),
            vec![0.5, 0.5],
        )
    }

    fn noisy() -> PomdpDynamics {
        // 3 states, 2 actions, 3 observations, no structure
        PomdpDynamics::from_parts(
            Tensor3::from_nested(&[
                vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3]],
                vec![vec![0.1, 0.1, 0.8], vec![0.3, 0.3, 0.4]],
                vec![vec![0.5, 0.25, 0.25], vec![0.0, 1.0, 0.0]],
            ])
            .unwrap(),
            Tensor3::from_nested(&[
                vec![vec![0.7, 0.2, 0.1], vec![0.2, 0.2, 0.6]],
                vec![vec![0.1, 0.8, 0.1], vec![0.5, 0.0, 0.5]],
                vec![vec![0.3, 0.3, 0.4], vec![0.9, 0.05, 0.05]],
            ])
            .unwrap(),
            vec![0.2, 0.3, 0.5],
        )
    }

    #[test]
    fn tau_direct_substitution() {
        let tau = perfect_sensor().tau_matrix(0, 0).unwrap();
        assert_eq!(tau, ComplexMatrix::from_diag_real(&[1.0, 0.0]));
    }

    #[test]
    fn tau_with_uniform_observation_is_scaled_transpose() {
        let mut d = noisy();
        d.observation = Tensor3::from_nested(&vec![vec![vec![1.0 / 3.0; 3]; 2]; 3]).unwrap();
        let tau = d.tau_real(1, 2);
        for (i, row) in tau.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert!((x - d.transition.get(j, 1, i) / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn tau_column_sums_over_observations_are_one() {
        let d = noisy();
        for a in 0..2 {
            let mut col = [0.0; 3];
            for o in 0..3 {
                let tau = d.tau_real(a, o);
                for (j, c) in col.iter_mut().enumerate() {
                    *c += (0..3).map(|i| tau[i][j]).sum::<f64>();
                }
            }
            for c in col {
                assert!((c - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn perfect_observation_collapses_belief() {
        let d = perfect_sensor();
        let b = Belief::uniform(2);
        assert!((d.belief_obs_prob(&b, 0, 0).unwrap() - 0.5).abs() < 1e-15);
        let post = d.belief_update(&b, 0, 0, &tol()).unwrap();
        assert_eq!(post.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn uniform_observation_is_pure_prediction() {
        let mut d = noisy();
        d.observation = Tensor3::from_nested(&vec![vec![vec![1.0 / 3.0; 3]; 2]; 3]).unwrap();
        let b = d.b0.clone();
        for o in 0..3 {
            assert!((d.belief_obs_prob(&b, 0, o).unwrap() - 1.0 / 3.0).abs() < 1e-12);
            let post = d.belief_update(&b, 0, o, &tol()).unwrap();
            for s in 0..3 {
                let pushed: f64 = (0..3).map(|j| d.transition.get(j, 0, s) * b.probs()[j]).sum();
                assert!((post.probs()[s] - pushed).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn impossible_observation_errors() {
        let mut d = perfect_sensor();
        d.observation = Tensor3::from_nested(&[vec![vec![0.0, 1.0]], vec![vec![0.0, 1.0]]]).unwrap();
        assert!(matches!(
            d.belief_update(&Belief::uniform(2), 0, 0, &tol()),
            Err(Error::ZeroProbabilityObservation(_))
        ));
    }

    #[test]
    fn transition_prob_examples() {
        let d = noisy();
        let b = d.b0.clone();
        let post = d.belief_update(&b, 0, 1, &tol()).unwrap();
        let p = d.belief_obs_prob(&b, 0, 1).unwrap();
        assert!((d.belief_transition_prob(&b, 0, &post, &tol()).unwrap() - p).abs() < 1e-15);
        let nowhere = Belief::new(vec![0.9, 0.05, 0.05], &tol()).unwrap();
        assert_eq!(d.belief_transition_prob(&b, 0, &nowhere, &tol()).unwrap(), 0.0);
    }

    #[test]
    fn duplicate_observation_columns_add() {
        // o_0 and o_1 are identical columns: same posterior, probabilities add
        let d = PomdpDynamics::from_parts(
            Tensor3::from_nested(&[vec![vec![0.5, 0.5]], vec![vec![0.25, 0.75]]]).unwrap(),
            Tensor3::from_nested(&[vec![vec![0.3, 0.3, 0.4]], vec![vec![0.1, 0.1, 0.8]]]).unwrap(),
            vec![0.5, 0.5],
        );
        assert!(d.violations(&tol()).is_empty());
        let b = d.b0.clone();
        let post = d.belief_update(&b, 0, 0, &tol()).unwrap();
        // predicted (0.375, 0.625); o_0 mass 0.3·0.375 + 0.1·0.625 = 0.175 each
        let hand = 0.175 + 0.175;
        assert!((d.belief_transition_prob(&b, 0, &post, &tol()).unwrap() - hand).abs() < 1e-12);
    }

    #[test]
    fn belief_reward_examples() {
        let mk = |r: Vec<Vec<f64>>| Pomdp::new(perfect_sensor(), r, 0.5, &tol()).unwrap();
        let p = mk(vec![vec![2.0], vec![4.0]]);
        assert_eq!(p.belief_reward(&Belief::point(2, 0), 0).unwrap(), 2.0);
        assert_eq!(p.belief_reward(&Belief::uniform(2), 0).unwrap(), 3.0);
        let z = mk(vec![vec![0.0], vec![0.0]]);
        assert_eq!(z.belief_reward(&Belief::uniform(2), 0).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_sampling_and_reproducibility() {
        let d = perfect_sensor();
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            assert_eq!(d.sample_step(1, 0, &mut rng, &tol()).unwrap(), (1, 1));
        }
        let n = noisy();
        let run = |seed| {
            let mut rng = rng_from_seed(seed);
            let mut s = 0;
            (0..40)
                .map(|k| {
                    let (next, o) = n.sample_step(s, k % 2, &mut rng, &tol()).unwrap();
                    s = next;
                    (next, o)
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
    }

    #[test]
    fn sampled_transitions_match_row() {
        let d = noisy();
        let mut rng = rng_from_seed(42);
        let trials = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..trials {
            counts[d.sample_step(0, 0, &mut rng, &tol()).unwrap().0] += 1;
        }
        for (s, &c) in counts.iter().enumerate() {
            let p = d.transition.get(0, 0, s);
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((c as f64 / trials as f64 - p).abs() < 3.0 * sigma);
        }
    }

    fn coin_goal() -> PomdpDynamics {
        // s0 → {s0, g} each with 0.5; per-state observations, goal observation last
        PomdpDynamics::from_parts(
            Tensor3::from_nested(&[vec![vec![0.5, 0.5]], vec![vec![0.0, 1.0]]]).unwrap(),
            Tensor3::from_nested(&[vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]]).unwrap(),
            vec![1.0, 0.0],
        )
    }

    #[test]
    fn goal_belief_absorbing() {
        let p = GoalPomdp::new(coin_goal(), 1, &tol()).unwrap();
        assert!(check_goal_belief_absorbing(&p, &tol()));

        let mut broken = coin_goal();
        broken.observation = Tensor3::from_nested(&[vec![vec![1.0, 0.0]], vec![vec![0.5, 0.5]]]).unwrap();
        assert!(GoalPomdp::new(broken.clone(), 1, &tol()).is_err());
        assert!(!check_goal_belief_absorbing(&GoalPomdp::new_unchecked(broken, 1), &tol()));

        let single = PomdpDynamics::from_parts(
            Tensor3::from_nested(&[vec![vec![1.0]]]).unwrap(),
            Tensor3::from_nested(&[vec![vec![1.0]]]).unwrap(),
            vec![1.0],
        );
        let p = GoalPomdp::new(single, 0, &tol()).unwrap();
        assert!(check_goal_belief_absorbing(&p, &tol()));
    }

    #[test]
    fn goal_is_permuted_last() {
        // goal stored first in the caller's order
        let d = PomdpDynamics::from_parts(
            Tensor3::from_nested(&[vec![vec![1.0, 0.0]], vec![vec![0.5, 0.5]]]).unwrap(),
            Tensor3::from_nested(&[vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]]).unwrap(),
            vec![0.0, 1.0],
        );
        let p = GoalPomdp::new(d, 0, &tol()).unwrap();
        assert_eq!(p.state_order, vec![1, 0]);
        assert_eq!(p.dynamics.b0.probs(), &[1.0, 0.0]);
        assert_eq!(p.dynamics.transition.fiber(0, 0), &[0.5, 0.5]);
        assert!(check_goal_belief_absorbing(&p, &tol()));
    }

    #[test]
    fn validation_reports_row_sum_deviation() {
        let d = PomdpDynamics::from_parts(
            Tensor3::from_nested(&[vec![vec![0.5, 0.4]], vec![vec![0.0, 1.0]]]).unwrap(),
            Tensor3::from_nested(&[vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]]).unwrap(),
            vec![1.0, 0.0],
        );
        let v = d.violations(&tol());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].invariant, "row-stochastic");
        assert!((v[0].deviation - 0.1).abs() < 1e-12);
    }

    #[test]
    fn degenerate_single_everything() {
        let d = PomdpDynamics::from_parts(
            Tensor3::from_nested(&[vec![vec![1.0]]]).unwrap(),
            Tensor3::from_nested(&[vec![vec![1.0]]]).unwrap(),
            vec![1.0],
        );
        let p = Pomdp::new(d, vec![vec![1.5]], 0.0, &tol()).unwrap();
        let b = p.dynamics.b0.clone();
        assert_eq!(p.dynamics.belief_obs_prob(&b, 0, 0).unwrap(), 1.0);
        assert_eq!(p.dynamics.belief_update(&b, 0, 0, &tol()).unwrap(), b);
        assert_eq!(p.belief_reward(&b, 0).unwrap(), 1.5);
    }

    #[test]
    fn belief_clamps_roundoff() {
        let b = Belief::new(vec![-1e-12, 1.0 + 1e-12], &tol()).unwrap();
        assert_eq!(b.probs()[0], 0.0);
        assert!(Belief::new(vec![-0.1, 1.1], &tol()).is_err());
    }
}
