//! Goal-state reachability with probability one.
//!
//! For goal POMDPs the question is decidable through the finite support MDP:
//! only which hidden states are possible matters, not their weights. For goal
//! QOMDPs it is undecidable in general, so a depth-bounded search is provided.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::classical::GoalPomdp;
use crate::error::{Error, Result};
use crate::numerics::ToleranceConfig;
use crate::quantum::{evolve, observation_probs, DensityMatrix, GoalQomdp};
use crate::reductions::ActionSequence;

/// Default cap on distinct reachable supports.
pub const DEFAULT_SUPPORT_CAP: usize = 1 << 20;

/// Set of hidden states with positive belief.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SupportState {
    words: Vec<u64>,
    len: usize,
}

impl SupportState {
    pub fn empty(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut z = Self::empty(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                z.insert(i);
            }
        }
        z
    }

    /// States whose probability exceeds `threshold`.
    pub fn from_probs(probs: &[f64], threshold: f64) -> Self {
        let bits: Vec<bool> = probs.iter().map(|&p| p > threshold).collect();
        Self::from_bools(&bits)
    }

    pub fn singleton(len: usize, i: usize) -> Self {
        let mut z = Self::empty(len);
        z.insert(i);
        z
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "support index {i} out of range");
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.contains(i)).collect()
    }
}

impl fmt::Display for SupportState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.contains(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for SupportState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SupportState({self})")
    }
}

impl Serialize for SupportState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let bits: Vec<u8> = (0..self.len).map(|i| self.contains(i) as u8).collect();
        bits.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SupportState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let bits = Vec::<u8>::deserialize(d)?;
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(serde::de::Error::custom(format!("support bit must be 0 or 1, got {b}")));
        }
        let bools: Vec<bool> = bits.into_iter().map(|b| b == 1).collect();
        Ok(Self::from_bools(&bools))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyEntry {
    support: SupportState,
    action: usize,
}

/// Boolean transition structure of a goal POMDP.
///
/// `rows[a][o][i]` is the set of `j` with `τ^{ao}_{ij} > eps_structural`, so
/// state `i` is possible after `(a, o)` iff that set meets the current support.
#[derive(Debug, Clone)]
pub struct SupportModel {
    num_states: usize,
    num_actions: usize,
    num_obs: usize,
    rows: Vec<Vec<Vec<SupportState>>>,
}

impl SupportModel {
    pub fn new(p: &GoalPomdp, tol: &ToleranceConfig) -> Self {
        let d = &p.dynamics;
        let n = d.num_states;
        let rows = (0..d.num_actions)
            .map(|a| {
                (0..d.num_obs)
                    .map(|o| {
                        d.tau_real(a, o)
                            .iter()
                            .map(|row| SupportState::from_probs(row, tol.eps_structural))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            num_states: n,
            num_actions: d.num_actions,
            num_obs: d.num_obs,
            rows,
        }
    }

    /// `Z^{ao} z`, or `None` if observation `o` is impossible from `z` under `a`.
    pub fn update(&self, z: &SupportState, a: usize, o: usize) -> Option<SupportState> {
        let mut next = SupportState::empty(self.num_states);
        for (i, row) in self.rows[a][o].iter().enumerate() {
            if row.intersects(z) {
                next.insert(i);
            }
        }
        (!next.is_empty()).then_some(next)
    }

    /// All feasible successors of `z` under `a`, in observation order.
    pub fn successors(&self, z: &SupportState, a: usize) -> Vec<SupportState> {
        (0..self.num_obs).filter_map(|o| self.update(z, a, o)).collect()
    }
}

/// Support after taking `a` and observing `o` from support `z`; `None` when `o` cannot occur.
pub fn support_update(
    p: &GoalPomdp,
    z: &SupportState,
    a: usize,
    o: usize,
    tol: &ToleranceConfig,
) -> Result<Option<SupportState>> {
    let d = &p.dynamics;
    if z.len() != d.num_states {
        return Err(Error::DimensionMismatch(format!(
            "support has {} entries, model has {} states",
            z.len(),
            d.num_states
        )));
    }
    if a >= d.num_actions {
        return Err(Error::out_of_range("action", a, format!("0..{}", d.num_actions)));
    }
    if o >= d.num_obs {
        return Err(Error::out_of_range("observation", o, format!("0..{}", d.num_obs)));
    }
    Ok(SupportModel::new(p, tol).update(z, a, o))
}

/// Support of the initial belief.
pub fn initial_support(p: &GoalPomdp, tol: &ToleranceConfig) -> SupportState {
    SupportState::from_probs(p.dynamics.b0.probs(), tol.eps_structural)
}

/// Stationary policy over supports: one action per reachable support.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SupportPolicy {
    pub entries: Vec<(SupportState, usize)>,
}

impl SupportPolicy {
    pub fn action_for(&self, z: &SupportState) -> Option<usize> {
        self.entries.iter().find(|(s, _)| s == z).map(|&(_, a)| a)
    }
}

impl Serialize for SupportPolicy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<PolicyEntry> = self
            .entries
            .iter()
            .map(|(support, action)| PolicyEntry {
                support: support.clone(),
                action: *action,
            })
            .collect();
        entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SupportPolicy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<PolicyEntry>::deserialize(d)?;
        Ok(Self {
            entries: entries.into_iter().map(|e| (e.support, e.action)).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// 0-based actions keyed by support.
    SupportPolicy(SupportPolicy),
    /// 1-based actions.
    ActionSequence(ActionSequence),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachabilityVerdict {
    pub decided: Decision,
    pub witness: Option<Witness>,
    pub bound_used: Option<usize>,
    pub nodes_expanded: u64,
}

/// Decides whether some policy reaches the goal of `p` with probability one.
///
/// Works on the support MDP: a stationary support policy reaches the goal
/// almost surely iff, in the graph of supports it can reach, every support
/// other than the goal's has a successor and no cycle avoids the goal. Policies
/// are enumerated lazily: an action is fixed only when its support becomes
/// reachable, and a partial policy is abandoned as soon as it closes a
/// goal-avoiding cycle. The reported `nodes_expanded` counts partial policies.
pub fn decide_goal_reachability_pomdp(
    p: &GoalPomdp,
    support_cap: usize,
    tol: &ToleranceConfig,
) -> Result<ReachabilityVerdict> {
    let model = SupportModel::new(p, tol);
    let n = model.num_states;
    let z0 = initial_support(p, tol);
    let zg = SupportState::singleton(n, p.goal());
    if z0 == zg {
        return Ok(ReachabilityVerdict {
            decided: Decision::Yes,
            witness: Some(Witness::SupportPolicy(SupportPolicy::default())),
            bound_used: None,
            nodes_expanded: 0,
        });
    }
    if z0.is_empty() {
        return Err(Error::InvalidArgument("initial belief has empty support".into()));
    }

    let graph = SupportGraph::explore(&model, z0, support_cap)?;
    let goal = graph.index.get(&zg).copied();
    let mut search = PolicySearch {
        graph: &graph,
        goal,
        assignment: vec![None; graph.nodes.len()],
        nodes: 0,
    };
    let found = search.run();
    let nodes_expanded = search.nodes;
    let witness = found.map(|assignment| {
        let entries = assignment
            .iter()
            .enumerate()
            .filter_map(|(k, a)| a.map(|a| (graph.nodes[k].clone(), a)))
            .collect();
        Witness::SupportPolicy(SupportPolicy { entries })
    });
    Ok(ReachabilityVerdict {
        decided: if witness.is_some() { Decision::Yes } else { Decision::No },
        witness,
        bound_used: None,
        nodes_expanded,
    })
}

/// Every support reachable from `z0` under some action/observation sequence,
/// in breadth-first discovery order, with successor lists per action.
struct SupportGraph {
    nodes: Vec<SupportState>,
    index: HashMap<SupportState, usize>,
    /// `succ[k][a]`: distinct successor indices of node `k` under action `a`.
    succ: Vec<Vec<Vec<usize>>>,
}

impl SupportGraph {
    fn explore(model: &SupportModel, z0: SupportState, cap: usize) -> Result<Self> {
        let mut nodes = vec![z0.clone()];
        let mut index = HashMap::from([(z0, 0)]);
        let mut succ = Vec::new();
        let mut queue = VecDeque::from([0]);
        while let Some(k) = queue.pop_front() {
            let mut per_action = Vec::with_capacity(model.num_actions);
            for a in 0..model.num_actions {
                let mut out: Vec<usize> = Vec::new();
                for z in model.successors(&nodes[k], a) {
                    let idx = match index.get(&z) {
                        Some(&i) => i,
                        None => {
                            if nodes.len() >= cap {
                                return Err(Error::StateBudgetExceeded(cap));
                            }
                            nodes.push(z.clone());
                            index.insert(z, nodes.len() - 1);
                            queue.push_back(nodes.len() - 1);
                            nodes.len() - 1
                        }
                    };
                    if !out.contains(&idx) {
                        out.push(idx);
                    }
                }
                per_action.push(out);
            }
            succ.push(per_action);
        }
        Ok(Self { nodes, index, succ })
    }
}

struct PolicySearch<'g> {
    graph: &'g SupportGraph,
    goal: Option<usize>,
    assignment: Vec<Option<usize>>,
    nodes: u64,
}

enum Status {
    /// A goal-avoiding cycle or a dead end is reachable.
    Doomed,
    /// Reachable, not yet assigned support with the smallest discovery index.
    Open(usize),
    /// Every reachable support is assigned and all paths end in the goal.
    Complete,
}

impl PolicySearch<'_> {
    fn run(&mut self) -> Option<Vec<Option<usize>>> {
        self.nodes += 1;
        match self.status() {
            Status::Doomed => None,
            Status::Complete => Some(self.assignment.clone()),
            Status::Open(k) => {
                for a in 0..self.graph.succ[k].len() {
                    self.assignment[k] = Some(a);
                    if let Some(found) = self.run() {
                        return Some(found);
                    }
                }
                self.assignment[k] = None;
                None
            }
        }
    }

    /// Depth-first colouring of the graph induced by the partial policy from the start support.
    fn status(&self) -> Status {
        let n = self.graph.nodes.len();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut colour = vec![0u8; n];
        let mut open: Option<usize> = None;
        let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
        colour[0] = 1;
        while let Some(&mut (k, ref mut next)) = stack.last_mut() {
            let succ: &[usize] = match (Some(k) == self.goal, self.assignment[k]) {
                (true, _) => &[],
                (false, Some(a)) => &self.graph.succ[k][a],
                (false, None) => {
                    open = Some(open.map_or(k, |o| o.min(k)));
                    &[]
                }
            };
            if Some(k) != self.goal && self.assignment[k].is_some() && succ.is_empty() {
                return Status::Doomed;
            }
            if *next < succ.len() {
                let j = succ[*next];
                *next += 1;
                match colour[j] {
                    0 => {
                        colour[j] = 1;
                        stack.push((j, 0));
                    }
                    1 => return Status::Doomed,
                    _ => {}
                }
            } else {
                colour[k] = 2;
                stack.pop();
            }
        }
        match open {
            Some(k) => Status::Open(k),
            None => Status::Complete,
        }
    }
}

/// Depth-bounded search for an action sequence that drives a goal QOMDP into
/// `ρ_g` with probability one.
///
/// Action sequences (1-based) are tried in lexicographic order up to length
/// `depth`. Each sequence is tracked as a mixture of non-goal branches, with
/// equal states merged. Returns `Yes` with a witness once the non-goal mass is
/// at most `eps_zero`, otherwise `Unknown`; it never answers `No`.
pub fn decide_goal_reachability_qomdp_bounded(
    q: &GoalQomdp,
    depth: usize,
    tol: &ToleranceConfig,
) -> Result<ReachabilityVerdict> {
    let mut nodes = 0;
    let start = if q.is_goal(&q.rho0, tol) {
        Vec::new()
    } else {
        vec![(q.rho0.clone(), 1.0)]
    };
    let mut path = Vec::new();
    let found = sequence_search(q, &start, depth, &mut path, &mut nodes, tol)?;
    Ok(ReachabilityVerdict {
        decided: if found.is_some() { Decision::Yes } else { Decision::Unknown },
        witness: found.map(|s| Witness::ActionSequence(ActionSequence(s))),
        bound_used: Some(depth),
        nodes_expanded: nodes,
    })
}

type Mixture = Vec<(DensityMatrix, f64)>;

fn sequence_search(
    q: &GoalQomdp,
    branches: &Mixture,
    depth: usize,
    path: &mut Vec<usize>,
    nodes: &mut u64,
    tol: &ToleranceConfig,
) -> Result<Option<Vec<usize>>> {
    *nodes += 1;
    let mass: f64 = branches.iter().map(|(_, m)| m).sum();
    if mass <= tol.eps_zero {
        return Ok(Some(path.clone()));
    }
    if path.len() == depth {
        return Ok(None);
    }
    for (a, action) in q.actions.iter().enumerate() {
        let next = advance(q, branches, action, tol)?;
        path.push(a + 1);
        if let Some(found) = sequence_search(q, &next, depth, path, nodes, tol)? {
            return Ok(Some(found));
        }
        path.pop();
    }
    Ok(None)
}

/// Non-goal part of the mixture after one action, dropping negligible branches.
fn advance(
    q: &GoalQomdp,
    branches: &Mixture,
    action: &crate::quantum::Superoperator,
    tol: &ToleranceConfig,
) -> Result<Mixture> {
    let mut out: Mixture = Vec::new();
    for (rho, mass) in branches {
        for (o, p) in observation_probs(rho, action, tol)?.into_iter().enumerate() {
            if p <= tol.eps_zero {
                continue;
            }
            let post = evolve(rho, action, o + 1, tol)?;
            if q.is_goal(&post, tol) {
                continue;
            }
            let w = mass * p;
            match out.iter_mut().find(|(s, _)| s.approx_eq(&post, tol.eps_zero)) {
                Some((_, m)) => *m += w,
                None => out.push((post, w)),
            }
        }
    }
    Ok(out)
}
