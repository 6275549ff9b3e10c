//! Generators and brute-force oracles shared by the integration tests.
//!
//! The oracles deliberately avoid the library's solver internals: support
//! successors are recomputed from the raw transition and observation tables,
//! and policy trees are enumerated exhaustively.

#![allow(dead_code)]

use std::collections::HashMap;

use qomdp::classical::{Belief, GoalPomdp, Pomdp, PomdpDynamics, Tensor3};
use qomdp::numerics::{ComplexMatrix, ToleranceConfig, C64};
use qomdp::random::{random_distribution, random_isometry};
use qomdp::reductions::QmopInstance;
use qomdp::solvers::{evaluate_policy_tree, DecisionModel, PolicyTree, TIE_RTOL};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

/// Every row of length `n` with entries in {0, 0.5, 1} summing to one.
pub fn half_grid_rows(n: usize) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    for i in 0..n {
        let mut r = vec![0.0; n];
        r[i] = 1.0;
        rows.push(r);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut r = vec![0.0; n];
            r[i] = 0.5;
            r[j] = 0.5;
            rows.push(r);
        }
    }
    rows
}

/// All tuples of `len` indices into `0..base`, in lexicographic order.
pub fn index_tuples(base: usize, len: usize) -> Vec<Vec<usize>> {
    cartesian(&vec![base; len])
}

/// Raw goal-POMDP tables, goal last and goal observation last.
#[derive(Debug, Clone)]
pub struct GoalTables {
    /// `t[s][a][s']`
    pub t: Vec<Vec<Vec<f64>>>,
    /// `o[s'][a][o]`
    pub o: Vec<Vec<Vec<f64>>>,
    pub b0: Vec<f64>,
}

impl GoalTables {
    pub fn num_states(&self) -> usize {
        self.t.len()
    }

    pub fn num_actions(&self) -> usize {
        self.t[0].len()
    }

    pub fn num_obs(&self) -> usize {
        self.o[0][0].len()
    }

    pub fn build(&self) -> GoalPomdp {
        let d = PomdpDynamics::from_parts(
            Tensor3::from_nested(&self.t).unwrap(),
            Tensor3::from_nested(&self.o).unwrap(),
            self.b0.clone(),
        );
        GoalPomdp::new(d, self.num_states() - 1, &tol()).expect("generated goal POMDP is valid")
    }
}

/// Assembles goal tables from non-goal transition rows `t_rows[s][a]` and
/// non-goal observation rows `o_rows[s'][a]` (without the goal observation).
pub fn goal_tables(t_rows: Vec<Vec<Vec<f64>>>, o_rows: Vec<Vec<Vec<f64>>>, b0: Vec<f64>) -> GoalTables {
    let ng = t_rows.len();
    let n = ng + 1;
    let na = t_rows[0].len();
    let nobs = o_rows[0][0].len() + 1;
    let mut t = t_rows;
    let mut goal_row = vec![0.0; n];
    goal_row[n - 1] = 1.0;
    t.push(vec![goal_row; na]);
    let mut o: Vec<Vec<Vec<f64>>> = o_rows
        .into_iter()
        .map(|per_a| {
            per_a
                .into_iter()
                .map(|mut row| {
                    row.push(0.0);
                    row
                })
                .collect()
        })
        .collect();
    let mut goal_obs = vec![0.0; nobs];
    goal_obs[nobs - 1] = 1.0;
    o.push(vec![goal_obs; na]);
    GoalTables { t, o, b0 }
}

/// The exhaustive {0, 0.5, 1} family: |S| ≤ 3 including the goal, |A| ≤ 2,
/// up to 2 ordinary observations plus the goal observation. Calls `f` on each.
pub fn for_each_half_grid_goal_pomdp(mut f: impl FnMut(&GoalTables)) -> usize {
    let mut count = 0;
    for n in 2..=3 {
        let ng = n - 1;
        let t_rows = half_grid_rows(n);
        let b0s = half_grid_rows(n);
        for na in 1..=2 {
            for no in 1..=2 {
                let o_rows = half_grid_rows(no);
                let t_choices = index_tuples(t_rows.len(), ng * na);
                let o_choices = index_tuples(o_rows.len(), ng * na);
                for tc in &t_choices {
                    for oc in &o_choices {
                        for b0 in &b0s {
                            let t: Vec<Vec<Vec<f64>>> = (0..ng)
                                .map(|s| (0..na).map(|a| t_rows[tc[s * na + a]].clone()).collect())
                                .collect();
                            let o: Vec<Vec<Vec<f64>>> = (0..ng)
                                .map(|s| (0..na).map(|a| o_rows[oc[s * na + a]].clone()).collect())
                                .collect();
                            f(&goal_tables(t, o, b0.clone()));
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    count
}

/// Random row of length `n` with a random non-empty support.
pub fn sparse_row<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut row = vec![0.0; n];
    let k = rng.gen_range(1..=n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let p = random_distribution(k, rng);
    for (&i, &x) in idx.iter().take(k).zip(&p) {
        row[i] = x;
    }
    row
}

/// Random goal POMDP with |S| = `n` (goal included), sparse random probabilities.
pub fn random_goal_tables<R: Rng>(n: usize, na: usize, no: usize, rng: &mut R) -> GoalTables {
    let ng = n - 1;
    let t = (0..ng).map(|_| (0..na).map(|_| sparse_row(n, rng)).collect()).collect();
    let o = (0..ng).map(|_| (0..na).map(|_| sparse_row(no, rng)).collect()).collect();
    let b0 = sparse_row(n, rng);
    goal_tables(t, o, b0)
}

/// Successor supports (bitmasks) of `z` under `a`, one per feasible observation,
/// computed straight from the tables.
pub fn oracle_successors(g: &GoalTables, z: u32, a: usize) -> Vec<u32> {
    let n = g.num_states();
    let eps = tol().eps_structural;
    (0..g.num_obs())
        .filter_map(|o| {
            let mut next = 0u32;
            for i in 0..n {
                let hit = (0..n).any(|j| z >> j & 1 == 1 && g.o[i][a][o] * g.t[j][a][i] > eps);
                if hit {
                    next |= 1 << i;
                }
            }
            (next != 0).then_some(next)
        })
        .collect()
}

/// Whether some support-level policy tree of depth ≤ 2^|S| reaches the goal
/// support on every branch.
pub fn oracle_reachable(g: &GoalTables) -> bool {
    let n = g.num_states();
    let goal = 1u32 << (n - 1);
    let z0 = g
        .b0
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > tol().eps_structural)
        .fold(0u32, |z, (i, _)| z | 1 << i);
    let mut memo = HashMap::new();
    can_reach(g, z0, 1 << n, goal, &mut memo)
}

fn can_reach(g: &GoalTables, z: u32, depth: usize, goal: u32, memo: &mut HashMap<(u32, usize), bool>) -> bool {
    if z == goal {
        return true;
    }
    if depth == 0 {
        return false;
    }
    if let Some(&v) = memo.get(&(z, depth)) {
        return v;
    }
    let v = (0..g.num_actions()).any(|a| {
        let succ = oracle_successors(g, z, a);
        !succ.is_empty() && succ.iter().all(|&z2| can_reach(g, z2, depth - 1, goal, memo))
    });
    memo.insert((z, depth), v);
    v
}

/// Lexicographic product of `0..lens[k]`, first position most significant.
pub fn cartesian(lens: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &len in lens {
        out = out
            .into_iter()
            .flat_map(|t: Vec<usize>| {
                (0..len).map(move |k| {
                    let mut t = t.clone();
                    t.push(k);
                    t
                })
            })
            .collect();
    }
    out
}

/// Every depth-`h` policy tree from `state`, children only on branches with
/// positive probability; ordered by action, then children lexicographically.
pub fn all_policy_trees<M: DecisionModel>(model: &M, state: &M::State, h: usize) -> Vec<PolicyTree> {
    let tol = tol();
    let mut out = Vec::new();
    for a in 0..model.num_actions() {
        if h == 1 {
            out.push(PolicyTree::leaf(a, model.num_obs()));
            continue;
        }
        let branches = model.branches(state, a, &tol).unwrap();
        let per_branch: Vec<Vec<PolicyTree>> = branches
            .iter()
            .map(|(_, _, next)| all_policy_trees(model, next, h - 1))
            .collect();
        let lens: Vec<usize> = per_branch.iter().map(Vec::len).collect();
        for choice in cartesian(&lens) {
            let mut tree = PolicyTree::leaf(a, model.num_obs());
            for (k, (o, _, _)) in branches.iter().enumerate() {
                tree.children[*o] = Some(per_branch[k][choice[k]].clone());
            }
            out.push(tree);
        }
    }
    out
}

/// First tree in enumeration order whose value is within [`TIE_RTOL`] of the maximum.
pub fn enumerate_best<M: DecisionModel>(model: &M, start: &M::State, h: usize) -> (f64, PolicyTree) {
    let scored: Vec<(f64, PolicyTree)> = all_policy_trees(model, start, h)
        .into_iter()
        .map(|tree| (evaluate_policy_tree(model, start, &tree, h, &tol()).unwrap(), tree))
        .collect();
    let max = scored.iter().map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
    scored
        .into_iter()
        .find(|(v, _)| max - v <= TIE_RTOL * max.abs().max(1.0))
        .unwrap()
}

/// Small POMDP from raw tables.
pub fn pomdp(t: Vec<Vec<Vec<f64>>>, o: Vec<Vec<Vec<f64>>>, r: Vec<Vec<f64>>, b0: Vec<f64>, gamma: f64) -> Pomdp {
    let d = PomdpDynamics::from_parts(Tensor3::from_nested(&t).unwrap(), Tensor3::from_nested(&o).unwrap(), b0);
    Pomdp::new(d, r, gamma, &tol()).unwrap()
}

pub fn belief(p: &[f64]) -> Belief {
    Belief::new(p.to_vec(), &tol()).unwrap()
}

/// Random unitary of dimension `d`.
pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> ComplexMatrix {
    random_isometry(d, d, rng)
}

/// QMOP instance with a known null sequence: a truncated shift `|i+1⟩⟨i|`
/// plus `|c⟩⟨d−1|`, conjugated by a random unitary. `(1, …, 1)` of length `d` is null.
pub fn nilpotent_qmop<R: Rng>(d: usize, rng: &mut R) -> QmopInstance {
    let mut shift = ComplexMatrix::zeros(d, d);
    for i in 0..d - 1 {
        shift[(i + 1, i)] = C64::new(1.0, 0.0);
    }
    let c = random_unitary(d, rng);
    let mut tail = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        tail[(i, d - 1)] = c[(i, 0)];
    }
    let w = random_unitary(d, rng);
    let kraus = vec![shift.conjugate_by(&w), tail.conjugate_by(&w)];
    QmopInstance::new(kraus, &tol()).unwrap()
}
