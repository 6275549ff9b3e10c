//! Planning and decision procedures.

mod expectimax;
mod mdp;
mod reach;
mod simulate;

pub use expectimax::{
    best_policy_value, evaluate_policy_tree, policy_exists, BestPolicy, DecisionModel, PolicyTree,
    DEFAULT_NODE_BUDGET, TIE_RTOL,
};
pub use mdp::{bellman_residual, mdp_policy_value, value_iteration, StationaryPolicy};
pub use reach::{
    decide_goal_reachability_pomdp, decide_goal_reachability_qomdp_bounded, initial_support, support_update,
    Decision, ReachabilityVerdict, SupportModel, SupportPolicy, SupportState, Witness, DEFAULT_SUPPORT_CAP,
};
pub use simulate::{estimate_goal_probability, GoalEstimate, GoalModel, Policy};
