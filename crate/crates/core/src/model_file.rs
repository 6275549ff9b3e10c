//! Versioned JSON model files.
//!
//! A file is `{"version": "dproc-1", "kind": ..., "body": {...}}`. Unknown
//! fields are rejected at every level, and the body is checked against every
//! invariant of its kind before a model is returned.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classical::{GoalMdp, GoalPomdp, Mdp, Pomdp, PomdpDynamics, Tensor3};
use crate::error::{Error, Result, Violation};
use crate::numerics::{ComplexMatrix, ToleranceConfig};
use crate::quantum::{density_violations, validate_superoperator, DensityMatrix, GoalQomdp, Qomdp, Superoperator};
use crate::reductions::QmopInstance;
use crate::report::to_json_string;

pub const FORMAT_VERSION: &str = "dproc-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mdp,
    GoalMdp,
    Pomdp,
    GoalPomdp,
    Qomdp,
    GoalQomdp,
    Qmop,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Mdp => "mdp",
            ModelKind::GoalMdp => "goal_mdp",
            ModelKind::Pomdp => "pomdp",
            ModelKind::GoalPomdp => "goal_pomdp",
            ModelKind::Qomdp => "qomdp",
            ModelKind::GoalQomdp => "goal_qomdp",
            ModelKind::Qmop => "qmop",
        }
    }
}

/// A validated model of any supported kind.
#[derive(Debug, Clone)]
pub enum Model {
    Mdp(Mdp),
    GoalMdp(GoalMdp),
    Pomdp(Pomdp),
    GoalPomdp(GoalPomdp),
    Qomdp(Qomdp),
    GoalQomdp(GoalQomdp),
    Qmop(QmopInstance),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Mdp(_) => ModelKind::Mdp,
            Model::GoalMdp(_) => ModelKind::GoalMdp,
            Model::Pomdp(_) => ModelKind::Pomdp,
            Model::GoalPomdp(_) => ModelKind::GoalPomdp,
            Model::Qomdp(_) => ModelKind::Qomdp,
            Model::GoalQomdp(_) => ModelKind::GoalQomdp,
            Model::Qmop(_) => ModelKind::Qmop,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    version: String,
    kind: ModelKind,
    body: Value,
}

type Nested3 = Vec<Vec<Vec<f64>>>;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MdpDoc {
    num_states: usize,
    num_actions: usize,
    transition: Nested3,
    reward: Vec<Vec<f64>>,
    gamma: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoalMdpDoc {
    num_states: usize,
    num_actions: usize,
    transition: Nested3,
    goal: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PomdpDoc {
    num_states: usize,
    num_actions: usize,
    num_obs: usize,
    transition: Nested3,
    observation: Nested3,
    reward: Vec<Vec<f64>>,
    b0: Vec<f64>,
    gamma: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoalPomdpDoc {
    num_states: usize,
    num_actions: usize,
    num_obs: usize,
    transition: Nested3,
    observation: Nested3,
    b0: Vec<f64>,
    goal: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QomdpDoc {
    dim: usize,
    num_obs: usize,
    actions: Vec<Vec<ComplexMatrix>>,
    rewards: Vec<ComplexMatrix>,
    gamma: f64,
    rho0: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoalQomdpDoc {
    dim: usize,
    num_obs: usize,
    actions: Vec<Vec<ComplexMatrix>>,
    rho0: ComplexMatrix,
    rho_g: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QmopDoc {
    dim: usize,
    kraus: Vec<ComplexMatrix>,
}

/// Reads and validates a model file.
pub fn load_model(path: impl AsRef<Path>, tol: &ToleranceConfig) -> Result<Model> {
    let text = fs::read_to_string(path)?;
    parse_model(&text, tol)
}

/// Parses and validates a model document.
pub fn parse_model(text: &str, tol: &ToleranceConfig) -> Result<Model> {
    let env: Envelope = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if env.version != FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "unsupported format version `{}`, expected `{FORMAT_VERSION}`",
            env.version
        )));
    }
    match env.kind {
        ModelKind::Mdp => {
            let doc: MdpDoc = body(env.body)?;
            let t = tensor(&doc.transition, "transition")?;
            let v = declared(&[("num_states", doc.num_states, t.shape()[0]), ("num_actions", doc.num_actions, t.shape()[1])]);
            Error::check(v)?;
            Ok(Model::Mdp(Mdp::new(t, doc.reward, doc.gamma, tol)?))
        }
        ModelKind::GoalMdp => {
            let doc: GoalMdpDoc = body(env.body)?;
            let t = tensor(&doc.transition, "transition")?;
            let v = declared(&[("num_states", doc.num_states, t.shape()[0]), ("num_actions", doc.num_actions, t.shape()[1])]);
            Error::check(v)?;
            Ok(Model::GoalMdp(GoalMdp::new(t, doc.goal, tol)?))
        }
        ModelKind::Pomdp => {
            let doc: PomdpDoc = body(env.body)?;
            let d = dynamics(
                &doc.transition,
                &doc.observation,
                doc.b0,
                [doc.num_states, doc.num_actions, doc.num_obs],
            )?;
            Ok(Model::Pomdp(Pomdp::new(d, doc.reward, doc.gamma, tol)?))
        }
        ModelKind::GoalPomdp => {
            let doc: GoalPomdpDoc = body(env.body)?;
            let d = dynamics(
                &doc.transition,
                &doc.observation,
                doc.b0,
                [doc.num_states, doc.num_actions, doc.num_obs],
            )?;
            Ok(Model::GoalPomdp(GoalPomdp::new(d, doc.goal, tol)?))
        }
        ModelKind::Qomdp => {
            let doc: QomdpDoc = body(env.body)?;
            let mut v = Vec::new();
            let actions = superoperators(doc.actions, &mut v);
            v.extend(density_violations(&doc.rho0, "rho0", tol));
            Error::check(v)?;
            let rho0 = DensityMatrix::new(doc.rho0, tol)?;
            Ok(Model::Qomdp(Qomdp::new(
                doc.dim,
                doc.num_obs,
                actions,
                doc.rewards,
                doc.gamma,
                rho0,
                tol,
            )?))
        }
        ModelKind::GoalQomdp => {
            let doc: GoalQomdpDoc = body(env.body)?;
            let mut v = Vec::new();
            let actions = superoperators(doc.actions, &mut v);
            v.extend(density_violations(&doc.rho0, "rho0", tol));
            v.extend(density_violations(&doc.rho_g, "rho_g", tol));
            Error::check(v)?;
            let rho0 = DensityMatrix::new(doc.rho0, tol)?;
            let rho_g = DensityMatrix::new(doc.rho_g, tol)?;
            Ok(Model::GoalQomdp(GoalQomdp::new(
                doc.dim,
                doc.num_obs,
                actions,
                rho0,
                rho_g,
                tol,
            )?))
        }
        ModelKind::Qmop => {
            let doc: QmopDoc = body(env.body)?;
            let report = validate_superoperator(&doc.kraus, tol)
                .map_err(|e| Error::Validation(vec![Violation::new("kraus-shape", e.to_string(), f64::INFINITY)]))?;
            let mut v = Vec::new();
            if !report.complete {
                v.push(Violation::new(
                    "kraus-completeness",
                    format!("entry ({}, {})", report.entry.0, report.entry.1),
                    report.max_deviation,
                ));
            }
            if doc.kraus[0].rows() != doc.dim {
                v.push(Violation::new("dimension", format!("kraus are {0}x{0}, dim={1}", doc.kraus[0].rows(), doc.dim), f64::INFINITY));
            }
            Error::check(v)?;
            Ok(Model::Qmop(QmopInstance::new(doc.kraus, tol)?))
        }
    }
}

fn body<T: serde::de::DeserializeOwned>(v: Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Parse(format!("body: {e}")))
}

fn tensor(nested: &Nested3, name: &str) -> Result<Tensor3> {
    Tensor3::from_nested(nested)
        .map_err(|e| Error::Validation(vec![Violation::new("shape", format!("{name}{e}"), f64::INFINITY)]))
}

fn declared(fields: &[(&str, usize, usize)]) -> Vec<Violation> {
    fields
        .iter()
        .filter(|(_, want, got)| want != got)
        .map(|(name, want, got)| {
            Violation::new(
                "declared-size",
                format!("{name}={want} but arrays have {got}"),
                (*want as f64 - *got as f64).abs(),
            )
        })
        .collect()
}

fn dynamics(t: &Nested3, o: &Nested3, b0: Vec<f64>, sizes: [usize; 3]) -> Result<PomdpDynamics> {
    let t = tensor(t, "transition")?;
    let o = tensor(o, "observation")?;
    let [ns, na, no] = sizes;
    Error::check(declared(&[
        ("num_states", ns, t.shape()[0]),
        ("num_actions", na, t.shape()[1]),
        ("num_obs", no, o.shape()[2]),
    ]))?;
    Ok(PomdpDynamics::from_parts(t, o, b0))
}

fn superoperators(actions: Vec<Vec<ComplexMatrix>>, v: &mut Vec<Violation>) -> Vec<Superoperator> {
    let mut out = Vec::with_capacity(actions.len());
    for (a, kraus) in actions.into_iter().enumerate() {
        match Superoperator::new_unchecked(kraus) {
            Ok(op) => out.push(op),
            Err(e) => v.push(Violation::new("kraus-shape", format!("actions[{a}]: {e}"), f64::INFINITY)),
        }
    }
    out
}

/// Serializes a model into a version-tagged document.
///
/// Goal POMDPs are written in internal state order, with the goal last.
pub fn model_to_json(model: &Model) -> String {
    let body = match model {
        Model::Mdp(m) => doc_value(MdpDoc {
            num_states: m.num_states,
            num_actions: m.num_actions,
            transition: m.transition.to_nested(),
            reward: m.reward.clone(),
            gamma: m.gamma,
        }),
        Model::GoalMdp(m) => doc_value(GoalMdpDoc {
            num_states: m.num_states,
            num_actions: m.num_actions,
            transition: m.transition.to_nested(),
            goal: m.goal,
        }),
        Model::Pomdp(p) => doc_value(PomdpDoc {
            num_states: p.dynamics.num_states,
            num_actions: p.dynamics.num_actions,
            num_obs: p.dynamics.num_obs,
            transition: p.dynamics.transition.to_nested(),
            observation: p.dynamics.observation.to_nested(),
            reward: p.reward.clone(),
            b0: p.dynamics.b0.probs().to_vec(),
            gamma: p.gamma,
        }),
        Model::GoalPomdp(p) => doc_value(GoalPomdpDoc {
            num_states: p.dynamics.num_states,
            num_actions: p.dynamics.num_actions,
            num_obs: p.dynamics.num_obs,
            transition: p.dynamics.transition.to_nested(),
            observation: p.dynamics.observation.to_nested(),
            b0: p.dynamics.b0.probs().to_vec(),
            goal: p.goal(),
        }),
        Model::Qomdp(q) => doc_value(QomdpDoc {
            dim: q.dim,
            num_obs: q.num_obs,
            actions: q.actions.iter().map(|a| a.kraus().to_vec()).collect(),
            rewards: q.rewards.clone(),
            gamma: q.gamma,
            rho0: q.rho0.matrix().clone(),
        }),
        Model::GoalQomdp(q) => doc_value(GoalQomdpDoc {
            dim: q.dim,
            num_obs: q.num_obs,
            actions: q.actions.iter().map(|a| a.kraus().to_vec()).collect(),
            rho0: q.rho0.matrix().clone(),
            rho_g: q.rho_g.matrix().clone(),
        }),
        Model::Qmop(s) => doc_value(QmopDoc {
            dim: s.dim(),
            kraus: s.kraus().to_vec(),
        }),
    };
    let env = Envelope {
        version: FORMAT_VERSION.to_owned(),
        kind: model.kind(),
        body,
    };
    to_json_string(&doc_value(env))
}

fn doc_value<T: Serialize>(doc: T) -> Value {
    serde_json::to_value(doc).expect("model documents serialize to JSON")
}

/// Writes `model` to `path`.
pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let mut text = model_to_json(model);
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
