//! Deterministic JSON reports.
//!
//! Keys keep insertion order and every float is written with 17 significant
//! digits, so a report parses back to the exact same values and identical runs
//! produce identical bytes.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::solvers::Decision;

/// Compact JSON with floats in `d.dddddddddddddddde±x` form.
pub fn to_json_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out);
    out
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) if !n.is_f64() => out.push_str(&u.to_string()),
            (_, Some(i), _) if !n.is_f64() => out.push_str(&i.to_string()),
            (_, _, Some(x)) => out.push_str(&format_float(x)),
            _ => out.push_str(&n.to_string()),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (k, (key, item)) in map.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("strings serialize"));
                out.push(':');
                write_value(item, out);
            }
            out.push('}');
        }
    }
}

/// 17 significant digits; JSON has no NaN or infinities, so those become `null`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_owned()
    }
}

/// Outcome of one CLI command.
///
/// Fields are emitted in a fixed order: `decided`, `value`, `witness`,
/// `nodes_expanded`, `bound_used`, then any extra fields in insertion order.
/// Absent optional fields are omitted.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub decided: Option<Decision>,
    pub value: Option<Value>,
    pub witness: Option<Value>,
    pub nodes_expanded: Option<u64>,
    pub bound_used: Option<usize>,
    pub extra: Vec<(String, Value)>,
}

impl Report {
    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.extra.push((key.to_owned(), to_value(value)));
        self
    }

    pub fn to_value(&self) -> Value {
        let mut map = Map::new();
        if let Some(d) = self.decided {
            map.insert("decided".into(), to_value(d));
        }
        if let Some(v) = &self.value {
            map.insert("value".into(), v.clone());
        }
        if let Some(w) = &self.witness {
            map.insert("witness".into(), w.clone());
        }
        if let Some(n) = self.nodes_expanded {
            map.insert("nodes_expanded".into(), n.into());
        }
        if let Some(b) = self.bound_used {
            map.insert("bound_used".into(), b.into());
        }
        for (k, v) in &self.extra {
            map.insert(k.clone(), v.clone());
        }
        Value::Object(map)
    }

    pub fn to_json(&self) -> String {
        to_json_string(&self.to_value())
    }
}

pub(crate) fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report fields serialize to JSON")
}
