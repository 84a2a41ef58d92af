use std::collections::BTreeMap;

use cauchy_core::CMat;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::scenario::Scenario;

/// Default tolerances; scenario overrides and `--tol-scale` apply on top.
pub const DEFAULT_TOLERANCES: [(&str, f64); 11] = [
    ("identity", 1e-8),
    ("lagrangian", 1e-8),
    ("cross_method", 1e-6),
    ("self_adjoint", 1e-6),
    ("eigenvalue", 1e-6),
    ("oracle", 1e-8),
    ("semigroup", 1e-8),
    ("tangential", 1e-3),
    ("slope_defect", 0.1),
    ("order_defect", 0.2),
    ("exact", 0.0),
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tolerances {
    pub scale: f64,
    pub values: BTreeMap<String, f64>,
}

impl Tolerances {
    pub fn new(overrides: &BTreeMap<String, f64>, scale: f64) -> anyhow::Result<Self> {
        let mut values: BTreeMap<String, f64> =
            DEFAULT_TOLERANCES.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        for (k, v) in overrides {
            if !values.contains_key(k) {
                anyhow::bail!("unknown tolerance `{k}`");
            }
            values.insert(k.clone(), *v);
        }
        for v in values.values_mut() {
            *v *= scale;
        }
        Ok(Tolerances { scale, values })
    }

    pub fn get(&self, name: &str) -> f64 {
        self.values[name]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    /// Residual; passes when at most the tolerance.
    pub measured: f64,
    pub tolerance: f64,
    /// Which tolerance of the table applies.
    pub tolerance_key: String,
    pub pass: bool,
}

/// Rows of numbers with named columns; `group` names the column that splits
/// the rows into separate lines when plotted.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Series {
    pub columns: Vec<String>,
    pub x: String,
    pub y: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub scenario: Scenario,
    pub seed: Option<u64>,
    pub oracle: bool,
    pub tolerances: Tolerances,
    pub results: BTreeMap<String, Value>,
    pub assertions: Vec<Assertion>,
    #[serde(default)]
    pub series: BTreeMap<String, Series>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
}

impl Report {
    pub fn new(scenario: Scenario, seed: Option<u64>, oracle: bool, tolerances: Tolerances) -> Self {
        Report {
            scenario,
            seed,
            oracle,
            tolerances,
            results: BTreeMap::new(),
            assertions: Vec::new(),
            series: BTreeMap::new(),
            pass: true,
            failure: None,
        }
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable result"));
    }

    /// Records `measured ≤ tolerance[key]`.
    pub fn check(&mut self, name: &str, measured: f64, key: &str) {
        let tolerance = self.tolerances.get(key);
        let pass = measured <= tolerance;
        self.pass &= pass;
        self.assertions.push(Assertion {
            name: name.to_string(),
            measured,
            tolerance,
            tolerance_key: key.to_string(),
            pass,
        });
    }

    /// Exact integer agreement.
    pub fn check_eq(&mut self, name: &str, got: i64, want: i64) {
        self.check(name, (got - want).abs() as f64, "exact");
    }

    pub fn fail(&mut self, stage: &str, err: &anyhow::Error) {
        self.pass = false;
        self.failure = Some(Failure {
            stage: stage.to_string(),
            message: format!("{err:#}"),
        });
    }
}

pub fn matrix_json(m: &CMat) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| Value::Array((0..m.ncols()).map(|k| json!([m[(i, k)].re, m[(i, k)].im])).collect()))
        .collect();
    Value::Array(rows)
}
