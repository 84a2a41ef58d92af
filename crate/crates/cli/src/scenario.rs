//! Declarative scenario files.
//!
//! Matrix entries are one of: a real number, `[re, im]`, a polynomial in `x`
//! (`{"poly": [c0, c1, ...]}`, coefficients real or `[re, im]`), or a
//! trigonometric term (`{"trig": {"fn": "cos", "amp": a, "freq": w, "phase": p}}`
//! meaning `a·cos(w·x + p)`).

use std::collections::BTreeMap;
use std::fmt;

use anyhow::{anyhow, bail, Context};
use cauchy_core::interval::{Coefficient, IntervalSystem};
use cauchy_core::symplectic::LagrangianFrame;
use cauchy_core::{CMat, C64};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    pub fn value(self) -> C64 {
        match self {
            Scalar::Real(r) => C64::new(r, 0.0),
            Scalar::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrigFn {
    Sin,
    Cos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trig {
    #[serde(rename = "fn")]
    pub func: TrigFn,
    #[serde(default = "one")]
    pub amp: Scalar,
    #[serde(default = "unit")]
    pub freq: f64,
    #[serde(default)]
    pub phase: f64,
}

fn one() -> Scalar {
    Scalar::Real(1.0)
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Scalar(Scalar),
    Poly { poly: Vec<Scalar> },
    Trig { trig: Trig },
}

impl Entry {
    fn is_constant(&self) -> bool {
        match self {
            Entry::Scalar(_) => true,
            Entry::Poly { poly } => poly.iter().skip(1).all(|s| s.value() == C64::new(0.0, 0.0)),
            Entry::Trig { trig } => trig.freq == 0.0,
        }
    }

    fn eval(&self, x: f64) -> C64 {
        match self {
            Entry::Scalar(s) => s.value(),
            Entry::Poly { poly } => poly.iter().rev().fold(C64::new(0.0, 0.0), |acc, s| acc * x + s.value()),
            Entry::Trig { trig } => {
                let arg = trig.freq * x + trig.phase;
                let v = match trig.func {
                    TrigFn::Sin => arg.sin(),
                    TrigFn::Cos => arg.cos(),
                };
                trig.amp.value() * v
            }
        }
    }

    fn derivative(&self, x: f64) -> C64 {
        match self {
            Entry::Scalar(_) => C64::new(0.0, 0.0),
            Entry::Poly { poly } => poly
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(C64::new(0.0, 0.0), |acc, (k, s)| acc * x + s.value() * k as f64),
            Entry::Trig { trig } => {
                let arg = trig.freq * x + trig.phase;
                let v = match trig.func {
                    TrigFn::Sin => arg.cos(),
                    TrigFn::Cos => -arg.sin(),
                };
                trig.amp.value() * (trig.freq * v)
            }
        }
    }
}

/// Row-major matrix of entries.
pub type MatrixDef = Vec<Vec<Entry>>;

fn check_shape(m: &MatrixDef, rows: usize, cols: usize, at: &str) -> anyhow::Result<()> {
    if m.len() != rows {
        bail!("{at}: {} rows, expected {rows}", m.len());
    }
    for (i, r) in m.iter().enumerate() {
        if r.len() != cols {
            bail!("{at}: row {i} has {} entries, expected {cols}", r.len());
        }
    }
    Ok(())
}

pub fn constant_matrix(m: &MatrixDef, at: &str) -> anyhow::Result<CMat> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    check_shape(m, rows, cols, at)?;
    if m.iter().flatten().any(|e| !e.is_constant()) {
        bail!("{at}: entries must be constant here");
    }
    Ok(CMat::from_fn(rows, cols, |i, k| m[i][k].eval(0.0)))
}

pub fn coefficient(m: &MatrixDef, n: usize, at: &str) -> anyhow::Result<Coefficient> {
    check_shape(m, n, n, at)?;
    if m.iter().flatten().all(Entry::is_constant) {
        return Ok(Coefficient::Constant(CMat::from_fn(n, n, |i, k| m[i][k].eval(0.0))));
    }
    let (f, df) = (m.clone(), m.clone());
    Ok(Coefficient::variable(n, move |x| CMat::from_fn(n, n, |i, k| f[i][k].eval(x)))
        .with_derivative(move |x| CMat::from_fn(n, n, |i, k| df[i][k].derivative(x))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    SfMas,
    Calderon,
    Sectorial,
    Cobordism,
    Continuity,
    Morse,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::SfMas => "sf_mas",
            Kind::Calderon => "calderon",
            Kind::Sectorial => "sectorial",
            Kind::Cobordism => "cobordism",
            Kind::Continuity => "continuity",
            Kind::Morse => "morse",
        };
        f.write_str(s)
    }
}

/// `A = J(∂ + B)`; give either `b` or the hermitian `k` of the symmetric form
/// `B = J⁻¹(K + J′/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDef {
    pub dim: usize,
    pub j: MatrixDef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<MatrixDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<MatrixDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<MatrixDef>,
}

impl SystemDef {
    pub fn build(&self) -> anyhow::Result<IntervalSystem> {
        let n = self.dim;
        if n == 0 {
            bail!("system.dim must be positive");
        }
        let j = coefficient(&self.j, n, "system.j")?;
        let sys = match (&self.b, &self.k) {
            (Some(b), None) => IntervalSystem::new(j, coefficient(b, n, "system.b")?),
            (None, Some(k)) => IntervalSystem::symmetric(j, coefficient(k, n, "system.k")?),
            _ => bail!("system: give exactly one of `b` and `k`"),
        }
        .context("system")?;
        match &self.weight {
            Some(w) => Ok(sys.with_weight(coefficient(w, n, "system.weight")?)?),
            None => Ok(sys),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathDef {
    /// `C_t = Σ_k t^k C_k`, first term linear.
    pub terms: Vec<MatrixDef>,
    pub range: [f64; 2],
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryDef {
    /// Columns span the domain.
    Frame(MatrixDef),
    /// The domain is the kernel of this projection.
    Projection(MatrixDef),
}

impl BoundaryDef {
    pub fn frame(&self) -> anyhow::Result<LagrangianFrame> {
        match self {
            BoundaryDef::Frame(m) => Ok(LagrangianFrame::new(constant_matrix(m, "boundary.frame")?)?),
            BoundaryDef::Projection(m) => Ok(LagrangianFrame::from_projection_kernel(&constant_matrix(
                m,
                "boundary.projection",
            )?)?),
        }
    }
}

/// Randomized suite parameters; requires a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDef {
    pub count: usize,
    pub max_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transformations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryDef>,
    /// Tangential matrix for sectorial runs; `j0` for free cobordism pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<MatrixDef>,
    /// Perturbation direction for continuity runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<MatrixDef>,
    /// Hermitian generator of the domain rotations for continuity runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<MatrixDef>,
    /// `x` samples for sectorial runs, `ε` samples for continuity runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expect: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Scenario {
    /// Parses and validates; parse errors carry line and column.
    pub fn parse(text: &str, origin: &str) -> anyhow::Result<Scenario> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| {
            anyhow!("{origin}:{}:{}: {e}", e.line(), e.column())
        })?;
        s.validate().with_context(|| format!("{origin}: schema"))?;
        Ok(s)
    }

    /// Randomized suites need a seed, from the file or the command line.
    pub fn require_seed(&self, cli_seed: Option<u64>) -> anyhow::Result<()> {
        if self.random.is_some() && self.seed.or(cli_seed).is_none() {
            bail!("{}: random suites need a seed (scenario `seed` or --seed)", self.name);
        }
        Ok(())
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.name.is_empty() {
            bail!("name must not be empty");
        }
        if let Some(r) = &self.random {
            if r.count == 0 || r.max_dim == 0 {
                bail!("random.count and random.max_dim must be positive");
            }
        }
        if let Some(sys) = &self.system {
            let n = sys.dim;
            check_shape(&sys.j, n, n, "system.j")?;
            for (m, at) in [(&sys.b, "system.b"), (&sys.k, "system.k"), (&sys.weight, "system.weight")] {
                if let Some(m) = m {
                    check_shape(m, n, n, at)?;
                }
            }
            if let Some(p) = &self.path {
                for (i, t) in p.terms.iter().enumerate() {
                    check_shape(t, n, n, &format!("path.terms[{i}]"))?;
                }
            }
            if let Some(BoundaryDef::Frame(f)) = &self.boundary {
                check_shape(f, 2 * n, n, "boundary.frame")?;
            }
            if let Some(BoundaryDef::Projection(p)) = &self.boundary {
                check_shape(p, 2 * n, 2 * n, "boundary.projection")?;
            }
            if let Some(d) = &self.direction {
                check_shape(d, n, n, "direction")?;
            }
            if let Some(h) = &self.rotation {
                check_shape(h, 2 * n, 2 * n, "rotation")?;
            }
        }
        let randomized = self.random.is_some();
        let need = |what: bool, field: &str| -> anyhow::Result<()> {
            if what {
                Ok(())
            } else {
                bail!("{} scenarios need `{field}`", self.kind)
            }
        };
        match self.kind {
            Kind::SfMas if !randomized => {
                need(self.system.is_some(), "system")?;
                need(self.path.is_some(), "path")?;
                need(self.boundary.is_some(), "boundary")?;
            }
            Kind::Calderon | Kind::Continuity if !randomized => need(self.system.is_some(), "system")?,
            Kind::Morse => {
                need(self.system.is_some(), "system")?;
                need(self.boundary.is_some(), "boundary")?;
                need(self.window.is_some(), "window")?;
            }
            Kind::Sectorial if !randomized => need(self.matrix.is_some(), "matrix")?,
            Kind::Cobordism if !randomized => need(
                self.system.is_some() || (self.matrix.is_some() && self.b0.is_some()),
                "system (or matrix and b0)",
            )?,
            _ => {}
        }
        if self.kind == Kind::Continuity && self.system.is_some() {
            need(self.direction.is_some(), "direction")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_evaluate_with_derivatives() {
        let e: Vec<Entry> = serde_json::from_str(
            r#"[2.0, [1.0, -1.0], {"poly": [1, 0, [0, 3]]}, {"trig": {"fn": "sin", "amp": 2, "freq": 3}}]"#,
        )
        .unwrap();
        assert_eq!(e[0].eval(0.3), C64::new(2.0, 0.0));
        assert_eq!(e[1].eval(0.3), C64::new(1.0, -1.0));
        assert!((e[2].eval(0.5) - C64::new(1.0, 0.75)).norm() < 1e-15);
        assert!((e[2].derivative(0.5) - C64::new(0.0, 3.0)).norm() < 1e-15);
        assert!((e[3].eval(0.2) - C64::new(2.0 * 0.6f64.sin(), 0.0)).norm() < 1e-15);
        assert!((e[3].derivative(0.2) - C64::new(6.0 * 0.6f64.cos(), 0.0)).norm() < 1e-15);
        assert!(e[0].is_constant() && !e[2].is_constant());
    }

    #[test]
    fn missing_dimension_is_line_anchored() {
        let text = "{\n  \"name\": \"x\",\n  \"kind\": \"calderon\",\n  \"system\": {\"j\": [[[0, 1]]], \"b\": [[0]]}\n}";
        let err = Scenario::parse(text, "bad.json").unwrap_err().to_string();
        assert!(err.starts_with("bad.json:4:"), "{err}");
        assert!(err.contains("dim"), "{err}");
    }

    #[test]
    fn random_suites_need_a_seed() {
        let text = r#"{"name": "r", "kind": "sectorial", "random": {"count": 3, "max_dim": 2}}"#;
        let s = Scenario::parse(text, "r.json").unwrap();
        let err = s.require_seed(None).unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
        assert!(s.require_seed(Some(3)).is_ok());
    }

    #[test]
    fn dimensions_are_checked() {
        let text = r#"{"name": "d", "kind": "calderon", "system": {"dim": 2, "j": [[[0, 1]]], "b": [[0]]}}"#;
        let err = format!("{:#}", Scenario::parse(text, "d.json").unwrap_err());
        assert!(err.contains("system.j"), "{err}");
    }
}
