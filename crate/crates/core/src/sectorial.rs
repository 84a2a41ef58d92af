//! Sectorial projections of a constant tangential matrix `B₀`.
//!
//! `Q₊(x) = (2πi)⁻¹ ∮ e^{-xλ} (λ - B₀)⁻¹ dλ` over a rectangle enclosing the
//! eigenvalues with positive real part, so that `Q₊(0) = P₊` is the spectral
//! projection and `Q₊(x) = e^{-xB₀} P₊`. Each side is integrated with a
//! Gauss-Legendre rule; the node count doubles until the result settles.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, eigenvalues, expm, identity, op_norm, CMat, CVec, OrderedSchur};

/// Eigenvalues closer than this to the imaginary axis are rejected.
pub const MARGIN_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct TangentialMatrix {
    b0: CMat,
    eigenvalues: Vec<C64>,
    margin: f64,
}

impl TangentialMatrix {
    pub fn new(b0: CMat) -> Result<Self> {
        if !b0.is_square() || b0.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "tangential matrix must be square, got {}x{}",
                b0.nrows(),
                b0.ncols()
            )));
        }
        let eigenvalues = eigenvalues(&b0);
        let margin = eigenvalues
            .iter()
            .map(|z| z.re.abs())
            .fold(f64::INFINITY, f64::min);
        Ok(TangentialMatrix {
            b0,
            eigenvalues,
            margin,
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.b0
    }

    pub fn dim(&self) -> usize {
        self.b0.nrows()
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    /// Smallest distance of the spectrum to the imaginary axis.
    pub fn margin(&self) -> f64 {
        self.margin
    }

    fn check_margin(&self) -> Result<()> {
        if self.margin < MARGIN_FLOOR {
            let worst = self
                .eigenvalues
                .iter()
                .copied()
                .min_by(|a, b| a.re.abs().total_cmp(&b.re.abs()))
                .unwrap_or_default();
            return Err(Error::MarginViolation {
                eigenvalue: worst,
                margin: self.margin,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfPlane {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub im_max: f64,
}

impl Rectangle {
    pub fn contains(&self, z: C64) -> bool {
        z.re > self.re_min && z.re < self.re_max && z.im.abs() < self.im_max
    }
}

#[derive(Debug, Clone)]
pub struct SectorialContour {
    pub half_plane: HalfPlane,
    /// `None` when no eigenvalue lies in the half plane.
    pub rectangle: Option<Rectangle>,
    /// Nodes and complex weights (including `dλ`), counterclockwise.
    pub nodes: Vec<(C64, C64)>,
    pub margin: f64,
    pub nodes_per_side: usize,
}

pub fn build_contour(b0: &TangentialMatrix, nodes_per_side: usize) -> Result<SectorialContour> {
    contour(b0, HalfPlane::Right, nodes_per_side)
}

pub fn build_left_contour(b0: &TangentialMatrix, nodes_per_side: usize) -> Result<SectorialContour> {
    contour(b0, HalfPlane::Left, nodes_per_side)
}

fn contour(b0: &TangentialMatrix, half: HalfPlane, per_side: usize) -> Result<SectorialContour> {
    b0.check_margin()?;
    let per_side = NonZeroUsize::new(per_side)
        .ok_or_else(|| Error::InvalidArgument("contour needs at least one node per side".into()))?;
    let d = b0.margin;
    let sign = match half {
        HalfPlane::Right => 1.0,
        HalfPlane::Left => -1.0,
    };
    let far = b0
        .eigenvalues
        .iter()
        .filter(|z| sign * z.re > 0.0)
        .map(|z| sign * z.re)
        .reduce(f64::max);
    let Some(far) = far else {
        return Ok(SectorialContour {
            half_plane: half,
            rectangle: None,
            nodes: Vec::new(),
            margin: d,
            nodes_per_side: per_side.get(),
        });
    };
    let im_max = b0.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max) + d;
    let (near, far) = (0.5 * d, far + d);
    let rect = match half {
        HalfPlane::Right => Rectangle {
            re_min: near,
            re_max: far,
            im_max,
        },
        HalfPlane::Left => Rectangle {
            re_min: -far,
            re_max: -near,
            im_max,
        },
    };
    let (a, b) = (rect.re_min, rect.re_max);
    let corners = [c(a, -im_max), c(b, -im_max), c(b, im_max), c(a, im_max)];
    let rule = GaussLegendre::new(per_side);
    let mut nodes = Vec::with_capacity(4 * per_side.get());
    for k in 0..4 {
        let (p, q) = (corners[k], corners[(k + 1) % 4]);
        let half_len = 0.5 * (q - p);
        let mid = 0.5 * (p + q);
        for &(s, w) in rule.as_node_weight_pairs() {
            nodes.push((mid + half_len * s, half_len * w));
        }
    }
    Ok(SectorialContour {
        half_plane: half,
        rectangle: Some(rect),
        nodes,
        margin: d,
        nodes_per_side: per_side.get(),
    })
}

/// `(2πi)⁻¹ Σ w f(λ) (λ - B₀)⁻¹` over the contour nodes.
fn integrate(b0: &CMat, contour: &SectorialContour, f: impl Fn(C64) -> C64) -> Result<CMat> {
    let n = b0.nrows();
    let mut acc = CMat::zeros(n, n);
    for &(z, w) in &contour.nodes {
        let shifted = identity(n) * z - b0;
        let res = shifted
            .lu()
            .try_inverse()
            .ok_or(Error::SingularSolve("resolvent on the contour"))?;
        acc += res * (w * f(z));
    }
    Ok(acc / c(0.0, 2.0 * PI))
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub initial_nodes: usize,
    pub tol: f64,
    pub max_nodes: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            initial_nodes: 64,
            tol: 1e-10,
            max_nodes: 4096,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SectorialResult {
    pub matrix: CMat,
    pub margin: f64,
    pub nodes_per_side: usize,
    /// `(nodes per side, difference to the previous level)`.
    pub series: Vec<(usize, f64)>,
}

fn certified(
    b0: &TangentialMatrix,
    half: HalfPlane,
    x: f64,
    opts: &QuadratureOptions,
) -> Result<SectorialResult> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("x must be nonnegative, got {x}")));
    }
    let sign = match half {
        HalfPlane::Right => -1.0,
        HalfPlane::Left => 1.0,
    };
    let weight = |z: C64| (z * (sign * x)).exp();
    let mut n = opts.initial_nodes.max(1);
    let mut prev = integrate(&b0.b0, &contour(b0, half, n)?, weight)?;
    let mut series = Vec::new();
    loop {
        let next_n = 2 * n;
        if next_n > opts.max_nodes {
            return Err(Error::QuadratureBudget {
                nodes: n,
                difference: series.last().map_or(f64::INFINITY, |s: &(usize, f64)| s.1),
            });
        }
        let next = integrate(&b0.b0, &contour(b0, half, next_n)?, weight)?;
        let diff = op_norm(&(&next - &prev));
        series.push((next_n, diff));
        n = next_n;
        prev = next;
        if diff < opts.tol {
            return Ok(SectorialResult {
                matrix: prev,
                margin: b0.margin,
                nodes_per_side: n,
                series,
            });
        }
    }
}

/// `Q₊(x)`; at `x = 0` this is the positive spectral projection `P₊`.
pub fn sectorial_projection(b0: &TangentialMatrix, x: f64) -> Result<CMat> {
    Ok(sectorial_projection_certified(b0, x, &QuadratureOptions::default())?.matrix)
}

pub fn sectorial_projection_certified(
    b0: &TangentialMatrix,
    x: f64,
    opts: &QuadratureOptions,
) -> Result<SectorialResult> {
    certified(b0, HalfPlane::Right, x, opts)
}

/// `Q₋(x) = (2πi)⁻¹ ∮ e^{xλ} (λ - B₀)⁻¹ dλ` over the left rectangle.
pub fn left_projection(b0: &TangentialMatrix, x: f64) -> Result<CMat> {
    Ok(left_projection_certified(b0, x, &QuadratureOptions::default())?.matrix)
}

pub fn left_projection_certified(
    b0: &TangentialMatrix,
    x: f64,
    opts: &QuadratureOptions,
) -> Result<SectorialResult> {
    certified(b0, HalfPlane::Left, x, opts)
}

/// `P₋ = I - P₊`.
pub fn complement_projection(b0: &TangentialMatrix) -> Result<CMat> {
    Ok(identity(b0.dim()) - sectorial_projection(b0, 0.0)?)
}

/// Differences between successive node doublings, starting at `start` nodes
/// per side and running `levels` doublings regardless of convergence.
pub fn convergence_series(
    b0: &TangentialMatrix,
    x: f64,
    start: usize,
    levels: usize,
) -> Result<Vec<(usize, f64)>> {
    let weight = |z: C64| (-z * x).exp();
    let mut n = start.max(1);
    let mut prev = integrate(&b0.b0, &build_contour(b0, n)?, weight)?;
    let mut out = Vec::with_capacity(levels);
    for _ in 0..levels {
        n *= 2;
        let next = integrate(&b0.b0, &build_contour(b0, n)?, weight)?;
        out.push((n, op_norm(&(&next - &prev))));
        prev = next;
    }
    Ok(out)
}

/// Similarities with a larger condition number make the oracle unreliable.
pub const ORACLE_CONDITION_LIMIT: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub matrix: CMat,
    pub condition: f64,
}

/// `e^{-xB₀} P₊` from an ordered Schur form with the right half-plane block
/// first and a Sylvester solve that splits off the complementary block.
pub fn eigenprojection_oracle(b0: &TangentialMatrix, x: f64) -> Result<OracleResult> {
    b0.check_margin()?;
    let n = b0.dim();
    let schur = OrderedSchur::new(&b0.b0, |z| z.re > 0.0);
    let k = schur.k;
    if k == 0 {
        return Ok(OracleResult {
            matrix: CMat::zeros(n, n),
            condition: 1.0,
        });
    }
    let t11 = schur.t.view((0, 0), (k, k)).into_owned();
    let mut block = CMat::zeros(n, n);
    let e11 = expm(&(-t11.clone() * c(x, 0.0)));
    block.view_mut((0, 0), (k, k)).copy_from(&e11);
    let mut condition = 1.0;
    if k < n {
        let t12 = schur.t.view((0, k), (k, n - k)).into_owned();
        let t22 = schur.t.view((k, k), (n - k, n - k)).into_owned();
        let xs = crate::linalg::triangular_sylvester(&t11, &t22, &t12)?;
        condition = (1.0 + op_norm(&xs)).powi(2);
        if condition > ORACLE_CONDITION_LIMIT {
            return Err(Error::IllConditioned(condition));
        }
        block.view_mut((0, k), (k, n - k)).copy_from(&(e11 * xs));
    }
    Ok(OracleResult {
        matrix: &schur.z * block * schur.z.adjoint(),
        condition,
    })
}

/// Smooth cutoff equal to one on `[0, a]` and zero on `[2a, ∞)`, built from
/// the quintic smoothstep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub a: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff { a: 0.25 }
    }
}

impl Cutoff {
    pub fn eval(&self, x: f64) -> f64 {
        let s = ((x - self.a) / self.a).clamp(0.0, 1.0);
        1.0 - s * s * s * (s * (6.0 * s - 15.0) + 10.0)
    }
}

/// `(φ(x) Q₊(x) ξ, φ(x) T Q₋(x) ξ)`.
pub fn approx_poisson(
    b0: &TangentialMatrix,
    t: &CMat,
    xi: &CVec,
    x: f64,
    cutoff: impl Fn(f64) -> f64,
) -> Result<(CVec, CVec)> {
    if !(x > 0.0) {
        return Err(Error::InvalidArgument(format!("x must be positive, got {x}")));
    }
    let n = b0.dim();
    if t.shape() != (n, n) || xi.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "coupling {}x{} and vector of length {} against fiber dimension {n}",
            t.nrows(),
            t.ncols(),
            xi.len()
        )));
    }
    let phi = c(cutoff(x), 0.0);
    let plus = sectorial_projection(b0, x)? * xi * phi;
    let minus = t * left_projection(b0, x)? * xi * phi;
    Ok((plus, minus))
}
