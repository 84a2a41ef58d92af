//! First-order systems `A = J(∂ₓ + B)` on `[0, 1]`.
//!
//! The generalized eigenproblem `Au = λWu` with a hermitian weight `W`
//! (identity by default) is handled throughout, so second-order problems can
//! be rewritten as first-order systems with a singular weight.

mod boundary;
mod experiments;
mod ode;
mod spectrum;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{c, identity, inverse, op_norm, sigma_min, CMat};

pub use boundary::{
    calderon_projection, calderon_projections, calderon_vs_tangential, cauchy_data_space,
    comparison_projector, double_kernel_matrix, green_form, weak_ucp_check, CalderonMethod,
    CalderonPair, DoubleCoupling, DoubleKernel, PoissonOperator, TangentialComparison,
    UcpCertificate,
};
pub use experiments::{
    fit_linear_modulus, rotate_domain, sf_mas_experiment, LinearFit, OperatorPath, SfMasOptions,
    SfMasResult,
};
pub use ode::{fundamental_solution, fundamental_solution_with, magnus_solution, OdeOptions};
pub use spectrum::{
    box_scheme_propagator, fd_eigenvalues, fd_pencil, fd_pencil_eigenvalues, find_eigenvalues,
    find_eigenvalues_with, graph_gap, Eigenvalue, GraphGap, LocatorOptions, RealizedOperator,
};

type MatFn = Arc<dyn Fn(f64) -> CMat + Send + Sync>;

/// A matrix-valued coefficient on `[0, 1]`. Variable coefficients may carry an
/// exact derivative; otherwise derivatives are taken by a fourth-order central
/// difference, which evaluates the callback slightly outside `[0, 1]`.
#[derive(Clone)]
pub enum Coefficient {
    Constant(CMat),
    Variable {
        n: usize,
        f: MatFn,
        df: Option<MatFn>,
    },
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            Coefficient::Variable { n, df, .. } => f
                .debug_struct("Variable")
                .field("n", n)
                .field("exact_derivative", &df.is_some())
                .finish(),
        }
    }
}

const DIFF_STEP: f64 = 1e-3;

impl Coefficient {
    pub fn constant(m: CMat) -> Self {
        Coefficient::Constant(m)
    }

    pub fn variable(n: usize, f: impl Fn(f64) -> CMat + Send + Sync + 'static) -> Self {
        Coefficient::Variable {
            n,
            f: Arc::new(f),
            df: None,
        }
    }

    pub fn with_derivative(self, df: impl Fn(f64) -> CMat + Send + Sync + 'static) -> Self {
        match self {
            Coefficient::Constant(m) => Coefficient::Constant(m),
            Coefficient::Variable { n, f, .. } => Coefficient::Variable {
                n,
                f,
                df: Some(Arc::new(df)),
            },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Coefficient::Constant(m) => m.nrows(),
            Coefficient::Variable { n, .. } => *n,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Constant(_))
    }

    pub fn eval(&self, x: f64) -> CMat {
        match self {
            Coefficient::Constant(m) => m.clone(),
            Coefficient::Variable { f, .. } => f(x),
        }
    }

    pub fn derivative(&self, x: f64) -> CMat {
        match self {
            Coefficient::Constant(m) => CMat::zeros(m.nrows(), m.ncols()),
            Coefficient::Variable { df: Some(df), .. } => df(x),
            Coefficient::Variable { f, .. } => {
                let h = DIFF_STEP;
                (f(x - 2.0 * h) - f(x - h) * c(8.0, 0.0) + f(x + h) * c(8.0, 0.0) - f(x + 2.0 * h))
                    / c(12.0 * h, 0.0)
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Coefficient {
        match self {
            Coefficient::Constant(m) => Coefficient::Constant(m * c(s, 0.0)),
            Coefficient::Variable { n, f, df } => {
                let f = f.clone();
                let out = Coefficient::variable(*n, move |x| f(x) * c(s, 0.0));
                match df.clone() {
                    Some(df) => out.with_derivative(move |x| df(x) * c(s, 0.0)),
                    None => out,
                }
            }
        }
    }

    /// Pointwise combination; stays constant when both inputs are.
    fn zip(
        a: &Coefficient,
        b: &Coefficient,
        op: impl Fn(&CMat, &CMat, f64) -> CMat + Send + Sync + 'static,
    ) -> Coefficient {
        match (a, b) {
            (Coefficient::Constant(x), Coefficient::Constant(y)) => {
                Coefficient::Constant(op(x, y, 0.0))
            }
            _ => {
                let (a, b) = (a.clone(), b.clone());
                let n = a.dim();
                Coefficient::variable(n, move |x| op(&a.eval(x), &b.eval(x), x))
            }
        }
    }
}

impl From<CMat> for Coefficient {
    fn from(m: CMat) -> Self {
        Coefficient::Constant(m)
    }
}

/// Largest condition number accepted for `J(x)`.
pub const SYMBOL_CONDITION_LIMIT: f64 = 1e8;
/// Formal-symmetry defects below this count as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct IntervalSystem {
    n: usize,
    j: Coefficient,
    b: Coefficient,
    w: Option<Coefficient>,
}

fn sample_grid(constant: bool, points: usize) -> Vec<f64> {
    if constant {
        vec![0.0]
    } else {
        (0..points).map(|k| k as f64 / (points - 1) as f64).collect()
    }
}

impl IntervalSystem {
    pub fn new(j: impl Into<Coefficient>, b: impl Into<Coefficient>) -> Result<Self> {
        let (j, b) = (j.into(), b.into());
        let n = j.dim();
        if n == 0 || b.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "J is {n}x{n} but B is {}x{}",
                b.dim(),
                b.dim()
            )));
        }
        for x in sample_grid(j.is_constant(), 1001) {
            let jx = j.eval(x);
            if jx.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!("J({x}) has shape {:?}", jx.shape())));
            }
            let smin = sigma_min(&jx);
            let condition = if smin > 0.0 { op_norm(&jx) / smin } else { f64::INFINITY };
            if !(condition < SYMBOL_CONDITION_LIMIT) {
                return Err(Error::SingularSymbol { x, condition });
            }
        }
        for x in sample_grid(b.is_constant(), 11) {
            if b.eval(x).shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!("B({x}) is not {n}x{n}")));
            }
        }
        Ok(IntervalSystem { n, j, b, w: None })
    }

    /// The symmetric system with `J(∂ + B)`, `B = J⁻¹(K + J′/2)` for hermitian `K`.
    pub fn symmetric(j: impl Into<Coefficient>, k: impl Into<Coefficient>) -> Result<Self> {
        let (j, k) = (j.into(), k.into());
        for x in sample_grid(k.is_constant(), 11) {
            let kx = k.eval(x);
            if op_norm(&(&kx - kx.adjoint())) > 1e-12 * op_norm(&kx).max(1.0) {
                return Err(Error::NotSymmetric(op_norm(&(&kx - kx.adjoint()))));
            }
        }
        let b = match (&j, &k) {
            (Coefficient::Constant(jm), Coefficient::Constant(km)) => {
                Coefficient::Constant(inverse(jm, "symbol J")? * km)
            }
            _ => {
                let (jj, kk) = (j.clone(), k.clone());
                Coefficient::variable(j.dim(), move |x| {
                    let jx = jj.eval(x);
                    let rhs = kk.eval(x) + jj.derivative(x) * c(0.5, 0.0);
                    jx.lu().solve(&rhs).unwrap_or_else(|| CMat::zeros(rhs.nrows(), rhs.ncols()))
                })
            }
        };
        IntervalSystem::new(j, b)
    }

    /// Hermitian weight `W` for the problem `Au = λWu`.
    pub fn with_weight(mut self, w: impl Into<Coefficient>) -> Result<Self> {
        let w = w.into();
        if w.dim() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "weight is {}x{} for fiber dimension {}",
                w.dim(),
                w.dim(),
                self.n
            )));
        }
        for x in sample_grid(w.is_constant(), 11) {
            let wx = w.eval(x);
            let defect = op_norm(&(&wx - wx.adjoint()));
            if defect > 1e-12 * op_norm(&wx).max(1.0) {
                return Err(Error::InvalidArgument(format!("weight is not hermitian at x = {x}")));
            }
        }
        self.w = Some(w);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn j(&self, x: f64) -> CMat {
        self.j.eval(x)
    }

    pub fn dj(&self, x: f64) -> CMat {
        self.j.derivative(x)
    }

    pub fn b(&self, x: f64) -> CMat {
        self.b.eval(x)
    }

    pub fn weight(&self, x: f64) -> CMat {
        match &self.w {
            Some(w) => w.eval(x),
            None => identity(self.n),
        }
    }

    pub fn j_coefficient(&self) -> &Coefficient {
        &self.j
    }

    pub fn b_coefficient(&self) -> &Coefficient {
        &self.b
    }

    pub fn weight_coefficient(&self) -> Option<&Coefficient> {
        self.w.as_ref()
    }

    pub fn is_constant(&self) -> bool {
        self.j.is_constant() && self.b.is_constant() && self.w.as_ref().map_or(true, |w| w.is_constant())
    }

    /// `λ J⁻¹ W - B`, the generator of `u′ = (λJ⁻¹W - B)u`.
    pub fn generator(&self, lambda: C64, x: f64) -> Result<CMat> {
        let jx = self.j(x);
        let rhs = self.weight(x) * lambda;
        let sol = jx.lu().solve(&rhs).ok_or(Error::SingularSymbol {
            x,
            condition: f64::INFINITY,
        })?;
        Ok(sol - self.b(x))
    }

    /// Largest relative defect of `J* = -J` and `JB + B*J = J′` on a sample grid.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in sample_grid(self.is_constant(), 101) {
            let jx = self.j(x);
            let bx = self.b(x);
            let scale = op_norm(&jx).max(1.0) * op_norm(&bx).max(1.0);
            let skew = op_norm(&(&jx + jx.adjoint())) / op_norm(&jx).max(1.0);
            let sym = op_norm(&(&jx * &bx + bx.adjoint() * &jx - self.dj(x))) / scale;
            worst = worst.max(skew).max(sym);
        }
        worst
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetry_defect() <= SYMMETRY_TOL
    }

    /// The formal transpose with respect to the flat fiber product:
    /// `Jᵗ = -J*`, `Bᵗ = -J^{-*}(B*J* - (J′)*)`, weight `W*`.
    pub fn transpose(&self) -> Result<Self> {
        let jt = match &self.j {
            Coefficient::Constant(m) => Coefficient::Constant(-m.adjoint()),
            Coefficient::Variable { n, f, df } => Coefficient::Variable {
                n: *n,
                f: {
                    let f = f.clone();
                    Arc::new(move |x| -f(x).adjoint())
                },
                df: df.as_ref().map(|df| {
                    let df = df.clone();
                    Arc::new(move |x: f64| -df(x).adjoint()) as MatFn
                }),
            },
        };
        let j = self.j.clone();
        let bt = Coefficient::zip(&self.j, &self.b, move |jx, bx, x| {
            let rhs = bx.adjoint() * jx.adjoint() - j.derivative(x).adjoint();
            let jadj = jx.adjoint();
            -(jadj.lu().solve(&rhs).unwrap_or_else(|| CMat::zeros(rhs.nrows(), rhs.ncols())))
        });
        let mut t = IntervalSystem::new(jt, bt)?;
        if let Some(w) = &self.w {
            let wt = match w {
                Coefficient::Constant(m) => Coefficient::Constant(m.adjoint()),
                _ => {
                    let w = w.clone();
                    Coefficient::variable(self.n, move |x| w.eval(x).adjoint())
                }
            };
            t.w = Some(wt);
        }
        Ok(t)
    }

    /// `A + C = J(∂ + B + J⁻¹C)` for a zeroth-order term `C`.
    pub fn perturbed(&self, c_term: &Coefficient) -> Result<Self> {
        if c_term.dim() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "perturbation is {}x{} for fiber dimension {}",
                c_term.dim(),
                c_term.dim(),
                self.n
            )));
        }
        let j = self.j.clone();
        let b = self.b.clone();
        let jc = Coefficient::zip(&j, c_term, |jx, cx, _| {
            jx.clone().lu().solve(cx).unwrap_or_else(|| CMat::zeros(cx.nrows(), cx.ncols()))
        });
        let nb = Coefficient::zip(&b, &jc, |bx, y, _| bx + y);
        let mut out = IntervalSystem::new(j, nb)?;
        out.w = self.w.clone();
        Ok(out)
    }

    /// `A + εW`, whose eigenvalues are those of `A` shifted by `ε`.
    pub fn shifted(&self, eps: f64) -> Result<Self> {
        let w = self
            .w
            .clone()
            .unwrap_or_else(|| Coefficient::Constant(identity(self.n)));
        self.perturbed(&w.scaled(eps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real;

    fn j_std() -> CMat {
        CMat::from_row_slice(2, 2, &[real(0.0), real(-1.0), real(1.0), real(0.0)])
    }

    #[test]
    fn symmetric_construction_has_no_defect() {
        let k = CMat::from_row_slice(2, 2, &[real(1.0), c(0.5, 0.2), c(0.5, -0.2), real(-2.0)]);
        let s = IntervalSystem::symmetric(j_std(), k).unwrap();
        assert!(s.symmetry_defect() < 1e-12);
        let jv = Coefficient::variable(2, |x| {
            CMat::from_row_slice(2, 2, &[c(0.0, 1.0 + x * x), real(-1.0), real(1.0), c(0.0, -2.0)])
        });
        let kv = Coefficient::variable(2, |x| {
            CMat::from_row_slice(2, 2, &[real(x), c(0.0, x), c(0.0, -x), real(1.0)])
        });
        let s = IntervalSystem::symmetric(jv, kv).unwrap();
        assert!(s.symmetry_defect() < 1e-9, "{}", s.symmetry_defect());
    }

    #[test]
    fn nonsymmetric_system_is_detected() {
        let b = CMat::from_row_slice(2, 2, &[real(1.0), real(0.0), real(0.0), real(0.0)]);
        let s = IntervalSystem::new(j_std(), b).unwrap();
        assert!(!s.is_symmetric());
    }

    #[test]
    fn singular_symbol_is_rejected() {
        let j = CMat::from_row_slice(2, 2, &[real(1.0), real(1.0), real(1.0), real(1.0)]);
        assert!(matches!(
            IntervalSystem::new(j, CMat::zeros(2, 2)),
            Err(Error::SingularSymbol { .. })
        ));
        assert!(matches!(
            IntervalSystem::new(j_std(), CMat::zeros(3, 3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn transpose_of_symmetric_system_is_itself() {
        let jv = Coefficient::variable(2, |x| {
            CMat::from_row_slice(2, 2, &[c(0.0, 2.0 + x), real(-1.0 + x), real(1.0 - x), c(0.0, -1.0)])
        });
        let kv = Coefficient::variable(2, |x| {
            CMat::from_row_slice(2, 2, &[real(x.cos()), c(1.0, x), c(1.0, -x), real(-1.0)])
        });
        let s = IntervalSystem::symmetric(jv, kv).unwrap();
        let t = s.transpose().unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert!(op_norm(&(s.j(x) - t.j(x))) < 1e-12);
            assert!(op_norm(&(s.b(x) - t.b(x))) < 1e-8);
        }
    }

    #[test]
    fn shift_moves_generator_by_weight() {
        let s = IntervalSystem::symmetric(j_std(), identity(2)).unwrap();
        let sh = s.shifted(0.25).unwrap();
        let g1 = s.generator(c(1.0, 0.0), 0.5).unwrap();
        let g2 = sh.generator(c(1.25, 0.0), 0.5).unwrap();
        assert!(op_norm(&(g1 - g2)) < 1e-14);
    }
}
