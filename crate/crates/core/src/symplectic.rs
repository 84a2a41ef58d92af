//! Finite-dimensional hermitian symplectic linear algebra.
//!
//! A space is `ℂ^d` with the form `ω(x, y) = ⟨x, Ω y⟩` for an invertible
//! skew-adjoint `Ω`. After [`HermitianSymplecticSpace::standardize`] the
//! hermitian matrix `iΩ` becomes `diag(I_p, -I_q)`, and when `p = q` every
//! Lagrangian subspace is the graph `{(a, W a)}` of a unitary `W`. The Maslov
//! index of a path against a reference is the signed count of eigenvalues of
//! `W_ref* W_t` passing through 1; counterclockwise passages count `+1`, which
//! is the orientation matching a positive crossing form.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_eigen, op_norm, orthogonal_complement, orthonormalize, principal_angles,
    rank, unitary_phases, wrap_angle, CMat, RANK_TOL,
};

/// Tolerance on `‖F*ΩF‖ / ‖Ω‖` for a frame to count as isotropic.
pub const LAGRANGIAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct HermitianSymplecticSpace {
    omega: CMat,
    omega_norm: f64,
    standard: Standardization,
}

/// Basis change `S` with `S*(iΩ)S = diag(I_p, -I_q)`.
#[derive(Debug, Clone)]
pub struct Standardization {
    pub basis: CMat,
    pub inverse: CMat,
    pub positive: usize,
    pub negative: usize,
}

impl HermitianSymplecticSpace {
    pub fn new(omega: CMat) -> Result<Self> {
        if omega.nrows() != omega.ncols() || omega.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "form matrix must be square and nonempty, got {}x{}",
                omega.nrows(),
                omega.ncols()
            )));
        }
        let omega_norm = op_norm(&omega);
        let skew = op_norm(&(&omega + omega.adjoint()));
        if skew > 1e-10 * omega_norm.max(1.0) {
            return Err(Error::NotSkewAdjoint(skew));
        }
        if linalg::sigma_min(&omega) <= RANK_TOL * omega_norm {
            return Err(Error::SingularForm);
        }
        let standard = standardize_form(&omega);
        Ok(HermitianSymplecticSpace {
            omega,
            omega_norm,
            standard,
        })
    }

    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn omega(&self) -> &CMat {
        &self.omega
    }

    pub fn form(&self, x: &CMat, y: &CMat) -> CMat {
        x.adjoint() * &self.omega * y
    }

    pub fn standardize(&self) -> &Standardization {
        &self.standard
    }

    /// Half the dimension, or a signature obstruction when `iΩ` is not
    /// neutral.
    pub fn lagrangian_dim(&self) -> Result<usize> {
        let s = &self.standard;
        if s.positive != s.negative {
            return Err(Error::SignatureObstruction {
                positive: s.positive,
                negative: s.negative,
            });
        }
        Ok(s.positive)
    }

    /// The unitary `W` whose graph in standard coordinates is `l`.
    pub fn unitary(&self, l: &LagrangianFrame) -> Result<CMat> {
        let m = self.lagrangian_dim()?;
        self.check_frame(l)?;
        if l.dim() != m {
            return Err(Error::NotLagrangian {
                defect: f64::NAN,
                dim: l.dim(),
                ambient: self.dim(),
            });
        }
        let g = &self.standard.inverse * l.matrix();
        let gp = g.rows(0, m).into_owned();
        let gm = g.rows(m, m).into_owned();
        let gp_inv = gp.try_inverse().ok_or(Error::NotLagrangian {
            defect: f64::NAN,
            dim: l.dim(),
            ambient: self.dim(),
        })?;
        Ok(gm * gp_inv)
    }

    /// The Lagrangian `{(a, W a)}` in original coordinates.
    pub fn lagrangian_from_unitary(&self, w: &CMat) -> Result<LagrangianFrame> {
        let m = self.lagrangian_dim()?;
        if w.shape() != (m, m) {
            return Err(Error::DimensionMismatch(format!(
                "unitary must be {m}x{m}, got {}x{}",
                w.nrows(),
                w.ncols()
            )));
        }
        let graph = linalg::vstack(&CMat::identity(m, m), w);
        LagrangianFrame::new(&self.standard.basis * graph)
    }

    fn check_frame(&self, l: &LagrangianFrame) -> Result<()> {
        if l.ambient() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "frame lives in dimension {}, space has dimension {}",
                l.ambient(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `‖F*ΩF‖ / ‖Ω‖` for the orthonormal frame `F`.
    pub fn isotropy_defect(&self, l: &LagrangianFrame) -> Result<f64> {
        self.check_frame(l)?;
        Ok(op_norm(&self.form(l.matrix(), l.matrix())) / self.omega_norm)
    }
}

fn standardize_form(omega: &CMat) -> Standardization {
    let i_omega = omega * linalg::c(0.0, 1.0);
    let (vals, vecs) = hermitian_eigen(&i_omega);
    let d = vals.len();
    let mut order: Vec<usize> = (0..d).filter(|&i| vals[i] > 0.0).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let positive = order.len();
    order.extend((0..d).filter(|&i| vals[i] <= 0.0));
    let mut basis = CMat::zeros(d, d);
    let mut inverse = CMat::zeros(d, d);
    for (j, &i) in order.iter().enumerate() {
        let scale = vals[i].abs().sqrt();
        basis.set_column(j, &(vecs.column(i) / linalg::real(scale)));
        inverse.set_row(j, &(vecs.column(i).adjoint() * linalg::real(scale)));
    }
    Standardization {
        basis,
        inverse,
        positive,
        negative: d - positive,
    }
}

/// Column-orthonormalized basis of a subspace.
#[derive(Debug, Clone)]
pub struct LagrangianFrame {
    frame: CMat,
}

impl LagrangianFrame {
    pub fn new(frame: CMat) -> Result<Self> {
        Ok(LagrangianFrame {
            frame: orthonormalize(&frame)?,
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.frame
    }

    pub fn ambient(&self) -> usize {
        self.frame.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn transformed(&self, s: &CMat) -> Result<Self> {
        LagrangianFrame::new(s * &self.frame)
    }

    /// Orthogonal projection onto the subspace.
    pub fn projection(&self) -> CMat {
        &self.frame * self.frame.adjoint()
    }

    /// Subspace `ker P` for a projection-form boundary condition.
    pub fn from_projection_kernel(p: &CMat) -> Result<Self> {
        let d = p.nrows();
        let r = rank(p, RANK_TOL);
        let svd = p.clone().svd(false, true);
        let vt = svd.v_t.expect("right singular vectors requested");
        let mut idx: Vec<usize> = (0..d).collect();
        idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        let mut out = CMat::zeros(d, d - r);
        for (j, &i) in idx.iter().take(d - r).enumerate() {
            out.set_column(j, &vt.row(i).adjoint());
        }
        LagrangianFrame::new(out)
    }
}

pub fn is_lagrangian(space: &HermitianSymplecticSpace, l: &LagrangianFrame) -> Result<bool> {
    let half = space.lagrangian_dim()?;
    let defect = space.isotropy_defect(l)?;
    Ok(l.dim() == half && defect <= LAGRANGIAN_TOL)
}

fn require_lagrangian(space: &HermitianSymplecticSpace, l: &LagrangianFrame) -> Result<()> {
    if !is_lagrangian(space, l)? {
        return Err(Error::NotLagrangian {
            defect: space.isotropy_defect(l)?,
            dim: l.dim(),
            ambient: l.ambient(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairIndices {
    pub dim_intersection: usize,
    pub defect: usize,
}

/// Intersection dimension and codimension of the sum of two Lagrangians.
pub fn pair_indices(
    space: &HermitianSymplecticSpace,
    l: &LagrangianFrame,
    m: &LagrangianFrame,
) -> Result<PairIndices> {
    require_lagrangian(space, l)?;
    require_lagrangian(space, m)?;
    let joint = linalg::hstack(l.matrix(), m.matrix());
    let r = rank(&joint, RANK_TOL);
    Ok(PairIndices {
        dim_intersection: l.dim() + m.dim() - r,
        defect: space.dim() - r,
    })
}

/// Matches two ascending lists of phases by the cyclic shift minimizing the
/// largest angular displacement. Returns the shift and that displacement.
pub(crate) fn match_phases(a: &[f64], b: &[f64]) -> (usize, f64) {
    let m = a.len();
    debug_assert_eq!(m, b.len());
    let mut best = (0, f64::INFINITY);
    for s in 0..m.max(1) {
        let worst = (0..m)
            .map(|j| wrap_angle(b[(j + s) % m] - a[j]).abs())
            .fold(0.0_f64, f64::max);
        if worst < best.1 {
            best = (s, worst);
        }
    }
    if m == 0 {
        best.1 = 0.0;
    }
    best
}

/// How crossings at the ends of the parameter interval are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointConvention {
    /// Degenerate endpoints are an error.
    Strict,
    /// Crossings at the initial parameter count, crossings at the final
    /// parameter do not.
    HalfOpen,
}

#[derive(Debug, Clone)]
pub struct MaslovOptions {
    pub convention: EndpointConvention,
    /// Eigenphases below this magnitude sit on the reference.
    pub zero_tol: f64,
    /// Largest eigenphase displacement allowed between neighbouring samples.
    pub max_step: f64,
    pub max_depth: u32,
    pub crossing_angle_tol: f64,
    pub degenerate_form_tol: f64,
    pub check_crossing_form: bool,
}

impl Default for MaslovOptions {
    fn default() -> Self {
        MaslovOptions {
            convention: EndpointConvention::HalfOpen,
            zero_tol: 1e-8,
            max_step: FRAC_PI_8,
            max_depth: 40,
            crossing_angle_tol: 1e-8,
            degenerate_form_tol: 1e-6,
            check_crossing_form: true,
        }
    }
}

type FrameFn<'a> = Box<dyn Fn(f64) -> Result<LagrangianFrame> + 'a>;

enum PathSource<'a> {
    Function { eval: FrameFn<'a>, grid: usize },
    Samples(Vec<(f64, LagrangianFrame)>),
}

/// A curve of Lagrangians together with the fixed reference it is measured
/// against. Built either from a callable (adaptive refinement available) or
/// from fixed samples.
pub struct LagrangianPath<'a> {
    space: HermitianSymplecticSpace,
    reference: LagrangianFrame,
    t0: f64,
    t1: f64,
    source: PathSource<'a>,
}

impl<'a> LagrangianPath<'a> {
    pub fn from_fn(
        space: HermitianSymplecticSpace,
        reference: LagrangianFrame,
        range: (f64, f64),
        grid: usize,
        eval: impl Fn(f64) -> Result<LagrangianFrame> + 'a,
    ) -> Result<Self> {
        let (t0, t1) = range;
        if !(t1 > t0) || grid < 1 {
            return Err(Error::InvalidArgument(format!(
                "path needs t0 < t1 and a positive grid, got [{t0}, {t1}] with grid {grid}"
            )));
        }
        require_lagrangian(&space, &reference)?;
        Ok(LagrangianPath {
            space,
            reference,
            t0,
            t1,
            source: PathSource::Function {
                eval: Box::new(eval),
                grid,
            },
        })
    }

    pub fn from_samples(
        space: HermitianSymplecticSpace,
        reference: LagrangianFrame,
        samples: Vec<(f64, LagrangianFrame)>,
    ) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument("a sampled path needs at least two samples".into()));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidArgument("path parameters must be strictly increasing".into()));
        }
        require_lagrangian(&space, &reference)?;
        for (_, f) in &samples {
            require_lagrangian(&space, f)?;
        }
        let t0 = samples[0].0;
        let t1 = samples[samples.len() - 1].0;
        Ok(LagrangianPath {
            space,
            reference,
            t0,
            t1,
            source: PathSource::Samples(samples),
        })
    }

    pub fn space(&self) -> &HermitianSymplecticSpace {
        &self.space
    }

    pub fn reference(&self) -> &LagrangianFrame {
        &self.reference
    }

    pub fn range(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    fn eval(&self, t: f64) -> Result<Option<LagrangianFrame>> {
        match &self.source {
            PathSource::Function { eval, .. } => {
                let f = eval(t)?;
                require_lagrangian(&self.space, &f)?;
                Ok(Some(f))
            }
            PathSource::Samples(_) => Ok(None),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaslovCrossing {
    pub t: f64,
    pub contribution: i64,
    /// Smallest principal angle between the path and the reference at `t`.
    pub angle: f64,
    /// Signature of the crossing form, when it was evaluated and nondegenerate.
    pub form_signature: Option<i64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaslovResult {
    pub index: i64,
    pub crossings: Vec<MaslovCrossing>,
    /// Index recomputed from crossing-form signatures, when every crossing
    /// form was nondegenerate.
    pub form_index: Option<i64>,
    pub samples: usize,
}

struct PhaseSnap {
    t: f64,
    phases: Vec<f64>,
}

fn class(theta: f64) -> i64 {
    (theta >= 0.0) as i64
}

/// Maslov index by unitary winding, cross-checked by crossing forms.
pub fn maslov_index(path: &LagrangianPath<'_>, opts: &MaslovOptions) -> Result<MaslovResult> {
    let space = &path.space;
    let w_ref_adj = space.unitary(&path.reference)?.adjoint();
    let snap = |t: f64, frame: LagrangianFrame| -> Result<PhaseSnap> {
        let w = space.unitary(&frame)?;
        Ok(PhaseSnap {
            t,
            phases: unitary_phases(&(&w_ref_adj * w)),
        })
    };

    let mut snaps: Vec<PhaseSnap> = match &path.source {
        PathSource::Function { grid, .. } => {
            let mut v = Vec::with_capacity(grid + 1);
            for k in 0..=*grid {
                let t = path.t0 + (path.t1 - path.t0) * k as f64 / *grid as f64;
                let f = path.eval(t)?.expect("callable path");
                v.push(snap(t, f)?);
            }
            v
        }
        PathSource::Samples(samples) => samples
            .iter()
            .map(|(t, f)| snap(*t, f.clone()))
            .collect::<Result<_>>()?,
    };

    let min_width = (path.t1 - path.t0) * 0.5_f64.powi(opts.max_depth as i32);
    let mut i = 0;
    while i + 1 < snaps.len() {
        let (_, disp) = match_phases(&snaps[i].phases, &snaps[i + 1].phases);
        if disp > opts.max_step {
            let (ta, tb) = (snaps[i].t, snaps[i + 1].t);
            match &path.source {
                PathSource::Function { .. } if tb - ta > min_width => {
                    let tm = 0.5 * (ta + tb);
                    let f = path.eval(tm)?.expect("callable path");
                    snaps.insert(i + 1, snap(tm, f)?);
                    continue;
                }
                _ => return Err(Error::Undersampled { t0: ta, t1: tb }),
            }
        }
        i += 1;
    }

    let last = snaps.len() - 1;
    let mut index = 0;
    let mut raw: Vec<(f64, i64)> = Vec::new();
    for i in 0..last {
        let (shift, _) = match_phases(&snaps[i].phases, &snaps[i + 1].phases);
        let m = snaps[i].phases.len();
        for j in 0..m {
            let a = snaps[i].phases[j];
            let b = a + wrap_angle(snaps[i + 1].phases[(j + shift) % m] - a);
            if a.abs() >= FRAC_PI_2 {
                continue;
            }
            let mut ca = class(a);
            let mut cb = class(b);
            let mut at_start = false;
            if i == 0 && a.abs() < opts.zero_tol {
                match opts.convention {
                    EndpointConvention::Strict => {
                        return Err(Error::DegenerateEndpoint { t: path.t0 })
                    }
                    EndpointConvention::HalfOpen => {
                        if b.abs() < opts.zero_tol {
                            return Err(Error::DegenerateEndpoint { t: path.t0 });
                        }
                        ca = 1 - class(b);
                        at_start = true;
                    }
                }
            }
            if i + 1 == last && b.abs() < opts.zero_tol {
                match opts.convention {
                    EndpointConvention::Strict => {
                        return Err(Error::DegenerateEndpoint { t: path.t1 })
                    }
                    EndpointConvention::HalfOpen => {
                        if a.abs() < opts.zero_tol {
                            return Err(Error::DegenerateEndpoint { t: path.t1 });
                        }
                        cb = ca;
                    }
                }
            }
            let contribution = cb - ca;
            if contribution == 0 {
                continue;
            }
            index += contribution;
            let t_star = if at_start {
                path.t0
            } else {
                locate_phase_zero(path, &w_ref_adj, (snaps[i].t, a), (snaps[i + 1].t, b), opts)?
            };
            raw.push((t_star, contribution));
        }
    }

    raw.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut crossings = Vec::new();
    let mut form_index = Some(0_i64);
    let mut g = 0;
    while g < raw.len() {
        let t = raw[g].0;
        let mut contribution = 0;
        let mut h = g;
        while h < raw.len() && (raw[h].0 - t).abs() <= 1e-9 * (1.0 + t.abs()) {
            contribution += raw[h].1;
            h += 1;
        }
        g = h;
        let frame = match path.eval(t)? {
            Some(f) => f,
            None => {
                form_index = None;
                crossings.push(MaslovCrossing {
                    t,
                    contribution,
                    angle: f64::NAN,
                    form_signature: None,
                    degenerate: false,
                });
                continue;
            }
        };
        let angle = principal_angles(frame.matrix(), path.reference.matrix())?[0];
        let mut crossing = MaslovCrossing {
            t,
            contribution,
            angle,
            form_signature: None,
            degenerate: false,
        };
        if opts.check_crossing_form {
            let w = space.unitary(&frame)?;
            let phases = unitary_phases(&(&w_ref_adj * w));
            let k = phases.iter().filter(|p| p.abs() < 1e-6).count().max(1);
            let form = crossing_form(path, &frame, t, k)?;
            if form.iter().any(|e| e.abs() < opts.degenerate_form_tol) {
                warn!("degenerate crossing form at t = {t}: eigenvalues {form:?}");
                crossing.degenerate = true;
                form_index = None;
            } else {
                let sig = form.iter().map(|&e| if e > 0.0 { 1 } else { -1 }).sum::<i64>();
                crossing.form_signature = Some(sig);
                // the crossing at the initial parameter is only partly counted
                // when several eigenphases sit there; compare totals instead
                if let Some(fi) = form_index.as_mut() {
                    *fi += sig;
                }
            }
        } else {
            form_index = None;
        }
        crossings.push(crossing);
    }

    if let Some(fi) = form_index {
        if fi != index {
            return Err(Error::MethodDisagreement {
                what: "unitary winding and crossing form",
                detail: format!("winding index {index}, crossing-form index {fi}"),
            });
        }
    }

    Ok(MaslovResult {
        index,
        crossings,
        form_index,
        samples: snaps.len(),
    })
}

fn locate_phase_zero(
    path: &LagrangianPath<'_>,
    w_ref_adj: &CMat,
    lo: (f64, f64),
    hi: (f64, f64),
    opts: &MaslovOptions,
) -> Result<f64> {
    if matches!(path.source, PathSource::Samples(_)) {
        let (ta, a) = lo;
        let (tb, b) = hi;
        return Ok(if a == b { ta } else { ta + (tb - ta) * a / (a - b) });
    }
    let (mut ta, mut a) = lo;
    let (mut tb, mut b) = hi;
    for _ in 0..opts.max_depth.max(60) {
        let tm = 0.5 * (ta + tb);
        let frame = path.eval(tm)?.expect("callable path");
        let w = path.space.unitary(&frame)?;
        let phases = unitary_phases(&(w_ref_adj * w));
        let guess = 0.5 * (a + b);
        let p = phases
            .iter()
            .map(|&p| guess + wrap_angle(p - guess))
            .min_by(|x, y| (x - guess).abs().total_cmp(&(y - guess).abs()))
            .expect("nonempty phase list");
        if p.abs() < opts.crossing_angle_tol || tb - ta < 1e-14 * (1.0 + tm.abs()) {
            return Ok(tm);
        }
        if class(p) == class(a) {
            ta = tm;
            a = p;
        } else {
            tb = tm;
            b = p;
        }
    }
    Ok(0.5 * (ta + tb))
}

/// Eigenvalues of the crossing form `v ↦ d/dt (A(t)v)* Ω v` on `L_t ∩ M`,
/// where `L_t` is written as the graph of `A(t)` over the orthogonal
/// complement of `L_{t*}`. Derivative by finite differences.
fn crossing_form(
    path: &LagrangianPath<'_>,
    frame: &LagrangianFrame,
    t: f64,
    k: usize,
) -> Result<Vec<f64>> {
    let f = frame.matrix();
    let g = orthogonal_complement(f);
    let coupling = f.adjoint() * path.space.omega() * &g;
    let r = path.reference.matrix();
    let resid = f - r * (r.adjoint() * f);
    let svd = resid.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut idx: Vec<usize> = (0..f.ncols()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let mut kernel = CMat::zeros(f.ncols(), k);
    for (j, &i) in idx.iter().take(k).enumerate() {
        kernel.set_column(j, &vt.row(i).adjoint());
    }

    let gamma = |s: f64| -> Result<CMat> {
        let ft = path.eval(s)?.expect("callable path");
        let x = f.adjoint() * ft.matrix();
        let y = g.adjoint() * ft.matrix();
        let x_inv = linalg::inverse(&x, "crossing-form chart")?;
        Ok(&coupling * y * x_inv)
    };
    let span = path.t1 - path.t0;
    let derivative = |h: f64| -> Result<CMat> {
        if t - h < path.t0 {
            let g1 = gamma(t + h)?;
            let g2 = gamma(t + 2.0 * h)?;
            Ok((g1 * linalg::real(4.0) - g2) / linalg::real(2.0 * h))
        } else if t + h > path.t1 {
            let g1 = gamma(t - h)?;
            let g2 = gamma(t - 2.0 * h)?;
            Ok((g2 - g1 * linalg::real(4.0)) / linalg::real(2.0 * h))
        } else {
            Ok((gamma(t + h)? - gamma(t - h)?) / linalg::real(2.0 * h))
        }
    };
    let mut h = 1e-4 * span;
    let mut d = derivative(h)?;
    for _ in 0..8 {
        let d2 = derivative(0.5 * h)?;
        let rel = (&d2 - &d).norm() / d2.norm().max(1e-300);
        h *= 0.5;
        d = d2;
        if rel < 1e-4 {
            break;
        }
    }
    let q = -(kernel.adjoint() * d * &kernel);
    Ok(hermitian_eigen(&q).0)
}

/// Symplectic transformation `exp(Ω⁻¹ H)` for hermitian `H`.
pub fn symplectic_exp(space: &HermitianSymplecticSpace, h: &CMat) -> Result<CMat> {
    let omega_inv = linalg::inverse(space.omega(), "form matrix")?;
    Ok(linalg::expm(&(omega_inv * h)))
}
