use std::f64::consts::FRAC_PI_8;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::boundary::green_form;
use super::{fundamental_solution, IntervalSystem};
use crate::error::{Error, Result};
use crate::linalg::{
    c, eigenvalues, hstack, identity, inverse, op_norm, orthogonal_complement, orthonormalize,
    sigma_min, vstack, CMat,
};
use crate::symplectic::{
    maslov_index, EndpointConvention, HermitianSymplecticSpace, LagrangianFrame, LagrangianPath,
    MaslovOptions,
};

/// A symmetric system with a Lagrangian boundary condition `ρu ∈ D`.
#[derive(Clone, Debug)]
pub struct RealizedOperator {
    system: IntervalSystem,
    domain: LagrangianFrame,
    space: HermitianSymplecticSpace,
}

impl RealizedOperator {
    pub fn new(system: IntervalSystem, domain: LagrangianFrame) -> Result<Self> {
        let space = green_form(&system)?;
        if domain.ambient() != 2 * system.dim() {
            return Err(Error::DimensionMismatch(format!(
                "boundary frame lives in C^{} but traces live in C^{}",
                domain.ambient(),
                2 * system.dim()
            )));
        }
        let defect = space.isotropy_defect(&domain)?;
        if domain.dim() != system.dim() || defect > crate::symplectic::LAGRANGIAN_TOL {
            return Err(Error::NotLagrangian {
                defect,
                dim: domain.dim(),
                ambient: domain.ambient(),
            });
        }
        Ok(RealizedOperator {
            system,
            domain,
            space,
        })
    }

    /// Domain `{ρu ∈ ker P}` given by a projection.
    pub fn from_projection(system: IntervalSystem, p: &CMat) -> Result<Self> {
        let domain = LagrangianFrame::from_projection_kernel(p)?;
        RealizedOperator::new(system, domain)
    }

    pub fn system(&self) -> &IntervalSystem {
        &self.system
    }

    pub fn domain(&self) -> &LagrangianFrame {
        &self.domain
    }

    pub fn space(&self) -> &HermitianSymplecticSpace {
        &self.space
    }

    pub fn with_domain(&self, domain: LagrangianFrame) -> Result<Self> {
        RealizedOperator::new(self.system.clone(), domain)
    }
}

#[derive(Debug, Clone)]
pub struct LocatorOptions {
    /// Initial uniform samples over the window.
    pub grid: usize,
    /// Eigenphase level at which bisection stops.
    pub angle_tol: f64,
    /// Eigenvalues closer than this are merged into one cluster.
    pub cluster: f64,
}

impl Default for LocatorOptions {
    fn default() -> Self {
        LocatorOptions {
            grid: 512,
            angle_tol: 1e-13,
            cluster: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub value: f64,
    pub multiplicity: usize,
    /// Smallest singular value of `[D | CD_λ]` at the located value.
    pub certificate: f64,
}

/// Eigenvalues in `[lo, hi)` as the values where the trace space of
/// `(A - λW)u = 0` meets `D`, found by tracking eigenphases of
/// `W_D* W_{CD(λ)}` through 1.
pub fn find_eigenvalues(op: &RealizedOperator, window: (f64, f64)) -> Result<Vec<Eigenvalue>> {
    find_eigenvalues_with(op, window, &LocatorOptions::default())
}

pub fn find_eigenvalues_with(
    op: &RealizedOperator,
    window: (f64, f64),
    opts: &LocatorOptions,
) -> Result<Vec<Eigenvalue>> {
    let sys = &op.system;
    locate(op, window, opts, |lam| {
        fundamental_solution(sys, c(lam, 0.0), 0.0, 1.0)
    })
}

fn locate(
    op: &RealizedOperator,
    window: (f64, f64),
    opts: &LocatorOptions,
    propagate: impl Fn(f64) -> Result<CMat>,
) -> Result<Vec<Eigenvalue>> {
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(Error::WindowTooSmall(format!("empty window [{lo}, {hi}]")));
    }
    let n = op.system.dim();
    let frame_at = |lam: f64| -> Result<LagrangianFrame> {
        LagrangianFrame::new(vstack(&identity(n), &propagate(lam)?))
    };
    let path = LagrangianPath::from_fn(
        op.space.clone(),
        op.domain.clone(),
        (lo, hi),
        opts.grid.max(2),
        &frame_at,
    )?;
    let mopts = MaslovOptions {
        convention: EndpointConvention::HalfOpen,
        crossing_angle_tol: opts.angle_tol,
        max_step: FRAC_PI_8,
        check_crossing_form: false,
        ..MaslovOptions::default()
    };
    let result = maslov_index(&path, &mopts)?;

    let mut out: Vec<Eigenvalue> = Vec::new();
    let mut group: Vec<(f64, i64)> = Vec::new();
    let flush = |group: &mut Vec<(f64, i64)>, out: &mut Vec<Eigenvalue>| -> Result<()> {
        if group.is_empty() {
            return Ok(());
        }
        let positive = group.iter().all(|g| g.1 > 0);
        let negative = group.iter().all(|g| g.1 < 0);
        let mean = group.iter().map(|g| g.0).sum::<f64>() / group.len() as f64;
        if !(positive || negative) {
            return Err(Error::UnresolvedCluster(mean));
        }
        let multiplicity = group.iter().map(|g| g.1.unsigned_abs() as usize).sum();
        let value = group
            .iter()
            .map(|g| g.0 * g.1.unsigned_abs() as f64)
            .sum::<f64>()
            / multiplicity as f64;
        let cd = frame_at(value)?;
        let certificate = sigma_min(&hstack(op.domain.matrix(), cd.matrix()));
        out.push(Eigenvalue {
            value,
            multiplicity,
            certificate,
        });
        group.clear();
        Ok(())
    };
    for cr in &result.crossings {
        if let Some(last) = group.last() {
            if cr.t - last.0 > opts.cluster {
                flush(&mut group, &mut out)?;
            }
        }
        group.push((cr.t, cr.contribution));
    }
    flush(&mut group, &mut out)?;
    Ok(out)
}

/// Discrete propagator of the box scheme on `N` cells:
/// `(I - h/2 G)u_{j+1} = (I + h/2 G)u_j` with `G` at the cell midpoint.
pub fn box_scheme_propagator(sys: &IntervalSystem, lambda: C64, cells: usize) -> Result<CMat> {
    if cells == 0 {
        return Err(Error::InvalidArgument("box scheme needs at least one cell".into()));
    }
    let n = sys.dim();
    let h = 1.0 / cells as f64;
    let factor = |x: f64| -> Result<CMat> {
        let g = sys.generator(lambda, x)? * c(0.5 * h, 0.0);
        let lhs = identity(n) - &g;
        Ok(inverse(&lhs, "box scheme cell")? * (identity(n) + g))
    };
    if sys.is_constant() {
        let mut base = factor(0.5)?;
        let mut acc = identity(n);
        let mut k = cells;
        while k > 0 {
            if k & 1 == 1 {
                acc = &base * &acc;
            }
            base = &base * &base;
            k >>= 1;
        }
        return Ok(acc);
    }
    let mut acc = identity(n);
    for j in 0..cells {
        acc = factor((j as f64 + 0.5) * h)? * acc;
    }
    Ok(acc)
}

/// Eigenvalues of the box-scheme discretization, located exactly like the
/// continuous ones but with the discrete propagator. The discrete trace space
/// is Lagrangian only when `J` is constant.
pub fn fd_eigenvalues(
    op: &RealizedOperator,
    window: (f64, f64),
    cells: usize,
    opts: &LocatorOptions,
) -> Result<Vec<Eigenvalue>> {
    let sys = &op.system;
    locate(op, window, opts, |lam| box_scheme_propagator(sys, c(lam, 0.0), cells))
}

/// Dense pencil `K u = λ M u` of the box scheme on `N` cells, unknowns
/// `u_0 … u_N`. The last `n` rows impose the boundary condition.
pub fn fd_pencil(op: &RealizedOperator, cells: usize) -> Result<(CMat, CMat)> {
    if cells == 0 {
        return Err(Error::InvalidArgument("box scheme needs at least one cell".into()));
    }
    let sys = &op.system;
    let n = sys.dim();
    let size = n * (cells + 1);
    let h = 1.0 / cells as f64;
    let mut k = CMat::zeros(size, size);
    let mut m = CMat::zeros(size, size);
    for j in 0..cells {
        let x = (j as f64 + 0.5) * h;
        let jx = sys.j(x);
        let jb = &jx * sys.b(x) * c(0.5, 0.0);
        let jd = &jx * c(1.0 / h, 0.0);
        let w = sys.weight(x) * c(0.5, 0.0);
        let r = j * n;
        k.view_mut((r, j * n), (n, n)).copy_from(&(&jb - &jd));
        k.view_mut((r, (j + 1) * n), (n, n)).copy_from(&(&jb + &jd));
        m.view_mut((r, j * n), (n, n)).copy_from(&w);
        m.view_mut((r, (j + 1) * n), (n, n)).copy_from(&w);
    }
    let perp = orthogonal_complement(op.domain.matrix()).adjoint();
    let r = cells * n;
    k.view_mut((r, 0), (n, n)).copy_from(&perp.columns(0, n));
    k.view_mut((r, cells * n), (n, n)).copy_from(&perp.columns(n, n));
    Ok((k, m))
}

/// Real finite eigenvalues of the dense pencil in the window, by shift-invert
/// and a residual filter `‖(K - λM)u‖ / ‖Mu‖ < 0.1`.
pub fn fd_pencil_eigenvalues(
    op: &RealizedOperator,
    window: (f64, f64),
    cells: usize,
) -> Result<Vec<f64>> {
    let (k, m) = fd_pencil(op, cells)?;
    let (lo, hi) = window;
    let sigma = 0.5 * (lo + hi) + 0.123_456_789 * (hi - lo).max(1e-3);
    let shifted = &k - &m * c(sigma, 0.0);
    let s = inverse(&shifted, "shifted pencil")? * &m;
    let mut out = Vec::new();
    for mu in eigenvalues(&s) {
        if mu.norm() < 1e-12 {
            continue;
        }
        let lam = C64::new(sigma, 0.0) + C64::new(1.0, 0.0) / mu;
        if lam.im.abs() > 1e-6 * (1.0 + lam.re.abs()) || lam.re < lo || lam.re >= hi {
            continue;
        }
        let a = &k - &m * c(lam.re, 0.0);
        let svd = a.clone().svd(false, true);
        let vt = svd.v_t.expect("right singular vectors requested");
        let idx = (0..svd.singular_values.len())
            .min_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]))
            .expect("nonempty spectrum");
        let u = vt.row(idx).adjoint();
        let mu_norm = (&m * &u).norm();
        if mu_norm > 0.0 && (&a * &u).norm() / mu_norm < 0.1 {
            out.push(lam.re);
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GraphGap {
    /// Distance of the orthogonal projections onto the discrete graphs.
    pub graph: f64,
    /// `max_k |λ_k - λ′_k|` over the window, when both operators have the
    /// same number of eigenvalues there.
    pub eigenvalue_distance: Option<f64>,
}

fn discrete_graph(op: &RealizedOperator, cells: usize) -> Result<CMat> {
    let (k, m) = fd_pencil(op, cells)?;
    let n = op.system.dim();
    let rows = n * cells;
    let constraint = k.rows(rows, n).adjoint();
    let z = orthogonal_complement(&orthonormalize(&constraint)?);
    let kz = k.rows(0, rows) * &z;
    let mz = m.rows(0, rows) * &z;
    orthonormalize(&vstack(&mz, &kz))
}

/// Gap between the graphs `{(Mz, Kz)}` of the box-scheme discretizations on a
/// fixed grid, plus the eigenvalue matching distance over an optional window.
pub fn graph_gap(
    op1: &RealizedOperator,
    op2: &RealizedOperator,
    cells: usize,
    window: Option<(f64, f64)>,
) -> Result<GraphGap> {
    if op1.system.dim() != op2.system.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fiber dimensions {} and {}",
            op1.system.dim(),
            op2.system.dim()
        )));
    }
    let g1 = discrete_graph(op1, cells)?;
    let g2 = discrete_graph(op2, cells)?;
    let graph = op_norm(&(&g1 * g1.adjoint() - &g2 * g2.adjoint()));
    let eigenvalue_distance = match window {
        None => None,
        Some(w) => {
            let e1 = find_eigenvalues(op1, w)?;
            let e2 = find_eigenvalues(op2, w)?;
            let expand = |e: &[Eigenvalue]| -> Vec<f64> {
                e.iter()
                    .flat_map(|x| std::iter::repeat(x.value).take(x.multiplicity))
                    .collect()
            };
            let (v1, v2) = (expand(&e1), expand(&e2));
            (v1.len() == v2.len()).then(|| {
                v1.iter()
                    .zip(&v2)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
        }
    };
    Ok(GraphGap {
        graph,
        eigenvalue_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{real, CVec};
    use std::f64::consts::{PI, TAU};

    fn periodic() -> RealizedOperator {
        let sys = IntervalSystem::new(CMat::from_element(1, 1, c(0.0, -1.0)), CMat::zeros(1, 1)).unwrap();
        let d = LagrangianFrame::new(CMat::from_column_slice(2, 1, &[real(1.0), real(1.0)])).unwrap();
        RealizedOperator::new(sys, d).unwrap()
    }

    /// `-u″ - u` on `[0, 4π]` with Dirichlet conditions, as a first-order system.
    fn morse() -> RealizedOperator {
        let l = 4.0 * PI;
        let j = CMat::from_row_slice(2, 2, &[real(0.0), real(-1.0), real(1.0), real(0.0)]);
        let k = CMat::from_diagonal(&CVec::from_vec(vec![real(-l), real(-l)]));
        let w = CMat::from_diagonal(&CVec::from_vec(vec![real(l), real(0.0)]));
        let sys = IntervalSystem::symmetric(j, k).unwrap().with_weight(w).unwrap();
        let mut d = CMat::zeros(4, 2);
        d[(1, 0)] = real(1.0);
        d[(3, 1)] = real(1.0);
        RealizedOperator::new(sys, LagrangianFrame::new(d).unwrap()).unwrap()
    }

    #[test]
    fn periodic_spectrum() {
        let ev = find_eigenvalues(&periodic(), (-10.0, 10.0)).unwrap();
        let values: Vec<f64> = ev.iter().map(|e| e.value).collect();
        assert_eq!(values.len(), 3);
        for (v, k) in values.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((v - TAU * k).abs() < 1e-10, "{v}");
        }
        assert!(ev.iter().all(|e| e.multiplicity == 1 && e.certificate < 1e-8));
        assert!(find_eigenvalues(&periodic(), (1.0, 5.0)).unwrap().is_empty());
        assert!(matches!(
            find_eigenvalues(&periodic(), (1.0, 1.0)),
            Err(Error::WindowTooSmall(_))
        ));
    }

    #[test]
    fn morse_negative_spectrum() {
        let ev = find_eigenvalues(&morse(), (-2.0, 0.5)).unwrap();
        let values: Vec<f64> = ev.iter().map(|e| e.value).collect();
        let want: Vec<f64> = (1..=6).map(|k| (k as f64 / 4.0).powi(2) - 1.0).filter(|v| *v < 0.5).collect();
        assert_eq!(values.len(), want.len(), "{values:?}");
        for (v, w) in values.iter().zip(&want) {
            assert!((v - w).abs() < 1e-8, "{v} vs {w}");
        }
    }

    #[test]
    fn double_eigenvalue_is_merged() {
        // two uncoupled periodic copies
        let j = CMat::from_diagonal(&CVec::from_vec(vec![c(0.0, -1.0), c(0.0, -1.0)]));
        let sys = IntervalSystem::new(j, CMat::zeros(2, 2)).unwrap();
        let mut d = CMat::zeros(4, 2);
        d[(0, 0)] = real(1.0);
        d[(2, 0)] = real(1.0);
        d[(1, 1)] = real(1.0);
        d[(3, 1)] = real(1.0);
        let op = RealizedOperator::new(sys, LagrangianFrame::new(d).unwrap()).unwrap();
        let ev = find_eigenvalues(&op, (-1.0, 8.0)).unwrap();
        assert_eq!(ev.len(), 2);
        assert!(ev.iter().all(|e| e.multiplicity == 2));
    }

    #[test]
    fn box_scheme_converges_at_second_order() {
        let op = morse();
        let opts = LocatorOptions::default();
        let exact = -15.0 / 16.0;
        let err = |cells: usize| {
            let ev = fd_eigenvalues(&op, (-1.2, -0.9), cells, &opts).unwrap();
            assert_eq!(ev.len(), 1);
            (ev[0].value - exact).abs()
        };
        let (e1, e2) = (err(100), err(200));
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn dense_pencil_matches_propagator() {
        let op = morse();
        let cells = 48;
        let dense = fd_pencil_eigenvalues(&op, (-1.2, 0.1), cells).unwrap();
        let prop = fd_eigenvalues(&op, (-1.2, 0.1), cells, &LocatorOptions::default()).unwrap();
        assert_eq!(dense.len(), prop.len(), "{dense:?} {prop:?}");
        for (a, b) in dense.iter().zip(&prop) {
            assert!((a - b.value).abs() < 1e-8);
        }
    }

    #[test]
    fn graph_gap_properties() {
        let op = morse();
        let g = graph_gap(&op, &op, 32, Some((-1.2, -0.1))).unwrap();
        assert_eq!(g.graph, 0.0);
        assert_eq!(g.eigenvalue_distance, Some(0.0));
        let shifted = RealizedOperator::new(op.system().shifted(1e-3).unwrap(), op.domain().clone()).unwrap();
        let g = graph_gap(&op, &shifted, 32, Some((-1.2, -0.1))).unwrap();
        assert!(g.graph > 0.0);
        assert!((g.eigenvalue_distance.unwrap() - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn non_lagrangian_domain_is_refused() {
        let sys = IntervalSystem::new(CMat::from_element(1, 1, c(0.0, -1.0)), CMat::zeros(1, 1)).unwrap();
        let d = LagrangianFrame::new(CMat::from_column_slice(2, 1, &[real(1.0), real(0.0)])).unwrap();
        assert!(matches!(RealizedOperator::new(sys, d), Err(Error::NotLagrangian { .. })));
    }
}
