//! Dense complex linear algebra shared by every module: orthonormal frames,
//! numerical rank, principal angles, hermitian signatures and Schur forms with
//! a selected eigenvalue cluster moved to the leading block.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Operator 2-norm (largest singular value).
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

pub fn sigma_min(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(f64::INFINITY, |acc, &s| acc.min(s))
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank relative to the largest singular value.
pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        None => 0,
        Some(&smax) if smax == 0.0 => 0,
        Some(&smax) => s.iter().filter(|&&v| v > rel_tol * smax).count(),
    }
}

/// Orthonormal basis for the column span of a full-column-rank matrix.
pub fn orthonormalize(frame: &CMat) -> Result<CMat> {
    let k = frame.ncols();
    if k == 0 {
        return Ok(frame.clone());
    }
    if frame.nrows() < k {
        return Err(Error::RankDeficient(0.0));
    }
    let svd = SVD::new(frame.clone(), true, false);
    let s = &svd.singular_values;
    let smax = s.iter().fold(0.0_f64, |a, &v| a.max(v));
    let smin = s.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if smax == 0.0 || smin < RANK_TOL * smax {
        return Err(Error::RankDeficient(if smax > 0.0 { smin / smax } else { 0.0 }));
    }
    let u = svd.u.expect("left singular vectors requested");
    Ok(u.columns(0, k).into_owned())
}

/// Orthonormal basis of the orthogonal complement of the column span of an
/// orthonormal frame.
pub fn orthogonal_complement(q: &CMat) -> CMat {
    let m = q.nrows();
    let k = q.ncols();
    let proj = identity(m) - q * q.adjoint();
    let (vals, vecs) = hermitian_eigen(&proj);
    // eigenvalue 1 on the complement, 0 on span(q)
    let mut out = CMat::zeros(m, m - k);
    for (j, col) in (k..m).enumerate() {
        debug_assert!(vals[col] > 0.5);
        out.set_column(j, &vecs.column(col));
    }
    out
}

/// Hermitian eigen-decomposition with ascending eigenvalues.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let sym = (h + h.adjoint()) * real(0.5);
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Inertia of a hermitian matrix: counts of eigenvalues above `tol`, below
/// `-tol` and in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Inertia {
    pub fn signature(&self) -> i64 {
        self.positive as i64 - self.negative as i64
    }
}

pub fn inertia(h: &CMat, tol: f64) -> Inertia {
    let (vals, _) = hermitian_eigen(h);
    let mut out = Inertia {
        positive: 0,
        negative: 0,
        zero: 0,
    };
    for v in vals {
        if v > tol {
            out.positive += 1;
        } else if v < -tol {
            out.negative += 1;
        } else {
            out.zero += 1;
        }
    }
    out
}

/// Principal angles (ascending) between the column spans of two frames.
pub fn principal_angles(a: &CMat, b: &CMat) -> Result<Vec<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "frames live in dimensions {} and {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let qa = orthonormalize(a)?;
    let qb = orthonormalize(b)?;
    // cosines descending pair with sines ascending; atan2 keeps small angles
    // accurate where acos alone would not
    let cosines = singular_values(&(qa.adjoint() * &qb));
    let mut sines = singular_values(&(&qb - &qa * (qa.adjoint() * &qb)));
    sines.reverse();
    let k = qa.ncols().min(qb.ncols());
    let mut angles: Vec<f64> = (0..k)
        .map(|j| {
            let cs = cosines.get(j).copied().unwrap_or(0.0);
            let sn = sines.get(j).copied().unwrap_or(1.0);
            sn.atan2(cs)
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMat::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

pub fn vstack(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.ncols());
    let mut out = CMat::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

pub fn hstack(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

pub fn inverse(m: &CMat, what: &'static str) -> Result<CMat> {
    m.clone().try_inverse().ok_or(Error::SingularSolve(what))
}

pub fn solve(a: &CMat, b: &CMat, what: &'static str) -> Result<CMat> {
    a.clone().lu().solve(b).ok_or(Error::SingularSolve(what))
}

pub fn expm(m: &CMat) -> CMat {
    m.clone().exp()
}

/// Eigenvalues of a general complex matrix (diagonal of its Schur form).
pub fn eigenvalues(m: &CMat) -> Vec<C64> {
    if m.is_empty() {
        return Vec::new();
    }
    let t = Schur::new(m.clone()).unpack().1;
    (0..m.nrows()).map(|i| t[(i, i)]).collect()
}

/// Complex Schur form `m = z t z*` reordered so that the eigenvalues accepted
/// by `select` occupy the leading `k` diagonal positions.
#[derive(Debug, Clone)]
pub struct OrderedSchur {
    pub z: CMat,
    pub t: CMat,
    pub k: usize,
}

impl OrderedSchur {
    pub fn new(m: &CMat, select: impl Fn(C64) -> bool) -> Self {
        let n = m.nrows();
        let (mut z, mut t) = if n == 0 {
            (CMat::zeros(0, 0), CMat::zeros(0, 0))
        } else {
            Schur::new(m.clone()).unpack()
        };
        for i in 0..n {
            for j in (i + 1)..n {
                t[(j, i)] = C64::new(0.0, 0.0);
            }
        }
        let mut k = 0;
        for i in 0..n {
            if select(t[(i, i)]) {
                let mut pos = i;
                while pos > k {
                    swap_adjacent(&mut t, &mut z, pos - 1);
                    pos -= 1;
                }
                k += 1;
            }
        }
        OrderedSchur { z, t, k }
    }

    /// Orthonormal basis of the invariant subspace belonging to the selected
    /// eigenvalues.
    pub fn leading_basis(&self) -> CMat {
        self.z.columns(0, self.k).into_owned()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }
}

/// Swaps diagonal entries `p` and `p + 1` of an upper-triangular `t` by a
/// unitary rotation, updating the accumulated Schur vectors `z`.
fn swap_adjacent(t: &mut CMat, z: &mut CMat, p: usize) {
    let n = t.nrows();
    let a = t[(p, p)];
    let b = t[(p + 1, p + 1)];
    let cpl = t[(p, p + 1)];
    let v1 = cpl;
    let v2 = b - a;
    let nv = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
    if nv == 0.0 {
        return;
    }
    let (g11, g21) = (v1 / nv, v2 / nv);
    // columns of the rotation: (g11, g21) and (-conj(g21), conj(g11))
    let g12 = -g21.conj();
    let g22 = g11.conj();
    for col in 0..n {
        let x = t[(p, col)];
        let y = t[(p + 1, col)];
        t[(p, col)] = g11.conj() * x + g21.conj() * y;
        t[(p + 1, col)] = g12.conj() * x + g22.conj() * y;
    }
    for row in 0..n {
        let x = t[(row, p)];
        let y = t[(row, p + 1)];
        t[(row, p)] = x * g11 + y * g21;
        t[(row, p + 1)] = x * g12 + y * g22;
    }
    for row in 0..z.nrows() {
        let x = z[(row, p)];
        let y = z[(row, p + 1)];
        z[(row, p)] = x * g11 + y * g21;
        z[(row, p + 1)] = x * g12 + y * g22;
    }
    t[(p + 1, p)] = C64::new(0.0, 0.0);
}

/// Solves `a x - x b = rhs` for upper-triangular `a` and `b` with disjoint
/// spectra, column by column.
pub fn triangular_sylvester(a: &CMat, b: &CMat, rhs: &CMat) -> Result<CMat> {
    let k = a.nrows();
    let m = b.nrows();
    let mut x = CMat::zeros(k, m);
    for j in 0..m {
        let mut col = rhs.column(j).into_owned();
        for l in 0..j {
            col += x.column(l) * b[(l, j)];
        }
        let shifted = a - CMat::identity(k, k) * b[(j, j)];
        let sol = shifted
            .solve_upper_triangular(&col)
            .ok_or(Error::SingularSolve("triangular Sylvester equation"))?;
        x.set_column(j, &sol);
    }
    Ok(x)
}

/// Wraps an angle to (-π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut t = theta % two_pi;
    if t <= -std::f64::consts::PI {
        t += two_pi;
    } else if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

/// Eigenphases in (-π, π], ascending, of a (numerically) unitary matrix.
pub fn unitary_phases(u: &CMat) -> Vec<f64> {
    let mut phases: Vec<f64> = eigenvalues(u).into_iter().map(|z| z.arg()).collect();
    phases.sort_by(f64::total_cmp);
    phases
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMat {
        CMat::from_row_slice(
            4,
            4,
            &[
                c(0.3, 0.1),
                c(1.0, -0.2),
                c(0.0, 0.5),
                c(2.0, 0.0),
                c(-1.0, 0.0),
                c(0.5, 0.5),
                c(0.2, 0.0),
                c(0.0, -1.0),
                c(0.1, 0.3),
                c(0.0, 0.0),
                c(-2.0, 0.1),
                c(0.4, 0.4),
                c(1.5, 0.0),
                c(-0.3, 0.2),
                c(0.6, -0.6),
                c(1.1, 0.0),
            ],
        )
    }

    #[test]
    fn ordered_schur_moves_selected_block_first() {
        let m = sample();
        let os = OrderedSchur::new(&m, |z| z.re > 0.0);
        let recon = &os.z * &os.t * os.z.adjoint();
        assert!((recon - &m).norm() < 1e-12);
        let diag = os.diagonal();
        assert!(diag[..os.k].iter().all(|z| z.re > 0.0));
        assert!(diag[os.k..].iter().all(|z| z.re <= 0.0));
        for i in 0..4 {
            for j in 0..i {
                assert!(os.t[(i, j)].norm() < 1e-14);
            }
        }
        // leading columns span an invariant subspace
        let v = os.leading_basis();
        let mv = &m * &v;
        let resid = &mv - &v * (v.adjoint() * &mv);
        assert!(resid.norm() < 1e-12);
    }

    #[test]
    fn sylvester_solution_satisfies_equation() {
        let os = OrderedSchur::new(&sample(), |z| z.re > 0.0);
        let k = os.k;
        let t11 = os.t.view((0, 0), (k, k)).into_owned();
        let t12 = os.t.view((0, k), (k, 4 - k)).into_owned();
        let t22 = os.t.view((k, k), (4 - k, 4 - k)).into_owned();
        let x = triangular_sylvester(&t11, &t22, &(-&t12)).unwrap();
        assert!((&t11 * &x - &x * &t22 + &t12).norm() < 1e-12);
    }

    #[test]
    fn orthonormalize_rejects_rank_deficiency() {
        let f = CMat::from_row_slice(3, 2, &[real(1.0), real(2.0), real(0.0), real(0.0), real(1.0), real(2.0)]);
        assert!(matches!(orthonormalize(&f), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn complement_is_orthogonal() {
        let q = orthonormalize(&sample().columns(0, 2).into_owned()).unwrap();
        let w = orthogonal_complement(&q);
        assert_eq!(w.ncols(), 2);
        assert!((q.adjoint() * &w).norm() < 1e-12);
        assert!((w.adjoint() * &w - identity(2)).norm() < 1e-12);
    }

    #[test]
    fn principal_angles_of_coordinate_lines() {
        let a = CMat::from_column_slice(2, 1, &[real(1.0), real(0.0)]);
        let b = CMat::from_column_slice(2, 1, &[real(1.0), real(1.0)]);
        let ang = principal_angles(&a, &b).unwrap();
        assert!((ang[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }
}
