//! Seeded generators for the randomized experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::interval::{Coefficient, IntervalSystem};
use crate::linalg::{c, op_norm, CMat};
use crate::symplectic::{HermitianSymplecticSpace, LagrangianFrame};

pub type ExperimentRng = ChaCha8Rng;

pub fn rng(seed: u64) -> ExperimentRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries with real and imaginary parts uniform in `[-1, 1]`.
pub fn complex_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn hermitian(rng: &mut impl Rng, n: usize) -> CMat {
    let a = complex_matrix(rng, n, n);
    (&a + a.adjoint()) * c(0.5, 0.0)
}

pub fn unitary(rng: &mut impl Rng, n: usize) -> CMat {
    loop {
        let a = complex_matrix(rng, n, n);
        let qr = a.qr();
        if qr.r().diagonal().iter().all(|d| d.norm() > 1e-3) {
            return qr.q();
        }
    }
}

/// `U diag(±d) U*` with `|d| ∈ [lo, hi]` and random signs.
pub fn invertible_hermitian(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> CMat {
    let u = unitary(rng, n);
    let d = CMat::from_fn(n, n, |i, k| {
        if i == k {
            let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            c(s * rng.gen_range(lo..hi), 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    &u * d * u.adjoint()
}

/// A well-conditioned invertible matrix, `U diag(d) V` with `d ∈ [1/2, 2]`.
pub fn well_conditioned(rng: &mut impl Rng, n: usize) -> CMat {
    let u = unitary(rng, n);
    let v = unitary(rng, n);
    let d = CMat::from_fn(n, n, |i, k| if i == k { c(rng.gen_range(0.5..2.0), 0.0) } else { c(0.0, 0.0) });
    u * d * v
}

/// Skew-adjoint invertible `J = iH`.
pub fn skew_form(rng: &mut impl Rng, n: usize) -> CMat {
    invertible_hermitian(rng, n, 0.5, 2.0) * c(0.0, 1.0)
}

/// A matrix whose eigenvalues satisfy `|Re λ| ≥ margin`, with both half-planes
/// occupied once `n ≥ 2`.
pub fn matrix_with_margin(rng: &mut impl Rng, n: usize, margin: f64) -> CMat {
    let s = well_conditioned(rng, n);
    let s_inv = s.clone().try_inverse().expect("well-conditioned");
    let d = CMat::from_fn(n, n, |i, k| {
        if i != k {
            return c(0.0, 0.0);
        }
        let sign = match i {
            0 => 1.0,
            1 => -1.0,
            _ if rng.gen_bool(0.5) => 1.0,
            _ => -1.0,
        };
        c(sign * (margin + rng.gen_range(0.0..2.0)), rng.gen_range(-2.0..2.0))
    });
    s * d * s_inv
}

fn smoothstep(x: f64) -> f64 {
    x * x * (3.0 - 2.0 * x)
}

fn smoothstep_derivative(x: f64) -> f64 {
    6.0 * x * (1.0 - x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolShape {
    /// Constant `J` and `K`.
    Constant,
    /// Constant `J`, `K(x) = K₀ + xK₁ + cos(πx)K₂`.
    VariableK,
    /// Additionally `J(x) = J₀ + s(x)J₁` with a smoothstep `s`, so `J′`
    /// vanishes at both endpoints.
    Variable,
}

/// A random symmetric system `J(∂ + B)` with `B = J⁻¹(K + J′/2)`.
pub fn symmetric_system(rng: &mut impl Rng, n: usize, shape: SymbolShape) -> Result<IntervalSystem> {
    let j0 = skew_form(rng, n);
    let k0 = hermitian(rng, n);
    if shape == SymbolShape::Constant {
        return IntervalSystem::symmetric(j0, k0);
    }
    let k1 = hermitian(rng, n);
    let k2 = hermitian(rng, n);
    let k = Coefficient::variable(n, move |x| {
        &k0 + &k1 * c(x, 0.0) + &k2 * c((std::f64::consts::PI * x).cos(), 0.0)
    });
    if shape == SymbolShape::VariableK {
        return IntervalSystem::symmetric(j0, k);
    }
    let h1 = hermitian(rng, n);
    let j1 = &h1 * c(0.0, 0.4 / op_norm(&h1).max(1e-12));
    let (ja, jb) = (j0.clone(), j1.clone());
    let j = Coefficient::variable(n, move |x| &ja + &jb * c(smoothstep(x), 0.0))
        .with_derivative(move |x| &j1 * c(smoothstep_derivative(x), 0.0));
    IntervalSystem::symmetric(j, k)
}

/// A random Lagrangian subspace, the graph of a random unitary.
pub fn lagrangian(rng: &mut impl Rng, space: &HermitianSymplecticSpace) -> Result<LagrangianFrame> {
    let m = space.lagrangian_dim()?;
    space.lagrangian_from_unitary(&unitary(rng, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigenvalues;

    #[test]
    fn generators_are_reproducible_and_well_formed() {
        let a = complex_matrix(&mut rng(7), 3, 3);
        let b = complex_matrix(&mut rng(7), 3, 3);
        assert_eq!(a, b);
        let mut r = rng(1);
        let u = unitary(&mut r, 4);
        assert!(op_norm(&(u.adjoint() * &u - CMat::identity(4, 4))) < 1e-12);
        let m = matrix_with_margin(&mut r, 4, 0.3);
        let ev = eigenvalues(&m);
        assert!(ev.iter().all(|z| z.re.abs() >= 0.3 - 1e-9));
        assert!(ev.iter().any(|z| z.re > 0.0) && ev.iter().any(|z| z.re < 0.0));
        let sys = symmetric_system(&mut r, 2, SymbolShape::Variable).unwrap();
        assert!(sys.is_symmetric());
        assert!(op_norm(&sys.dj(0.0)) < 1e-12 && op_norm(&sys.dj(1.0)) < 1e-12);
    }
}
