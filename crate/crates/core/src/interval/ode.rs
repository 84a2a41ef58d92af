use num_complex::Complex64 as C64;

use super::IntervalSystem;
use crate::error::{Error, Result};
use crate::linalg::{c, expm, identity, CMat};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Local error tolerance per step, relative to `max(1, ‖Φ‖)`.
    pub tol: f64,
    pub max_steps: usize,
    /// Smallest step, relative to the integration length.
    pub min_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            tol: 1e-10,
            max_steps: 100_000,
            min_step: 1e-12,
        }
    }
}

/// `Φ_λ(x1, x0)` for `u′ = (λJ⁻¹W - B)u`.
pub fn fundamental_solution(sys: &IntervalSystem, lambda: C64, x0: f64, x1: f64) -> Result<CMat> {
    fundamental_solution_with(sys, lambda, x0, x1, &OdeOptions::default())
}

/// Constant coefficients use the matrix exponential; otherwise adaptive RK4
/// with step doubling, falling back to a fourth-order Magnus integrator when
/// step control fails.
pub fn fundamental_solution_with(
    sys: &IntervalSystem,
    lambda: C64,
    x0: f64,
    x1: f64,
    opts: &OdeOptions,
) -> Result<CMat> {
    check_range(x0, x1)?;
    if x0 == x1 {
        return Ok(identity(sys.dim()));
    }
    if sys.is_constant() {
        return Ok(expm(&(sys.generator(lambda, 0.0)? * c(x1 - x0, 0.0))));
    }
    match integrate(sys, lambda, x0, x1, opts, rk4_step) {
        Err(Error::StepControl { x, step }) => {
            log::warn!("RK4 step control failed at x = {x} (step {step:e}); retrying with Magnus");
            integrate(sys, lambda, x0, x1, opts, magnus_step)
        }
        other => other,
    }
}

/// The fourth-order Magnus integrator on its own.
pub fn magnus_solution(
    sys: &IntervalSystem,
    lambda: C64,
    x0: f64,
    x1: f64,
    opts: &OdeOptions,
) -> Result<CMat> {
    check_range(x0, x1)?;
    if x0 == x1 {
        return Ok(identity(sys.dim()));
    }
    integrate(sys, lambda, x0, x1, opts, magnus_step)
}

fn check_range(x0: f64, x1: f64) -> Result<()> {
    let ok = |x: f64| (0.0..=1.0).contains(&x);
    if !ok(x0) || !ok(x1) {
        return Err(Error::InvalidArgument(format!(
            "propagation endpoints must lie in [0, 1], got {x0} and {x1}"
        )));
    }
    Ok(())
}

type Step = fn(&IntervalSystem, C64, f64, f64, &CMat) -> Result<CMat>;

fn rk4_step(sys: &IntervalSystem, lambda: C64, x: f64, h: f64, y: &CMat) -> Result<CMat> {
    let hc = c(h, 0.0);
    let half = c(0.5 * h, 0.0);
    let g0 = sys.generator(lambda, x)?;
    let gm = sys.generator(lambda, x + 0.5 * h)?;
    let g1 = sys.generator(lambda, x + h)?;
    let k1 = &g0 * y;
    let k2 = &gm * (y + &k1 * half);
    let k3 = &gm * (y + &k2 * half);
    let k4 = &g1 * (y + &k3 * hc);
    Ok(y + (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0))
}

fn magnus_step(sys: &IntervalSystem, lambda: C64, x: f64, h: f64, y: &CMat) -> Result<CMat> {
    let d = 3.0_f64.sqrt() / 6.0;
    let a1 = sys.generator(lambda, x + (0.5 - d) * h)?;
    let a2 = sys.generator(lambda, x + (0.5 + d) * h)?;
    let comm = &a2 * &a1 - &a1 * &a2;
    let omega = (&a1 + &a2) * c(0.5 * h, 0.0) + comm * c(3.0_f64.sqrt() / 12.0 * h * h, 0.0);
    Ok(expm(&omega) * y)
}

fn integrate(
    sys: &IntervalSystem,
    lambda: C64,
    x0: f64,
    x1: f64,
    opts: &OdeOptions,
    step: Step,
) -> Result<CMat> {
    let span = x1 - x0;
    let dir = span.signum();
    let min_h = opts.min_step * span.abs();
    let mut h = span.abs().min(1.0 / 16.0);
    let mut x = x0;
    let mut y = identity(sys.dim());
    let mut steps = 0;
    while dir * (x1 - x) > 0.0 {
        if steps >= opts.max_steps {
            return Err(Error::StepControl { x, step: h });
        }
        steps += 1;
        let hh = h.min(dir * (x1 - x));
        let sh = dir * hh;
        let big = step(sys, lambda, x, sh, &y)?;
        let mid = step(sys, lambda, x, 0.5 * sh, &y)?;
        let small = step(sys, lambda, x + 0.5 * sh, 0.5 * sh, &mid)?;
        let diff = &small - &big;
        let scale = small.norm().max(1.0);
        let err = diff.norm() / (15.0 * scale);
        if !err.is_finite() {
            return Err(Error::StepControl { x, step: hh });
        }
        if err <= opts.tol {
            y = &small + diff * c(1.0 / 15.0, 0.0);
            x = if (dir * (x1 - (x + sh))).abs() < 1e-15 { x1 } else { x + sh };
            let grow = if err == 0.0 { 4.0 } else { (0.9 * (opts.tol / err).powf(0.2)).clamp(0.2, 4.0) };
            h = hh * grow;
        } else {
            h = hh * (0.9 * (opts.tol / err).powf(0.2)).clamp(0.1, 0.5);
            if h < min_h {
                return Err(Error::StepControl { x, step: h });
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::super::Coefficient;
    use super::*;
    use crate::linalg::{op_norm, real};

    fn variable_system() -> IntervalSystem {
        let j = Coefficient::variable(2, |x| {
            CMat::from_row_slice(2, 2, &[c(0.0, 1.0 + x), real(-0.5), real(0.5), c(0.0, -1.0 - x * x)])
        });
        let k = Coefficient::variable(2, |x| {
            CMat::from_row_slice(2, 2, &[real((3.0 * x).sin()), c(0.2, x), c(0.2, -x), real(x * x - 1.0)])
        });
        IntervalSystem::symmetric(j, k).unwrap()
    }

    #[test]
    fn constant_coefficients_give_exponential() {
        let b = CMat::from_row_slice(2, 2, &[real(0.3), real(1.0), real(-1.0), real(0.2)]);
        let s = IntervalSystem::new(identity(2), b.clone()).unwrap();
        let phi = fundamental_solution(&s, c(0.0, 0.0), 0.0, 1.0).unwrap();
        assert!(op_norm(&(phi - expm(&(-b)))) < 1e-13);
    }

    #[test]
    fn cocycle_and_identity() {
        let s = variable_system();
        let lam = c(0.7, 0.0);
        let full = fundamental_solution(&s, lam, 0.0, 1.0).unwrap();
        let a = fundamental_solution(&s, lam, 0.0, 0.5).unwrap();
        let b = fundamental_solution(&s, lam, 0.5, 1.0).unwrap();
        assert!(op_norm(&(&full - b * a)) < 1e-9);
        let back = fundamental_solution(&s, lam, 1.0, 0.0).unwrap();
        assert!(op_norm(&(back * &full - identity(2))) < 1e-9);
        assert!(op_norm(&(fundamental_solution(&s, lam, 0.4, 0.4).unwrap() - identity(2))) == 0.0);
    }

    #[test]
    fn liouville_formula() {
        let s = variable_system();
        let phi = fundamental_solution(&s, c(0.0, 0.0), 0.0, 1.0).unwrap();
        // Simpson quadrature of tr B
        let m = 2000;
        let h = 1.0 / m as f64;
        let mut integral = C64::new(0.0, 0.0);
        for k in 0..=m {
            let w = if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            integral += s.b(k as f64 * h).trace() * w;
        }
        integral *= h / 3.0;
        let want = (-integral).exp();
        assert!((phi.determinant() - want).norm() < 1e-8 * want.norm());
    }

    #[test]
    fn magnus_agrees_with_rk4() {
        let s = variable_system();
        let lam = c(-1.5, 0.0);
        let r = fundamental_solution(&s, lam, 0.0, 1.0).unwrap();
        let m = magnus_solution(&s, lam, 0.0, 1.0, &OdeOptions::default()).unwrap();
        assert!(op_norm(&(r - m)) < 1e-8);
    }

    #[test]
    fn out_of_range_is_rejected() {
        let s = variable_system();
        assert!(fundamental_solution(&s, c(0.0, 0.0), 0.0, 1.5).is_err());
    }
}
