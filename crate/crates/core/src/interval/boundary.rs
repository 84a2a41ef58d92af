use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::experiments::{fit_linear_modulus, LinearFit};
use super::{fundamental_solution, Coefficient, IntervalSystem, SYMMETRY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, hermitian_eigen, hstack, identity, inverse, op_norm, sigma_min, vstack, CMat, CVec,
};
use crate::sectorial::{complement_projection, sectorial_projection, TangentialMatrix};
use crate::symplectic::{HermitianSymplecticSpace, LagrangianFrame};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Boundary form `Ω = blockdiag(-J(0), J(1))` on traces `(u(0), u(1))`, so that
/// `⟨Au, v⟩ - ⟨u, Av⟩ = ρv* Ω ρu`.
pub fn green_form(sys: &IntervalSystem) -> Result<HermitianSymplecticSpace> {
    let defect = sys.symmetry_defect();
    if defect > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(defect));
    }
    HermitianSymplecticSpace::new(block_diag(&(-sys.j(0.0)), &sys.j(1.0)))
}

/// Traces `{(ξ, Φ_λ(1,0)ξ)}` of solutions of `(A - λW)u = 0`.
pub fn cauchy_data_space(sys: &IntervalSystem, lambda: C64) -> Result<LagrangianFrame> {
    let phi = fundamental_solution(sys, lambda, 0.0, 1.0)?;
    LagrangianFrame::new(vstack(&identity(sys.dim()), &phi))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct UcpCertificate {
    pub holds: bool,
    /// Smallest singular value of `Φ₀(1,0)`.
    pub margin: f64,
    pub ill_conditioned: bool,
}

/// Solutions of `Au = 0` vanishing at an endpoint vanish identically, so weak
/// UCP always holds here; the certificate records how close the propagator
/// comes to losing it.
pub fn weak_ucp_check(sys: &IntervalSystem) -> Result<UcpCertificate> {
    let phi = fundamental_solution(sys, ZERO, 0.0, 1.0)?;
    let margin = sigma_min(&phi);
    Ok(UcpCertificate {
        holds: margin > 0.0,
        margin,
        ill_conditioned: margin < 1e-8,
    })
}

/// Transmission coupling `T = (T0, T1)` of the invertible double; the endpoint
/// `x = 1` carries the inward normal `-∂ₓ`, so its symbol is `-J(1)`.
#[derive(Debug, Clone)]
pub struct DoubleCoupling {
    pub t0: CMat,
    pub t1: CMat,
}

impl DoubleCoupling {
    /// `T = (J₀*)⁻¹` at both endpoints.
    pub fn default_for(sys: &IntervalSystem) -> Result<Self> {
        let t0 = inverse(&sys.j(0.0).adjoint(), "J(0)*")?;
        let t1 = -inverse(&sys.j(1.0).adjoint(), "J(1)*")?;
        Ok(DoubleCoupling { t0, t1 })
    }

    pub fn new(sys: &IntervalSystem, t0: CMat, t1: CMat) -> Result<Self> {
        let n = sys.dim();
        if t0.shape() != (n, n) || t1.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "coupling blocks must be {n}x{n}"
            )));
        }
        let coupling = DoubleCoupling { t0, t1 };
        coupling.check(sys)?;
        Ok(coupling)
    }

    /// Positivity of the hermitian part of `J₀*T` at both endpoints.
    pub fn check(&self, sys: &IntervalSystem) -> Result<()> {
        for (endpoint, j0, t) in [(0.0, sys.j(0.0), &self.t0), (1.0, -sys.j(1.0), &self.t1)] {
            let p = j0.adjoint() * t;
            let h = (&p + p.adjoint()) * C64::new(0.5, 0.0);
            let min = hermitian_eigen(&h).0[0];
            if !(min > 0.0) {
                return Err(Error::CouplingNotPositive {
                    endpoint,
                    min_eigenvalue: min,
                });
            }
        }
        Ok(())
    }

    pub fn t_sigma_inverse(&self) -> Result<CMat> {
        Ok(block_diag(
            &inverse(&self.t0, "coupling T0")?,
            &inverse(&self.t1, "coupling T1")?,
        ))
    }
}

#[derive(Debug, Clone)]
pub struct DoubleKernel {
    pub m: CMat,
    pub sigma_min: f64,
}

/// Relative level below which `M(T)` counts as singular.
const DOUBLE_TOL: f64 = 1e-12;

fn propagators(sys: &IntervalSystem) -> Result<(CMat, CMat)> {
    let phi = fundamental_solution(sys, ZERO, 0.0, 1.0)?;
    let phi_t = fundamental_solution(&sys.transpose()?, ZERO, 0.0, 1.0)?;
    Ok((phi, phi_t))
}

fn kernel_matrix(phi: &CMat, phi_t: &CMat, t: &DoubleCoupling) -> Result<DoubleKernel> {
    let a = phi_t * &t.t0;
    let b = &t.t1 * phi;
    let scale = op_norm(&a).max(op_norm(&b)).max(f64::MIN_POSITIVE);
    let m = a - b;
    let sigma_min = sigma_min(&m);
    if sigma_min <= DOUBLE_TOL * scale {
        return Err(Error::DoubleDegenerate(sigma_min));
    }
    Ok(DoubleKernel { m, sigma_min })
}

/// `M(T) = Φ_{Aᵗ}(1,0)T0 - T1Φ_A(1,0)`; the double is invertible iff `M(T)` is.
pub fn double_kernel_matrix(sys: &IntervalSystem, t: &DoubleCoupling) -> Result<DoubleKernel> {
    t.check(sys)?;
    let (phi, phi_t) = propagators(sys)?;
    kernel_matrix(&phi, &phi_t, t)
}

/// Poisson operator of the double: boundary data `g` is split as
/// `g = ρe - T⁻¹ρf` with `Ae = 0`, `Aᵗf = 0`.
#[derive(Debug, Clone)]
pub struct PoissonOperator {
    phi: CMat,
    phi_t: CMat,
    coupling: DoubleCoupling,
    m_inv: CMat,
    n: usize,
}

impl PoissonOperator {
    pub fn new(sys: &IntervalSystem, coupling: &DoubleCoupling) -> Result<Self> {
        coupling.check(sys)?;
        let (phi, phi_t) = propagators(sys)?;
        let kernel = kernel_matrix(&phi, &phi_t, coupling)?;
        Ok(PoissonOperator {
            m_inv: inverse(&kernel.m, "double kernel matrix")?,
            phi,
            phi_t,
            coupling: coupling.clone(),
            n: sys.dim(),
        })
    }

    /// Initial values `(e(0), f(0))` of the two halves.
    pub fn initial_values(&self, g: &CVec) -> Result<(CVec, CVec)> {
        let n = self.n;
        if g.len() != 2 * n {
            return Err(Error::DimensionMismatch(format!(
                "boundary data of length {} for fiber dimension {n}",
                g.len()
            )));
        }
        let g0 = g.rows(0, n).into_owned();
        let g1 = g.rows(n, n).into_owned();
        let xi = &self.m_inv * (&self.phi_t * (&self.coupling.t0 * &g0) - &self.coupling.t1 * g1);
        let eta = &self.coupling.t0 * (&xi - g0);
        Ok((xi, eta))
    }

    /// Traces `(ρe, ρf)`.
    pub fn traces(&self, g: &CVec) -> Result<(CVec, CVec)> {
        let (xi, eta) = self.initial_values(g)?;
        let re = CVec::from_iterator(2 * self.n, xi.iter().copied().chain((&self.phi * &xi).iter().copied()));
        let rf = CVec::from_iterator(
            2 * self.n,
            eta.iter().copied().chain((&self.phi_t * &eta).iter().copied()),
        );
        Ok((re, rf))
    }

    /// `C₊ = ρ₊K₊` and `C₋ = -T⁻¹ρ₋K₋` as matrices.
    pub fn projections(&self) -> Result<CalderonPair> {
        let n = self.n;
        let t_inv = self.coupling.t_sigma_inverse()?;
        let mut c_plus = CMat::zeros(2 * n, 2 * n);
        let mut c_minus = CMat::zeros(2 * n, 2 * n);
        for k in 0..2 * n {
            let mut g = CVec::zeros(2 * n);
            g[k] = C64::new(1.0, 0.0);
            let (re, rf) = self.traces(&g)?;
            c_plus.set_column(k, &re);
            c_minus.set_column(k, &(-(&t_inv * rf)));
        }
        Ok(CalderonPair { c_plus, c_minus })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalderonMethod {
    /// Projection onto the Cauchy data along the coupled transpose data.
    Complement,
    /// Traces of the Poisson operator of the double.
    Jump,
}

#[derive(Debug, Clone)]
pub struct CalderonPair {
    pub c_plus: CMat,
    pub c_minus: CMat,
}

pub fn calderon_projections(
    sys: &IntervalSystem,
    coupling: &DoubleCoupling,
    method: CalderonMethod,
) -> Result<CalderonPair> {
    match method {
        CalderonMethod::Jump => PoissonOperator::new(sys, coupling)?.projections(),
        CalderonMethod::Complement => {
            coupling.check(sys)?;
            let n = sys.dim();
            let (phi, phi_t) = propagators(sys)?;
            kernel_matrix(&phi, &phi_t, coupling)?;
            let plus = vstack(&identity(n), &phi);
            let t0_inv = inverse(&coupling.t0, "coupling T0")?;
            let t1_inv = inverse(&coupling.t1, "coupling T1")?;
            let minus = vstack(&t0_inv, &(t1_inv * phi_t));
            let basis = hstack(&plus, &minus);
            let smin = sigma_min(&basis);
            if smin <= 1e-12 * op_norm(&basis) {
                return Err(Error::NotTransversal(smin));
            }
            let basis_inv = inverse(&basis, "Cauchy data basis")?;
            let upper = block_diag(&identity(n), &CMat::zeros(n, n));
            let lower = block_diag(&CMat::zeros(n, n), &identity(n));
            Ok(CalderonPair {
                c_plus: &basis * upper * &basis_inv,
                c_minus: &basis * lower * &basis_inv,
            })
        }
    }
}

pub fn calderon_projection(
    sys: &IntervalSystem,
    coupling: &DoubleCoupling,
    method: CalderonMethod,
) -> Result<CMat> {
    Ok(calderon_projections(sys, coupling, method)?.c_plus)
}

/// Frozen-coefficient comparison projector `blockdiag(P₊(B(0)), P₋(B(1)))`.
pub fn comparison_projector(sys: &IntervalSystem) -> Result<CMat> {
    let b0 = TangentialMatrix::new(sys.b(0.0))?;
    let b1 = TangentialMatrix::new(sys.b(1.0))?;
    Ok(block_diag(
        &sectorial_projection(&b0, 0.0)?,
        &complement_projection(&b1)?,
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TangentialComparison {
    /// `‖C₊ - blockdiag(P₊(B(0)), P₋(B(1)))‖`.
    pub deviation: f64,
    pub margin0: f64,
    pub margin1: f64,
    /// Fit of `ε ↦ ‖C₊(A + εC) - C₊(A)‖`, when a direction was supplied.
    pub modulus: Option<LinearFit>,
}

pub fn calderon_vs_tangential(
    sys: &IntervalSystem,
    coupling: &DoubleCoupling,
    direction: Option<&Coefficient>,
    eps: &[f64],
) -> Result<TangentialComparison> {
    let b0 = TangentialMatrix::new(sys.b(0.0))?;
    let b1 = TangentialMatrix::new(sys.b(1.0))?;
    let cmp = comparison_projector(sys)?;
    let c0 = calderon_projection(sys, coupling, CalderonMethod::Complement)?;
    let modulus = match direction {
        None => None,
        Some(dir) => {
            let mut samples = Vec::with_capacity(eps.len());
            for &e in eps {
                let pert = sys.perturbed(&dir.scaled(e))?;
                let ce = calderon_projection(&pert, coupling, CalderonMethod::Complement)?;
                samples.push((e, op_norm(&(ce - &c0))));
            }
            Some(fit_linear_modulus(&samples))
        }
    };
    Ok(TangentialComparison {
        deviation: op_norm(&(&c0 - cmp)),
        margin0: b0.margin(),
        margin1: b1.margin(),
        modulus,
    })
}
