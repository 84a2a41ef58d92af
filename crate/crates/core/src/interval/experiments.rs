use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::boundary::{cauchy_data_space, green_form};
use super::spectrum::{find_eigenvalues_with, LocatorOptions, RealizedOperator};
use super::{Coefficient, IntervalSystem};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::spectral_flow::{spectral_flow_with, EigenFamily, FlowOptions, FlowResult};
use crate::symplectic::{
    maslov_index, symplectic_exp, HermitianSymplecticSpace, LagrangianFrame, LagrangianPath,
    MaslovOptions, MaslovResult,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearFit {
    /// Smallest `L` with `value ≤ L·ε` on every sample.
    pub constant: f64,
    /// Least-squares slope of `log value` against `log ε`.
    pub slope: f64,
    pub samples: Vec<(f64, f64)>,
}

pub fn fit_linear_modulus(samples: &[(f64, f64)]) -> LinearFit {
    let constant = samples
        .iter()
        .map(|&(e, v)| v / e)
        .fold(0.0, f64::max);
    let logs: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.0 > 0.0 && s.1 > 0.0)
        .map(|&(e, v)| (e.ln(), v.ln()))
        .collect();
    let slope = if logs.len() < 2 {
        f64::NAN
    } else {
        let m = logs.len() as f64;
        let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
        let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    LinearFit {
        constant,
        slope,
        samples: samples.to_vec(),
    }
}

/// `exp(εΩ⁻¹H) D` for hermitian `H`; stays Lagrangian.
pub fn rotate_domain(
    space: &HermitianSymplecticSpace,
    domain: &LagrangianFrame,
    h: &CMat,
    eps: f64,
) -> Result<LagrangianFrame> {
    let s = symplectic_exp(space, &(h * C64::new(eps, 0.0)))?;
    domain.transformed(&s)
}

/// The family `A + C_t` with `C_t(x) = Σ_{k≥1} t^k C_k(x)`.
#[derive(Clone, Debug)]
pub struct OperatorPath {
    pub base: IntervalSystem,
    pub terms: Vec<Coefficient>,
    pub range: (f64, f64),
    pub samples: usize,
}

impl OperatorPath {
    pub fn new(
        base: IntervalSystem,
        terms: Vec<Coefficient>,
        range: (f64, f64),
        samples: usize,
    ) -> Result<Self> {
        if !(range.1 > range.0) || samples < 2 {
            return Err(Error::InvalidArgument(format!(
                "operator path needs t0 < t1 and at least two samples, got {range:?} with {samples}"
            )));
        }
        if let Some(bad) = terms.iter().find(|c| c.dim() != base.dim()) {
            return Err(Error::DimensionMismatch(format!(
                "perturbation term is {}x{} for fiber dimension {}",
                bad.dim(),
                bad.dim(),
                base.dim()
            )));
        }
        Ok(OperatorPath {
            base,
            terms,
            range,
            samples,
        })
    }

    pub fn system_at(&self, t: f64) -> Result<IntervalSystem> {
        if self.terms.is_empty() {
            return Ok(self.base.clone());
        }
        let constant = self.terms.iter().all(|c| c.is_constant());
        let scaled: Vec<Coefficient> = self
            .terms
            .iter()
            .enumerate()
            .map(|(k, c)| c.scaled(t.powi(k as i32 + 1)))
            .collect();
        let n = self.base.dim();
        let total = if constant {
            Coefficient::Constant(
                scaled
                    .iter()
                    .fold(CMat::zeros(n, n), |acc, c| acc + c.eval(0.0)),
            )
        } else {
            Coefficient::variable(n, move |x| {
                scaled.iter().fold(CMat::zeros(n, n), |acc, c| acc + c.eval(x))
            })
        };
        self.base.perturbed(&total)
    }
}

#[derive(Debug, Clone)]
pub struct SfMasOptions {
    pub locator: LocatorOptions,
    pub flow: FlowOptions,
    pub maslov: MaslovOptions,
    /// Spectral window `Λ`; chosen from the spectrum at `t0` when absent.
    pub window: Option<f64>,
}

impl Default for SfMasOptions {
    fn default() -> Self {
        SfMasOptions {
            locator: LocatorOptions {
                grid: 128,
                ..LocatorOptions::default()
            },
            flow: FlowOptions::default(),
            maslov: MaslovOptions::default(),
            window: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SfMasResult {
    pub sf: i64,
    pub mas: i64,
    pub agree: bool,
    pub flow: FlowResult,
    pub maslov: MaslovResult,
}

/// Spectral flow of `(A + C_t)_D` against the Maslov index of
/// `t ↦ CD(A + C_t)` relative to `D`.
pub fn sf_mas_experiment(
    path: &OperatorPath,
    domain: &LagrangianFrame,
    opts: &SfMasOptions,
) -> Result<SfMasResult> {
    let space = green_form(&path.base)?;
    let family = EigenFamily::locator(path.range, opts.window, |t, lam| {
        let op = RealizedOperator::new(path.system_at(t)?, domain.clone())?;
        let ev = find_eigenvalues_with(&op, (-lam, lam), &opts.locator)?;
        Ok(ev
            .iter()
            .flat_map(|e| std::iter::repeat(C64::new(e.value, 0.0)).take(e.multiplicity))
            .collect())
    });
    let flow_opts = FlowOptions {
        initial_grid: path.samples,
        ..opts.flow.clone()
    };
    let flow = spectral_flow_with(&family, &flow_opts)?;

    let lpath = LagrangianPath::from_fn(
        space,
        domain.clone(),
        path.range,
        path.samples,
        |t| cauchy_data_space(&path.system_at(t)?, C64::new(0.0, 0.0)),
    )?;
    let maslov = maslov_index(&lpath, &opts.maslov)?;
    Ok(SfMasResult {
        sf: flow.flow,
        mas: maslov.index,
        agree: flow.flow == maslov.index,
        flow,
        maslov,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real};
    use std::f64::consts::TAU;

    #[test]
    fn periodic_family_has_sf_equal_mas_one() {
        let base = IntervalSystem::new(CMat::from_element(1, 1, c(0.0, -1.0)), CMat::zeros(1, 1)).unwrap();
        let path = OperatorPath::new(base, vec![CMat::from_element(1, 1, real(1.0)).into()], (0.0, TAU), 16).unwrap();
        let d = LagrangianFrame::new(CMat::from_column_slice(2, 1, &[real(1.0), real(1.0)])).unwrap();
        let r = sf_mas_experiment(&path, &d, &SfMasOptions::default()).unwrap();
        assert_eq!((r.sf, r.mas, r.agree), (1, 1, true));
    }

    #[test]
    fn constant_family_has_zero_flow() {
        // -i d/dx + 1 keeps its eigenvalues 2πk + 1 away from zero
        let base = IntervalSystem::new(CMat::from_element(1, 1, c(0.0, -1.0)), CMat::from_element(1, 1, c(0.0, 1.0))).unwrap();
        let path = OperatorPath::new(base, vec![], (0.5, 1.5), 8).unwrap();
        let d = LagrangianFrame::new(CMat::from_column_slice(2, 1, &[real(1.0), real(1.0)])).unwrap();
        let r = sf_mas_experiment(&path, &d, &SfMasOptions::default()).unwrap();
        assert_eq!((r.sf, r.mas), (0, 0));
    }

    #[test]
    fn linear_fit_recovers_slope() {
        let s: Vec<(f64, f64)> = [1e-1, 1e-2, 1e-3].iter().map(|&e| (e, 3.0 * e)).collect();
        let f = fit_linear_modulus(&s);
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!((f.constant - 3.0).abs() < 1e-12);
    }
}
