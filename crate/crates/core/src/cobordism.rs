//! Signature obstruction: the signature of `iJ(0)` restricted to the
//! generalized eigenspaces of `B(0)` belonging to purely imaginary
//! eigenvalues. It vanishes whenever the boundary data bounds a symmetric
//! operator.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::IntervalSystem;
use crate::linalg::{block_diag, c, eigenvalues, hermitian_eigen, inverse, op_norm, sigma_min, CMat, OrderedSchur};

/// Real parts below this (relative to `max(1, ‖B‖)`) are zero.
pub const IMAGINARY_TOL: f64 = 1e-10;
/// Real parts at or above this are off the axis; anything between is ambiguous.
pub const OFF_AXIS_TOL: f64 = 1e-8;
/// Restricted-form eigenvalues below this are degenerate.
pub const FORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Extracted from a symmetric system on the interval.
    Bounding,
    /// Supplied directly.
    Free,
}

#[derive(Debug, Clone)]
pub struct BoundarySymbolPair {
    pub j0: CMat,
    pub b0: CMat,
    pub provenance: Provenance,
}

impl BoundarySymbolPair {
    pub fn new(j0: CMat, b0: CMat) -> Result<Self> {
        let n = j0.nrows();
        if !j0.is_square() || b0.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "j0 is {}x{} and b0 is {}x{}",
                j0.nrows(),
                j0.ncols(),
                b0.nrows(),
                b0.ncols()
            )));
        }
        let scale = op_norm(&j0).max(1.0);
        let defect = op_norm(&(&j0 + j0.adjoint()));
        if defect > 1e-10 * scale {
            return Err(Error::NotSkewAdjoint(defect));
        }
        if sigma_min(&j0) <= 1e-10 * scale {
            return Err(Error::SingularForm);
        }
        Ok(BoundarySymbolPair {
            j0,
            b0,
            provenance: Provenance::Free,
        })
    }

    /// Both endpoints of a symmetric system as one pair; the endpoint `x = 1`
    /// enters with the orientation sign, `(-J(1), -B(1))`. The system must be
    /// in product form at the boundary (`J′` vanishing at both endpoints).
    pub fn from_system(sys: &IntervalSystem) -> Result<Self> {
        let defect = sys.symmetry_defect();
        if defect > crate::interval::SYMMETRY_TOL {
            return Err(Error::NotSymmetric(defect));
        }
        for x in [0.0, 1.0] {
            let dj = op_norm(&sys.dj(x));
            if dj > 1e-8 * op_norm(&sys.j(x)).max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "J is not constant in the normal direction at x = {x} (|J'| = {dj:e})"
                )));
            }
        }
        let j0 = block_diag(&sys.j(0.0), &(-sys.j(1.0)));
        let b0 = block_diag(&sys.b(0.0), &(-sys.b(1.0)));
        let mut pair = BoundarySymbolPair::new(j0, b0)?;
        pair.provenance = Provenance::Bounding;
        Ok(pair)
    }

    pub fn dim(&self) -> usize {
        self.j0.nrows()
    }

    /// `(S*j0S, S⁻¹b0S)`.
    pub fn transformed(&self, s: &CMat) -> Result<Self> {
        let s_inv = inverse(s, "congruence")?;
        Ok(BoundarySymbolPair {
            j0: s.adjoint() * &self.j0 * s,
            b0: s_inv * &self.b0 * s,
            provenance: self.provenance,
        })
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let provenance = if self.provenance == Provenance::Bounding && other.provenance == Provenance::Bounding {
            Provenance::Bounding
        } else {
            Provenance::Free
        };
        BoundarySymbolPair {
            j0: block_diag(&self.j0, &other.j0),
            b0: block_diag(&self.b0, &other.b0),
            provenance,
        }
    }
}

/// Orthonormal basis of the sum of generalized eigenspaces of `b0` for purely
/// imaginary eigenvalues (possibly with zero columns).
pub fn imaginary_generalized_eigenspace(b0: &CMat) -> Result<CMat> {
    let scale = op_norm(b0).max(1.0);
    for z in eigenvalues(b0) {
        let re = z.re.abs() / scale;
        if re > IMAGINARY_TOL && re < OFF_AXIS_TOL {
            return Err(Error::AmbiguousClassification(z));
        }
    }
    let schur = OrderedSchur::new(b0, |z| z.re.abs() / scale <= IMAGINARY_TOL);
    Ok(schur.leading_basis())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Obstruction {
    pub signature: i64,
    /// Dimension of the imaginary generalized eigenspace.
    pub dimension: usize,
    /// Restricted-form eigenvalues excluded as degenerate.
    pub degenerate: usize,
}

pub fn signature_obstruction(pair: &BoundarySymbolPair) -> Result<Obstruction> {
    let v = imaginary_generalized_eigenspace(&pair.b0)?;
    if v.ncols() == 0 {
        return Ok(Obstruction {
            signature: 0,
            dimension: 0,
            degenerate: 0,
        });
    }
    let form = v.adjoint() * (&pair.j0 * c(0.0, 1.0)) * &v;
    let (vals, _) = hermitian_eigen(&form);
    let degenerate = vals.iter().filter(|e| e.abs() < FORM_TOL).count();
    if degenerate > 0 {
        warn!("{degenerate} degenerate directions excluded from the obstruction: {vals:?}");
    }
    let signature = vals
        .iter()
        .filter(|e| e.abs() >= FORM_TOL)
        .map(|&e| if e > 0.0 { 1 } else { -1 })
        .sum();
    Ok(Obstruction {
        signature,
        dimension: v.ncols(),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{real, CVec};

    fn diag(v: &[num_complex::Complex64]) -> CMat {
        CMat::from_diagonal(&CVec::from_vec(v.to_vec()))
    }

    #[test]
    fn eigenspace_examples() {
        assert_eq!(imaginary_generalized_eigenspace(&diag(&[real(1.0), real(-1.0)])).unwrap().ncols(), 0);
        let v = imaginary_generalized_eigenspace(&diag(&[c(0.0, 1.0), c(0.0, -1.0), real(2.0)])).unwrap();
        assert_eq!(v.ncols(), 2);
        assert!(v.row(2).norm() < 1e-14);
        let nil = CMat::from_row_slice(2, 2, &[real(0.0), real(1.0), real(0.0), real(0.0)]);
        assert_eq!(imaginary_generalized_eigenspace(&nil).unwrap().ncols(), 2);
        assert!(matches!(
            imaginary_generalized_eigenspace(&diag(&[c(1e-9, 1.0), real(1.0)])),
            Err(Error::AmbiguousClassification(_))
        ));
    }

    #[test]
    fn obstruction_examples() {
        let j = CMat::from_row_slice(2, 2, &[real(0.0), real(1.0), real(-1.0), real(0.0)]);
        let p = BoundarySymbolPair::new(j.clone(), CMat::zeros(2, 2)).unwrap();
        assert_eq!(signature_obstruction(&p).unwrap().signature, 0);
        assert_eq!(signature_obstruction(&p).unwrap().dimension, 2);
        let p = BoundarySymbolPair::new(j, diag(&[real(1.0), real(-1.0)])).unwrap();
        assert_eq!(signature_obstruction(&p).unwrap().dimension, 0);
        // a single endpoint need not bound: iJ = diag(-1) on the kernel of B
        let p = BoundarySymbolPair::new(diag(&[c(0.0, 1.0)]), CMat::zeros(1, 1)).unwrap();
        assert_eq!(signature_obstruction(&p).unwrap().signature, -1);
    }

    #[test]
    fn interval_endpoints_bound() {
        let j = diag(&[c(0.0, 1.0), c(0.0, -1.0), c(0.0, 2.0)]);
        let k = CMat::from_row_slice(
            3,
            3,
            &[real(0.0), c(0.3, 0.1), real(0.0), c(0.3, -0.1), real(0.5), real(1.0), real(0.0), real(1.0), real(0.0)],
        );
        let sys = IntervalSystem::symmetric(j, k).unwrap();
        let pair = BoundarySymbolPair::from_system(&sys).unwrap();
        assert_eq!(pair.provenance, Provenance::Bounding);
        assert_eq!(signature_obstruction(&pair).unwrap().signature, 0);
    }

    #[test]
    fn invalid_pairs_are_rejected() {
        assert!(BoundarySymbolPair::new(CMat::identity(2, 2), CMat::zeros(2, 2)).is_err());
        assert!(BoundarySymbolPair::new(CMat::zeros(2, 2), CMat::zeros(2, 2)).is_err());
        let nonsym = IntervalSystem::new(CMat::identity(1, 1), CMat::identity(1, 1)).unwrap();
        assert!(BoundarySymbolPair::from_system(&nonsym).is_err());
    }
}
