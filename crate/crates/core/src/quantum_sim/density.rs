//! Dense density matrices: the exact oracle path for small dimensions.

use super::ops::StructuredProjector;
use super::state::{StateVector, C};
use super::{QsimError, Result, DEGENERATE_PROB};
use nalgebra::DMatrix;

/// Largest dimension accepted for a density operator.
pub const DENSITY_DIM_CAP: usize = 1 << 8;

const TRACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOp {
    pub m: DMatrix<C>,
}

impl DensityOp {
    pub fn new(m: DMatrix<C>) -> Result<Self> {
        let d = DensityOp { m };
        d.validate()?;
        Ok(d)
    }

    pub fn from_pure(psi: &StateVector) -> Result<Self> {
        if psi.dim() > DENSITY_DIM_CAP {
            return Err(QsimError::CapExceeded { dim: psi.dim(), cap: DENSITY_DIM_CAP });
        }
        Ok(DensityOp { m: &psi.amps * psi.amps.adjoint() })
    }

    /// `Σ_i w_i |ψ_i⟩⟨ψ_i|` with weights summing to one.
    pub fn mixture(parts: &[(f64, StateVector)]) -> Result<Self> {
        let d = parts.first().ok_or_else(|| QsimError::Invalid("empty mixture".into()))?.1.dim();
        let mut m = DMatrix::zeros(d, d);
        for (w, s) in parts {
            m += &s.amps * s.amps.adjoint() * C::new(*w, 0.0);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d > DENSITY_DIM_CAP {
            return Err(QsimError::CapExceeded { dim: d, cap: DENSITY_DIM_CAP });
        }
        if (self.trace() - 1.0).abs() > TRACE_TOL {
            return Err(QsimError::Invalid(format!("trace {}", self.trace())));
        }
        let herm = (&self.m - self.m.adjoint()).norm();
        if herm > TRACE_TOL {
            return Err(QsimError::Invalid(format!("not Hermitian: {herm:e}")));
        }
        let min = self.hermitian().symmetric_eigen().eigenvalues.min();
        if min < -TRACE_TOL {
            return Err(QsimError::Invalid(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    fn hermitian(&self) -> DMatrix<C> {
        (&self.m + self.m.adjoint()) * C::new(0.5, 0.0)
    }

    /// `Tr(Π ρ)`.
    pub fn probability(&self, pi: &DMatrix<C>) -> f64 {
        (pi * &self.m).trace().re
    }

    pub fn conjugate(&self, u: &DMatrix<C>) -> DensityOp {
        DensityOp { m: u * &self.m * u.adjoint() }
    }

    /// Non-selective binary measurement `ΠρΠ + (I−Π)ρ(I−Π)`.
    pub fn dephase(&self, pi: &DMatrix<C>) -> DensityOp {
        let q = DMatrix::identity(self.dim(), self.dim()) - pi;
        DensityOp { m: pi * &self.m * pi + &q * &self.m * &q }
    }

    /// `(Tr(Πρ), ΠρΠ/Tr(Πρ))`.
    pub fn postselect(&self, pi: &DMatrix<C>) -> Result<(f64, DensityOp)> {
        let prob = self.probability(pi);
        if prob < DEGENERATE_PROB {
            return Err(QsimError::Degenerate(prob));
        }
        Ok((prob, DensityOp { m: pi * &self.m * pi / C::new(prob, 0.0) }))
    }
}

/// `½ ‖ρ − σ‖₁`.
pub fn trace_distance(a: &DensityOp, b: &DensityOp) -> f64 {
    let diff = &a.m - &b.m;
    let h = (&diff + diff.adjoint()) * C::new(0.5, 0.0);
    0.5 * h.symmetric_eigen().eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}

/// Returns `δ = 1 − Tr(Πρ)` and the trace distance between `ρ` and its
/// post-selection on `Π`. The gentle-measurement bound says the distance is
/// below `2√δ`.
pub fn gentle_check(pi: &StructuredProjector, rho: &DensityOp) -> Result<(f64, f64)> {
    let p = pi.to_dense()?;
    let (prob, post) = rho.postselect(&p)?;
    let delta = (1.0 - prob).max(0.0);
    Ok((delta, trace_distance(rho, &post)))
}
