use super::{QsimError, Result, DEFAULT_DIM_CAP, NORM_TOL};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub type C = Complex64;

/// Ordered named tensor factors. The first factor is the most significant
/// digit of a basis index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    factors: Vec<(String, usize)>,
}

impl RegisterLayout {
    pub fn new<S: Into<String>>(factors: Vec<(S, usize)>) -> Result<Self> {
        Self::with_cap(factors, DEFAULT_DIM_CAP)
    }

    pub fn with_cap<S: Into<String>>(factors: Vec<(S, usize)>, cap: usize) -> Result<Self> {
        let factors: Vec<(String, usize)> = factors.into_iter().map(|(n, d)| (n.into(), d)).collect();
        if factors.is_empty() || factors.iter().any(|(_, d)| *d == 0) {
            return Err(QsimError::Invalid("every factor needs a positive dimension".into()));
        }
        let mut dim = 1usize;
        for (_, d) in &factors {
            dim = dim.saturating_mul(*d);
            if dim > cap {
                return Err(QsimError::CapExceeded { dim, cap });
            }
        }
        Ok(RegisterLayout { factors })
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|(n, _)| n == name)
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        assert_eq!(digits.len(), self.factors.len());
        digits.iter().zip(&self.factors).fold(0, |acc, (&x, (_, d))| {
            assert!(x < *d);
            acc * d + x
        })
    }

    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, (_, d)) in out.iter_mut().zip(&self.factors).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amps: DVector<C>,
    pub layout: Option<Arc<RegisterLayout>>,
}

impl StateVector {
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut amps = DVector::zeros(dim);
        amps[i] = C::new(1.0, 0.0);
        StateVector { amps, layout: None }
    }

    /// Accepts amplitudes that are already normalized.
    pub fn new(amps: DVector<C>) -> Result<Self> {
        let s = StateVector { amps, layout: None };
        s.check_norm()?;
        Ok(s)
    }

    /// Normalizes; fails on a zero vector.
    pub fn from_unnormalized(amps: DVector<C>) -> Result<Self> {
        let n = amps.norm();
        if n * n < super::DEGENERATE_PROB {
            return Err(QsimError::Degenerate(n * n));
        }
        Ok(StateVector { amps: amps / C::new(n, 0.0), layout: None })
    }

    /// Haar-random pure state from normalized complex Gaussians.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let amps = random_gaussian_vector(dim, rng);
        Self::from_unnormalized(amps).expect("gaussian vector is nonzero")
    }

    pub fn with_layout(mut self, layout: Arc<RegisterLayout>) -> Result<Self> {
        if layout.dim() != self.dim() {
            return Err(QsimError::DimensionMismatch { expected: layout.dim(), got: self.dim() });
        }
        self.layout = Some(layout);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn check_norm(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(QsimError::NotNormalized(n));
        }
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C {
        self.amps.dotc(&other.amps)
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

pub fn random_gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<C> {
    DVector::from_fn(dim, |_, _| C::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// `R`'s diagonal pushed back into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C> {
    let g = DMatrix::from_fn(dim, dim, |_, _| C::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random rank-`rank` orthogonal projector.
pub fn random_projector<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DMatrix<C> {
    let u = random_unitary(dim, rng);
    let cols = u.columns(0, rank);
    cols * cols.adjoint()
}

/// Projector `Σ_i |q_i⟩⟨q_i|` onto the span of orthonormal columns.
pub fn projector_from_columns(q: &DMatrix<C>) -> DMatrix<C> {
    q * q.adjoint()
}
