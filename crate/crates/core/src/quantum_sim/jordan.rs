//! Jordan decomposition of two projectors into jointly invariant 1- and
//! 2-dimensional subspaces.

use super::ops::StructuredProjector;
use super::state::C;
use super::{QsimError, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Largest dimension handled by the dense routine.
pub const JORDAN_DIM_CAP: usize = 1 << 10;

/// Eigenvalues of `Π_A Π_B Π_A` closer than this are reported as one `p`.
pub const CLUSTER_TOL: f64 = 1e-7;

/// Eigenvalues this close to 0 or 1 are read as exact intersections.
const EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct JordanSubspace {
    pub p: f64,
    pub dim: usize,
    pub v1: Option<DVector<C>>,
    pub v0: Option<DVector<C>>,
    pub w1: Option<DVector<C>>,
    pub w0: Option<DVector<C>>,
}

impl JordanSubspace {
    /// Orthonormal basis of the subspace.
    pub fn basis(&self) -> Vec<&DVector<C>> {
        if self.dim == 2 {
            vec![self.v1.as_ref().unwrap(), self.v0.as_ref().unwrap()]
        } else {
            vec![self.v1.as_ref().or(self.v0.as_ref()).expect("1-dim subspace has a vector")]
        }
    }

    pub fn projector(&self) -> DMatrix<C> {
        let d = self.basis()[0].len();
        self.basis().into_iter().fold(DMatrix::zeros(d, d), |acc, v| acc + v * v.adjoint())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct JordanResiduals {
    pub reconstruction: f64,
    pub commutation: f64,
    pub eigenvalue: f64,
    pub action: f64,
    pub phase: f64,
}

impl JordanResiduals {
    pub fn max(&self) -> f64 {
        [self.reconstruction, self.commutation, self.eigenvalue, self.action, self.phase]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct JordanDecomposition {
    pub subspaces: Vec<JordanSubspace>,
    pub residuals: JordanResiduals,
}

impl JordanDecomposition {
    /// Weight of `ψ` on each subspace.
    pub fn weights(&self, psi: &DVector<C>) -> Vec<f64> {
        self.subspaces
            .iter()
            .map(|s| s.basis().iter().map(|v| v.dotc(psi).norm_sqr()).sum())
            .collect()
    }
}

fn hermitize(m: DMatrix<C>) -> DMatrix<C> {
    (&m + m.adjoint()) * C::new(0.5, 0.0)
}

/// Orthonormal columns spanning the eigenvalue-near-1 space of a projector.
fn image_basis(p: &DMatrix<C>) -> (DMatrix<C>, DMatrix<C>) {
    let eig = hermitize(p.clone()).symmetric_eigen();
    let (mut one, mut zero) = (Vec::new(), Vec::new());
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 0.5 {
            one.push(eig.eigenvectors.column(i).into_owned());
        } else {
            zero.push(eig.eigenvectors.column(i).into_owned());
        }
    }
    let d = p.nrows();
    let cols = |v: Vec<DVector<C>>| if v.is_empty() { DMatrix::zeros(d, 0) } else { DMatrix::from_columns(&v) };
    (cols(one), cols(zero))
}

/// Sorted eigenpairs with eigenvalues inside a cluster replaced by the
/// cluster mean.
fn clustered_eigen(m: DMatrix<C>) -> Vec<(f64, DVector<C>)> {
    let eig = hermitize(m).symmetric_eigen();
    let mut pairs: Vec<(f64, DVector<C>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| (l.clamp(0.0, 1.0), eig.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].0 - pairs[end - 1].0 <= CLUSTER_TOL {
            end += 1;
        }
        let mean = pairs[start..end].iter().map(|p| p.0).sum::<f64>() / (end - start) as f64;
        for p in &mut pairs[start..end] {
            p.0 = mean;
        }
        start = end;
    }
    pairs
}

pub fn jordan_decompose(a: &StructuredProjector, b: &StructuredProjector, tol: f64) -> Result<JordanDecomposition> {
    let d = a.dim();
    if b.dim() != d {
        return Err(QsimError::DimensionMismatch { expected: d, got: b.dim() });
    }
    if d > JORDAN_DIM_CAP {
        return Err(QsimError::CapExceeded { dim: d, cap: JORDAN_DIM_CAP });
    }
    let am = hermitize(a.to_dense()?);
    let bm = hermitize(b.to_dense()?);
    let (va1, _) = image_basis(&am);

    let mut subspaces = Vec::new();
    let mut v0_sum = DMatrix::<C>::zeros(d, d);
    if va1.ncols() > 0 {
        let m = va1.adjoint() * &bm * &va1;
        for (p, y) in clustered_eigen(m) {
            let v1 = &va1 * y;
            if p >= 1.0 - EDGE_TOL {
                subspaces.push(JordanSubspace { p: 1.0, dim: 1, w1: Some(v1.clone()), v1: Some(v1), v0: None, w0: None });
            } else if p <= EDGE_TOL {
                subspaces.push(JordanSubspace { p: 0.0, dim: 1, w0: Some(v1.clone()), v1: Some(v1), v0: None, w1: None });
            } else {
                let bv = &bm * &v1;
                let w1 = &bv / C::new(bv.norm(), 0.0);
                let (sp, sq) = (p.sqrt(), (1.0 - p).sqrt());
                let v0 = (&w1 - &v1 * C::new(sp, 0.0)) / C::new(sq, 0.0);
                let w0 = (&v1 - &w1 * C::new(sp, 0.0)) / C::new(sq, 0.0);
                v0_sum += &v0 * v0.adjoint();
                subspaces.push(JordanSubspace { p, dim: 2, v1: Some(v1), v0: Some(v0), w1: Some(w1), w0: Some(w0) });
            }
        }
    }

    // What is left lies in ker A and is invariant under B.
    let rest = hermitize(DMatrix::identity(d, d) - &am - v0_sum);
    let (q, _) = image_basis(&rest);
    if q.ncols() > 0 {
        let n = hermitize(q.adjoint() * &bm * &q);
        let eig = n.symmetric_eigen();
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            let x = &q * eig.eigenvectors.column(i);
            if l > 0.5 {
                // ker A ∩ img B: exactly one projector acts as the identity.
                subspaces.push(JordanSubspace { p: 0.0, dim: 1, v0: Some(x.clone()), w1: Some(x), v1: None, w0: None });
            } else {
                subspaces.push(JordanSubspace { p: 1.0, dim: 1, v0: Some(x.clone()), w0: Some(x), v1: None, w1: None });
            }
        }
    }

    let total: usize = subspaces.iter().map(|s| s.dim).sum();
    if total != d {
        return Err(QsimError::DecompositionFailed {
            what: format!("dimension count {total} of {d}"),
            residual: (total as f64 - d as f64).abs(),
        });
    }
    let residuals = residuals(&am, &bm, &subspaces);
    let worst = [
        ("reconstruction", residuals.reconstruction),
        ("commutation", residuals.commutation),
        ("eigenvalue", residuals.eigenvalue),
        ("action", residuals.action),
        ("phase", residuals.phase),
    ]
    .into_iter()
    .max_by(|x, y| x.1.total_cmp(&y.1))
    .unwrap();
    if worst.1 > tol {
        return Err(QsimError::DecompositionFailed { what: worst.0.into(), residual: worst.1 });
    }
    Ok(JordanDecomposition { subspaces, residuals })
}

fn residuals(a: &DMatrix<C>, b: &DMatrix<C>, subs: &[JordanSubspace]) -> JordanResiduals {
    let d = a.nrows();
    let mut r = JordanResiduals::default();
    let mut sum = DMatrix::<C>::zeros(d, d);
    let one = C::new(1.0, 0.0);
    for s in subs {
        let pj = s.projector();
        r.commutation = r.commutation.max((&pj * a - a * &pj).norm()).max((&pj * b - b * &pj).norm());
        sum += pj;
        let fix = |m: &DMatrix<C>, v: &Option<DVector<C>>, keep: bool| {
            v.as_ref().map_or(0.0, |v| if keep { (m * v - v).norm() } else { (m * v).norm() })
        };
        r.action = r
            .action
            .max(fix(a, &s.v1, true))
            .max(fix(a, &s.v0, false))
            .max(fix(b, &s.w1, true))
            .max(fix(b, &s.w0, false));
        if let (Some(v1), Some(w1)) = (&s.v1, &s.w1) {
            r.eigenvalue = r.eigenvalue.max((v1.dotc(w1).norm_sqr() - s.p).abs());
        }
        if s.dim == 2 {
            let (v1, w1, w0) = (s.v1.as_ref().unwrap(), s.w1.as_ref().unwrap(), s.w0.as_ref().unwrap());
            let rhs = w1 * C::new(s.p.sqrt(), 0.0) + w0 * C::new((1.0 - s.p).sqrt(), 0.0);
            r.phase = r.phase.max((v1 - rhs).norm());
        }
    }
    r.reconstruction = (sum - DMatrix::identity(d, d) * one).norm();
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_zero_and_plus() {
        let a = StructuredProjector::basis_state(2, 0);
        let h = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let b = StructuredProjector::rank_one(&DVector::from_vec(vec![h, h]));
        let j = jordan_decompose(&a, &b, 1e-8).unwrap();
        assert_eq!(j.subspaces.len(), 1);
        assert_eq!(j.subspaces[0].dim, 2);
        assert!((j.subspaces[0].p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn one_sided_identity_is_zero() {
        // A = I, B = |0><0| on C^2: |0> has both identity (p=1), |1> only A (p=0).
        let a = StructuredProjector::identity(2);
        let b = StructuredProjector::basis_state(2, 0);
        let j = jordan_decompose(&a, &b, 1e-8).unwrap();
        let mut ps: Vec<f64> = j.subspaces.iter().map(|s| s.p).collect();
        ps.sort_by(f64::total_cmp);
        assert_eq!(ps, vec![0.0, 1.0]);
    }
}
