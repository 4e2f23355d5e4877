//! Matrix-free operators. Everything applies to a vector without forming a
//! `D x D` matrix unless asked to.

use super::state::{random_gaussian_vector, C};
use super::{QsimError, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::sync::Arc;

/// Largest dimension `to_dense` will materialize.
pub const DENSE_CAP: usize = 1 << 12;

#[derive(Debug, Clone)]
pub enum UnitaryOp {
    Identity(usize),
    Dense(DMatrix<C>),
    /// `|i⟩ ↦ |perm[i]⟩`.
    Permutation(Vec<usize>),
    /// Diagonal phases.
    Phases(Vec<C>),
    /// `I − 2|u⟩⟨u|` for a unit vector `u`.
    Householder(DVector<C>),
    /// Applied first to last.
    Sequence(Vec<UnitaryOp>),
    /// `I_left ⊗ op ⊗ I_right`.
    Local { left: usize, op: Box<UnitaryOp>, right: usize },
    /// `Σ_c |c⟩⟨c| ⊗ U_c`, control on the most significant factor.
    Controlled(Vec<UnitaryOp>),
}

impl UnitaryOp {
    /// Householder reflection exchanging unit vectors `a` and `b`. Needs
    /// `⟨a|b⟩` real; identity when `a = b`.
    pub fn swap_reflection(a: &DVector<C>, b: &DVector<C>) -> Result<Self> {
        let overlap = a.dotc(b);
        if overlap.im.abs() > 1e-12 {
            return Err(QsimError::Invalid("reflection needs a real overlap".into()));
        }
        let diff = a - b;
        let n = diff.norm();
        if n < 1e-14 {
            return Ok(UnitaryOp::Identity(a.len()));
        }
        Ok(UnitaryOp::Householder(diff / C::new(n, 0.0)))
    }

    pub fn dim(&self) -> usize {
        match self {
            UnitaryOp::Identity(d) => *d,
            UnitaryOp::Dense(m) => m.nrows(),
            UnitaryOp::Permutation(p) => p.len(),
            UnitaryOp::Phases(p) => p.len(),
            UnitaryOp::Householder(u) => u.len(),
            UnitaryOp::Sequence(ops) => ops.first().map_or(0, |o| o.dim()),
            UnitaryOp::Local { left, op, right } => left * op.dim() * right,
            UnitaryOp::Controlled(us) => us.len() * us.first().map_or(0, |u| u.dim()),
        }
    }

    pub fn apply(&self, v: &DVector<C>) -> DVector<C> {
        self.run(v, false)
    }

    pub fn apply_adjoint(&self, v: &DVector<C>) -> DVector<C> {
        self.run(v, true)
    }

    fn run(&self, v: &DVector<C>, adj: bool) -> DVector<C> {
        debug_assert_eq!(v.len(), self.dim());
        match self {
            UnitaryOp::Identity(_) => v.clone(),
            UnitaryOp::Dense(m) => {
                if adj {
                    m.ad_mul(v)
                } else {
                    m * v
                }
            }
            UnitaryOp::Permutation(p) => {
                let mut out = DVector::zeros(v.len());
                for (i, &j) in p.iter().enumerate() {
                    if adj {
                        out[i] = v[j];
                    } else {
                        out[j] = v[i];
                    }
                }
                out
            }
            UnitaryOp::Phases(ph) => DVector::from_fn(v.len(), |i, _| {
                if adj {
                    ph[i].conj() * v[i]
                } else {
                    ph[i] * v[i]
                }
            }),
            UnitaryOp::Householder(u) => {
                let c = u.dotc(v) * 2.0;
                v - u * c
            }
            UnitaryOp::Sequence(ops) => {
                let mut x = v.clone();
                if adj {
                    for o in ops.iter().rev() {
                        x = o.run(&x, true);
                    }
                } else {
                    for o in ops {
                        x = o.run(&x, false);
                    }
                }
                x
            }
            UnitaryOp::Local { left, op, right } => {
                map_local(v, *left, op.dim(), *right, |x| op.run(x, adj))
            }
            UnitaryOp::Controlled(us) => {
                let d = us[0].dim();
                let mut out = DVector::zeros(v.len());
                for (c, u) in us.iter().enumerate() {
                    let block = v.rows(c * d, d).into_owned();
                    out.rows_mut(c * d, d).copy_from(&u.run(&block, adj));
                }
                out
            }
        }
    }

    pub fn adjoint(&self) -> UnitaryOp {
        match self {
            UnitaryOp::Identity(d) => UnitaryOp::Identity(*d),
            UnitaryOp::Dense(m) => UnitaryOp::Dense(m.adjoint()),
            UnitaryOp::Permutation(p) => {
                let mut inv = vec![0; p.len()];
                for (i, &j) in p.iter().enumerate() {
                    inv[j] = i;
                }
                UnitaryOp::Permutation(inv)
            }
            UnitaryOp::Phases(p) => UnitaryOp::Phases(p.iter().map(|c| c.conj()).collect()),
            UnitaryOp::Householder(u) => UnitaryOp::Householder(u.clone()),
            UnitaryOp::Sequence(ops) => UnitaryOp::Sequence(ops.iter().rev().map(|o| o.adjoint()).collect()),
            UnitaryOp::Local { left, op, right } => {
                UnitaryOp::Local { left: *left, op: Box::new(op.adjoint()), right: *right }
            }
            UnitaryOp::Controlled(us) => UnitaryOp::Controlled(us.iter().map(|u| u.adjoint()).collect()),
        }
    }

    pub fn to_dense(&self) -> Result<DMatrix<C>> {
        dense_from(self.dim(), |v| self.apply(v))
    }

    /// `max ‖U†U x − x‖` over random probes.
    pub fn unitarity_residual<R: Rng + ?Sized>(&self, probes: usize, rng: &mut R) -> f64 {
        (0..probes)
            .map(|_| {
                let x = random_gaussian_vector(self.dim(), rng);
                let x = &x / C::new(x.norm(), 0.0);
                (self.apply_adjoint(&self.apply(&x)) - &x).norm()
            })
            .fold(0.0, f64::max)
    }
}

fn map_local(
    v: &DVector<C>,
    left: usize,
    mid: usize,
    right: usize,
    f: impl Fn(&DVector<C>) -> DVector<C>,
) -> DVector<C> {
    let mut out = DVector::zeros(v.len());
    let mut buf = DVector::zeros(mid);
    for a in 0..left {
        for c in 0..right {
            for b in 0..mid {
                buf[b] = v[(a * mid + b) * right + c];
            }
            let y = f(&buf);
            for b in 0..mid {
                out[(a * mid + b) * right + c] = y[b];
            }
        }
    }
    out
}

fn dense_from(dim: usize, f: impl Fn(&DVector<C>) -> DVector<C>) -> Result<DMatrix<C>> {
    if dim > DENSE_CAP {
        return Err(QsimError::CapExceeded { dim, cap: DENSE_CAP });
    }
    let mut m = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut e = DVector::zeros(dim);
        e[j] = C::new(1.0, 0.0);
        m.set_column(j, &f(&e));
    }
    Ok(m)
}

/// A projector given by how it acts on vectors.
#[derive(Clone)]
pub enum StructuredProjector {
    /// Computational-basis predicate, evaluated once into a mask.
    Mask(Arc<Vec<bool>>),
    Dense(DMatrix<C>),
    /// Explicit sparse matrix as `(row, col, value)` triplets.
    Sparse { dim: usize, entries: Arc<Vec<(usize, usize, C)>> },
    /// `QQ†` for orthonormal columns `Q`.
    Span(DMatrix<C>),
    /// `U† Π U`.
    Conjugated { u: Arc<UnitaryOp>, inner: Box<StructuredProjector> },
    /// `Σ_c |c⟩⟨c| ⊗ Π_c`, control on the most significant factor.
    Controlled(Vec<StructuredProjector>),
    /// `I_left ⊗ Π ⊗ I_right`.
    Local { left: usize, inner: Box<StructuredProjector>, right: usize },
    /// `I − Π`.
    Complement(Box<StructuredProjector>),
}

impl std::fmt::Debug for StructuredProjector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self {
            StructuredProjector::Mask(_) => "Mask",
            StructuredProjector::Dense(_) => "Dense",
            StructuredProjector::Sparse { .. } => "Sparse",
            StructuredProjector::Span(_) => "Span",
            StructuredProjector::Conjugated { .. } => "Conjugated",
            StructuredProjector::Controlled(_) => "Controlled",
            StructuredProjector::Local { .. } => "Local",
            StructuredProjector::Complement(_) => "Complement",
        };
        write!(f, "{kind}(dim {})", self.dim())
    }
}

impl StructuredProjector {
    pub fn identity(dim: usize) -> Self {
        StructuredProjector::Mask(Arc::new(vec![true; dim]))
    }

    pub fn zero(dim: usize) -> Self {
        StructuredProjector::Mask(Arc::new(vec![false; dim]))
    }

    pub fn predicate(dim: usize, f: impl Fn(usize) -> bool) -> Self {
        StructuredProjector::Mask(Arc::new((0..dim).map(f).collect()))
    }

    pub fn basis_state(dim: usize, i: usize) -> Self {
        Self::predicate(dim, |j| j == i)
    }

    /// `|v⟩⟨v|/‖v‖²`.
    pub fn rank_one(v: &DVector<C>) -> Self {
        let n = v.norm();
        StructuredProjector::Span(DMatrix::from_column_slice(v.len(), 1, (v / C::new(n, 0.0)).as_slice()))
    }

    pub fn conjugated(u: Arc<UnitaryOp>, inner: StructuredProjector) -> Self {
        StructuredProjector::Conjugated { u, inner: Box::new(inner) }
    }

    pub fn complement(self) -> Self {
        StructuredProjector::Complement(Box::new(self))
    }

    pub fn dim(&self) -> usize {
        match self {
            StructuredProjector::Mask(m) => m.len(),
            StructuredProjector::Dense(m) => m.nrows(),
            StructuredProjector::Sparse { dim, .. } => *dim,
            StructuredProjector::Span(q) => q.nrows(),
            StructuredProjector::Conjugated { inner, .. } => inner.dim(),
            StructuredProjector::Controlled(ps) => ps.len() * ps.first().map_or(0, |p| p.dim()),
            StructuredProjector::Local { left, inner, right } => left * inner.dim() * right,
            StructuredProjector::Complement(p) => p.dim(),
        }
    }

    pub fn apply(&self, v: &DVector<C>) -> DVector<C> {
        debug_assert_eq!(v.len(), self.dim());
        match self {
            StructuredProjector::Mask(m) => {
                DVector::from_fn(v.len(), |i, _| if m[i] { v[i] } else { C::new(0.0, 0.0) })
            }
            StructuredProjector::Dense(m) => m * v,
            StructuredProjector::Sparse { dim, entries } => {
                let mut out = DVector::zeros(*dim);
                for &(i, j, x) in entries.iter() {
                    out[i] += x * v[j];
                }
                out
            }
            StructuredProjector::Span(q) => q * q.ad_mul(v),
            StructuredProjector::Conjugated { u, inner } => u.apply_adjoint(&inner.apply(&u.apply(v))),
            StructuredProjector::Controlled(ps) => {
                let d = ps[0].dim();
                let mut out = DVector::zeros(v.len());
                for (c, p) in ps.iter().enumerate() {
                    let block = v.rows(c * d, d).into_owned();
                    out.rows_mut(c * d, d).copy_from(&p.apply(&block));
                }
                out
            }
            StructuredProjector::Local { left, inner, right } => {
                map_local(v, *left, inner.dim(), *right, |x| inner.apply(x))
            }
            StructuredProjector::Complement(p) => v - p.apply(v),
        }
    }

    /// `‖Πψ‖²`.
    pub fn probability(&self, v: &DVector<C>) -> f64 {
        self.apply(v).norm_squared()
    }

    pub fn to_dense(&self) -> Result<DMatrix<C>> {
        match self {
            StructuredProjector::Dense(m) => Ok(m.clone()),
            _ => dense_from(self.dim(), |v| self.apply(v)),
        }
    }

    /// Largest idempotence and Hermiticity residuals over random probes:
    /// `‖Π(Πx) − Πx‖` and `|⟨y|Πx⟩ − ⟨Πy|x⟩|`.
    pub fn residuals<R: Rng + ?Sized>(&self, probes: usize, rng: &mut R) -> (f64, f64) {
        let mut idem: f64 = 0.0;
        let mut herm: f64 = 0.0;
        for _ in 0..probes {
            let x = random_gaussian_vector(self.dim(), rng);
            let x = &x / C::new(x.norm(), 0.0);
            let y = random_gaussian_vector(self.dim(), rng);
            let y = &y / C::new(y.norm(), 0.0);
            let px = self.apply(&x);
            idem = idem.max((self.apply(&px) - &px).norm());
            herm = herm.max((y.dotc(&px) - self.apply(&y).dotc(&x)).norm());
        }
        (idem, herm)
    }
}
