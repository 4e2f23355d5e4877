use super::ops::StructuredProjector;
use super::state::{StateVector, C};
use super::trace::TraceLog;
use super::{QsimError, Result, DEGENERATE_PROB};
use rand::Rng;

/// Binary projective measurement `{Π, I − Π}`. Outcome `true` has
/// probability `‖Πψ‖²`; the post-state is the renormalized projection.
pub fn measure_binary<R: Rng + ?Sized>(
    pi: &StructuredProjector,
    psi: &StateVector,
    rng: &mut R,
) -> Result<(bool, StateVector)> {
    if pi.dim() != psi.dim() {
        return Err(QsimError::DimensionMismatch { expected: pi.dim(), got: psi.dim() });
    }
    let proj = pi.apply(&psi.amps);
    let p1 = proj.norm_squared().clamp(0.0, 1.0);
    let bit = rng.random::<f64>() < p1;
    let (branch, prob) = if bit { (proj, p1) } else { (&psi.amps - proj, 1.0 - p1) };
    if prob < DEGENERATE_PROB {
        return Err(QsimError::Degenerate(prob));
    }
    let amps = branch / C::new(prob.sqrt(), 0.0);
    Ok((bit, StateVector { amps, layout: psi.layout.clone() }))
}

pub fn measure_binary_traced<R: Rng + ?Sized>(
    pi: &StructuredProjector,
    psi: &StateVector,
    label: &str,
    log: &mut TraceLog,
    rng: &mut R,
) -> Result<(bool, StateVector)> {
    let (b, s) = measure_binary(pi, psi, rng)?;
    log.record(label, b, s.norm());
    Ok((b, s))
}

/// Uniform `r`, then the binary measurement `Π_r`.
pub fn mixm<R: Rng + ?Sized>(
    family: &[StructuredProjector],
    psi: &StateVector,
    rng: &mut R,
) -> Result<(usize, bool, StateVector)> {
    if family.is_empty() {
        return Err(QsimError::Invalid("empty measurement family".into()));
    }
    let r = rng.random_range(0..family.len());
    let (b, s) = measure_binary(&family[r], psi, rng)?;
    Ok((r, b, s))
}

/// Applies `A, B, A, B, …` for `t` measurements starting from `ψ ∈ img(B)`.
/// Returns the outcomes and the final state.
pub fn alternating_outcomes<R: Rng + ?Sized>(
    a: &StructuredProjector,
    b: &StructuredProjector,
    psi: &StateVector,
    t: usize,
    rng: &mut R,
) -> Result<(Vec<bool>, StateVector)> {
    alternating_inner(a, b, psi, t, None, rng)
}

pub fn alternating_outcomes_traced<R: Rng + ?Sized>(
    a: &StructuredProjector,
    b: &StructuredProjector,
    psi: &StateVector,
    t: usize,
    log: &mut TraceLog,
    rng: &mut R,
) -> Result<(Vec<bool>, StateVector)> {
    alternating_inner(a, b, psi, t, Some(log), rng)
}

fn alternating_inner<R: Rng + ?Sized>(
    a: &StructuredProjector,
    b: &StructuredProjector,
    psi: &StateVector,
    t: usize,
    mut log: Option<&mut TraceLog>,
    rng: &mut R,
) -> Result<(Vec<bool>, StateVector)> {
    let off = (b.apply(&psi.amps) - &psi.amps).norm();
    if off > 1e-8 {
        return Err(QsimError::Invalid(format!("initial state is not in img(B): residual {off:e}")));
    }
    let mut state = psi.clone();
    let mut out = Vec::with_capacity(t);
    for i in 0..t {
        let (pi, label) = if i % 2 == 0 { (a, "A") } else { (b, "B") };
        let (bit, s) = measure_binary(pi, &state, rng)?;
        if let Some(l) = log.as_deref_mut() {
            l.record(label, bit, s.norm());
        }
        out.push(bit);
        state = s;
    }
    Ok((out, state))
}
