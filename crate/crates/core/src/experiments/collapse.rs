//! The collapsing distinguisher on a toy hash with a known collision: a
//! superposition of two colliding inputs passes a projection back onto
//! itself with certainty, and with probability 1/2 once the input register
//! has been measured.

use super::{field_bool, par_seeds, run_err, Check, ExpError, Params, Result, Scenario};
use crate::hash_commitment::{bits_to_u64, random_bits, u64_to_bits, HashFamily, LEAF_TAG};
use crate::quantum_sim::state::C;
use crate::quantum_sim::{measure_binary, RegisterLayout, StateVector, StructuredProjector, UnitaryOp};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};
use std::ops::Range;
use std::sync::Arc;

pub const SCENARIO: Scenario = Scenario {
    name: "collapse",
    about: "collapsing experiment on a toy hash with a planted collision",
    default_seeds: (0, 10_000),
    defaults,
    run,
    summarize,
};

fn defaults() -> Value {
    json!({ "lambda": 8, "instance_seed": 5, "low": 0.48, "high": 0.52 })
}

/// Input and output registers with the state `(|x⟩ + |x′⟩)|h(x)⟩/√2`,
/// prepared by the unitary `|u⟩|y⟩ ↦ |u⟩|y ⊕ h(u)⟩`.
pub struct CollisionSetup {
    pub layout: Arc<RegisterLayout>,
    pub state: StateVector,
    pub input_bits: usize,
}

pub fn collision_state(fam: HashFamily, key: &[u8], x: u64, x2: u64) -> Result<CollisionSetup> {
    if x == x2 {
        return Err(ExpError::Run("inputs are equal, not a collision".into()));
    }
    let (ni, no) = (fam.input_bits(), fam.output_bits());
    let h = |u: u64| bits_to_u64(&fam.eval(key, LEAF_TAG, &u64_to_bits(u, ni)));
    if h(x) != h(x2) {
        return Err(ExpError::Run("inputs do not collide".into()));
    }
    let layout = Arc::new(RegisterLayout::new(vec![("input", 1usize << ni), ("output", 1usize << no)]).map_err(run_err)?);
    let perm: Vec<usize> = (0..layout.dim())
        .map(|i| {
            let d = layout.digits(i);
            layout.index(&[d[0], d[1] ^ h(d[0] as u64) as usize])
        })
        .collect();
    let mut amps = DVector::zeros(layout.dim());
    let a = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[layout.index(&[x as usize, 0])] = a;
    amps[layout.index(&[x2 as usize, 0])] = a;
    let amps = UnitaryOp::Permutation(perm).apply(&amps);
    let state = StateVector::new(amps).map_err(run_err)?.with_layout(layout.clone()).map_err(run_err)?;
    Ok(CollisionSetup { layout, state, input_bits: ni })
}

impl CollisionSetup {
    /// Computational-basis measurement of the input register, one bit at a
    /// time.
    pub fn measure_input<R: Rng + ?Sized>(&self, psi: &StateVector, rng: &mut R) -> Result<StateVector> {
        let mut s = psi.clone();
        let no = self.layout.dim() >> self.input_bits;
        for b in 0..self.input_bits {
            let pi = StructuredProjector::predicate(self.layout.dim(), |i| (i / no) >> b & 1 == 1);
            s = measure_binary(&pi, &s, rng).map_err(run_err)?.1;
        }
        Ok(s)
    }

    /// Measures `{|ψ⟩⟨ψ|, I − |ψ⟩⟨ψ|}` for the prepared `ψ`.
    pub fn test<R: Rng + ?Sized>(&self, psi: &StateVector, rng: &mut R) -> Result<bool> {
        let pi = StructuredProjector::rank_one(&self.state.amps);
        Ok(measure_binary(&pi, psi, rng).map_err(run_err)?.0)
    }
}

fn setup(p: &Params) -> Result<(CollisionSetup, u64, u64)> {
    let fam = HashFamily::toy(p.usize("lambda") as u16);
    fam.validate().map_err(run_err)?;
    let mut rng = ChaCha20Rng::seed_from_u64(p.usize("instance_seed") as u64);
    let key = random_bits(&mut rng, fam.key_bits());
    let x = random_bits(&mut rng, fam.input_bits());
    let x2 = fam.toy_collision(&key, LEAF_TAG, &x).ok_or_else(|| ExpError::Run("no collision".into()))?;
    let (x, x2) = (bits_to_u64(&x), bits_to_u64(&x2));
    Ok((collision_state(fam, &key, x, x2)?, x, x2))
}

fn run(p: &Params, seeds: Range<u64>) -> Result<Vec<Value>> {
    let (cs, x, x2) = setup(p)?;
    par_seeds(seeds, |seed| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let unmeasured = cs.test(&cs.state, &mut rng)?;
        let collapsed = cs.measure_input(&cs.state, &mut rng)?;
        let measured = cs.test(&collapsed, &mut rng)?;
        Ok(json!({ "seed": seed, "x": x, "x2": x2, "unmeasured": unmeasured, "measured": measured }))
    })
}

fn summarize(p: &Params, raw: &[Value]) -> Result<Vec<Check>> {
    let n = raw.len();
    let (mut u, mut m) = (0, 0);
    for r in raw {
        u += usize::from(field_bool(r, "unmeasured")?);
        m += usize::from(field_bool(r, "measured")?);
    }
    let fm = m as f64 / n as f64;
    Ok(vec![
        Check::exact_min("pass_rate_unmeasured", u as f64 / n as f64, 1.0, n),
        Check::exact_min("pass_rate_measured_low", fm, p.f64("low"), n),
        Check::exact_max("pass_rate_measured_high", fm, p.f64("high"), n),
    ])
}
