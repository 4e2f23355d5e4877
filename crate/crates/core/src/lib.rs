//! Kilian's succinct argument and a small-dimension simulator of the
//! quantum rewinding tools used to prove it secure.

pub mod classical_extractor;
pub mod experiments;
pub mod hash_commitment;
pub mod kilian_protocol;
pub mod pcp;
pub mod quantum_sim;
pub mod rewinding;
