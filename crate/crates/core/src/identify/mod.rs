//! Multipliers, identifiable-set constructions and their sampled verifiers.

pub mod construct;
pub mod demos;
pub mod descriptor;
pub mod multipliers;

pub use construct::{
    minimal_identifiable_face, minimal_identifiable_set, minimal_identifiable_set_composite, minimal_identifiable_set_f,
    sum_qualification, sum_rule_identifiable,
};
pub use descriptor::{Host, IdentifiableSet, PreimagePart, SupportFace};
pub use multipliers::{multiplier_polytope, multiplier_set_for_set, MultiplierSet};
pub mod verify;

pub use verify::{
    graph_reduction_verify, identifiability_verify, identifiability_verify_epigraph, instance_radius, minimal_for_host,
    necessity_verify, necessity_verify_epigraph, projection_representation, Verdict, VerifierReport, VerifyOptions, Witness,
};
pub use demos::{lorentz_demo, quartic_demo, LorentzReport, QuarticReport};
