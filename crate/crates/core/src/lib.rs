//! Exact compositional Bayesian inference over finite spaces.
//!
//! Channels are stochastic matrices between named finite [`Space`]s. Their
//! Bayesian inverses depend on a prior, so they live in state-indexed fibres
//! ([`StatChannel`]). Pairing a channel with such a state-dependent inverse
//! gives a [`BayesLens`]; composing exact lenses reproduces the inverse of the
//! composite channel, which the [`harness`] checks on random instances.

pub mod channel;
pub mod density;
pub mod dist;
pub mod dsl;
pub mod error;
pub mod harness;
pub mod inversion;
pub mod lens;
pub mod random;
pub mod scalar;
pub mod space;

pub use channel::{push_state, seq_compose, Channel, Structural};
pub use density::{
    almost_inverse, density_pattern, effect_seq, invert_via_density, DensityChannel, Effect,
    Measure,
};
pub use dist::{convex_mix, kleisli_extend, Dist};
pub use error::{Error, Result};
pub use inversion::{
    agree_on_support, almost_equal, invert, joint, satisfies_bayes_relation, stat_compose,
    stat_pullback, InversionResult, StatChannel,
};
pub use harness::{Format, Report, RunConfig};
pub use lens::{exact_lens, lens_compose, lens_identity, verify_composition, BayesLens, Law, LawReport};
pub use scalar::{NumericMode, Rational, Scalar, TAU_CMP, TAU_NORM};
pub use space::Space;
