//! Design evaluation under uncertainty with user-assessed multiattribute utility.
//!
//! Objective expert rules (configuration and restriction) narrow a knowledge
//! base down to the technically feasible design alternatives. Each alternative
//! is then scored by the expected value of the user's multiplicative
//! multiattribute utility, with uncertain attribute levels modeled as
//! four-parameter beta distributions. Legacy subjective (applicability) rules
//! are kept only to reproduce the conventional heuristic selection for
//! comparison.
//!
//! Module map:
//!
//! - [`utility`]: normalized exponential single-attribute utilities, the
//!   master scaling constant and multiplicative aggregation.
//! - [`uncertainty`]: beta estimates, fitting from bounds plus mode or mean,
//!   and expected single-attribute utility by quadrature or closed-form series.
//! - [`assessment`]: the resumable lottery-question session that produces a
//!   [`UserProfile`].
//! - [`rules`]: knowledge base format, design facts and the filtering rule engine.
//! - [`evaluation`]: attribute estimates per alternative, ranking and the
//!   conventional-vs-integrated comparison.
//! - [`fixtures`]: the bundled bumper knowledge base, truck facts and profiles.

pub mod assessment;
pub mod error;
pub mod evaluation;
pub mod fixtures;
pub mod quadrature;
pub mod roots;
pub mod rules;
pub mod uncertainty;
pub mod utility;

pub use error::{Error, Result};
pub use utility::{
    aggregate, aggregate_expected, evaluate_utility, make_exponential_utility,
    solve_master_constant, AggregationMode, AttributeSpec, Direction, SingleAttributeUtility,
    UserProfile,
};

/// SHA-256 of `bytes`, hex encoded.
pub fn content_fingerprint(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
