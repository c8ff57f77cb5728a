//! Bundled bumper knowledge base, truck design inputs and two user profiles.
//!
//! The profiles share attribute ranges with the knowledge base. The typical
//! truck designer weights cost heavily and is strongly risk averse on weight
//! and impact. The atypical designer spreads weight toward impact and
//! appearance and is risk seeking on both.

use crate::error::Result;
use crate::rules::facts::FactSet;
use crate::rules::kb::{load_knowledge_base, KnowledgeBase};
use crate::utility::{make_exponential_utility, AttributeSpec, UserProfile};

pub const BUMPER_KB_JSON: &str = include_str!("../fixtures/bumper_kb.json");
pub const TRUCK_FACTS_JSON: &str = include_str!("../fixtures/truck_facts.json");
pub const BUMPER_ATTRIBUTES_JSON: &str = include_str!("../fixtures/bumper_attributes.json");
pub const TYPICAL_PROFILE_JSON: &str = include_str!("../fixtures/typical_profile.json");
pub const ATYPICAL_PROFILE_JSON: &str = include_str!("../fixtures/atypical_profile.json");

/// Scaling constants and risk coefficients in attribute order
/// (cost, weight, impact, appearance).
pub const TYPICAL_SCALING: [f64; 4] = [0.65, 0.18, 0.07, 0.08];
pub const TYPICAL_RISK: [f64; 4] = [1.2, 6.0, 4.0, 2.0];
pub const ATYPICAL_SCALING: [f64; 4] = [0.30, 0.08, 0.32, 0.36];
pub const ATYPICAL_RISK: [f64; 4] = [0.1, 3.8, -0.2, -1.1];

pub fn bumper_kb() -> KnowledgeBase {
    load_knowledge_base(BUMPER_KB_JSON.as_bytes()).expect("bundled knowledge base is valid")
}

pub fn truck_facts() -> FactSet {
    FactSet::from_json(TRUCK_FACTS_JSON.as_bytes()).expect("bundled facts are valid")
}

pub fn bumper_attributes() -> Vec<AttributeSpec> {
    serde_json::from_str(BUMPER_ATTRIBUTES_JSON).expect("bundled attributes are valid")
}

/// Builds a profile over the bumper attributes.
pub fn bumper_profile(scaling: &[f64], risk: &[f64]) -> Result<UserProfile> {
    let utilities = bumper_attributes()
        .into_iter()
        .zip(risk)
        .map(|(attr, &c)| make_exponential_utility(attr, c))
        .collect::<Result<Vec<_>>>()?;
    UserProfile::new(utilities, scaling.to_vec())
}

pub fn typical_profile() -> UserProfile {
    serde_json::from_str(TYPICAL_PROFILE_JSON).expect("bundled profile is valid")
}

pub fn atypical_profile() -> UserProfile {
    serde_json::from_str(ATYPICAL_PROFILE_JSON).expect("bundled profile is valid")
}

/// All bundled documents as (file name, contents).
pub fn bundled_documents() -> [(&'static str, &'static str); 5] {
    [
        ("bumper_kb.json", BUMPER_KB_JSON),
        ("truck_facts.json", TRUCK_FACTS_JSON),
        ("bumper_attributes.json", BUMPER_ATTRIBUTES_JSON),
        ("typical_profile.json", TYPICAL_PROFILE_JSON),
        ("atypical_profile.json", ATYPICAL_PROFILE_JSON),
    ]
}
