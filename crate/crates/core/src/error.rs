use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// One problem found while validating a knowledge base document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaViolation {
    /// Dotted path of the offending element, e.g. `rules[3].effect`.
    pub path: String,
    /// Rule id when the violation belongs to a rule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    pub message: String,
}

impl std::fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.rule {
            Some(rule) => write!(f, "{} (rule `{}`): {}", self.path, rule, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid attribute `{id}`: {reason}")]
    InvalidAttribute { id: String, reason: String },

    #[error("{value} is outside the range [{min}, {max}] of attribute `{attribute}`")]
    OutOfRange {
        attribute: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid scaling constants: {0}")]
    InvalidWeights(String),

    #[error("expected {expected} values, got {got}")]
    Alignment { expected: usize, got: usize },

    #[error("utility value {value} at position {index} is outside [0, 1]")]
    UtilityDomain { index: usize, value: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid beta parameters: {0}")]
    InvalidBeta(String),

    #[error("the uniform distribution (p = q = 1) has no unique mode")]
    UndefinedMode,

    #[error("no beta with both shapes >= 1 reproduces target {target}; feasible targets lie in [{feasible_min}, {feasible_max}]")]
    InfeasibleFit {
        target: f64,
        feasible_min: f64,
        feasible_max: f64,
    },

    #[error("estimate support [{lower}, {upper}] exceeds the range [{min}, {max}] of attribute `{attribute}`")]
    EstimateRange {
        attribute: String,
        lower: f64,
        upper: f64,
        min: f64,
        max: f64,
    },

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound}")]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("unsupported profile: {0}")]
    UnsupportedProfile(String),

    #[error("answer {value} is outside the admissible interval [{min}, {max}]")]
    AnswerDomain { value: f64, min: f64, max: f64 },

    #[error("answer index {got} does not match the current question index {expected}")]
    Sequence { expected: usize, got: usize },

    #[error("degenerate answer: {0}")]
    DegenerateAnswer(String),

    #[error("invalid scaling answer: {0}")]
    InvalidScaling(String),

    #[error("the session is already complete")]
    SessionComplete,

    #[error("the session is not complete: {remaining} questions remain")]
    SessionIncomplete { remaining: usize },

    #[error("knowledge base failed validation: {}", format_violations(.0))]
    Schema(Vec<SchemaViolation>),

    #[error("invalid facts at `{field}`: {message}")]
    InvalidFacts { field: String, message: String },

    #[error("no feasible material left for slot `{slot}` (eliminated by {})", .rules.join(", "))]
    InfeasibleDesign { slot: String, rules: Vec<String> },

    #[error("every material combination is forbidden (blocking rules: {})", .rules.join(", "))]
    InfeasibleConfiguration { rules: Vec<String> },

    #[error("applicability rules left slots unpinned: {}", .slots.join(", "))]
    ConventionalIncomplete { slots: Vec<String> },

    #[error("no estimate row covers `{material}` in slot `{slot}` for attribute `{attribute}`")]
    Coverage {
        slot: String,
        material: String,
        attribute: String,
    },

    #[error("alternative is not feasible: {0}")]
    NotFeasible(String),

    #[error("cannot compose estimates for attribute `{attribute}`: {reason}")]
    EstimateComposition { attribute: String, reason: String },

    #[error("malformed document at `{path}`: {message}")]
    Document { path: String, message: String },

    /// Not parseable as JSON at all.
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
}

fn format_violations(violations: &[SchemaViolation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// Stable machine-readable code; one per variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidAttribute { .. } => "invalid_attribute",
            Error::OutOfRange { .. } => "out_of_range",
            Error::InvalidWeights(_) => "invalid_weights",
            Error::Alignment { .. } => "alignment",
            Error::UtilityDomain { .. } => "utility_domain",
            Error::InvalidProfile(_) => "invalid_profile",
            Error::InvalidBeta(_) => "invalid_beta",
            Error::UndefinedMode => "undefined_mode",
            Error::InfeasibleFit { .. } => "infeasible_fit",
            Error::EstimateRange { .. } => "estimate_range",
            Error::UnsupportedShape(_) => "unsupported_shape",
            Error::Quadrature { .. } => "quadrature",
            Error::UnsupportedProfile(_) => "unsupported_profile",
            Error::AnswerDomain { .. } => "answer_domain",
            Error::Sequence { .. } => "sequence",
            Error::DegenerateAnswer(_) => "degenerate_answer",
            Error::InvalidScaling(_) => "invalid_scaling",
            Error::SessionComplete => "session_complete",
            Error::SessionIncomplete { .. } => "session_incomplete",
            Error::Schema(_) => "schema",
            Error::InvalidFacts { .. } => "invalid_facts",
            Error::InfeasibleDesign { .. } => "infeasible_design",
            Error::InfeasibleConfiguration { .. } => "infeasible_configuration",
            Error::ConventionalIncomplete { .. } => "conventional_incomplete",
            Error::Coverage { .. } => "coverage",
            Error::NotFeasible(_) => "not_feasible",
            Error::EstimateComposition { .. } => "estimate_composition",
            Error::Document { .. } => "malformed_document",
            Error::Syntax { .. } => "malformed_json",
        }
    }

    /// Path of the offending input field, when one can be named.
    pub fn field(&self) -> Option<String> {
        match self {
            Error::InvalidAttribute { id, .. } => Some(format!("attributes.{id}")),
            Error::OutOfRange { attribute, .. } | Error::EstimateRange { attribute, .. } => {
                Some(format!("estimates.{attribute}"))
            }
            Error::UtilityDomain { index, .. } => Some(format!("values[{index}]")),
            Error::AnswerDomain { .. } | Error::DegenerateAnswer(_) => Some("value".into()),
            Error::Sequence { .. } => Some("index".into()),
            Error::InvalidFacts { field, .. } => Some(format!("facts.{field}")),
            Error::Schema(v) => v.first().map(|v| v.path.clone()),
            Error::InfeasibleDesign { slot, .. } => Some(format!("slots.{slot}")),
            Error::Document { path, .. } => Some(path.clone()),
            _ => None,
        }
    }
}

/// Parses a JSON document into `T`, reporting the path of the first failing field.
///
/// Input that is not JSON at all yields [`Error::Syntax`]; well-formed JSON
/// of the wrong shape or failing validation yields [`Error::Document`].
pub fn parse_document<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            Error::Syntax {
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        } else {
            Error::Document {
                path,
                message: inner.to_string(),
            }
        }
    })
}
