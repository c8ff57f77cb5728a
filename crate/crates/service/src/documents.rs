//! Request and response bodies of the HTTP API.

use chrono::{DateTime, Utc};
use maud_core::assessment::{Question, Response, Session, SessionState};
use maud_core::evaluation::{ComparisonReport, EvaluationResult};
use maud_core::uncertainty::{fit_beta, BetaSpec, FitTarget, KnownShape};
use maud_core::{AttributeSpec, Error, Result, UserProfile};
use serde::{Deserialize, Serialize};

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub attributes: Vec<AttributeSpec>,
    #[serde(default = "one")]
    pub ce_questions: usize,
    #[serde(default)]
    pub owner: Option<String>,
}

/// A session as persisted between requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub owner: Option<String>,
    pub created: DateTime<Utc>,
    /// Set once the session has been finalized.
    pub profile_id: Option<String>,
    pub session: Session,
}

/// Client-facing snapshot of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub owner: Option<String>,
    pub state: SessionState,
    pub complete: bool,
    pub answered: usize,
    pub question_count: usize,
    /// The next unanswered question; absent once complete.
    pub question: Option<Question>,
    pub profile_id: Option<String>,
}

impl SessionView {
    pub fn of(record: &SessionRecord) -> Self {
        let s = &record.session;
        SessionView {
            id: s.id.clone(),
            owner: record.owner.clone(),
            state: s.state,
            complete: s.is_complete(),
            answered: s.responses.len(),
            question_count: s.question_count(),
            question: s.next_question(),
            profile_id: record.profile_id.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerRequest {
    /// Index of the question being answered; must be the current one.
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub accepted: Response,
    pub session: SessionView,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalizeRequest {
    #[serde(default)]
    pub owner: Option<String>,
}

/// The answers that produced a profile, replayable through a fresh session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    pub attributes: Vec<AttributeSpec>,
    pub ce_questions: usize,
    pub responses: Vec<Response>,
}

impl SessionLog {
    pub fn of(session: &Session) -> Self {
        SessionLog {
            session_id: Some(session.id.clone()),
            attributes: session.attributes.clone(),
            ce_questions: session.ce_questions,
            responses: session.responses.clone(),
        }
    }

    pub fn replay(&self) -> Result<UserProfile> {
        Session::replay(self.attributes.clone(), self.ce_questions, &self.responses)?.finalize()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredProfile {
    pub id: String,
    pub owner: Option<String>,
    pub created: DateTime<Utc>,
    pub fingerprint: String,
    pub profile: UserProfile,
    pub session: Option<SessionLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileUpload {
    #[serde(default)]
    pub owner: Option<String>,
    pub profile: UserProfile,
    #[serde(default)]
    pub session: Option<SessionLog>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationMode {
    #[default]
    Integrated,
    Compare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    pub kb_id: String,
    pub profile_id: String,
    /// Design inputs; validated field by field.
    pub facts: serde_json::Value,
    #[serde(default)]
    pub mode: EvaluationMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EvaluationOutput {
    Compare(Box<ComparisonReport>),
    Integrated(EvaluationResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub mode: EvaluationMode,
    pub kb_id: String,
    pub profile_id: String,
    pub result: EvaluationOutput,
}

pub const DEFAULT_DENSITY_SAMPLES: usize = 101;
pub const MAX_DENSITY_SAMPLES: usize = 2001;

/// Bounds plus exactly one known shape and exactly one target statistic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBetaRequest {
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub mode: Option<f64>,
    #[serde(default)]
    pub mean: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub x: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitBetaReport {
    pub spec: BetaSpec,
    pub mean: f64,
    /// Absent for the uniform case.
    pub mode: Option<f64>,
    pub variance: f64,
    pub density: Vec<DensityPoint>,
}

impl FitBetaRequest {
    pub fn run(&self) -> Result<FitBetaReport> {
        let known = match (self.p, self.q) {
            (Some(p), None) => KnownShape::P(p),
            (None, Some(q)) => KnownShape::Q(q),
            _ => {
                return Err(Error::InvalidBeta(
                    "give exactly one known shape, p or q".into(),
                ))
            }
        };
        let target = match (self.mode, self.mean) {
            (Some(m), None) => FitTarget::Mode(m),
            (None, Some(m)) => FitTarget::Mean(m),
            _ => {
                return Err(Error::InvalidBeta(
                    "give exactly one target, mode or mean".into(),
                ))
            }
        };
        let samples = self.samples.unwrap_or(DEFAULT_DENSITY_SAMPLES);
        if !(2..=MAX_DENSITY_SAMPLES).contains(&samples) {
            return Err(Error::InvalidBeta(format!(
                "samples must be between 2 and {MAX_DENSITY_SAMPLES}, got {samples}"
            )));
        }
        let spec = fit_beta(self.lower, self.upper, known, target)?;
        Ok(FitBetaReport {
            mean: spec.mean(),
            mode: spec.mode().ok(),
            variance: spec.variance(),
            density: spec
                .density_samples(samples)
                .into_iter()
                .map(|(x, density)| DensityPoint { x, density })
                .collect(),
            spec,
        })
    }
}
