//! Resumable lottery-question session producing a [`UserProfile`].
//!
//! Questions come in a fixed order: for every attribute, `ce_questions`
//! certainty-equivalent questions on the 50/50 best/worst lottery; then one
//! probability-equivalence question per attribute whose answer is read directly
//! as that attribute's scaling constant.
//!
//! The response log is the only mutable state. Everything else, including the
//! current question and the final profile, is a pure function of the attribute
//! list, the configured question count and the logged values.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{bisect, golden_section_min};
use crate::utility::{
    make_exponential_utility, AttributeSpec, SingleAttributeUtility, UserProfile,
};

pub const MIN_ATTRIBUTES: usize = 2;
pub const MAX_ATTRIBUTES: usize = 12;
pub const MAX_CE_QUESTIONS: usize = 3;
/// Fitted risk coefficients are confined to `[-bound, bound]`.
pub const RISK_COEFFICIENT_BOUND: f64 = 50.0;
/// Lottery probability of the best outcome in certainty-equivalent questions.
pub const CE_LOTTERY_PROBABILITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    CertaintyEquivalent,
    ProbabilityEquivalence,
}

impl QuestionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            QuestionKind::CertaintyEquivalent => "certainty_equivalent",
            QuestionKind::ProbabilityEquivalence => "probability_equivalence",
        }
    }
}

/// The two options the respondent is asked to compare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Lottery {
    /// Sure level of one attribute versus `best` with `probability_best`, else `worst`.
    SingleAttribute {
        best: f64,
        worst: f64,
        probability_best: f64,
    },
    /// Sure thing: `attribute` at best and every other attribute at worst.
    /// Lottery: all attributes at best with probability π, else all at worst.
    Corner { attribute: String },
}

/// Closed interval of admissible answers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnswerDomain {
    pub min: f64,
    pub max: f64,
}

impl AnswerDomain {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    /// Position in the session; answers must echo it.
    pub index: usize,
    pub kind: QuestionKind,
    pub attribute: String,
    pub attribute_index: usize,
    /// Repetition number among questions of this kind for this attribute.
    pub sequence: usize,
    pub prompt: String,
    pub lottery: Lottery,
    pub domain: AnswerDomain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum SessionState {
    ElicitingUtilities { attribute: usize, step: usize },
    ElicitingScaling { attribute: usize },
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub index: usize,
    pub kind: QuestionKind,
    pub attribute: String,
    pub sequence: usize,
    pub value: f64,
    pub recorded_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub attributes: Vec<AttributeSpec>,
    pub ce_questions: usize,
    pub state: SessionState,
    pub responses: Vec<Response>,
}

/// Normalized certainty equivalent of the 50/50 lottery under curvature `c`.
pub fn certainty_equivalent_position(c: f64) -> f64 {
    if c.abs() < 1e-12 {
        0.5
    } else {
        -(0.5 * (-c).exp_m1()).ln_1p() / c
    }
}

/// Normalized CE interval admitted by the risk-coefficient bound.
pub fn admissible_position_range() -> (f64, f64) {
    (
        certainty_equivalent_position(RISK_COEFFICIENT_BOUND),
        certainty_equivalent_position(-RISK_COEFFICIENT_BOUND),
    )
}

fn ce_domain(attr: &AttributeSpec) -> AnswerDomain {
    let (lo, hi) = admissible_position_range();
    let (a, b) = (attr.denormalize(lo), attr.denormalize(hi));
    AnswerDomain {
        min: a.min(b),
        max: a.max(b),
    }
}

fn format_level(x: f64, units: &str) -> String {
    if units.is_empty() {
        format!("{x}")
    } else {
        format!("{x} {units}")
    }
}

impl Session {
    /// Starts a session with one certainty-equivalent question per attribute.
    pub fn start(attributes: Vec<AttributeSpec>) -> Result<Self> {
        Self::start_with(attributes, 1)
    }

    pub fn start_with(attributes: Vec<AttributeSpec>, ce_questions: usize) -> Result<Self> {
        if !(MIN_ATTRIBUTES..=MAX_ATTRIBUTES).contains(&attributes.len()) {
            return Err(Error::UnsupportedProfile(format!(
                "sessions need {MIN_ATTRIBUTES} to {MAX_ATTRIBUTES} attributes, got {}",
                attributes.len()
            )));
        }
        if !(1..=MAX_CE_QUESTIONS).contains(&ce_questions) {
            return Err(Error::UnsupportedProfile(format!(
                "certainty-equivalent questions per attribute must be 1 to {MAX_CE_QUESTIONS}, got {ce_questions}"
            )));
        }
        for (i, attr) in attributes.iter().enumerate() {
            attr.validate()?;
            if attributes[..i].iter().any(|other| other.id == attr.id) {
                return Err(Error::InvalidAttribute {
                    id: attr.id.clone(),
                    reason: "duplicate attribute id".into(),
                });
            }
        }
        let mut session = Session {
            id: uuid::Uuid::new_v4().to_string(),
            attributes,
            ce_questions,
            state: SessionState::Complete,
            responses: Vec::new(),
        };
        session.state = session.state_at(0);
        Ok(session)
    }

    pub fn question_count(&self) -> usize {
        self.attributes.len() * (self.ce_questions + 1)
    }

    pub fn is_complete(&self) -> bool {
        self.responses.len() >= self.question_count()
    }

    fn state_at(&self, answered: usize) -> SessionState {
        let ce_total = self.attributes.len() * self.ce_questions;
        if answered < ce_total {
            SessionState::ElicitingUtilities {
                attribute: answered / self.ce_questions,
                step: answered % self.ce_questions,
            }
        } else if answered < self.question_count() {
            SessionState::ElicitingScaling {
                attribute: answered - ce_total,
            }
        } else {
            SessionState::Complete
        }
    }

    /// The question at position `index`, or `None` past the end.
    pub fn question_at(&self, index: usize) -> Option<Question> {
        match self.state_at(index) {
            SessionState::ElicitingUtilities { attribute, step } => {
                let attr = &self.attributes[attribute];
                Some(Question {
                    index,
                    kind: QuestionKind::CertaintyEquivalent,
                    attribute: attr.id.clone(),
                    attribute_index: attribute,
                    sequence: step,
                    prompt: format!(
                        "What {} received for certain is exactly as attractive as a 50/50 lottery between {} and {}?",
                        attr.label,
                        format_level(attr.range_best, &attr.units),
                        format_level(attr.range_worst, &attr.units)
                    ),
                    lottery: Lottery::SingleAttribute {
                        best: attr.range_best,
                        worst: attr.range_worst,
                        probability_best: CE_LOTTERY_PROBABILITY,
                    },
                    domain: ce_domain(attr),
                })
            }
            SessionState::ElicitingScaling { attribute } => {
                let attr = &self.attributes[attribute];
                Some(Question {
                    index,
                    kind: QuestionKind::ProbabilityEquivalence,
                    attribute: attr.id.clone(),
                    attribute_index: attribute,
                    sequence: 0,
                    prompt: format!(
                        "Option A gives {} at its best level ({}) and every other attribute at its worst. \
                         Option B gives every attribute at its best with probability π and every attribute \
                         at its worst otherwise. At what π are A and B equally attractive?",
                        attr.label,
                        format_level(attr.range_best, &attr.units)
                    ),
                    lottery: Lottery::Corner {
                        attribute: attr.id.clone(),
                    },
                    domain: AnswerDomain { min: 0.0, max: 1.0 },
                })
            }
            SessionState::Complete => None,
        }
    }

    /// The current question, or `None` once every question has been answered.
    pub fn next_question(&self) -> Option<Question> {
        self.question_at(self.responses.len())
    }

    /// Records an answer to the question at `index`, which must be current,
    /// and returns the following question.
    pub fn submit_answer(&mut self, index: usize, value: f64) -> Result<Option<Question>> {
        self.submit_answer_at(index, value, Utc::now())?;
        Ok(self.next_question())
    }

    fn submit_answer_at(&mut self, index: usize, value: f64, at: DateTime<Utc>) -> Result<()> {
        let question = self.next_question().ok_or(Error::SessionComplete)?;
        if index != question.index {
            return Err(Error::Sequence {
                expected: question.index,
                got: index,
            });
        }
        if !value.is_finite() || !question.domain.contains(value) {
            return Err(Error::AnswerDomain {
                value,
                min: question.domain.min,
                max: question.domain.max,
            });
        }
        self.responses.push(Response {
            index,
            kind: question.kind,
            attribute: question.attribute,
            sequence: question.sequence,
            value,
            recorded_at: at,
        });
        self.state = self.state_at(self.responses.len());
        Ok(())
    }

    /// Rebuilds a session by re-submitting a logged response sequence.
    ///
    /// Timestamps are carried over, so the rebuilt session equals the original
    /// up to its id.
    pub fn replay(
        attributes: Vec<AttributeSpec>,
        ce_questions: usize,
        responses: &[Response],
    ) -> Result<Self> {
        let mut session = Self::start_with(attributes, ce_questions)?;
        for response in responses {
            let expected = session.next_question().ok_or(Error::SessionComplete)?;
            if expected.kind != response.kind || expected.attribute != response.attribute {
                return Err(Error::Sequence {
                    expected: expected.index,
                    got: response.index,
                });
            }
            session.submit_answer_at(response.index, response.value, response.recorded_at)?;
        }
        Ok(session)
    }

    fn ce_answers(&self, attribute: usize) -> Vec<f64> {
        let id = &self.attributes[attribute].id;
        self.responses
            .iter()
            .filter(|r| r.kind == QuestionKind::CertaintyEquivalent && &r.attribute == id)
            .map(|r| r.value)
            .collect()
    }

    /// Fits every attribute's utility from its certainty-equivalent answers.
    pub fn attribute_fits(&self) -> Result<Vec<AttributeFit>> {
        (0..self.attributes.len())
            .map(|j| fit_single_attribute(&self.attributes[j], &self.ce_answers(j)))
            .collect()
    }

    /// Builds the profile from a complete session.
    pub fn finalize(&self) -> Result<UserProfile> {
        if !self.is_complete() {
            return Err(Error::SessionIncomplete {
                remaining: self.question_count() - self.responses.len(),
            });
        }
        let utilities = self
            .attribute_fits()?
            .into_iter()
            .map(|fit| fit.utility)
            .collect();
        let scaling = self
            .responses
            .iter()
            .filter(|r| r.kind == QuestionKind::ProbabilityEquivalence)
            .map(|r| {
                if r.value > 0.0 && r.value < 1.0 {
                    Ok(r.value)
                } else {
                    Err(Error::InvalidScaling(format!(
                        "indifference probability for `{}` must lie strictly between 0 and 1, got {}",
                        r.attribute, r.value
                    )))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        UserProfile::new(utilities, scaling)
    }
}

/// A fitted utility and how well it reproduces each certainty equivalent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeFit {
    pub utility: SingleAttributeUtility,
    /// `u(CE) - 1/2` per answer; all zero for a single answer up to solver
    /// tolerance.
    pub residuals: Vec<f64>,
}

fn ce_residual(c: f64, position: f64) -> f64 {
    crate::utility::normalized_exponential(c, position) - CE_LOTTERY_PROBABILITY
}

/// Curvature whose utility maps the normalized position of a certainty
/// equivalent to the lottery's expected utility.
pub fn fit_risk_coefficient(position: f64) -> Result<f64> {
    if !(position > 0.0 && position < 1.0) {
        return Err(Error::DegenerateAnswer(format!(
            "certainty equivalent must lie strictly inside the range, got normalized position {position}"
        )));
    }
    // u_c(z) increases with c for fixed interior z.
    let f = |c: f64| ce_residual(c, position);
    let bound = RISK_COEFFICIENT_BOUND;
    if f(-bound) > 0.0 || f(bound) < 0.0 {
        let (min, max) = admissible_position_range();
        return Err(Error::DegenerateAnswer(format!(
            "normalized position {position} implies a risk coefficient beyond ±{bound}; \
             answers must lie in [{min:.6}, {max:.6}] of the range"
        )));
    }
    Ok(bisect(f, -bound, bound, 1e-13).expect("bracket checked above"))
}

/// Fits a single-attribute utility from one or more certainty equivalents.
///
/// Several answers are reconciled by least squares on the utility residuals;
/// the optimum lies between the smallest and largest single-answer fits.
pub fn fit_single_attribute(attribute: &AttributeSpec, answers: &[f64]) -> Result<AttributeFit> {
    if answers.is_empty() {
        return Err(Error::DegenerateAnswer(format!(
            "no certainty equivalent recorded for `{}`",
            attribute.id
        )));
    }
    let positions: Vec<f64> = answers.iter().map(|&x| attribute.normalize(x)).collect();
    let singles = positions
        .iter()
        .map(|&z| fit_risk_coefficient(z))
        .collect::<Result<Vec<f64>>>()?;
    let c = if singles.len() == 1 {
        singles[0]
    } else {
        let lo = singles.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = singles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo == 0.0 {
            lo
        } else {
            let sse = |c: f64| {
                positions
                    .iter()
                    .map(|&z| ce_residual(c, z).powi(2))
                    .sum::<f64>()
            };
            golden_section_min(sse, lo, hi, 1e-12)
        }
    };
    let utility = make_exponential_utility(attribute.clone(), c)?;
    let residuals = positions
        .iter()
        .map(|&z| utility.value_at(z) - CE_LOTTERY_PROBABILITY)
        .collect();
    Ok(AttributeFit { utility, residuals })
}
