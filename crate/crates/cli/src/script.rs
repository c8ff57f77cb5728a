//! Scripted assessment: answers keyed by question identity rather than
//! position, fed to a session in the session's own question order.

use std::collections::HashMap;

use maud_core::assessment::{QuestionKind, Session};
use maud_core::{AttributeSpec, UserProfile};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedAnswer {
    pub attribute: String,
    pub kind: QuestionKind,
    /// Repetition number within the attribute; always 0 for scaling questions.
    #[serde(default)]
    pub sequence: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerScript {
    /// Certainty-equivalent questions per attribute. Inferred from the highest
    /// scripted sequence number when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ce_questions: Option<usize>,
    pub answers: Vec<ScriptedAnswer>,
}

type Key<'a> = (&'a str, QuestionKind, usize);

impl AnswerScript {
    pub fn ce_questions(&self) -> usize {
        self.ce_questions.unwrap_or_else(|| {
            self.answers
                .iter()
                .filter(|a| a.kind == QuestionKind::CertaintyEquivalent)
                .map(|a| a.sequence + 1)
                .max()
                .unwrap_or(1)
        })
    }

    /// Runs the script through a fresh session and returns it, complete.
    ///
    /// Every question must have exactly one scripted answer and every scripted
    /// answer must match a question.
    pub fn run(&self, attributes: Vec<AttributeSpec>) -> Result<Session, CliError> {
        let mut by_key: HashMap<Key, usize> = HashMap::new();
        for (i, a) in self.answers.iter().enumerate() {
            if by_key
                .insert((&a.attribute, a.kind, a.sequence), i)
                .is_some()
            {
                return Err(CliError::script(
                    format!(
                        "duplicate answer for {} question {} on `{}`",
                        a.kind.as_str(),
                        a.sequence,
                        a.attribute
                    ),
                    Some(format!("answers[{i}]")),
                ));
            }
        }
        let mut session = Session::start_with(attributes, self.ce_questions())?;
        let mut used = vec![false; self.answers.len()];
        while let Some(question) = session.next_question() {
            let key = (
                question.attribute.as_str(),
                question.kind,
                question.sequence,
            );
            let Some(&i) = by_key.get(&key) else {
                return Err(CliError::script(
                    format!(
                        "no answer for {} question {} on `{}`",
                        question.kind.as_str(),
                        question.sequence,
                        question.attribute
                    ),
                    Some("answers".into()),
                ));
            };
            used[i] = true;
            session
                .submit_answer(question.index, self.answers[i].value)
                .map_err(|source| CliError::Located {
                    source,
                    field: format!("answers[{i}].value"),
                })?;
        }
        if let Some(i) = used.iter().position(|u| !u) {
            let a = &self.answers[i];
            return Err(CliError::script(
                format!(
                    "answer for {} question {} on `{}` matches no question",
                    a.kind.as_str(),
                    a.sequence,
                    a.attribute
                ),
                Some(format!("answers[{i}]")),
            ));
        }
        Ok(session)
    }

    pub fn profile(&self, attributes: Vec<AttributeSpec>) -> Result<UserProfile, CliError> {
        Ok(self.run(attributes)?.finalize()?)
    }
}
