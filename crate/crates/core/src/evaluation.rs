//! Scoring feasible alternatives by expected multiattribute utility.
//!
//! An alternative's level on each attribute is the sum of the contributions of
//! its materials, one estimate row per slot (see [`sum_estimates`] for how
//! uncertain contributions combine). Each attribute's expected utility is then
//! aggregated with the profile's multiplicative form.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::engine::{
    enumerate_configurations, run_applicability, run_restrictions, Alternative, FeasibleSlot,
    Selection, TraceEntry,
};
use crate::rules::facts::FactSet;
use crate::rules::kb::{KnowledgeBase, ResolvedEffect, RuleCategory};
use crate::uncertainty::{expected_utility, sum_estimates, AttributeEstimate};
use crate::utility::{aggregate_expected, UserProfile};

/// Expected utilities closer than this are ordered by enumeration index.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// An alternative with its per-attribute estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedAlternative {
    pub alternative: Alternative,
    pub estimates: IndexMap<String, AttributeEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredAlternative {
    /// 1-based.
    pub rank: usize,
    pub alternative: Alternative,
    pub estimates: IndexMap<String, AttributeEstimate>,
    /// Expected single-attribute utility per attribute, in profile order.
    pub expected_utilities: IndexMap<String, f64>,
    pub expected_utility: f64,
}

/// An alternative that could not be scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeError {
    pub alternative: Alternative,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub ranked: Vec<ScoredAlternative>,
    pub errors: Vec<AlternativeError>,
}

impl Ranking {
    pub fn top(&self) -> Option<&ScoredAlternative> {
        self.ranked.first()
    }

    pub fn find(&self, index: usize) -> Option<&ScoredAlternative> {
        self.ranked.iter().find(|s| s.alternative.index == index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub feasible: Vec<FeasibleSlot>,
    pub ranked: Vec<ScoredAlternative>,
    pub errors: Vec<AlternativeError>,
    pub trace: Vec<TraceEntry>,
    pub profile_fingerprint: String,
}

impl EvaluationResult {
    pub fn top(&self) -> Option<&ScoredAlternative> {
        self.ranked.first()
    }

    /// One row per ranked alternative, columns in the order: slot materials,
    /// expected utility per attribute (`eu_<id>`), overall expected utility,
    /// rank. Numbers use the shortest representation that round-trips.
    pub fn flat_table(&self) -> FlatTable {
        let slots: Vec<&str> = self.feasible.iter().map(|f| f.slot.as_str()).collect();
        let attributes: Vec<&str> = self
            .ranked
            .first()
            .map(|s| s.expected_utilities.keys().map(String::as_str).collect())
            .unwrap_or_default();
        let header = slots
            .iter()
            .map(|s| s.to_string())
            .chain(attributes.iter().map(|a| format!("eu_{a}")))
            .chain(["expected_utility".to_string(), "rank".to_string()])
            .collect();
        let rows = self
            .ranked
            .iter()
            .map(|s| {
                slots
                    .iter()
                    .map(|slot| s.alternative.material(slot).unwrap_or("").to_string())
                    .chain(attributes.iter().map(|a| {
                        s.expected_utilities
                            .get(*a)
                            .map(f64::to_string)
                            .unwrap_or_default()
                    }))
                    .chain([s.expected_utility.to_string(), s.rank.to_string()])
                    .collect()
            })
            .collect();
        FlatTable { header, rows }
    }
}

/// Tabular view of a ranking; every row has as many cells as the header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn check_feasible(kb: &KnowledgeBase, facts: &FactSet, alternative: &Alternative) -> Result<()> {
    let materials = alternative.material_indices();
    if materials.len() != kb.slots().len() {
        return Err(Error::NotFeasible(format!(
            "`{}` does not assign every slot",
            alternative.label()
        )));
    }
    let assigned: Vec<Option<usize>> = materials.iter().map(|&m| Some(m)).collect();
    for rule in &kb.rules {
        let violated = match (&rule.category, &rule.effect) {
            (
                RuleCategory::Restriction | RuleCategory::Configuration,
                ResolvedEffect::Forbid(s, m),
            ) => materials[*s] == *m,
            (RuleCategory::Configuration, ResolvedEffect::ForbidCombination(pairs)) => {
                pairs.iter().all(|(s, m)| materials[*s] == *m)
            }
            _ => false,
        };
        if violated && rule.applies(facts, &assigned) {
            return Err(Error::NotFeasible(format!(
                "`{}` is excluded by rule `{}`",
                alternative.label(),
                rule.id
            )));
        }
    }
    Ok(())
}

/// Looks up the matching estimate row for every slot and sums per attribute.
pub fn estimate_attributes(
    kb: &KnowledgeBase,
    facts: &FactSet,
    alternative: &Alternative,
) -> Result<IndexMap<String, AttributeEstimate>> {
    check_feasible(kb, facts, alternative)?;
    let materials = alternative.material_indices();
    let rows: Vec<_> = materials
        .iter()
        .enumerate()
        .map(|(slot, &material)| {
            kb.estimates
                .iter()
                .find(|row| {
                    row.slot == slot
                        && row.material == material
                        && row.conditions.iter().all(|c| c.holds(facts, &[]))
                })
                .ok_or_else(|| Error::Coverage {
                    slot: kb.slot_id(slot).to_string(),
                    material: kb.material_id(slot, material).to_string(),
                    attribute: kb
                        .attributes()
                        .first()
                        .map(|a| a.id.clone())
                        .unwrap_or_default(),
                })
        })
        .collect::<Result<_>>()?;
    kb.attributes()
        .iter()
        .enumerate()
        .map(|(j, attr)| {
            let parts: Vec<AttributeEstimate> = rows.iter().map(|row| row.values[j]).collect();
            let total = sum_estimates(&parts).map_err(|reason| Error::EstimateComposition {
                attribute: attr.id.clone(),
                reason,
            })?;
            Ok((attr.id.clone(), total))
        })
        .collect()
}

fn score(
    profile: &UserProfile,
    estimates: &IndexMap<String, AttributeEstimate>,
) -> Result<(IndexMap<String, f64>, f64)> {
    let mut expected = IndexMap::new();
    for u in &profile.utilities {
        let estimate = estimates.get(&u.attribute.id).ok_or_else(|| {
            Error::UnsupportedProfile(format!("no estimate for attribute `{}`", u.attribute.id))
        })?;
        expected.insert(u.attribute.id.clone(), expected_utility(u, estimate)?);
    }
    let values: Vec<f64> = expected.values().copied().collect();
    let overall = aggregate_expected(profile, &values)?;
    Ok((expected, overall))
}

/// Scores and sorts alternatives, best first.
///
/// Alternatives that fail to score are listed in `errors`; the rest are still
/// ranked. Utilities within [`TIE_TOLERANCE`] keep enumeration order.
pub fn rank_alternatives(
    alternatives: &[EstimatedAlternative],
    profile: &UserProfile,
) -> Result<Ranking> {
    profile.validate()?;
    if alternatives.is_empty() {
        return Err(Error::NotFeasible("no alternatives to rank".into()));
    }
    let mut ranked = Vec::new();
    let mut errors = Vec::new();
    for item in alternatives {
        match score(profile, &item.estimates) {
            Ok((expected_utilities, expected_utility)) => ranked.push(ScoredAlternative {
                rank: 0,
                alternative: item.alternative.clone(),
                estimates: item.estimates.clone(),
                expected_utilities,
                expected_utility,
            }),
            Err(e @ Error::UnsupportedProfile(_)) => return Err(e),
            Err(e) => errors.push(AlternativeError {
                alternative: item.alternative.clone(),
                code: e.code().to_string(),
                message: e.to_string(),
            }),
        }
    }
    ranked.sort_by(|a, b| b.expected_utility.total_cmp(&a.expected_utility));
    let mut start = 0;
    while start < ranked.len() {
        let mut end = start + 1;
        while end < ranked.len()
            && ranked[end - 1].expected_utility - ranked[end].expected_utility <= TIE_TOLERANCE
        {
            end += 1;
        }
        ranked[start..end].sort_by_key(|s| s.alternative.index);
        start = end;
    }
    for (i, s) in ranked.iter_mut().enumerate() {
        s.rank = i + 1;
    }
    Ok(Ranking { ranked, errors })
}

fn check_profile_covers(kb: &KnowledgeBase, profile: &UserProfile) -> Result<()> {
    let kb_ids: Vec<&str> = kb.attributes().iter().map(|a| a.id.as_str()).collect();
    let profile_ids: Vec<&str> = profile.attributes.iter().map(|a| a.id.as_str()).collect();
    let mut a = kb_ids.clone();
    let mut b = profile_ids.clone();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return Err(Error::UnsupportedProfile(format!(
            "profile attributes [{}] do not match knowledge base attributes [{}]",
            profile_ids.join(", "),
            kb_ids.join(", ")
        )));
    }
    Ok(())
}

struct Integrated {
    result: EvaluationResult,
    alternatives: Vec<Alternative>,
}

fn integrated(kb: &KnowledgeBase, facts: &FactSet, profile: &UserProfile) -> Result<Integrated> {
    check_profile_covers(kb, profile)?;
    let feasibility = run_restrictions(kb, facts)?;
    let enumeration = enumerate_configurations(kb, facts, &feasibility)?;
    let mut estimated = Vec::new();
    let mut errors = Vec::new();
    for alt in &enumeration.alternatives {
        match estimate_attributes(kb, facts, alt) {
            Ok(estimates) => estimated.push(EstimatedAlternative {
                alternative: alt.clone(),
                estimates,
            }),
            Err(e) => errors.push(AlternativeError {
                alternative: alt.clone(),
                code: e.code().to_string(),
                message: e.to_string(),
            }),
        }
    }
    let ranking = if estimated.is_empty() {
        Ranking {
            ranked: Vec::new(),
            errors: Vec::new(),
        }
    } else {
        rank_alternatives(&estimated, profile)?
    };
    errors.extend(ranking.errors);
    errors.sort_by_key(|e| e.alternative.index);
    let mut trace = feasibility.trace.clone();
    trace.extend(enumeration.trace);
    Ok(Integrated {
        result: EvaluationResult {
            feasible: feasibility.slots,
            ranked: ranking.ranked,
            errors,
            trace,
            profile_fingerprint: profile.fingerprint(),
        },
        alternatives: enumeration.alternatives,
    })
}

/// Objective filtering followed by expected-utility ranking.
pub fn evaluate(
    kb: &KnowledgeBase,
    facts: &FactSet,
    profile: &UserProfile,
) -> Result<EvaluationResult> {
    Ok(integrated(kb, facts, profile)?.result)
}

/// One mode's pick and its score under the profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModePick {
    pub alternative: Alternative,
    /// `None` when the pick could not be scored.
    pub expected_utility: Option<f64>,
    pub expected_utilities: IndexMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub conventional: ModePick,
    pub integrated: ModePick,
    /// Slots on which the two picks differ, in slot order.
    pub differing_slots: Vec<String>,
    pub conventional_trace: Vec<TraceEntry>,
    pub evaluation: EvaluationResult,
}

impl ComparisonReport {
    pub fn agree(&self) -> bool {
        self.differing_slots.is_empty()
    }
}

/// Runs the conventional applicability-rule pick and the integrated ranking on
/// the same feasible set.
pub fn compare_modes(
    kb: &KnowledgeBase,
    facts: &FactSet,
    profile: &UserProfile,
) -> Result<ComparisonReport> {
    let Integrated {
        result,
        alternatives,
    } = integrated(kb, facts, profile)?;
    let Selection {
        alternative: conventional,
        trace: selection_trace,
    } = run_applicability(kb, facts, &alternatives)?;
    let top = result
        .top()
        .ok_or_else(|| Error::NotFeasible("no alternative could be scored".into()))?;
    let conventional_scored = result.ranked.iter().find(|s| s.alternative == conventional);
    let conventional_pick = ModePick {
        alternative: conventional.clone(),
        expected_utility: conventional_scored.map(|s| s.expected_utility),
        expected_utilities: conventional_scored
            .map(|s| s.expected_utilities.clone())
            .unwrap_or_default(),
    };
    let integrated_pick = ModePick {
        alternative: top.alternative.clone(),
        expected_utility: Some(top.expected_utility),
        expected_utilities: top.expected_utilities.clone(),
    };
    let differing_slots = conventional
        .assignment
        .iter()
        .zip(&top.alternative.assignment)
        .filter(|(a, b)| a.material != b.material)
        .map(|(a, _)| a.slot.clone())
        .collect();
    let mut conventional_trace = result
        .trace
        .iter()
        .filter(|t| {
            t.category() == Some(RuleCategory::Restriction)
                || t.category() == Some(RuleCategory::Configuration)
        })
        .cloned()
        .collect::<Vec<_>>();
    conventional_trace.extend(selection_trace);
    Ok(ComparisonReport {
        conventional: conventional_pick,
        integrated: integrated_pick,
        differing_slots,
        conventional_trace,
        evaluation: result,
    })
}
