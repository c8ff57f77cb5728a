//! Forward filtering over a [`KnowledgeBase`].
//!
//! Restriction rules read only design inputs and remove materials from slots.
//! Configuration rules may also read slot assignments and remove whole
//! material combinations. Neither kind ever adds anything, so the objective
//! stages are order independent. Applicability rules are consulted only to
//! reproduce the conventional single-pick selection.

use serde::{Deserialize, Serialize};

use super::facts::FactSet;
use super::kb::{Assignment, KnowledgeBase, ResolvedEffect, RuleCategory};
use crate::error::{Error, Result};

/// One step of the inference record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEntry {
    /// A restriction rule fired and removed a material.
    Forbid {
        rule: String,
        category: RuleCategory,
        slot: String,
        material: String,
    },
    /// A configuration rule excluded this many material combinations.
    Block {
        rule: String,
        category: RuleCategory,
        combinations: usize,
    },
    /// An applicability rule pinned a slot.
    Select {
        rule: String,
        category: RuleCategory,
        slot: String,
        material: String,
    },
    /// An applicability rule lost to an earlier pin or left no consistent alternative.
    Conflict {
        rule: String,
        category: RuleCategory,
        slot: String,
        material: String,
        kept: Option<String>,
    },
    /// Only one material stayed consistent, so the slot was pinned without a rule.
    Forced { slot: String, material: String },
}

impl TraceEntry {
    pub fn category(&self) -> Option<RuleCategory> {
        match self {
            TraceEntry::Forbid { category, .. }
            | TraceEntry::Block { category, .. }
            | TraceEntry::Select { category, .. }
            | TraceEntry::Conflict { category, .. } => Some(*category),
            TraceEntry::Forced { .. } => None,
        }
    }
}

/// Materials still allowed in one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSlot {
    pub slot: String,
    pub materials: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub slots: Vec<FeasibleSlot>,
    pub trace: Vec<TraceEntry>,
    #[serde(skip)]
    indices: Vec<Vec<usize>>,
}

impl Feasibility {
    /// Feasible material indices per slot, in declaration order.
    pub fn material_indices(&self) -> &[Vec<usize>] {
        &self.indices
    }
}

/// One material per slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alternative {
    /// Position in enumeration order.
    pub index: usize,
    pub assignment: Vec<Assignment>,
    #[serde(skip)]
    materials: Vec<usize>,
}

impl Alternative {
    pub fn material_indices(&self) -> &[usize] {
        &self.materials
    }

    pub fn material(&self, slot: &str) -> Option<&str> {
        self.assignment
            .iter()
            .find(|a| a.slot == slot)
            .map(|a| a.material.as_str())
    }

    /// Rebuilds an alternative from slot → material names.
    pub fn from_names(kb: &KnowledgeBase, index: usize, names: &[(&str, &str)]) -> Result<Self> {
        let mut materials = vec![None; kb.slots().len()];
        for (slot, material) in names {
            let s = kb
                .slot_index(slot)
                .ok_or_else(|| Error::NotFeasible(format!("unknown slot `{slot}`")))?;
            let m = kb.material_index(s, material).ok_or_else(|| {
                Error::NotFeasible(format!("unknown material `{material}` in slot `{slot}`"))
            })?;
            materials[s] = Some(m);
        }
        let materials = materials
            .into_iter()
            .enumerate()
            .map(|(s, m)| {
                m.ok_or_else(|| Error::NotFeasible(format!("slot `{}` unassigned", kb.slot_id(s))))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(kb, index, materials))
    }

    fn new(kb: &KnowledgeBase, index: usize, materials: Vec<usize>) -> Self {
        let assignment = materials
            .iter()
            .enumerate()
            .map(|(s, &m)| Assignment {
                slot: kb.slot_id(s).to_string(),
                material: kb.material_id(s, m).to_string(),
            })
            .collect();
        Alternative {
            index,
            assignment,
            materials,
        }
    }

    /// `fascia=none, beam=steel` style label.
    pub fn label(&self) -> String {
        self.assignment
            .iter()
            .map(|a| format!("{}={}", a.slot, a.material))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Applies every satisfied restriction rule.
pub fn run_restrictions(kb: &KnowledgeBase, facts: &FactSet) -> Result<Feasibility> {
    let mut allowed: Vec<Vec<bool>> = kb
        .slots()
        .iter()
        .map(|s| vec![true; s.materials.len()])
        .collect();
    let mut trace = Vec::new();
    let none: Vec<Option<usize>> = vec![None; kb.slots().len()];
    for rule in kb
        .rules
        .iter()
        .filter(|r| r.category == RuleCategory::Restriction)
    {
        if !rule.applies(facts, &none) {
            continue;
        }
        if let ResolvedEffect::Forbid(slot, material) = rule.effect {
            allowed[slot][material] = false;
            trace.push(TraceEntry::Forbid {
                rule: rule.id.clone(),
                category: rule.category,
                slot: kb.slot_id(slot).to_string(),
                material: kb.material_id(slot, material).to_string(),
            });
        }
    }
    let indices: Vec<Vec<usize>> = allowed
        .iter()
        .map(|flags| (0..flags.len()).filter(|&m| flags[m]).collect())
        .collect();
    for (s, materials) in indices.iter().enumerate() {
        if materials.is_empty() {
            let slot = kb.slot_id(s).to_string();
            let rules = trace
                .iter()
                .filter_map(|t| match t {
                    TraceEntry::Forbid { rule, slot: ts, .. } if *ts == slot => Some(rule.clone()),
                    _ => None,
                })
                .collect();
            return Err(Error::InfeasibleDesign { slot, rules });
        }
    }
    let slots = indices
        .iter()
        .enumerate()
        .map(|(s, ms)| FeasibleSlot {
            slot: kb.slot_id(s).to_string(),
            materials: ms
                .iter()
                .map(|&m| kb.material_id(s, m).to_string())
                .collect(),
        })
        .collect();
    Ok(Feasibility {
        slots,
        trace,
        indices,
    })
}

/// Alternatives surviving configuration rules, with their trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    pub alternatives: Vec<Alternative>,
    pub trace: Vec<TraceEntry>,
}

fn blocks(effect: &ResolvedEffect, materials: &[usize]) -> bool {
    match effect {
        ResolvedEffect::Forbid(slot, material) => materials[*slot] == *material,
        ResolvedEffect::ForbidCombination(pairs) => pairs
            .iter()
            .all(|(slot, material)| materials[*slot] == *material),
        ResolvedEffect::Select(..) => false,
    }
}

/// Cartesian product of the feasible sets minus forbidden combinations, with
/// the first slot varying slowest.
pub fn enumerate_configurations(
    kb: &KnowledgeBase,
    facts: &FactSet,
    feasible: &Feasibility,
) -> Result<Enumeration> {
    let sets = feasible.material_indices();
    if sets.len() != kb.slots().len() || sets.iter().any(Vec::is_empty) {
        return Err(Error::NotFeasible(
            "feasible sets must be nonempty for every slot".into(),
        ));
    }
    let config_rules: Vec<_> = kb
        .rules
        .iter()
        .filter(|r| r.category == RuleCategory::Configuration)
        .collect();
    let mut blocked = vec![0usize; config_rules.len()];
    let mut alternatives = Vec::new();
    let mut odometer = vec![0usize; sets.len()];
    'outer: loop {
        let materials: Vec<usize> = odometer
            .iter()
            .enumerate()
            .map(|(s, &i)| sets[s][i])
            .collect();
        let assigned: Vec<Option<usize>> = materials.iter().map(|&m| Some(m)).collect();
        let mut ok = true;
        for (r, rule) in config_rules.iter().enumerate() {
            if blocks(&rule.effect, &materials) && rule.applies(facts, &assigned) {
                blocked[r] += 1;
                ok = false;
            }
        }
        if ok {
            alternatives.push(Alternative::new(kb, alternatives.len(), materials));
        }
        for s in (0..sets.len()).rev() {
            odometer[s] += 1;
            if odometer[s] < sets[s].len() {
                continue 'outer;
            }
            odometer[s] = 0;
        }
        break;
    }
    let trace: Vec<TraceEntry> = config_rules
        .iter()
        .zip(&blocked)
        .filter(|(_, &n)| n > 0)
        .map(|(rule, &n)| TraceEntry::Block {
            rule: rule.id.clone(),
            category: rule.category,
            combinations: n,
        })
        .collect();
    if alternatives.is_empty() {
        let rules = trace
            .iter()
            .filter_map(|t| match t {
                TraceEntry::Block { rule, .. } => Some(rule.clone()),
                _ => None,
            })
            .collect();
        return Err(Error::InfeasibleConfiguration { rules });
    }
    Ok(Enumeration {
        alternatives,
        trace,
    })
}

/// The conventional single pick and how it was reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub alternative: Alternative,
    pub trace: Vec<TraceEntry>,
}

fn consistent<'a>(
    alternatives: &'a [Alternative],
    pins: &'a [Option<usize>],
) -> impl Iterator<Item = &'a Alternative> + 'a {
    alternatives.iter().filter(move |alt| {
        pins.iter()
            .zip(alt.material_indices())
            .all(|(pin, m)| pin.is_none_or(|p| p == *m))
    })
}

/// Pins each slot with applicability rules in priority order until one
/// alternative remains.
///
/// Rules fire at most once. After every pin the scan restarts from the highest
/// priority, since newly pinned slots can satisfy further conditions. A slot
/// left with a single consistent material is pinned without a rule.
pub fn run_applicability(
    kb: &KnowledgeBase,
    facts: &FactSet,
    alternatives: &[Alternative],
) -> Result<Selection> {
    match alternatives {
        [] => return Err(Error::NotFeasible("no alternatives to select from".into())),
        [only] => {
            return Ok(Selection {
                alternative: only.clone(),
                trace: Vec::new(),
            })
        }
        _ => {}
    }
    let slot_count = kb.slots().len();
    let mut rules: Vec<_> = kb
        .rules
        .iter()
        .filter(|r| r.category == RuleCategory::Applicability)
        .collect();
    rules.sort_by_key(|r| (r.priority, r.order));
    let mut fired = vec![false; rules.len()];
    let mut pins: Vec<Option<usize>> = vec![None; slot_count];
    let mut trace = Vec::new();

    loop {
        let mut changed = false;
        for s in 0..slot_count {
            if pins[s].is_some() {
                continue;
            }
            let mut options: Vec<usize> = consistent(alternatives, &pins)
                .map(|a| a.material_indices()[s])
                .collect();
            options.sort_unstable();
            options.dedup();
            if let [m] = options[..] {
                pins[s] = Some(m);
                trace.push(TraceEntry::Forced {
                    slot: kb.slot_id(s).to_string(),
                    material: kb.material_id(s, m).to_string(),
                });
                changed = true;
            }
        }
        for (r, rule) in rules.iter().enumerate() {
            if fired[r] || !rule.applies(facts, &pins) {
                continue;
            }
            let ResolvedEffect::Select(slot, material) = rule.effect else {
                continue;
            };
            fired[r] = true;
            let conflict = |kept: Option<usize>| TraceEntry::Conflict {
                rule: rule.id.clone(),
                category: rule.category,
                slot: kb.slot_id(slot).to_string(),
                material: kb.material_id(slot, material).to_string(),
                kept: kept.map(|k| kb.material_id(slot, k).to_string()),
            };
            match pins[slot] {
                Some(existing) if existing == material => {}
                Some(existing) => trace.push(conflict(Some(existing))),
                None => {
                    let mut trial = pins.clone();
                    trial[slot] = Some(material);
                    if consistent(alternatives, &trial).next().is_some() {
                        pins = trial;
                        trace.push(TraceEntry::Select {
                            rule: rule.id.clone(),
                            category: rule.category,
                            slot: kb.slot_id(slot).to_string(),
                            material: kb.material_id(slot, material).to_string(),
                        });
                        changed = true;
                        break;
                    }
                    trace.push(conflict(None));
                }
            }
        }
        if !changed {
            break;
        }
    }

    let unpinned: Vec<String> = (0..slot_count)
        .filter(|&s| pins[s].is_none())
        .map(|s| kb.slot_id(s).to_string())
        .collect();
    if !unpinned.is_empty() {
        return Err(Error::ConventionalIncomplete { slots: unpinned });
    }
    let alternative = consistent(alternatives, &pins)
        .next()
        .cloned()
        .expect("pins are only accepted while a consistent alternative exists");
    Ok(Selection { alternative, trace })
}
