//! Knowledge base document format and validation.
//!
//! A knowledge base declares component slots with their material options, the
//! design attributes, the rules, and per-material attribute estimates. The
//! document is plain JSON with `format_version: 1`.
//!
//! Rule conditions are conjunctions of predicates, each testing either one
//! design input (`{"fact": "cost_range", "eq": "low"}`,
//! `{"fact": "lead_time_years", "lt": 2}`) or one slot assignment
//! (`{"slot": "fascia", "in": ["none"]}`). Numeric facts accept any of
//! `eq`, `lt`, `le`, `gt`, `ge`, combined as a conjunction; symbolic facts
//! accept `eq` or `in`; flags accept `eq`.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::facts::{FactField, FactSet, FactValue, FieldKind};
use crate::error::{parse_document, Error, Result, SchemaViolation};
use crate::uncertainty::AttributeEstimate;
use crate::utility::AttributeSpec;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeBaseDocument {
    pub format_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub slots: Vec<SlotDef>,
    pub attributes: Vec<AttributeSpec>,
    pub rules: Vec<RuleDef>,
    pub estimates: Vec<EstimateRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotDef {
    pub id: String,
    #[serde(default)]
    pub label: String,
    pub materials: Vec<MaterialDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialDef {
    pub id: String,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleCategory {
    Configuration,
    Restriction,
    Applicability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objectivity {
    Objective,
    Subjective,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assignment {
    pub slot: String,
    pub material: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    Forbid(Assignment),
    ForbidCombination(Vec<Assignment>),
    Select(Assignment),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDef {
    pub id: String,
    pub category: RuleCategory,
    pub objectivity: Objectivity,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub when: Vec<ConditionDef>,
    pub effect: Effect,
    /// Applicability rules only; lower fires first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<i64>,
}

/// One predicate as written in the document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eq: Option<Value>,
    #[serde(default, rename = "in", skip_serializing_if = "Option::is_none")]
    pub one_of: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub le: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ge: Option<f64>,
}

/// Contribution of one material in one slot to every attribute.
///
/// Rows with a non-empty `when` apply only in matching design contexts; the
/// first matching row in document order wins, and every (slot, material) pair
/// needs an unconditional row as the fallback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateRow {
    pub slot: String,
    pub material: String,
    #[serde(default)]
    pub when: Vec<ConditionDef>,
    pub values: IndexMap<String, AttributeEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Comparison {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl Comparison {
    fn holds(&self, x: f64, bound: f64) -> bool {
        match self {
            Comparison::Lt => x < bound,
            Comparison::Le => x <= bound,
            Comparison::Gt => x > bound,
            Comparison::Ge => x >= bound,
            Comparison::Eq => x == bound,
        }
    }
}

/// A validated predicate.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Symbol {
        field: FactField,
        allowed: Vec<String>,
    },
    Flag {
        field: FactField,
        value: bool,
    },
    Number {
        field: FactField,
        tests: Vec<(Comparison, f64)>,
    },
    /// Holds when `slot` is assigned one of `materials` (indices into the slot).
    Slot {
        slot: usize,
        materials: Vec<usize>,
    },
}

impl Condition {
    pub fn tests_slot(&self) -> bool {
        matches!(self, Condition::Slot { .. })
    }

    /// Evaluates against facts and a partial assignment (`None` = unassigned).
    /// A slot predicate on an unassigned slot does not hold.
    pub fn holds(&self, facts: &FactSet, assignment: &[Option<usize>]) -> bool {
        match self {
            Condition::Symbol { field, allowed } => match facts.get(*field) {
                FactValue::Symbol(s) => allowed.iter().any(|a| a == s),
                _ => false,
            },
            Condition::Flag { field, value } => facts.get(*field) == FactValue::Flag(*value),
            Condition::Number { field, tests } => match facts.get(*field) {
                FactValue::Number(x) => tests.iter().all(|(cmp, bound)| cmp.holds(x, *bound)),
                _ => false,
            },
            Condition::Slot { slot, materials } => assignment
                .get(*slot)
                .copied()
                .flatten()
                .is_some_and(|m| materials.contains(&m)),
        }
    }
}

/// A validated rule with resolved slot and material indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: String,
    pub category: RuleCategory,
    pub conditions: Vec<Condition>,
    pub effect: ResolvedEffect,
    pub priority: i64,
    /// Position in the document.
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedEffect {
    Forbid(usize, usize),
    ForbidCombination(Vec<(usize, usize)>),
    Select(usize, usize),
}

impl Rule {
    pub fn applies(&self, facts: &FactSet, assignment: &[Option<usize>]) -> bool {
        self.conditions.iter().all(|c| c.holds(facts, assignment))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedEstimateRow {
    pub slot: usize,
    pub material: usize,
    pub conditions: Vec<Condition>,
    /// Index-aligned with the knowledge base attributes.
    pub values: Vec<AttributeEstimate>,
}

/// A validated knowledge base. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    pub document: KnowledgeBaseDocument,
    pub rules: Vec<Rule>,
    pub estimates: Vec<ResolvedEstimateRow>,
}

impl KnowledgeBase {
    pub fn slots(&self) -> &[SlotDef] {
        &self.document.slots
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.document.attributes
    }

    pub fn slot_index(&self, id: &str) -> Option<usize> {
        self.document.slots.iter().position(|s| s.id == id)
    }

    pub fn material_index(&self, slot: usize, id: &str) -> Option<usize> {
        self.document.slots[slot]
            .materials
            .iter()
            .position(|m| m.id == id)
    }

    pub fn slot_id(&self, slot: usize) -> &str {
        &self.document.slots[slot].id
    }

    pub fn material_id(&self, slot: usize, material: usize) -> &str {
        &self.document.slots[slot].materials[material].id
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.document).expect("document serializes")
    }
}

/// Parses and validates a knowledge base document.
pub fn load_knowledge_base(bytes: &[u8]) -> Result<KnowledgeBase> {
    let document: KnowledgeBaseDocument = parse_document(bytes)?;
    validate(document)
}

struct Validator<'a> {
    doc: &'a KnowledgeBaseDocument,
    violations: Vec<SchemaViolation>,
}

impl<'a> Validator<'a> {
    fn report(&mut self, path: impl Into<String>, rule: Option<&str>, message: impl Into<String>) {
        self.violations.push(SchemaViolation {
            path: path.into(),
            rule: rule.map(str::to_string),
            message: message.into(),
        });
    }

    fn slot(&mut self, path: &str, rule: Option<&str>, id: &str) -> Option<usize> {
        let found = self.doc.slots.iter().position(|s| s.id == id);
        if found.is_none() {
            self.report(path, rule, format!("undeclared slot `{id}`"));
        }
        found
    }

    fn assignment(
        &mut self,
        path: &str,
        rule: Option<&str>,
        a: &Assignment,
    ) -> Option<(usize, usize)> {
        let slot = self.slot(&format!("{path}.slot"), rule, &a.slot)?;
        let material = self.doc.slots[slot]
            .materials
            .iter()
            .position(|m| m.id == a.material);
        if material.is_none() {
            self.report(
                format!("{path}.material"),
                rule,
                format!("undeclared material `{}` in slot `{}`", a.material, a.slot),
            );
        }
        Some((slot, material?))
    }

    fn condition(&mut self, path: &str, rule: Option<&str>, c: &ConditionDef) -> Option<Condition> {
        let numeric_ops = [
            (Comparison::Lt, c.lt),
            (Comparison::Le, c.le),
            (Comparison::Gt, c.gt),
            (Comparison::Ge, c.ge),
        ];
        let has_numeric = numeric_ops.iter().any(|(_, v)| v.is_some());
        match (&c.fact, &c.slot) {
            (Some(_), Some(_)) | (None, None) => {
                self.report(
                    path,
                    rule,
                    "a condition tests exactly one of `fact` or `slot`",
                );
                None
            }
            (None, Some(slot_id)) => {
                let slot = self.slot(&format!("{path}.slot"), rule, slot_id)?;
                if has_numeric {
                    self.report(path, rule, "slot conditions accept only `eq` or `in`");
                    return None;
                }
                let names = self.symbol_list(path, rule, c)?;
                let mut materials = Vec::new();
                for name in names {
                    match self.doc.slots[slot]
                        .materials
                        .iter()
                        .position(|m| m.id == name)
                    {
                        Some(m) => materials.push(m),
                        None => {
                            self.report(
                                path,
                                rule,
                                format!("undeclared material `{name}` in slot `{slot_id}`"),
                            );
                            return None;
                        }
                    }
                }
                Some(Condition::Slot { slot, materials })
            }
            (Some(fact_name), None) => {
                let field: FactField =
                    match serde_json::from_value(Value::String(fact_name.clone())) {
                        Ok(f) => f,
                        Err(_) => {
                            self.report(
                                format!("{path}.fact"),
                                rule,
                                format!("unknown design input `{fact_name}`"),
                            );
                            return None;
                        }
                    };
                match field.kind() {
                    FieldKind::Symbol(values) => {
                        if has_numeric {
                            self.report(path, rule, format!("`{fact_name}` is not numeric"));
                            return None;
                        }
                        let names = self.symbol_list(path, rule, c)?;
                        if let Some(bad) = names.iter().find(|n| !values.contains(&n.as_str())) {
                            self.report(
                                path,
                                rule,
                                format!(
                                    "`{bad}` is not a value of `{fact_name}` (expected one of {})",
                                    values.join(", ")
                                ),
                            );
                            return None;
                        }
                        Some(Condition::Symbol {
                            field,
                            allowed: names,
                        })
                    }
                    FieldKind::Flag => match (&c.eq, &c.one_of, has_numeric) {
                        (Some(Value::Bool(b)), None, false) => {
                            Some(Condition::Flag { field, value: *b })
                        }
                        _ => {
                            self.report(
                                path,
                                rule,
                                format!("`{fact_name}` accepts only `eq: true|false`"),
                            );
                            None
                        }
                    },
                    FieldKind::Number => {
                        if c.one_of.is_some() {
                            self.report(path, rule, format!("`{fact_name}` does not accept `in`"));
                            return None;
                        }
                        let mut tests: Vec<(Comparison, f64)> = numeric_ops
                            .iter()
                            .filter_map(|(cmp, v)| v.map(|v| (*cmp, v)))
                            .collect();
                        match &c.eq {
                            None => {}
                            Some(v) => match v.as_f64() {
                                Some(x) => tests.push((Comparison::Eq, x)),
                                None => {
                                    self.report(
                                        path,
                                        rule,
                                        format!("`{fact_name}` compares to numbers"),
                                    );
                                    return None;
                                }
                            },
                        }
                        if tests.is_empty() {
                            self.report(path, rule, "condition has no test");
                            return None;
                        }
                        Some(Condition::Number { field, tests })
                    }
                }
            }
        }
    }

    fn symbol_list(
        &mut self,
        path: &str,
        rule: Option<&str>,
        c: &ConditionDef,
    ) -> Option<Vec<String>> {
        let values: Vec<&Value> = match (&c.eq, &c.one_of) {
            (Some(v), None) => vec![v],
            (None, Some(list)) if !list.is_empty() => list.iter().collect(),
            _ => {
                self.report(
                    path,
                    rule,
                    "expected exactly one of `eq` or a non-empty `in`",
                );
                return None;
            }
        };
        let mut out = Vec::new();
        for v in values {
            match v.as_str() {
                Some(s) => out.push(s.to_string()),
                None => {
                    self.report(path, rule, format!("expected a name, got {v}"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn conditions(
        &mut self,
        path: &str,
        rule: Option<&str>,
        list: &[ConditionDef],
    ) -> Vec<Condition> {
        list.iter()
            .enumerate()
            .filter_map(|(i, c)| self.condition(&format!("{path}[{i}]"), rule, c))
            .collect()
    }
}

fn validate(document: KnowledgeBaseDocument) -> Result<KnowledgeBase> {
    let mut v = Validator {
        doc: &document,
        violations: Vec::new(),
    };

    if document.format_version != FORMAT_VERSION {
        v.report(
            "format_version",
            None,
            format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                document.format_version
            ),
        );
    }
    if document.slots.is_empty() {
        v.report("slots", None, "at least one slot is required");
    }
    for (i, slot) in document.slots.iter().enumerate() {
        if document.slots[..i].iter().any(|s| s.id == slot.id) {
            v.report(
                format!("slots[{i}].id"),
                None,
                format!("duplicate slot `{}`", slot.id),
            );
        }
        if slot.materials.is_empty() {
            v.report(
                format!("slots[{i}].materials"),
                None,
                "a slot needs at least one material",
            );
        }
        for (m, mat) in slot.materials.iter().enumerate() {
            if slot.materials[..m].iter().any(|x| x.id == mat.id) {
                v.report(
                    format!("slots[{i}].materials[{m}].id"),
                    None,
                    format!("duplicate material `{}`", mat.id),
                );
            }
        }
    }
    if document.attributes.is_empty() {
        v.report("attributes", None, "at least one attribute is required");
    }
    for (i, attr) in document.attributes.iter().enumerate() {
        if let Err(e) = attr.validate() {
            v.report(format!("attributes[{i}]"), None, e.to_string());
        }
        if document.attributes[..i].iter().any(|a| a.id == attr.id) {
            v.report(
                format!("attributes[{i}].id"),
                None,
                format!("duplicate attribute `{}`", attr.id),
            );
        }
    }

    let mut rules = Vec::new();
    for (i, def) in document.rules.iter().enumerate() {
        let path = format!("rules[{i}]");
        let id = Some(def.id.as_str());
        if document.rules[..i].iter().any(|r| r.id == def.id) {
            v.report(format!("{path}.id"), id, "duplicate rule id");
        }
        let expected_objectivity = match def.category {
            RuleCategory::Applicability => Objectivity::Subjective,
            RuleCategory::Configuration | RuleCategory::Restriction => Objectivity::Objective,
        };
        if def.objectivity != expected_objectivity {
            v.report(
                format!("{path}.objectivity"),
                id,
                format!(
                    "{:?} rules must be {:?}",
                    def.category, expected_objectivity
                )
                .to_lowercase(),
            );
        }
        if def.priority.is_some() && def.category != RuleCategory::Applicability {
            v.report(
                format!("{path}.priority"),
                id,
                "only applicability rules carry a priority",
            );
        }
        let conditions = v.conditions(&format!("{path}.when"), id, &def.when);
        if def.category == RuleCategory::Restriction && conditions.iter().any(Condition::tests_slot)
        {
            v.report(
                format!("{path}.when"),
                id,
                "restriction rules may test only design inputs",
            );
        }
        let effect_path = format!("{path}.effect");
        let effect = match (&def.effect, def.category) {
            (Effect::Select(a), RuleCategory::Applicability) => v
                .assignment(&effect_path, id, a)
                .map(|(s, m)| ResolvedEffect::Select(s, m)),
            (Effect::Select(_), _) => {
                v.report(&effect_path, id, "objective rules never select");
                None
            }
            (_, RuleCategory::Applicability) => {
                v.report(&effect_path, id, "applicability rules only select");
                None
            }
            (Effect::Forbid(a), _) => v
                .assignment(&effect_path, id, a)
                .map(|(s, m)| ResolvedEffect::Forbid(s, m)),
            (Effect::ForbidCombination(_), RuleCategory::Restriction) => {
                v.report(
                    &effect_path,
                    id,
                    "restriction rules forbid single materials",
                );
                None
            }
            (Effect::ForbidCombination(list), _) => {
                if list.len() < 2 {
                    v.report(&effect_path, id, "a combination names at least two slots");
                    None
                } else {
                    let resolved: Vec<_> = list
                        .iter()
                        .enumerate()
                        .filter_map(|(j, a)| v.assignment(&format!("{effect_path}[{j}]"), id, a))
                        .collect();
                    let mut slots: Vec<usize> = resolved.iter().map(|(s, _)| *s).collect();
                    slots.sort_unstable();
                    slots.dedup();
                    if slots.len() != resolved.len() {
                        v.report(
                            &effect_path,
                            id,
                            "a combination names each slot at most once",
                        );
                        None
                    } else if resolved.len() == list.len() {
                        Some(ResolvedEffect::ForbidCombination(resolved))
                    } else {
                        None
                    }
                }
            }
        };
        if let Some(effect) = effect {
            if conditions.len() == def.when.len() {
                rules.push(Rule {
                    id: def.id.clone(),
                    category: def.category,
                    conditions,
                    effect,
                    priority: def.priority.unwrap_or(0),
                    order: i,
                });
            }
        }
    }

    let mut estimates = Vec::new();
    for (i, row) in document.estimates.iter().enumerate() {
        let path = format!("estimates[{i}]");
        let target = v.assignment(
            &path,
            None,
            &Assignment {
                slot: row.slot.clone(),
                material: row.material.clone(),
            },
        );
        let conditions = v.conditions(&format!("{path}.when"), None, &row.when);
        if conditions.iter().any(Condition::tests_slot) {
            v.report(
                format!("{path}.when"),
                None,
                "estimate rows may test only design inputs",
            );
        }
        for key in row.values.keys() {
            if !document.attributes.iter().any(|a| &a.id == key) {
                v.report(
                    format!("{path}.values.{key}"),
                    None,
                    format!("undeclared attribute `{key}`"),
                );
            }
        }
        let mut values = Vec::new();
        for attr in &document.attributes {
            match row.values.get(&attr.id) {
                None => v.report(
                    format!("{path}.values"),
                    None,
                    format!("missing estimate for attribute `{}`", attr.id),
                ),
                Some(estimate) => {
                    let (lo, hi) = estimate.support();
                    if !(lo.is_finite() && hi.is_finite()) {
                        v.report(
                            format!("{path}.values.{}", attr.id),
                            None,
                            "estimate must be finite",
                        );
                    }
                    values.push(*estimate);
                }
            }
        }
        if let Some((slot, material)) = target {
            if values.len() == document.attributes.len() && conditions.len() == row.when.len() {
                estimates.push(ResolvedEstimateRow {
                    slot,
                    material,
                    conditions,
                    values,
                });
            }
        }
    }
    for (s, slot) in document.slots.iter().enumerate() {
        for (m, mat) in slot.materials.iter().enumerate() {
            let has_default = document
                .estimates
                .iter()
                .any(|row| row.slot == slot.id && row.material == mat.id && row.when.is_empty());
            if !has_default {
                v.report(
                    format!("slots[{s}].materials[{m}]"),
                    None,
                    format!(
                        "missing estimate row: `{}` in slot `{}` has no unconditional estimate row",
                        mat.id, slot.id
                    ),
                );
            }
        }
    }

    if v.violations.is_empty() {
        Ok(KnowledgeBase {
            document,
            rules,
            estimates,
        })
    } else {
        Err(Error::Schema(v.violations))
    }
}

impl TryFrom<KnowledgeBaseDocument> for KnowledgeBase {
    type Error = Error;

    fn try_from(document: KnowledgeBaseDocument) -> Result<Self> {
        validate(document)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(rules: &str) -> String {
        format!(
            r#"{{
            "format_version": 1,
            "slots": [
                {{"id": "fascia", "materials": [{{"id": "none"}}, {{"id": "thermoset"}}]}},
                {{"id": "beam", "materials": [{{"id": "steel"}}, {{"id": "aluminum"}}]}}
            ],
            "attributes": [
                {{"id": "cost", "label": "Cost", "range_worst": 100, "range_best": 0, "direction": "decreasing_preferred"}}
            ],
            "rules": {rules},
            "estimates": [
                {{"slot": "fascia", "material": "none", "values": {{"cost": {{"point": 0}}}}}},
                {{"slot": "fascia", "material": "thermoset", "values": {{"cost": {{"point": 20}}}}}},
                {{"slot": "beam", "material": "steel", "values": {{"cost": {{"beta": {{"lower": 30, "upper": 40, "p": 2, "q": 2}}}}}}}},
                {{"slot": "beam", "material": "aluminum", "values": {{"cost": {{"point": 60}}}}}}
            ]
        }}"#
        )
    }

    fn violations(doc: &str) -> Vec<SchemaViolation> {
        match load_knowledge_base(doc.as_bytes()).unwrap_err() {
            Error::Schema(v) => v,
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn empty_rules_are_valid() {
        let kb = load_knowledge_base(minimal("[]").as_bytes()).unwrap();
        assert_eq!(kb.slots().len(), 2);
        assert!(kb.rules.is_empty());
        assert_eq!(kb.estimates.len(), 4);
    }

    #[test]
    fn undeclared_material_cites_rule() {
        let v = violations(&minimal(
            r#"[{"id": "R7", "category": "restriction", "objectivity": "objective",
                 "when": [{"fact": "cost_range", "eq": "low"}],
                 "effect": {"forbid": {"slot": "beam", "material": "titanium"}}}]"#,
        ));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule.as_deref(), Some("R7"));
        assert_eq!(v[0].path, "rules[0].effect.material");
    }

    #[test]
    fn category_objectivity_mismatch() {
        let v = violations(&minimal(
            r#"[{"id": "A1", "category": "restriction", "objectivity": "subjective",
                 "effect": {"forbid": {"slot": "beam", "material": "steel"}}}]"#,
        ));
        assert_eq!(v[0].path, "rules[0].objectivity");
    }

    #[test]
    fn objective_select_rejected() {
        let v = violations(&minimal(
            r#"[{"id": "C1", "category": "configuration", "objectivity": "objective",
                 "effect": {"select": {"slot": "beam", "material": "steel"}}}]"#,
        ));
        assert_eq!(v[0].message, "objective rules never select");
    }

    #[test]
    fn restriction_cannot_test_slots() {
        let v = violations(&minimal(
            r#"[{"id": "R1", "category": "restriction", "objectivity": "objective",
                 "when": [{"slot": "fascia", "eq": "none"}],
                 "effect": {"forbid": {"slot": "beam", "material": "steel"}}}]"#,
        ));
        assert_eq!(v[0].path, "rules[0].when");
    }

    #[test]
    fn bad_fact_value_reported() {
        let v = violations(&minimal(
            r#"[{"id": "R1", "category": "restriction", "objectivity": "objective",
                 "when": [{"fact": "cost_range", "eq": "cheap"}, {"fact": "mass", "gt": 3}],
                 "effect": {"forbid": {"slot": "beam", "material": "steel"}}}]"#,
        ));
        assert_eq!(v.len(), 2);
        assert_eq!(v[1].path, "rules[0].when[1].fact");
    }

    #[test]
    fn missing_estimate_row_reported() {
        let doc = minimal("[]").replace(
            r#"{"slot": "beam", "material": "aluminum", "values": {"cost": {"point": 60}}}"#,
            r#"{"slot": "beam", "material": "aluminum", "when": [{"fact": "run_years", "gt": 3}], "values": {"cost": {"point": 60}}}"#,
        );
        let v = violations(&doc);
        assert!(v[0].message.contains("missing estimate row"));
    }

    #[test]
    fn unknown_version_rejected() {
        let doc = minimal("[]").replace("\"format_version\": 1", "\"format_version\": 2");
        assert_eq!(violations(&doc)[0].path, "format_version");
    }

    #[test]
    fn malformed_document_names_path() {
        let doc = minimal("[]").replace("\"range_worst\": 100", "\"range_worst\": \"high\"");
        match load_knowledge_base(doc.as_bytes()).unwrap_err() {
            Error::Document { path, .. } => assert_eq!(path, "attributes[0].range_worst"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn numeric_conditions_combine() {
        let kb = load_knowledge_base(
            minimal(
                r#"[{"id": "R1", "category": "restriction", "objectivity": "objective",
                     "when": [{"fact": "lead_time_years", "ge": 1, "lt": 2}],
                     "effect": {"forbid": {"slot": "beam", "material": "aluminum"}}}]"#,
            )
            .as_bytes(),
        )
        .unwrap();
        match &kb.rules[0].conditions[0] {
            Condition::Number { tests, .. } => assert_eq!(tests.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
