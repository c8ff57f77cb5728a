//! Single-attribute utilities and their multiplicative aggregation.
//!
//! A single-attribute utility is stored in the normalized coordinate
//! `z = (x - worst) / (best - worst)`, so that
//!
//! ```text
//! u(z) = (1 - exp(-c z)) / (1 - exp(-c))
//! ```
//!
//! with `u(0) = 0` at the worst level and `u(1) = 1` at the best. Positive `c`
//! is concave in `z` (risk averse), negative `c` convex (risk prone), and
//! `|c| < 1e-9` is the linear limit. The same curve written in attribute units
//! is `a - b exp(c_x x)`; see [`SingleAttributeUtility::form`].
//!
//! The overall utility combines the single-attribute values with scaling
//! constants `k_j` and the master constant `K`:
//!
//! ```text
//! U = ( prod_j (1 + K k_j u_j) - 1 ) / K,     1 + K = prod_j (1 + K k_j)
//! ```
//!
//! When `sum k_j = 1` the only root is `K = 0` and the form degenerates to the
//! additive `sum k_j u_j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::bisect;

/// Below this magnitude a risk coefficient is treated as exactly linear.
pub const LINEAR_THRESHOLD: f64 = 1e-9;
/// `|sum k_j - 1|` at or below this selects the additive limit.
pub const ADDITIVE_TOLERANCE: f64 = 1e-9;
/// Maximum allowed residual of the master-constant equation on load.
pub const MASTER_RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    IncreasingPreferred,
    DecreasingPreferred,
}

/// A measurable design attribute with its assessed range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub units: String,
    pub range_worst: f64,
    pub range_best: f64,
    pub direction: Direction,
}

impl AttributeSpec {
    pub fn new(
        id: impl Into<String>,
        label: impl Into<String>,
        units: impl Into<String>,
        range_worst: f64,
        range_best: f64,
    ) -> Result<Self> {
        let direction = if range_best > range_worst {
            Direction::IncreasingPreferred
        } else {
            Direction::DecreasingPreferred
        };
        let spec = AttributeSpec {
            id: id.into(),
            label: label.into(),
            units: units.into(),
            range_worst,
            range_best,
            direction,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: &str| Error::InvalidAttribute {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.id.trim().is_empty() {
            return Err(invalid("empty id"));
        }
        if !self.range_worst.is_finite() || !self.range_best.is_finite() {
            return Err(invalid("range bounds must be finite"));
        }
        if self.range_worst == self.range_best {
            return Err(invalid("degenerate range: worst equals best"));
        }
        let increasing = self.range_best > self.range_worst;
        match (self.direction, increasing) {
            (Direction::IncreasingPreferred, true) | (Direction::DecreasingPreferred, false) => {
                Ok(())
            }
            _ => Err(invalid(
                "direction disagrees with the orientation of worst and best",
            )),
        }
    }

    pub fn min(&self) -> f64 {
        self.range_worst.min(self.range_best)
    }

    pub fn max(&self) -> f64 {
        self.range_worst.max(self.range_best)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min() && x <= self.max()
    }

    /// Position of `x` on the worst-to-best scale; 0 at worst, 1 at best.
    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.range_worst) / (self.range_best - self.range_worst)
    }

    pub fn denormalize(&self, z: f64) -> f64 {
        self.range_worst + z * (self.range_best - self.range_worst)
    }
}

/// Closed-form expression of a utility curve in attribute units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UtilityForm {
    /// `u(x) = intercept + slope * x`
    Linear { intercept: f64, slope: f64 },
    /// `u(x) = a - b * exp(c * x)`
    Exponential { a: f64, b: f64, c: f64 },
}

/// Normalized exponential utility over one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawUtility")]
pub struct SingleAttributeUtility {
    pub attribute: AttributeSpec,
    /// Curvature in the normalized coordinate; zero means linear.
    pub risk_coefficient: f64,
}

#[derive(Deserialize)]
struct RawUtility {
    attribute: AttributeSpec,
    risk_coefficient: f64,
}

impl TryFrom<RawUtility> for SingleAttributeUtility {
    type Error = Error;

    fn try_from(raw: RawUtility) -> Result<Self> {
        make_exponential_utility(raw.attribute, raw.risk_coefficient)
    }
}

impl SingleAttributeUtility {
    pub fn is_linear(&self) -> bool {
        self.risk_coefficient == 0.0
    }

    /// Utility at normalized position `z`, without range checks.
    pub fn value_at(&self, z: f64) -> f64 {
        normalized_exponential(self.risk_coefficient, z)
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        evaluate_utility(self, x)
    }

    /// The curve written in attribute units.
    pub fn form(&self) -> UtilityForm {
        let attr = &self.attribute;
        let span = attr.range_best - attr.range_worst;
        if self.is_linear() {
            return UtilityForm::Linear {
                intercept: -attr.range_worst / span,
                slope: 1.0 / span,
            };
        }
        let c = self.risk_coefficient;
        let denom = -(-c).exp_m1();
        UtilityForm::Exponential {
            a: 1.0 / denom,
            b: (c * attr.range_worst / span).exp() / denom,
            c: -c / span,
        }
    }
}

/// `(1 - e^{-cz}) / (1 - e^{-c})`, or `z` in the linear limit.
pub fn normalized_exponential(c: f64, z: f64) -> f64 {
    if c == 0.0 {
        z
    } else {
        (-c * z).exp_m1() / (-c).exp_m1()
    }
}

/// Builds the normalized exponential utility for `attribute` with curvature
/// `risk_coefficient` in the normalized coordinate.
pub fn make_exponential_utility(
    attribute: AttributeSpec,
    risk_coefficient: f64,
) -> Result<SingleAttributeUtility> {
    attribute.validate()?;
    if !risk_coefficient.is_finite() {
        return Err(Error::InvalidAttribute {
            id: attribute.id,
            reason: format!("risk coefficient {risk_coefficient} is not finite"),
        });
    }
    let risk_coefficient = if risk_coefficient.abs() < LINEAR_THRESHOLD {
        0.0
    } else {
        risk_coefficient
    };
    Ok(SingleAttributeUtility {
        attribute,
        risk_coefficient,
    })
}

/// Evaluates `u` at attribute level `x`; levels outside the range are rejected.
pub fn evaluate_utility(u: &SingleAttributeUtility, x: f64) -> Result<f64> {
    let attr = &u.attribute;
    if !x.is_finite() || !attr.contains(x) {
        return Err(Error::OutOfRange {
            attribute: attr.id.clone(),
            value: x,
            min: attr.min(),
            max: attr.max(),
        });
    }
    Ok(u.value_at(attr.normalize(x)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    Multiplicative,
    AdditiveLimit,
}

/// `(prod (1 + K k_j) - 1) / K - 1`; zero exactly at the nontrivial roots.
///
/// Dividing out the trivial root keeps the function well scaled for small
/// `|K|`, and the `ln_1p`/`exp_m1` pairing avoids cancellation in the product.
fn reduced_master_function(k: &[f64], big_k: f64) -> f64 {
    let log_sum: f64 = k.iter().map(|kj| (big_k * kj).ln_1p()).sum();
    log_sum.exp_m1() / big_k - 1.0
}

/// Residual of `1 + K = prod (1 + K k_j)`.
pub fn master_residual(k: &[f64], big_k: f64) -> f64 {
    let product: f64 = k.iter().map(|kj| 1.0 + big_k * kj).product();
    product - 1.0 - big_k
}

/// Solves for the master scaling constant `K`, excluding the trivial root.
///
/// Returns `(0.0, AdditiveLimit)` when `|sum k_j - 1| <= 1e-9`.
pub fn solve_master_constant(k: &[f64]) -> Result<(f64, AggregationMode)> {
    if k.len() < 2 {
        return Err(Error::InvalidWeights(format!(
            "at least two scaling constants are required, got {}",
            k.len()
        )));
    }
    if let Some((j, kj)) = k
        .iter()
        .enumerate()
        .find(|(_, kj)| !(kj.is_finite() && **kj > 0.0 && **kj < 1.0))
    {
        return Err(Error::InvalidWeights(format!(
            "k[{j}] = {kj} is outside the open interval (0, 1)"
        )));
    }
    let sum: f64 = k.iter().sum();
    if (sum - 1.0).abs() <= ADDITIVE_TOLERANCE {
        return Ok((0.0, AggregationMode::AdditiveLimit));
    }
    let h = |big_k: f64| reduced_master_function(k, big_k);
    let (lo, hi) = if sum < 1.0 {
        let mut hi = 1.0;
        while h(hi) <= 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::InvalidWeights(
                    "master constant did not bracket".into(),
                ));
            }
        }
        (1e-12, hi)
    } else {
        let lo = -1.0 + 1e-12;
        if h(lo) >= 0.0 {
            // Extreme weights push the root below the nominal bracket edge,
            // possibly closer to -1 than the nearest double above it.
            let edge = (-1.0f64).next_up();
            if h(edge) >= 0.0 {
                return Ok((edge, AggregationMode::Multiplicative));
            }
            let root = bisect(h, edge, lo, 0.0).expect("sign change checked");
            return Ok((root, AggregationMode::Multiplicative));
        }
        (lo, -1e-12)
    };
    let root = bisect(h, lo, hi, 1e-12)
        .ok_or_else(|| Error::InvalidWeights("master constant did not bracket".into()))?;
    Ok((
        polish_master_root(k, root, lo, hi),
        AggregationMode::Multiplicative,
    ))
}

/// One Newton step on the unreduced equation, kept only if it improves.
fn polish_master_root(k: &[f64], root: f64, lo: f64, hi: f64) -> f64 {
    let product: f64 = k.iter().map(|kj| 1.0 + root * kj).product();
    let slope = product * k.iter().map(|kj| kj / (1.0 + root * kj)).sum::<f64>() - 1.0;
    if slope == 0.0 || !slope.is_finite() {
        return root;
    }
    let candidate = root - master_residual(k, root) / slope;
    let better = candidate > lo
        && candidate < hi
        && reduced_master_function(k, candidate).abs() < reduced_master_function(k, root).abs();
    if better {
        candidate
    } else {
        root
    }
}

/// An individual's assessed multiattribute utility function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct UserProfile {
    pub attributes: Vec<AttributeSpec>,
    pub utilities: Vec<SingleAttributeUtility>,
    pub scaling_constants: Vec<f64>,
    pub master_constant: f64,
    pub aggregation_mode: AggregationMode,
}

#[derive(Deserialize)]
struct RawProfile {
    attributes: Vec<AttributeSpec>,
    utilities: Vec<SingleAttributeUtility>,
    scaling_constants: Vec<f64>,
    master_constant: f64,
    aggregation_mode: AggregationMode,
}

impl TryFrom<RawProfile> for UserProfile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        let profile = UserProfile {
            attributes: raw.attributes,
            utilities: raw.utilities,
            scaling_constants: raw.scaling_constants,
            master_constant: raw.master_constant,
            aggregation_mode: raw.aggregation_mode,
        };
        profile.validate()?;
        Ok(profile)
    }
}

impl UserProfile {
    /// Builds a profile from per-attribute utilities and scaling constants,
    /// solving for the master constant.
    pub fn new(
        utilities: Vec<SingleAttributeUtility>,
        scaling_constants: Vec<f64>,
    ) -> Result<Self> {
        if utilities.len() != scaling_constants.len() {
            return Err(Error::Alignment {
                expected: utilities.len(),
                got: scaling_constants.len(),
            });
        }
        let (master_constant, aggregation_mode) = solve_master_constant(&scaling_constants)?;
        let profile = UserProfile {
            attributes: utilities.iter().map(|u| u.attribute.clone()).collect(),
            utilities,
            scaling_constants,
            master_constant,
            aggregation_mode,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn utility(&self, attribute_id: &str) -> Option<&SingleAttributeUtility> {
        self.utilities
            .iter()
            .find(|u| u.attribute.id == attribute_id)
    }

    pub fn validate(&self) -> Result<()> {
        let j = self.attributes.len();
        if self.utilities.len() != j {
            return Err(Error::Alignment {
                expected: j,
                got: self.utilities.len(),
            });
        }
        if self.scaling_constants.len() != j {
            return Err(Error::Alignment {
                expected: j,
                got: self.scaling_constants.len(),
            });
        }
        for (i, (attr, u)) in self.attributes.iter().zip(&self.utilities).enumerate() {
            attr.validate()?;
            if &u.attribute != attr {
                return Err(Error::InvalidProfile(format!(
                    "utility {i} is defined over `{}` but attribute {i} is `{}`",
                    u.attribute.id, attr.id
                )));
            }
        }
        for (i, a) in self.attributes.iter().enumerate() {
            if self.attributes[..i].iter().any(|b| b.id == a.id) {
                return Err(Error::InvalidProfile(format!(
                    "duplicate attribute id `{}`",
                    a.id
                )));
            }
        }
        let k = &self.scaling_constants;
        if k.len() < 2
            || k.iter()
                .any(|kj| !(kj.is_finite() && *kj > 0.0 && *kj < 1.0))
        {
            return Err(Error::InvalidWeights(
                "need at least two constants, each in (0, 1)".into(),
            ));
        }
        let sum: f64 = k.iter().sum();
        match self.aggregation_mode {
            AggregationMode::AdditiveLimit => {
                if (sum - 1.0).abs() > ADDITIVE_TOLERANCE {
                    return Err(Error::InvalidProfile(format!(
                        "additive limit requires sum k = 1, got {sum}"
                    )));
                }
            }
            AggregationMode::Multiplicative => {
                let big_k = self.master_constant;
                // negated so that NaN is rejected
                #[allow(clippy::neg_cmp_op_on_partial_ord)]
                if !(big_k > -1.0) || big_k == 0.0 || !big_k.is_finite() {
                    return Err(Error::InvalidProfile(format!(
                        "master constant {big_k} must be finite, > -1 and nonzero"
                    )));
                }
                let residual = master_residual(k, big_k);
                if residual.abs() > MASTER_RESIDUAL_TOLERANCE {
                    return Err(Error::InvalidProfile(format!(
                        "master constant {big_k} leaves residual {residual:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn fingerprint(&self) -> String {
        crate::content_fingerprint(&serde_json::to_vec(self).expect("profile serializes"))
    }
}

fn check_values(profile: &UserProfile, values: &[f64]) -> Result<()> {
    if values.len() != profile.len() {
        return Err(Error::Alignment {
            expected: profile.len(),
            got: values.len(),
        });
    }
    if let Some((index, value)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= 0.0 && **v <= 1.0))
    {
        return Err(Error::UtilityDomain {
            index,
            value: *value,
        });
    }
    Ok(())
}

fn combine(profile: &UserProfile, values: &[f64]) -> f64 {
    let k = &profile.scaling_constants;
    let total = match profile.aggregation_mode {
        AggregationMode::AdditiveLimit => k.iter().zip(values).map(|(kj, uj)| kj * uj).sum(),
        AggregationMode::Multiplicative => {
            let big_k = profile.master_constant;
            let log_sum: f64 = k
                .iter()
                .zip(values)
                .map(|(kj, uj)| (big_k * kj * uj).ln_1p())
                .sum();
            log_sum.exp_m1() / big_k
        }
    };
    total.clamp(0.0, 1.0)
}

/// Overall utility of one set of single-attribute utility values.
pub fn aggregate(profile: &UserProfile, u_values: &[f64]) -> Result<f64> {
    check_values(profile, u_values)?;
    Ok(combine(profile, u_values))
}

/// Expected overall utility from expected single-attribute utilities.
///
/// Valid when the attribute levels are independent: every factor of the
/// multiplicative form is affine in one `u_j`, so the expectation of the
/// product is the product of expectations.
pub fn aggregate_expected(profile: &UserProfile, expected_u_values: &[f64]) -> Result<f64> {
    check_values(profile, expected_u_values)?;
    Ok(combine(profile, expected_u_values))
}
