//! Beta-distributed attribute estimates and expected single-attribute utility.
//!
//! A four-parameter beta on `(lower, upper)` with shapes `p, q >= 1` has density
//!
//! ```text
//! f(x) = Γ(p+q) / (r Γ(p) Γ(q)) · ((x - lower)/r)^(p-1) · ((upper - x)/r)^(q-1)
//! ```
//!
//! with `r = upper - lower`, mean `lower + r p/(p+q)` and, when `p + q > 2`,
//! mode `lower + r (p-1)/(p+q-2)`. `p = q = 1` is the uniform distribution.
//!
//! Expected utility is computed by adaptive quadrature in `y = (x - lower)/r`
//! ([`expected_utility_quadrature`], the reference evaluator) or by the finite
//! series for integer shapes ([`series::expected_utility_series`]).

pub mod series;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::utility::{evaluate_utility, AttributeSpec, SingleAttributeUtility};

pub use series::{expected_utility_series, series_applicable};

/// Absolute tolerance of the expected-utility quadrature.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

/// Four-parameter beta distribution on `(lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBeta")]
pub struct BetaSpec {
    pub lower: f64,
    pub upper: f64,
    pub p: f64,
    pub q: f64,
}

#[derive(Deserialize)]
struct RawBeta {
    lower: f64,
    upper: f64,
    #[serde(alias = "shape_p")]
    p: f64,
    #[serde(alias = "shape_q")]
    q: f64,
}

impl TryFrom<RawBeta> for BetaSpec {
    type Error = Error;

    fn try_from(raw: RawBeta) -> Result<Self> {
        BetaSpec::new(raw.lower, raw.upper, raw.p, raw.q)
    }
}

fn ln_factorial_ratio(p: f64, q: f64) -> f64 {
    ln_gamma(p + q) - ln_gamma(p) - ln_gamma(q)
}

fn is_small_integer(x: f64) -> bool {
    x.fract() == 0.0 && x <= 85.0
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

impl BetaSpec {
    pub fn new(lower: f64, upper: f64, p: f64, q: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || lower >= upper {
            return Err(Error::InvalidBeta(format!(
                "bounds must satisfy lower < upper, got ({lower}, {upper})"
            )));
        }
        if !(p.is_finite() && q.is_finite()) || p < 1.0 || q < 1.0 {
            return Err(Error::InvalidBeta(format!(
                "shapes must be finite and >= 1, got p = {p}, q = {q}"
            )));
        }
        Ok(BetaSpec { lower, upper, p, q })
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        Self::new(lower, upper, 1.0, 1.0)
    }

    pub fn range(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn mean(&self) -> f64 {
        self.lower + self.range() * self.p / (self.p + self.q)
    }

    pub fn mode(&self) -> Result<f64> {
        let shape_sum = self.p + self.q;
        if shape_sum == 2.0 {
            return Err(Error::UndefinedMode);
        }
        Ok(self.lower + self.range() * (self.p - 1.0) / (shape_sum - 2.0))
    }

    pub fn variance(&self) -> f64 {
        let s = self.p + self.q;
        self.range().powi(2) * self.p * self.q / (s * s * (s + 1.0))
    }

    /// `Γ(p+q) / (Γ(p) Γ(q))`, exact factorial arithmetic for integer shapes.
    pub fn normalizer(&self) -> f64 {
        if is_small_integer(self.p) && is_small_integer(self.q) {
            let (p, q) = (self.p as u32, self.q as u32);
            factorial(p + q - 1) / (factorial(p - 1) * factorial(q - 1))
        } else {
            ln_factorial_ratio(self.p, self.q).exp()
        }
    }

    /// Density of the standard beta on `[0, 1]` at `y`.
    pub fn standard_density(&self, y: f64) -> f64 {
        if !(0.0..=1.0).contains(&y) {
            return 0.0;
        }
        let (p, q) = (self.p, self.q);
        if y == 0.0 || y == 1.0 {
            let edge_shape = if y == 0.0 { p } else { q };
            return if edge_shape == 1.0 {
                self.normalizer()
            } else {
                0.0
            };
        }
        if p + q < 60.0 {
            self.normalizer() * y.powf(p - 1.0) * (1.0 - y).powf(q - 1.0)
        } else {
            (ln_factorial_ratio(p, q) + (p - 1.0) * y.ln() + (q - 1.0) * (-y).ln_1p()).exp()
        }
    }

    /// Density at attribute level `x`; zero outside `[lower, upper]`.
    pub fn density(&self, x: f64) -> f64 {
        if x < self.lower || x > self.upper {
            return 0.0;
        }
        self.standard_density((x - self.lower) / self.range()) / self.range()
    }

    /// `n` evenly spaced `(x, density)` points across the support.
    pub fn density_samples(&self, n: usize) -> Vec<(f64, f64)> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let x = self.lower + self.range() * i as f64 / (n - 1) as f64;
                (x, self.density(x))
            })
            .collect()
    }
}

/// The shape held fixed when fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnownShape {
    P(f64),
    Q(f64),
}

/// The statistic the fitted distribution must reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTarget {
    Mode(f64),
    Mean(f64),
}

/// Solves for the unknown shape so the distribution on `(lower, upper)` has the
/// requested mode or mean.
pub fn fit_beta(lower: f64, upper: f64, known: KnownShape, target: FitTarget) -> Result<BetaSpec> {
    if !(lower.is_finite() && upper.is_finite()) || lower >= upper {
        return Err(Error::InvalidBeta(format!(
            "bounds must satisfy lower < upper, got ({lower}, {upper})"
        )));
    }
    let known_value = match known {
        KnownShape::P(v) | KnownShape::Q(v) => v,
    };
    if !known_value.is_finite() || known_value < 1.0 {
        return Err(Error::InvalidBeta(format!(
            "known shape must be finite and >= 1, got {known_value}"
        )));
    }
    let r = upper - lower;
    let target_value = match target {
        FitTarget::Mode(v) | FitTarget::Mean(v) => v,
    };
    // Feasible targets expressed as a fraction of the range.
    let (t_min, t_max) = match (known, target) {
        (KnownShape::P(p), FitTarget::Mean(_)) => (0.0, p / (p + 1.0)),
        (KnownShape::Q(q), FitTarget::Mean(_)) => (1.0 / (q + 1.0), 1.0),
        (_, FitTarget::Mode(_)) => {
            if known_value == 1.0 {
                return Err(Error::InvalidBeta(
                    "a mode target requires the known shape to exceed 1".into(),
                ));
            }
            (0.0, 1.0)
        }
    };
    let infeasible = || Error::InfeasibleFit {
        target: target_value,
        feasible_min: lower + r * t_min,
        feasible_max: lower + r * t_max,
    };
    if !target_value.is_finite() || target_value <= lower || target_value >= upper {
        return Err(infeasible());
    }
    let t = (target_value - lower) / r;
    let (p, q) = match (known, target) {
        (KnownShape::P(p), FitTarget::Mean(_)) => (p, p * (1.0 - t) / t),
        (KnownShape::Q(q), FitTarget::Mean(_)) => (q * t / (1.0 - t), q),
        (KnownShape::P(p), FitTarget::Mode(_)) => (p, (p - 1.0) / t - p + 2.0),
        (KnownShape::Q(q), FitTarget::Mode(_)) => ((q - 1.0) / (1.0 - t) - q + 2.0, q),
    };
    if !(p >= 1.0 && q >= 1.0) {
        return Err(infeasible());
    }
    BetaSpec::new(lower, upper, p, q)
}

/// An attribute-level estimate: a known value or a beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeEstimate {
    Point(f64),
    Beta(BetaSpec),
}

impl AttributeEstimate {
    pub fn support(&self) -> (f64, f64) {
        match self {
            AttributeEstimate::Point(x) => (*x, *x),
            AttributeEstimate::Beta(b) => (b.lower, b.upper),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            AttributeEstimate::Point(x) => *x,
            AttributeEstimate::Beta(b) => b.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            AttributeEstimate::Point(_) => 0.0,
            AttributeEstimate::Beta(b) => b.variance(),
        }
    }

    /// Checks that the whole support lies inside the attribute range.
    pub fn check_within(&self, attribute: &AttributeSpec) -> Result<()> {
        let (lower, upper) = self.support();
        if attribute.contains(lower) && attribute.contains(upper) {
            Ok(())
        } else {
            Err(Error::EstimateRange {
                attribute: attribute.id.clone(),
                lower,
                upper,
                min: attribute.min(),
                max: attribute.max(),
            })
        }
    }
}

/// Distribution of a sum of independent component estimates.
///
/// Points add exactly, and a single beta shifted by points stays an exact
/// beta. Two or more betas are replaced by the beta on the summed support
/// whose mean and variance equal those of the sum; shapes below 1 are an
/// error.
pub fn sum_estimates(
    parts: &[AttributeEstimate],
) -> std::result::Result<AttributeEstimate, String> {
    if parts.is_empty() {
        return Err("no component estimates".into());
    }
    let betas: Vec<&BetaSpec> = parts
        .iter()
        .filter_map(|e| match e {
            AttributeEstimate::Beta(b) => Some(b),
            AttributeEstimate::Point(_) => None,
        })
        .collect();
    let point_total: f64 = parts
        .iter()
        .filter_map(|e| match e {
            AttributeEstimate::Point(x) => Some(*x),
            AttributeEstimate::Beta(_) => None,
        })
        .sum();
    match betas.as_slice() {
        [] => Ok(AttributeEstimate::Point(point_total)),
        [only] => BetaSpec::new(
            only.lower + point_total,
            only.upper + point_total,
            only.p,
            only.q,
        )
        .map(AttributeEstimate::Beta)
        .map_err(|e| e.to_string()),
        many => {
            let lower = point_total + many.iter().map(|b| b.lower).sum::<f64>();
            let upper = point_total + many.iter().map(|b| b.upper).sum::<f64>();
            let mean = point_total + many.iter().map(|b| b.mean()).sum::<f64>();
            let variance: f64 = many.iter().map(|b| b.variance()).sum();
            let r = upper - lower;
            let t = (mean - lower) / r;
            let v = variance / (r * r);
            let shape_sum = t * (1.0 - t) / v - 1.0;
            let (p, q) = (t * shape_sum, (1.0 - t) * shape_sum);
            BetaSpec::new(lower, upper, p, q)
                .map(AttributeEstimate::Beta)
                .map_err(|_| format!("moment-matched shapes p = {p:.4}, q = {q:.4} fall below 1"))
        }
    }
}

/// Expected utility of `u` under `spec` by adaptive quadrature.
pub fn expected_utility_quadrature(u: &SingleAttributeUtility, spec: &BetaSpec) -> Result<f64> {
    AttributeEstimate::Beta(*spec).check_within(&u.attribute)?;
    let attr = &u.attribute;
    let z_lower = attr.normalize(spec.lower);
    let z_span = spec.range() / (attr.range_best - attr.range_worst);
    let integrand = |y: f64| u.value_at(z_lower + z_span * y) * spec.standard_density(y);
    let result = quadrature::integrate(integrand, 0.0, 1.0, QUADRATURE_TOLERANCE)?;
    Ok(result.value.clamp(0.0, 1.0))
}

/// Expected utility of one attribute estimate.
///
/// Points evaluate directly, linear utilities use the mean, integer shapes up
/// to 10 take the closed-form series and everything else goes to quadrature.
pub fn expected_utility(u: &SingleAttributeUtility, estimate: &AttributeEstimate) -> Result<f64> {
    match estimate {
        AttributeEstimate::Point(x) => evaluate_utility(u, *x),
        AttributeEstimate::Beta(spec) => {
            estimate.check_within(&u.attribute)?;
            if u.is_linear() {
                let z = u.attribute.normalize(spec.mean());
                Ok(z.clamp(0.0, 1.0))
            } else if series_applicable(u, spec) {
                expected_utility_series(u, spec)
            } else {
                expected_utility_quadrature(u, spec)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::make_exponential_utility;

    fn unit_attr() -> AttributeSpec {
        AttributeSpec::new("x", "X", "", 0.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_density() {
        let b = BetaSpec::uniform(2.0, 6.0).unwrap();
        for x in [2.0, 3.3, 5.9, 6.0] {
            assert!((b.density(x) - 0.25).abs() < 1e-15);
        }
        assert_eq!(b.density(1.0), 0.0);
        assert_eq!(b.density(6.5), 0.0);
    }

    #[test]
    fn symmetric_density_peak() {
        // Γ(4) / (Γ(2) Γ(2)) = 6, times 0.5 * 0.5
        let b = BetaSpec::new(0.0, 1.0, 2.0, 2.0).unwrap();
        assert!((b.density(0.5) - 1.5).abs() < 1e-15);
        assert_eq!(b.density(-1.0), 0.0);
    }

    #[test]
    fn mean_and_mode() {
        let b = BetaSpec::new(0.0, 1.0, 2.0, 2.0).unwrap();
        assert_eq!(b.mean(), 0.5);
        assert_eq!(b.mode().unwrap(), 0.5);
        let b = BetaSpec::new(10.0, 100.0, 1.1, 2.025).unwrap();
        assert!((b.mean() - 41.68).abs() < 1e-12);
        assert!((b.mode().unwrap() - 18.0).abs() < 1e-12);
        assert_eq!(
            BetaSpec::uniform(0.0, 1.0).unwrap().mode().unwrap_err(),
            Error::UndefinedMode
        );
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(BetaSpec::new(1.0, 1.0, 2.0, 2.0).is_err());
        assert!(BetaSpec::new(0.0, 1.0, 0.5, 2.0).is_err());
        assert!(BetaSpec::new(0.0, 1.0, 2.0, f64::INFINITY).is_err());
        let json = r#"{"lower": 0, "upper": 1, "p": 0.9, "q": 2}"#;
        assert!(serde_json::from_str::<BetaSpec>(json).is_err());
        let json = r#"{"lower": 0, "upper": 1, "shape_p": 3, "shape_q": 2}"#;
        assert_eq!(serde_json::from_str::<BetaSpec>(json).unwrap().p, 3.0);
    }

    #[test]
    fn fit_from_mode_known_values() {
        let b = fit_beta(10.0, 100.0, KnownShape::P(1.1), FitTarget::Mode(18.0)).unwrap();
        // q = 0.1 * 90 / 8 - 1.1 + 2
        assert!((b.q - 2.025).abs() < 1e-12);
        assert!((b.mean() - 41.68).abs() < 1e-9);
        assert!((b.mode().unwrap() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn fit_from_mean() {
        let b = fit_beta(0.0, 1.0, KnownShape::P(2.0), FitTarget::Mean(0.5)).unwrap();
        assert!((b.q - 2.0).abs() < 1e-15);
        // p = q t / (1 - t) = 3 * 0.25 / 0.75
        let b = fit_beta(0.0, 1.0, KnownShape::Q(3.0), FitTarget::Mean(0.25)).unwrap();
        assert!((b.p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fit_from_mode_with_known_q() {
        let b = fit_beta(0.0, 10.0, KnownShape::Q(3.0), FitTarget::Mode(7.0)).unwrap();
        assert!((b.mode().unwrap() - 7.0).abs() < 1e-12);
        assert_eq!(b.q, 3.0);
    }

    #[test]
    fn infeasible_fit_reports_interval() {
        // p = 2 caps the mean at 2/3 of the range
        let err = fit_beta(0.0, 3.0, KnownShape::P(2.0), FitTarget::Mean(2.5)).unwrap_err();
        match err {
            Error::InfeasibleFit {
                feasible_min,
                feasible_max,
                ..
            } => {
                assert_eq!(feasible_min, 0.0);
                assert!((feasible_max - 2.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(fit_beta(0.0, 1.0, KnownShape::P(2.0), FitTarget::Mode(1.0)).is_err());
        assert!(fit_beta(0.0, 1.0, KnownShape::P(1.0), FitTarget::Mode(0.3)).is_err());
        assert!(fit_beta(0.0, 1.0, KnownShape::Q(0.5), FitTarget::Mean(0.3)).is_err());
    }

    #[test]
    fn quadrature_uniform_linear() {
        let u = make_exponential_utility(unit_attr(), 0.0).unwrap();
        let b = BetaSpec::uniform(0.0, 1.0).unwrap();
        assert!((expected_utility_quadrature(&u, &b).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quadrature_linear_equals_utility_of_mean() {
        let attr = AttributeSpec::new("cost", "Cost", "$", 200.0, 20.0).unwrap();
        let u = make_exponential_utility(attr, 0.0).unwrap();
        let b = BetaSpec::new(40.0, 130.0, 1.7, 3.2).unwrap();
        let eu = expected_utility_quadrature(&u, &b).unwrap();
        assert!((eu - evaluate_utility(&u, b.mean()).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn concentrated_beta_approaches_point() {
        let u = make_exponential_utility(unit_attr(), 3.0).unwrap();
        let b = BetaSpec::new(0.2, 0.8, 50.0, 50.0).unwrap();
        let eu = expected_utility_quadrature(&u, &b).unwrap();
        assert!((eu - evaluate_utility(&u, 0.5).unwrap()).abs() < 5e-3);
    }

    #[test]
    fn support_outside_range_rejected() {
        let u = make_exponential_utility(unit_attr(), 1.0).unwrap();
        let b = BetaSpec::uniform(0.5, 1.5).unwrap();
        assert_eq!(
            expected_utility_quadrature(&u, &b).unwrap_err().code(),
            "estimate_range"
        );
    }

    #[test]
    fn sum_of_points_and_one_beta_is_exact_shift() {
        let b = BetaSpec::new(1.0, 3.0, 2.0, 5.0).unwrap();
        let sum = sum_estimates(&[
            AttributeEstimate::Point(4.0),
            AttributeEstimate::Beta(b),
            AttributeEstimate::Point(0.5),
        ])
        .unwrap();
        assert_eq!(
            sum,
            AttributeEstimate::Beta(BetaSpec::new(5.5, 7.5, 2.0, 5.0).unwrap())
        );
    }

    #[test]
    fn sum_of_betas_matches_moments() {
        let a = BetaSpec::new(0.0, 1.0, 1.0, 1.0).unwrap();
        let b = BetaSpec::new(0.0, 1.0, 1.0, 1.0).unwrap();
        let AttributeEstimate::Beta(s) =
            sum_estimates(&[AttributeEstimate::Beta(a), AttributeEstimate::Beta(b)]).unwrap()
        else {
            panic!("expected beta");
        };
        // triangular on [0, 2]: mean 1, variance 1/6  =>  p = q = 2.5
        assert_eq!((s.lower, s.upper), (0.0, 2.0));
        assert!((s.p - 2.5).abs() < 1e-12 && (s.q - 2.5).abs() < 1e-12);
        assert!((s.variance() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn dispatch_uses_point_and_linear_shortcuts() {
        let u = make_exponential_utility(unit_attr(), 0.0).unwrap();
        let b = BetaSpec::new(0.1, 0.9, 2.5, 1.5).unwrap();
        let eu = expected_utility(&u, &AttributeEstimate::Beta(b)).unwrap();
        assert!((eu - u.attribute.normalize(b.mean())).abs() < 1e-15);
        let eu = expected_utility(&u, &AttributeEstimate::Point(0.3)).unwrap();
        assert!((eu - 0.3).abs() < 1e-15);
    }
}
