//! Closed-form expected utility for integer beta shapes.
//!
//! With `z(y) = z_L + d y` the normalized level at beta coordinate `y`, the
//! expected normalized exponential utility is
//!
//! ```text
//! E = (1 - e^{-c z_L} M) / (1 - e^{-c}),   M = (1/B(p,q)) ∫₀¹ e^{s y} y^{p-1} (1-y)^{q-1} dy
//! ```
//!
//! with `s = -c d`. Expanding `(1-y)^{q-1}` binomially leaves moments
//! `J(m, s) = ∫₀¹ y^m e^{s y} dy`, which integrate by parts into
//!
//! ```text
//! J(m, s) = (-1)^{m+1} m!/s^{m+1} + e^s Σ_{i=0}^{m} (-1)^i m!/(m-i)! / s^{i+1}
//! ```
//!
//! The form is valid for every integer `p, q >= 1` including `q = 1`. Its
//! alternating terms cancel catastrophically when `|s|` is small, so all
//! arithmetic runs in binary fixed point whose width is sized from the largest
//! intermediate magnitude.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::BetaSpec;
use crate::error::{Error, Result};
use crate::utility::SingleAttributeUtility;

/// Largest integer shape accepted by the series.
pub const MAX_SERIES_SHAPE: u32 = 10;

const GUARD_BITS: u64 = 128;
const MAX_FRACTION_BITS: u64 = 20_000;

fn integer_shape(x: f64) -> Option<u32> {
    if x.fract() == 0.0 && (1.0..=f64::from(MAX_SERIES_SHAPE)).contains(&x) {
        Some(x as u32)
    } else {
        None
    }
}

/// Whether [`expected_utility_series`] accepts this utility and spec.
pub fn series_applicable(u: &SingleAttributeUtility, spec: &BetaSpec) -> bool {
    !u.is_linear() && integer_shape(spec.p).is_some() && integer_shape(spec.q).is_some()
}

/// Fixed-point number `mantissa / 2^bits` sharing one scale per evaluation.
#[derive(Clone, Debug)]
struct Fixed(BigInt);

struct Scale {
    bits: u64,
}

impl Scale {
    fn one(&self) -> Fixed {
        Fixed(BigInt::from(1) << self.bits)
    }

    /// Exact conversion of a finite double.
    fn fixed(&self, x: f64) -> Fixed {
        if x == 0.0 {
            return Fixed(BigInt::zero());
        }
        let raw = x.to_bits();
        let negative = raw >> 63 == 1;
        let exponent = ((raw >> 52) & 0x7ff) as i64;
        let fraction = raw & ((1u64 << 52) - 1);
        let (mantissa, power) = if exponent == 0 {
            (fraction, -1074)
        } else {
            (fraction | (1u64 << 52), exponent - 1075)
        };
        let shift = self.bits as i64 + power;
        let mut m = BigInt::from(mantissa);
        m = if shift >= 0 {
            m << shift as u64
        } else {
            m >> (-shift) as u64
        };
        Fixed(if negative { -m } else { m })
    }

    fn mul(&self, a: &Fixed, b: &Fixed) -> Fixed {
        Fixed((&a.0 * &b.0) >> self.bits)
    }

    fn div(&self, a: &Fixed, b: &Fixed) -> Fixed {
        Fixed((&a.0 << self.bits) / &b.0)
    }

    fn scale_int(&self, a: &Fixed, n: u64) -> Fixed {
        Fixed(&a.0 * BigInt::from(n))
    }

    fn exp(&self, x: &Fixed) -> Fixed {
        // Halve until |x| <= 1/2, sum the Taylor series, then square back.
        let magnitude = self.to_f64(x).abs();
        let halvings = if magnitude > 0.5 {
            (magnitude / 0.5).log2().ceil() as u64
        } else {
            0
        };
        let reduced = Fixed(&x.0 >> halvings);
        let mut sum = self.one();
        let mut term = self.one();
        for n in 1u64.. {
            term = self.mul(&term, &reduced);
            term = Fixed(&term.0 / BigInt::from(n));
            if term.0.is_zero() {
                break;
            }
            sum = Fixed(&sum.0 + &term.0);
        }
        for _ in 0..halvings {
            sum = self.mul(&sum, &sum);
        }
        sum
    }

    fn to_f64(&self, a: &Fixed) -> f64 {
        let magnitude = a.0.abs();
        let width = magnitude.bits();
        if width == 0 {
            return 0.0;
        }
        let drop = width.saturating_sub(64);
        let top = (&magnitude >> drop)
            .to_u64()
            .expect("at most 64 significant bits remain");
        let value = ldexp(top as f64, drop as i64 - self.bits as i64);
        if a.0.is_negative() {
            -value
        } else {
            value
        }
    }
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    let big = 2f64.powi(1000);
    let small = 2f64.powi(-1000);
    while e > 1000 {
        x *= big;
        e -= 1000;
    }
    while e < -1000 {
        x *= small;
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

fn log2_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).log2()).sum()
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

fn factorial(n: u64) -> u64 {
    (2..=n).product()
}

/// Expected utility by the finite series; agrees with quadrature to ~1e-12.
///
/// Requires integer shapes in `1..=10` and a nonlinear utility.
pub fn expected_utility_series(u: &SingleAttributeUtility, spec: &BetaSpec) -> Result<f64> {
    let (Some(p), Some(q)) = (integer_shape(spec.p), integer_shape(spec.q)) else {
        return Err(Error::UnsupportedShape(format!(
            "series requires integer shapes in 1..={MAX_SERIES_SHAPE}, got p = {}, q = {}",
            spec.p, spec.q
        )));
    };
    if u.is_linear() {
        return Err(Error::UnsupportedShape(
            "series requires a nonzero risk coefficient; linear utilities use the mean".into(),
        ));
    }
    super::AttributeEstimate::Beta(*spec).check_within(&u.attribute)?;
    let (p, q) = (u64::from(p), u64::from(q));
    let c = u.risk_coefficient;
    let attr = &u.attribute;
    let z_lower = attr.normalize(spec.lower);
    let z_span = spec.range() / (attr.range_best - attr.range_worst);
    let s = -c * z_span;
    if s == 0.0 {
        return Err(Error::UnsupportedShape(
            "zero exponent in the series".into(),
        ));
    }

    let top = p + q - 2;
    let needed = log2_factorial(top)
        + (top + 1) as f64 * (-s.abs().log2()).max(0.0)
        + s.max(0.0) * std::f64::consts::LOG2_E
        + q as f64
        + log2_factorial(p + q - 1)
        + c.abs() * (z_lower.abs() + 1.0) * std::f64::consts::LOG2_E
        + (-(-c).exp_m1().abs().log2()).max(0.0)
        + 16.0;
    let bits = GUARD_BITS + needed.ceil().max(0.0) as u64;
    if bits > MAX_FRACTION_BITS {
        return Err(Error::UnsupportedShape(format!(
            "exponent {s:e} too close to zero for the series"
        )));
    }
    let sc = Scale { bits };

    let s_fx = sc.fixed(s);
    let inv_s = sc.div(&sc.one(), &s_fx);
    let exp_s = sc.exp(&s_fx);
    // inv_powers[k] = s^{-k}
    let mut inv_powers = vec![sc.one()];
    for k in 1..=(top + 1) as usize {
        let next = sc.mul(&inv_powers[k - 1], &inv_s);
        inv_powers.push(next);
    }

    let moment = |m: u64| -> Fixed {
        let mut tail = BigInt::zero();
        let mut falling = 1u64;
        for i in 0..=m {
            if i > 0 {
                falling *= m - i + 1;
            }
            let term = sc.scale_int(&inv_powers[(i + 1) as usize], falling);
            if i % 2 == 0 {
                tail += term.0;
            } else {
                tail -= term.0;
            }
        }
        let head = sc.scale_int(&inv_powers[(m + 1) as usize], factorial(m));
        let head = if m % 2 == 1 { head.0 } else { -head.0 };
        Fixed(head + sc.mul(&exp_s, &Fixed(tail)).0)
    };

    let mut integral = BigInt::zero();
    for n in 1..=q {
        let term = sc.scale_int(&moment(n + p - 2), binomial(q - 1, n - 1));
        if n % 2 == 1 {
            integral += term.0;
        } else {
            integral -= term.0;
        }
    }
    let normalizer = factorial(p + q - 1) / (factorial(p - 1) * factorial(q - 1));
    let mgf = sc.scale_int(&Fixed(integral), normalizer);

    let shift = sc.exp(&sc.fixed(-c * z_lower));
    let numerator = Fixed(sc.one().0 - sc.mul(&shift, &mgf).0);
    let denominator = Fixed(sc.one().0 - sc.exp(&sc.fixed(-c)).0);
    let value = sc.to_f64(&sc.div(&numerator, &denominator));
    Ok(value.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uncertainty::expected_utility_quadrature;
    use crate::utility::{make_exponential_utility, AttributeSpec};

    fn unit(c: f64) -> SingleAttributeUtility {
        make_exponential_utility(AttributeSpec::new("x", "X", "", 0.0, 1.0).unwrap(), c).unwrap()
    }

    #[test]
    fn fixed_point_round_trip() {
        let sc = Scale { bits: 200 };
        for x in [1.0, -3.25, 1e-30, 12345.678, -7.5e-20] {
            assert_eq!(sc.to_f64(&sc.fixed(x)), x);
        }
    }

    #[test]
    fn fixed_point_exp() {
        let sc = Scale { bits: 200 };
        for x in [0.0, 0.3, -1.0, 7.25, -20.0, 50.0] {
            let got = sc.to_f64(&sc.exp(&sc.fixed(x)));
            assert!((got / x.exp() - 1.0).abs() < 1e-15, "exp({x}) = {got}");
        }
    }

    #[test]
    fn uniform_matches_antiderivative() {
        // ∫₀¹ (1 - e^{-cz})/(1 - e^{-c}) dz = (1 - (1 - e^{-c})/c) / (1 - e^{-c})
        for c in [-3.0f64, -0.5, 0.5, 2.0, 8.0] {
            let spec = BetaSpec::uniform(0.0, 1.0).unwrap();
            let exact = (1.0 - (-(-c).exp_m1()) / c) / (-(-c).exp_m1());
            let got = expected_utility_series(&unit(c), &spec).unwrap();
            assert!((got - exact).abs() < 1e-14, "c = {c}: {got} vs {exact}");
        }
    }

    #[test]
    fn agrees_with_quadrature() {
        let spec = BetaSpec::new(0.0, 1.0, 2.0, 3.0).unwrap();
        let u = unit(1.0);
        let series = expected_utility_series(&u, &spec).unwrap();
        let quad = expected_utility_quadrature(&u, &spec).unwrap();
        assert!((series - quad).abs() < 1e-12);
    }

    #[test]
    fn tiny_exponent_stays_accurate() {
        let spec = BetaSpec::new(0.0, 1.0, 9.0, 9.0).unwrap();
        let u = unit(1e-6);
        let series = expected_utility_series(&u, &spec).unwrap();
        let quad = expected_utility_quadrature(&u, &spec).unwrap();
        assert!((series - quad).abs() < 1e-12);
    }

    #[test]
    fn rejects_linear_and_fractional() {
        let spec = BetaSpec::uniform(0.0, 1.0).unwrap();
        assert_eq!(
            expected_utility_series(&unit(0.0), &spec)
                .unwrap_err()
                .code(),
            "unsupported_shape"
        );
        let spec = BetaSpec::new(0.0, 1.0, 1.5, 2.0).unwrap();
        assert_eq!(
            expected_utility_series(&unit(1.0), &spec)
                .unwrap_err()
                .code(),
            "unsupported_shape"
        );
        let spec = BetaSpec::new(0.0, 1.0, 11.0, 2.0).unwrap();
        assert!(!series_applicable(&unit(1.0), &spec));
    }
}
