//! Scalar special functions: the binary entropy `H` and its derivatives,
//! relative entropy, the trade-off constant `C(e)`, the ideal-value distance
//! `V_a`, and the oversaturated small-pode value `a0`.
//!
//! The checked entry points take a [`Probability`]; the unchecked `h*`
//! helpers are used on hot paths where the caller already guarantees the
//! argument is interior.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!("{value} is not in [0,1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    fn interior(self, what: &str) -> Result<f64> {
        if self.0 > 0.0 && self.0 < 1.0 {
            Ok(self.0)
        } else {
            Err(Error::domain(format!("{what} requires 0 < p < 1, got {}", self.0)))
        }
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Probability::new(v)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// `x ln y` with the convention `0 ln 0 = 0`.
#[inline]
fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// `x ln(1 + y)` with the convention that the product is 0 when `x` is.
#[inline]
fn xln1p(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln_1p()
    }
}

/// Binary entropy in nats. Endpoints give 0.
#[inline]
pub fn h(p: f64) -> f64 {
    -(xlny(p, p) + xlny(1.0 - p, 1.0 - p))
}

#[inline]
pub fn h1(p: f64) -> f64 {
    ((1.0 - p) / p).ln()
}

#[inline]
pub fn h2(p: f64) -> f64 {
    -1.0 / (p * (1.0 - p))
}

#[inline]
pub fn h3(p: f64) -> f64 {
    let q = p * (1.0 - p);
    (1.0 - 2.0 * p) / (q * q)
}

/// `H(e + x) - H(e)` without the cancellation of the naive difference.
///
/// The result carries relative precision in `x` even when `|x|` is many
/// orders of magnitude below `e`, which is what lets the optimizer resolve
/// entropy differences of order `δ⁵`.
pub fn h_shift(e: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let p = e + x;
    let q = 1.0 - e - x;
    -xln1p(p, x / e) - xln1p(q, -x / (1.0 - e)) + x * ((1.0 - e) / e).ln()
}

/// `ν = H'(e) - (e - 1/2) H''(e)`.
pub fn nu(e: f64) -> f64 {
    h1(e) - (e - 0.5) * h2(e)
}

pub fn entropy_h(p: Probability) -> f64 {
    h(p.0)
}

pub fn entropy_h_deriv(p: Probability, order: u8) -> Result<f64> {
    let p = p.interior("entropy derivative")?;
    match order {
        1 => Ok(h1(p)),
        2 => Ok(h2(p)),
        3 => Ok(h3(p)),
        other => Err(Error::InvalidOrder(other)),
    }
}

/// Relative entropy of Bernoulli(p) with respect to Bernoulli(q).
pub fn rel_entropy(p: Probability, q: Probability) -> Result<f64> {
    let q = q.interior("relative entropy reference")?;
    let p = p.0;
    let d = xlny(p, p / q) + xlny(1.0 - p, (1.0 - p) / (1.0 - q));
    Ok(d.max(0.0))
}

/// Below this distance from 1/2 the trade-off constant switches to its series.
const TRADEOFF_SERIES_BAND: f64 = 1e-6;

/// `C(e) = ln(e/(1-e)) / (2e-1)`, continuous through `e = 1/2` where it equals 2.
pub fn tradeoff_c(e: Probability) -> Result<f64> {
    let e = e.interior("tradeoff constant")?;
    let u = 2.0 * e - 1.0;
    if u.abs() < TRADEOFF_SERIES_BAND {
        // ln((1+u)/(1-u))/u = 2 (1 + u²/3 + u⁴/5 + ...)
        let u2 = u * u;
        Ok(2.0 * (1.0 + u2 / 3.0 + u2 * u2 / 5.0))
    } else {
        Ok((e / (1.0 - e)).ln() / u)
    }
}

/// `V_a(x) = min{x², (x-a)²}`.
pub fn mass_distance(x: f64, a: f64) -> f64 {
    let y = x - a;
    (x * x).min(y * y)
}

/// Closed form of the root of `H'(a0) = (1 - 2/e) H'(e)`.
pub fn a0_closed_form(e: f64) -> f64 {
    let r = e / (1.0 - e);
    1.0 / (1.0 + r.powf(2.0 / e - 1.0))
}

/// Root of `H'(a0) = (1 - 2/e) H'(e)` by bisection, finished with one Newton step.
pub fn solve_a0(e: Probability) -> Result<f64> {
    let e = e.interior("a0")?;
    let target = (1.0 - 2.0 / e) * h1(e);
    // H' is strictly decreasing on (0,1), so f has exactly one sign change.
    let f = |a: f64| h1(a) - target;
    let lo = f64::MIN_POSITIVE.max(1e-300);
    let hi = 1.0 - f64::EPSILON / 2.0;
    let mut a = roots::bisect(f, lo, hi, 1e-14, 400)?;
    let fa = f(a);
    let step = fa / h2(a);
    if step.is_finite() {
        let polished = a - step;
        if polished > 0.0 && polished < 1.0 && f(polished).abs() <= fa.abs() {
            a = polished;
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy_h(p(0.0)), 0.0);
        assert_eq!(entropy_h(p(1.0)), 0.0);
        assert_abs_diff_eq!(entropy_h(p(0.5)), std::f64::consts::LN_2, epsilon = 1e-15);
        // mpmath, 30 digits
        assert_abs_diff_eq!(entropy_h(p(0.75)), 0.562_335_144_618_808_35, epsilon = 1e-15);
        assert!(Probability::new(1.5).is_err());
        assert!(Probability::new(-0.1).is_err());
    }

    #[test]
    fn derivative_values() {
        assert_abs_diff_eq!(entropy_h_deriv(p(0.5), 1).unwrap(), 0.0);
        assert_abs_diff_eq!(entropy_h_deriv(p(0.75), 1).unwrap(), -1.098_612_288_668_11, epsilon = 1e-13);
        assert_abs_diff_eq!(entropy_h_deriv(p(0.75), 2).unwrap(), -16.0 / 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(entropy_h_deriv(p(0.75), 3).unwrap(), -128.0 / 9.0, epsilon = 1e-12);
        assert!(matches!(entropy_h_deriv(p(0.0), 1), Err(Error::Domain(_))));
        assert!(matches!(entropy_h_deriv(p(1.0), 2), Err(Error::Domain(_))));
        assert_eq!(entropy_h_deriv(p(0.3), 4), Err(Error::InvalidOrder(4)));
    }

    #[test]
    fn relative_entropy_values() {
        assert_eq!(rel_entropy(p(0.3), p(0.3)).unwrap(), 0.0);
        // 0.25 ln(1/3) + 0.75 ln 3 = (2e-1) ln(e/(1-e)) at e = 0.75
        assert_abs_diff_eq!(rel_entropy(p(0.25), p(0.75)).unwrap(), 0.549_306_144_334_054_8, epsilon = 1e-14);
        assert_abs_diff_eq!(rel_entropy(p(1.0), p(0.5)).unwrap(), std::f64::consts::LN_2, epsilon = 1e-15);
        assert!(rel_entropy(p(0.5), p(0.0)).is_err());
    }

    #[test]
    fn tradeoff_values() {
        assert_abs_diff_eq!(tradeoff_c(p(0.75)).unwrap(), 2.197_224_577_336_219_4, epsilon = 1e-14);
        assert_eq!(tradeoff_c(p(0.5)).unwrap(), 2.0);
        // mpmath at 0.5 + 1e-6: 2.0000000000026668
        assert_abs_diff_eq!(tradeoff_c(p(0.5 + 1e-6)).unwrap(), 2.000_000_000_002_667, epsilon = 1e-9);
        assert_abs_diff_eq!(tradeoff_c(p(0.5 - 1e-7)).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tradeoff_c(p(0.2)).unwrap(), tradeoff_c(p(0.8)).unwrap(), epsilon = 1e-14);
        assert!(tradeoff_c(p(1.0)).is_err());
    }

    #[test]
    fn mass_distance_values() {
        assert_eq!(mass_distance(0.0, 0.7), 0.0);
        assert_eq!(mass_distance(0.7, 0.7), 0.0);
        assert_abs_diff_eq!(mass_distance(0.3, 1.0), 0.09, epsilon = 1e-16);
        for &a in &[1.0, -1.0, 0.5, -0.5] {
            for i in -20..=20 {
                let x = i as f64 * 0.1;
                assert_abs_diff_eq!(mass_distance(x, a), a * a * mass_distance(x / a, 1.0), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn a0_values() {
        assert_abs_diff_eq!(solve_a0(p(0.5)).unwrap(), 0.5, epsilon = 1e-14);
        // mpmath bisection on the defining equation: 0.27967279043988031
        let a = solve_a0(p(0.6)).unwrap();
        assert_abs_diff_eq!(a, 0.279_672_790_439_880_3, epsilon = 1e-13);
        assert_abs_diff_eq!(a, a0_closed_form(0.6), epsilon = 1e-12);
        assert_abs_diff_eq!(h1(a) - (1.0 - 2.0 / 0.6) * h1(0.6), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(solve_a0(p(0.75)).unwrap(), 0.138_116_749_709_607_84, epsilon = 1e-13);
        assert_abs_diff_eq!(solve_a0(p(0.3)).unwrap(), 0.991_848_387_841_310_7, epsilon = 1e-13);
    }

    #[test]
    fn shifted_entropy_matches_direct_difference() {
        for &e in &[0.3, 0.6, 0.75, 0.95] {
            for &x in &[-0.2, -1e-3, 1e-6, 0.04] {
                assert_abs_diff_eq!(h_shift(e, x), h(e + x) - h(e), epsilon = 1e-14);
            }
        }
        assert_abs_diff_eq!(h_shift(0.75, 0.25), -h(0.75), epsilon = 1e-15);
        assert_abs_diff_eq!(h_shift(0.75, -0.75), -h(0.75), epsilon = 1e-15);
        // second-order accurate for tiny shifts
        let x = 1e-9;
        assert_abs_diff_eq!(h_shift(0.75, x) / x, h1(0.75) + 0.5 * h2(0.75) * x, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn entropy_is_midpoint_concave(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            prop_assert!(h((a + b) / 2.0) + 1e-15 >= (h(a) + h(b)) / 2.0);
        }

        #[test]
        fn derivatives_match_central_differences(x in 0.05f64..0.95) {
            let step = 1e-6;
            let fd1 = (h(x + step) - h(x - step)) / (2.0 * step);
            let fd2 = (h1(x + step) - h1(x - step)) / (2.0 * step);
            let fd3 = (h2(x + step) - h2(x - step)) / (2.0 * step);
            prop_assert!((fd1 - h1(x)).abs() <= 1e-4 * h1(x).abs().max(1e-3));
            prop_assert!((fd2 - h2(x)).abs() <= 1e-4 * h2(x).abs());
            prop_assert!((fd3 - h3(x)).abs() <= 1e-4 * h3(x).abs().max(1e-3));
        }

        #[test]
        fn tradeoff_bounds_relative_entropy(e in 0.02f64..0.98, q in 0.0f64..1.0) {
            prop_assume!((q - e).abs() > 1e-4);
            let d = rel_entropy(p(q), p(e)).unwrap();
            let c = tradeoff_c(p(e)).unwrap();
            prop_assert!(d / ((q - e) * (q - e)) >= c * (1.0 - 1e-9));
        }
    }

    #[test]
    fn tradeoff_is_attained_at_reflected_point() {
        for &e in &[0.55, 0.6, 0.75, 0.9, 0.2] {
            let q = 1.0 - e;
            let ratio = rel_entropy(p(q), p(e)).unwrap() / ((q - e) * (q - e));
            assert!((ratio - tradeoff_c(p(e)).unwrap()).abs() < 1e-10);
        }
    }
}
