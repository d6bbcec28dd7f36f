//! Threshold ratios for `q / d` and the chain of contraction constants built
//! from them.

use serde::Serialize;

use crate::error::ThresholdError;

/// Default ratio bound used for the constant pipeline.
pub const DEFAULT_RATIO: f64 = 1.59;

/// Bracket searched by both root finders.
pub const BRACKET: (f64, f64) = (1.01, 3.0);

const MAX_BISECTIONS: usize = 200;

/// `(1/r) exp(1/r) exp(-1 / (r - 1 + exp(1/(r-1))))`.
///
/// Below one exactly when `r` is an admissible ratio bound.
pub fn condition_c(r: f64) -> Result<f64, ThresholdError> {
    if r.is_nan() || r <= 1.0 || !r.is_finite() {
        return Err(ThresholdError::Domain(format!("r = {r} must exceed 1")));
    }
    let inv = 1.0 / r;
    let inner = r - 1.0 + (1.0 / (r - 1.0)).exp();
    Ok(inv * inv.exp() * (-1.0 / inner).exp())
}

/// Bisection for a sign change of `g` on `(lo, hi)`.
fn bisect<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64) -> Result<f64, ThresholdError> {
    let (mut a, mut b) = (lo, hi);
    let (ga, gb) = (g(a), g(b));
    if ga.is_nan() || gb.is_nan() || ga * gb >= 0.0 {
        return Err(ThresholdError::BracketFailure { lo, hi });
    }
    let a_positive = ga > 0.0;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if (g(mid) > 0.0) == a_positive {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Smallest value on the `10^-digits` grid at which `condition_c < 1`.
///
/// The root is located by bisection and then rounded up to the grid; the two
/// neighbouring grid points are re-checked so the answer is the first grid
/// value that satisfies the condition.
pub fn solve_alpha_prime(digits: u32) -> Result<f64, ThresholdError> {
    if digits > 12 {
        return Err(ThresholdError::Domain(format!(
            "digits = {digits} exceeds 12"
        )));
    }
    let (lo, hi) = BRACKET;
    let g = |r: f64| condition_c(r).map(|v| v - 1.0).unwrap_or(f64::NAN);
    let root = bisect(g, lo, hi)?;
    let scale = 10f64.powi(digits as i32);
    let at = |k: f64| condition_c(k / scale).expect("grid point above 1");
    let mut k = (root * scale).ceil();
    while at(k) >= 1.0 {
        k += 1.0;
    }
    while k - 1.0 > lo * scale && at(k - 1.0) < 1.0 {
        k -= 1.0;
    }
    Ok(k / scale)
}

/// The bisection root of `condition_c(r) = 1` without grid rounding.
pub fn alpha_prime_root() -> Result<f64, ThresholdError> {
    let (lo, hi) = BRACKET;
    bisect(
        |r| condition_c(r).map(|v| v - 1.0).unwrap_or(f64::NAN),
        lo,
        hi,
    )
}

/// Root of `(1/a) exp(1/a) = 1`.
pub fn solve_alpha_star() -> f64 {
    let (lo, hi) = BRACKET;
    bisect(|a| (1.0 / a) * (1.0 / a).exp() - 1.0, lo, hi).expect("sign change on the fixed bracket")
}

/// `C < K' < U' < 1` and `U = U'^2`, with the decay profile `zeta(l) = 2 U^(l-2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstantPipeline {
    pub r: f64,
    pub c: f64,
    pub k_prime: f64,
    pub u_prime: f64,
    pub u: f64,
}

impl ConstantPipeline {
    pub fn zeta(&self, level: usize) -> f64 {
        2.0 * self.u.powi(level as i32 - 2)
    }
}

pub fn pipeline(r: f64) -> Result<ConstantPipeline, ThresholdError> {
    let c = condition_c(r)?;
    if c >= 1.0 {
        return Err(ThresholdError::Domain(format!(
            "condition value {c} at r = {r} is not below 1"
        )));
    }
    let k_prime = (1.0 + c) / 2.0;
    let u_prime = (1.0 + k_prime) / 2.0;
    Ok(ConstantPipeline {
        r,
        c,
        k_prime,
        u_prime,
        u: u_prime * u_prime,
    })
}
