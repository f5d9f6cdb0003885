//! Log-domain arithmetic, generalized inverses of non-decreasing step
//! functions, and the small set of order-statistic utilities shared by the
//! rest of the crate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    #[error("logsumexp of an empty term list")]
    EmptyTerms,
    #[error("log_diff_exp with a < b: a = {a}, b = {b} (negative mass)")]
    NegativeMass { a: f64, b: f64 },
    #[error("step function breakpoints must be strictly increasing in x")]
    UnsortedBreakpoints,
    #[error("step function y values must be non-decreasing")]
    DecreasingValues,
}

/// A prior-mass weight stored as `log(w)`, `w in (0, 1]`.
/// `NEG_INFINITY` encodes `w = 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogWeight(pub f64);

impl LogWeight {
    pub const ZERO_MASS: LogWeight = LogWeight(f64::NEG_INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero_mass(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

/// `log(sum_k exp(term_k))` by max-factoring. Never exponentiates a
/// large-magnitude intermediate.
pub fn logsumexp(terms: &[f64]) -> Result<f64, NumericsError> {
    if terms.is_empty() {
        return Err(NumericsError::EmptyTerms);
    }
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Two-term log-domain addition, `log(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log(exp(a) - exp(b))` for `a >= b`; `NEG_INFINITY` when `a == b`.
pub fn log_diff_exp(a: f64, b: f64) -> Result<f64, NumericsError> {
    if a < b {
        return Err(NumericsError::NegativeMass { a, b });
    }
    if a == b {
        return Ok(f64::NEG_INFINITY);
    }
    if b == f64::NEG_INFINITY {
        return Ok(a);
    }
    Ok(a + (-((b - a).exp())).ln_1p())
}

/// A non-decreasing, piecewise-constant, left-continuous function on the
/// reals. The value at a breakpoint is the limit from the left, so
/// `T(x) = y_k` for `x in (x_k, x_{k+1}]` and `T(x) = left_limit_value`
/// for `x <= x_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<(f64, f64)>,
    left_limit_value: f64,
}

impl StepFunction {
    pub fn new(
        breakpoints: Vec<(f64, f64)>,
        left_limit_value: f64,
    ) -> Result<Self, NumericsError> {
        let mut prev_x = f64::NEG_INFINITY;
        let mut prev_y = left_limit_value;
        for &(x, y) in &breakpoints {
            if x <= prev_x {
                return Err(NumericsError::UnsortedBreakpoints);
            }
            if y < prev_y {
                return Err(NumericsError::DecreasingValues);
            }
            prev_x = x;
            prev_y = y;
        }
        Ok(Self {
            breakpoints,
            left_limit_value,
        })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn left_limit_value(&self) -> f64 {
        self.left_limit_value
    }

    /// Left-continuous evaluation: the value taken on the largest
    /// half-open interval `(x_k, x_{k+1}]` containing `x`.
    pub fn eval(&self, x: f64) -> f64 {
        // largest breakpoint strictly below x
        let idx = self.breakpoints.partition_point(|&(bx, _)| bx < x);
        if idx == 0 {
            self.left_limit_value
        } else {
            self.breakpoints[idx - 1].1
        }
    }

    /// Limit from the right, `T(x+)`.
    pub fn eval_right(&self, x: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&(bx, _)| bx <= x);
        if idx == 0 {
            self.left_limit_value
        } else {
            self.breakpoints[idx - 1].1
        }
    }

    /// Supremum of the range, `T(+inf)`.
    pub fn sup(&self) -> f64 {
        self.breakpoints
            .last()
            .map(|&(_, y)| y)
            .unwrap_or(self.left_limit_value)
    }
}

/// Left-continuous generalized inverse `T^-(y) = inf{x : T(x) >= y}`,
/// with `inf {} = +inf`.
pub fn generalized_inverse(t: &StepFunction, y: f64) -> f64 {
    if y <= t.left_limit_value() {
        return f64::NEG_INFINITY;
    }
    // first breakpoint whose value reaches y; T(x) >= y for all x beyond it
    let idx = t.breakpoints().partition_point(|&(_, by)| by < y);
    match t.breakpoints().get(idx) {
        Some(&(bx, _)) => bx,
        None => f64::INFINITY,
    }
}

/// Evaluates both sides of the Galois connection
/// `y <= T(x)  <=>  T^-(y) <= x`. Exported for the property-test suite.
pub fn galois_check(t: &StepFunction, x: f64, y: f64) -> (bool, bool) {
    (y <= t.eval(x), generalized_inverse(t, y) <= x)
}
