//! The rate function `R(delta) = h_b(delta) / (d delta + 1/(1-eps))`, its
//! maximization over the lower-bound, analytic upper-bound and non-causal
//! domains, and the threshold constants where those maxima change regime.

use std::fmt;

use crate::constraint::check_order;
use crate::constraint::DEFAULT_MAX_D;
use crate::error::{check_range, Error, Result};
use crate::info::binary_entropy;

const GOLDEN_TOL: f64 = 1e-12;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Plain maximization of `R` over a caller-supplied interval.
    Rate,
    LowerBound,
    UpperBoundAnalytic,
    NonCausal,
    NumericUpperBound,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundKind::Rate => "rate",
            BoundKind::LowerBound => "lower",
            BoundKind::UpperBoundAnalytic => "upper_analytic",
            BoundKind::NonCausal => "noncausal",
            BoundKind::NumericUpperBound => "numeric_upper",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundResult {
    /// Bits per channel use.
    pub value: f64,
    pub argmax: f64,
    pub domain: (f64, f64),
    pub kind: BoundKind,
}

/// `R(delta)` in bits; identically 0 at `eps = 1`.
pub fn rate(delta: f64, d: usize, eps: f64) -> f64 {
    if eps >= 1.0 {
        return 0.0;
    }
    let k = 1.0 / (1.0 - eps);
    binary_entropy(delta) / (d as f64 * delta + k)
}

/// `R'(delta) = ((k+d) log(1-delta) - k log delta) / (k + d delta)^2`, with
/// `k = 1/(1-eps)`; `+inf` at `delta <= 0` and `-inf` at `delta >= 1`.
pub fn rate_derivative(delta: f64, d: usize, eps: f64) -> f64 {
    if delta <= 0.0 {
        return f64::INFINITY;
    }
    if delta >= 1.0 {
        return f64::NEG_INFINITY;
    }
    if eps >= 1.0 {
        return 0.0;
    }
    let k = 1.0 / (1.0 - eps);
    let d = d as f64;
    ((k + d) * (1.0 - delta).log2() - k * delta.log2()) / (k + d * delta).powi(2)
}

/// Maximize the concave `R` over `[lo, hi]`: golden-section search, then a
/// bisection on the sign of `R'` to pin the maximizer.
pub fn maximize_rate(d: usize, eps: f64, lo: f64, hi: f64) -> BoundResult {
    maximize_as(BoundKind::Rate, d, eps, lo, hi)
}

fn maximize_as(kind: BoundKind, d: usize, eps: f64, lo: f64, hi: f64) -> BoundResult {
    debug_assert!(0.0 <= lo && lo <= hi && hi <= 1.0);
    let domain = (lo, hi);
    if eps >= 1.0 {
        return BoundResult {
            value: 0.0,
            argmax: lo,
            domain,
            kind,
        };
    }
    let f = |x: f64| rate(x, d, eps);
    let df = |x: f64| rate_derivative(x, d, eps);

    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut e = a + INV_PHI * (b - a);
    let (mut fc, mut fe) = (f(c), f(e));
    while b - a > GOLDEN_TOL {
        if fc >= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + INV_PHI * (b - a);
            fe = f(e);
        }
    }

    let argmax = if df(hi) >= 0.0 {
        hi
    } else if df(lo) <= 0.0 {
        lo
    } else {
        // Near the flat maximum, function comparisons are only good to
        // ~sqrt(machine eps), so widen the golden bracket before bisecting.
        let (mut l, mut r) = ((a - 1e-6).max(lo), (b + 1e-6).min(hi));
        if !(df(l) > 0.0 && df(r) < 0.0) {
            (l, r) = (lo, hi);
        }
        for _ in 0..200 {
            let m = 0.5 * (l + r);
            if m <= l || m >= r {
                break;
            }
            if df(m) > 0.0 {
                l = m;
            } else {
                r = m;
            }
        }
        0.5 * (l + r)
    };
    BoundResult {
        value: f(argmax),
        argmax,
        domain,
        kind,
    }
}

fn check_args(d: usize, eps: f64) -> Result<()> {
    check_order(d, DEFAULT_MAX_D)?;
    check_range("eps", eps, 0.0, 1.0)
}

/// Feedback-capacity lower bound: `max R` over `[0, 1/(d+1)]`.
pub fn lower_bound(d: usize, eps: f64) -> Result<BoundResult> {
    check_args(d, eps)?;
    Ok(maximize_as(
        BoundKind::LowerBound,
        d,
        eps,
        0.0,
        1.0 / (d as f64 + 1.0),
    ))
}

/// Analytic upper bound: `max R` over `[0, 1/(1 + d eps)]`.
pub fn upper_bound_analytic(d: usize, eps: f64) -> Result<BoundResult> {
    check_args(d, eps)?;
    let hi = 1.0 / (1.0 + d as f64 * eps);
    Ok(maximize_as(BoundKind::UpperBoundAnalytic, d, eps, 0.0, hi))
}

/// Capacity with non-causal knowledge of erasures: `max R` over `[0, 1/2]`.
pub fn noncausal_capacity(d: usize, eps: f64) -> Result<BoundResult> {
    check_args(d, eps)?;
    Ok(maximize_as(BoundKind::NonCausal, d, eps, 0.0, 0.5))
}

/// `R(1/(d+1))`, the value of the lower bound once its maximizer is clipped.
pub fn corollary_floor(d: usize, eps: f64) -> Result<f64> {
    check_args(d, eps)?;
    Ok(rate(1.0 / (d as f64 + 1.0), d, eps))
}

/// `1 - 1/(2 log2(3/2))`: for `d = 2` the lower bound equals the non-causal
/// capacity up to this erasure probability.
pub fn d2_threshold() -> f64 {
    1.0 - 1.0 / (2.0 * 1.5f64.log2())
}

fn bisect_root(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let (glo, ghi) = (g(lo), g(hi));
    if !(glo.is_finite() || glo.is_infinite()) || glo.signum() == ghi.signum() {
        return None;
    }
    let rising = glo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

const EPS_STAR_EDGE: f64 = 1e-9;

/// Erasure probability above which the analytic upper bound falls strictly
/// below the non-causal capacity, i.e. the root of `R'(1/(1 + d eps)) = 0`.
///
/// The root of the equivalent power equation
/// `(d eps)^(1/(1-eps) + d) = (1 + d eps)^d` is solved separately and must
/// agree to 1e-8. For `d = 1` there is no root in (0, 1).
pub fn epsilon_star(d: usize) -> Result<f64> {
    check_order(d, DEFAULT_MAX_D)?;
    let derivative_form = |eps: f64| rate_derivative(1.0 / (1.0 + d as f64 * eps), d, eps);
    let root =
        bisect_root(derivative_form, EPS_STAR_EDGE, 1.0 - EPS_STAR_EDGE).ok_or_else(|| {
            Error::NoRoot(format!(
                "R'(1/(1+d eps)) keeps one sign on (0,1) for d = {d}"
            ))
        })?;
    let power = bisect_root(|e| power_form(d, e), EPS_STAR_EDGE, 1.0 - EPS_STAR_EDGE)
        .ok_or_else(|| Error::NoRoot(format!("power equation has no root for d = {d}")))?;
    if (root - power).abs() > 1e-8 {
        return Err(Error::NoRoot(format!(
            "derivative root {root} and power-equation root {power} disagree"
        )));
    }
    Ok(root)
}

/// `(1/(1-eps) + d) ln(d eps) - d ln(1 + d eps)`; zero exactly at `eps*`.
pub fn power_form(d: usize, eps: f64) -> f64 {
    let d = d as f64;
    let k = 1.0 / (1.0 - eps);
    (k + d) * (d * eps).ln() - d * (d * eps).ln_1p()
}
