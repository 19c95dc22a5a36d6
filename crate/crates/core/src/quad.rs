//! One-dimensional adaptive quadrature.
//!
//! Panels are integrated with the double-exponential rule from the
//! `quadrature` crate; a panel whose error estimate exceeds its share of the
//! tolerance is bisected. Interior breakpoints let callers pin down peaks and
//! kinks the rule would otherwise step over.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 40;

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_with_breaks(&f, a, b, &[], tol)
}

/// Integrate over `[a, b]`, splitting first at every breakpoint inside the interval.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate_with_breaks(f, b, a, breaks, tol).map(|v| -v);
    }
    let mut points: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    points.push(a);
    points.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    points.push(b);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let panels = (points.len() - 1) as f64;
    let mut total = 0.0;
    for w in points.windows(2) {
        total += adapt(f, w[0], w[1], tol / panels, tol, 0)?;
    }
    Ok(total)
}

/// `total` is the caller's overall tolerance: a panel that bottoms out at
/// `MAX_DEPTH` is still accepted when its error is negligible against it,
/// as happens next to an integrable endpoint singularity where halving the
/// panel shrinks the error by less than half.
fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, total: f64, depth: u32) -> Result<f64> {
    let out = quadrature::integrate(f, a, b, tol);
    // Below this the estimate is dominated by rounding.
    let floor = 1e-14 * out.integral.abs();
    if out.error_estimate <= tol.max(floor) && out.integral.is_finite() {
        return Ok(out.integral);
    }
    if depth >= MAX_DEPTH {
        if out.integral.is_finite() && out.error_estimate <= total {
            return Ok(out.integral);
        }
        return Err(Error::QuadratureFailure {
            a,
            b,
            estimate: out.error_estimate,
            tolerance: tol,
        });
    }
    let mid = 0.5 * (a + b);
    Ok(adapt(f, a, mid, 0.5 * tol, total, depth + 1)? + adapt(f, mid, b, 0.5 * tol, total, depth + 1)?)
}

/// Evenly spaced breakpoints strictly inside `[a, b]`.
pub fn uniform_breaks(a: f64, b: f64, panels: usize) -> Vec<f64> {
    (1..panels)
        .map(|i| a + (b - a) * i as f64 / panels as f64)
        .collect()
}
