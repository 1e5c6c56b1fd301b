//! Scalar root finding and limit extrapolation.

use crate::error::{CskError, Result};

/// Bisection for an increasing function: returns `x` in `[lo, hi]` with
/// `f(x) = target`. Stops when the bracket is narrower than
/// `xtol·max(1, |x|)` or when the midpoint no longer moves.
pub fn bisect_increasing<F>(mut f: F, target: f64, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo < hi) {
        return Err(CskError::Bracketing(format!("empty bracket [{lo}, {hi}]")));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol * mid.abs().max(1.0) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let v = f(mid)?;
        if v == target {
            return Ok(mid);
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sign-change bisection on `[a, b]`; `fa` and `fb` must have opposite signs.
pub fn bisect_sign<F>(mut f: F, mut a: f64, mut b: f64, mut fa: f64, fb: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(CskError::Bracketing(format!(
            "no sign change on [{a}, {b}] (f = {fa}, {fb})"
        )));
    }
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= xtol * mid.abs().max(1.0) || mid == a || mid == b {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Polynomial (Neville) extrapolation of samples `(h_i, f_i)` to `h = 0`.
pub fn extrapolate_to_zero(hs: &[f64], fs: &[f64]) -> f64 {
    assert_eq!(hs.len(), fs.len());
    assert!(!hs.is_empty());
    let mut p = fs.to_vec();
    let n = hs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (hi, hj) = (hs[i], hs[i + level]);
            p[i] = (hj * p[i] - hi * p[i + 1]) / (hj - hi);
        }
    }
    p[0]
}

/// Sample points `10^{-k}`, `k = 2..=8`, used for every one-sided limit.
pub(crate) fn limit_offsets() -> impl Iterator<Item = f64> {
    (2..=8).map(|k| 10f64.powi(-k))
}

/// Outcome of probing a one-sided limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Limit {
    Finite(f64),
    NegInfinity,
}

/// Estimates `lim_{δ→0+} f(δ)` from the samples at [`limit_offsets`].
///
/// All limits met here have expansions in powers of `√δ`, so the samples are
/// extrapolated in `h = √δ`. A sequence whose successive increments stop
/// shrinking while decreasing is reported as divergent to `-∞`.
pub(crate) fn one_sided_limit<F>(mut f: F) -> Result<Limit>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut hs = Vec::new();
    let mut fs = Vec::new();
    for delta in limit_offsets() {
        hs.push(delta.sqrt());
        fs.push(f(delta)?);
    }
    let d: Vec<f64> = fs.windows(2).map(|w| w[0] - w[1]).collect();
    let n = d.len();
    let decreasing = d[n - 3..].iter().all(|&x| x > 0.0);
    let not_shrinking = d[n - 3..]
        .windows(2)
        .all(|w| w[1].abs() > 0.9 * w[0].abs());
    if decreasing && not_shrinking {
        return Ok(Limit::NegInfinity);
    }
    Ok(Limit::Finite(extrapolate_to_zero(&hs, &fs)))
}
