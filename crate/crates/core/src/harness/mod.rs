//! Verification suites and table generation behind the `csk` command line.

mod expect;
pub mod table;
pub mod verify;

pub use table::{parse_grid, table, Quantity, Row, Table, TableRequest};
pub use verify::{verify, Check, Status, Suite, VerificationReport, VerifyOptions};

/// `n` points strictly inside `(lo, hi)`, kept away from both ends; a
/// logarithmic spread below `hi` when `lo = −∞`.
pub fn interior_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let t = |i: usize| i as f64 / (n - 1) as f64;
    if lo.is_finite() && hi.is_finite() {
        let w = hi - lo;
        (0..n).map(|i| lo + w * (0.05 + 0.9 * t(i))).collect()
    } else if hi.is_finite() {
        let span = hi.abs().max(1.0);
        (0..n)
            .map(|i| hi - span * 10f64.powf(1.5 - 2.5 * t(i)))
            .collect()
    } else if lo.is_finite() {
        let span = lo.abs().max(1.0);
        (0..n)
            .map(|i| lo + span * 10f64.powf(-1.0 + 2.5 * t(i)))
            .collect()
    } else {
        (0..n).map(|i| -10.0 + 20.0 * t(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_stay_inside() {
        for (lo, hi) in [(0.0, 1.0), (f64::NEG_INFINITY, -2.0), (-0.5, f64::INFINITY)] {
            let g = interior_grid(lo, hi, 20);
            assert_eq!(g.len(), 20);
            assert!(g.iter().all(|&m| m > lo && m < hi), "{g:?}");
            assert!(g.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
