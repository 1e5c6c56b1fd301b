//! Real polynomials in the mean `m`.
//!
//! Every catalog pseudo-variance function is a polynomial of degree at most
//! three, which is what makes the analytic continuation beyond the natural
//! domain of means available in closed form.

use serde::Serialize;
use std::fmt;

/// Polynomial with real coefficients, stored in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial::new(vec![0.0]);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect::<Vec<_>>(),
        )
    }

    /// `(p(x) − p(y))/(x − y)`, summed term by term so it stays exact as
    /// `y → x`, where it equals `p′(x)`.
    pub fn divided_difference(&self, x: f64, y: f64) -> f64 {
        let mut total = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate().skip(1) {
            let mut s = 0.0;
            for j in 0..k {
                s += x.powi(j as i32) * y.powi((k - 1 - j) as i32);
            }
            total += c * s;
        }
        total
    }

    /// The polynomial `m ↦ α·p(m/α)`.
    pub fn dilate(&self, alpha: f64) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c * alpha.powi(1 - k as i32))
                .collect::<Vec<_>>(),
        )
    }

    /// `p(m)/m` with the constant term dropped; exact when `p(0) = 0`.
    pub fn deflate_at_zero(&self) -> Option<Polynomial> {
        if self.coeffs[0] != 0.0 {
            return None;
        }
        if self.coeffs.len() == 1 {
            return Some(Polynomial::new(vec![0.0]));
        }
        Some(Polynomial::new(self.coeffs[1..].to_vec()))
    }

    /// Distinct real roots in increasing order.
    ///
    /// Roots of the derivative split the line into monotone pieces, and each
    /// piece holds at most one root, found by bisection.
    pub fn real_roots(&self) -> Vec<f64> {
        let n = self.degree();
        if n == 0 {
            return Vec::new();
        }
        if n == 1 {
            return vec![-self.coeffs[0] / self.coeffs[1]];
        }
        let lead = self.coeffs[n];
        let bound = 1.0
            + self.coeffs[..n]
                .iter()
                .map(|c| (c / lead).abs())
                .fold(0.0, f64::max);
        let mut knots = vec![-bound];
        knots.extend(
            self.derivative()
                .real_roots()
                .into_iter()
                .filter(|r| r.abs() < bound),
        );
        knots.push(bound);

        let scale = self.coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
        let near_zero = |x: f64| self.eval(x).abs() <= 1e-14 * scale * (1.0 + x.abs()).powi(n as i32);

        let mut roots: Vec<f64> = Vec::new();
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (self.eval(a), self.eval(b));
            if near_zero(a) {
                roots.push(a);
            }
            if fa.signum() * fb.signum() < 0.0 {
                let (mut lo, mut hi, mut flo) = (a, b, fa);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let fm = self.eval(mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
        }
        if near_zero(bound) {
            roots.push(bound);
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        roots
    }

    /// Sign of the limit of `p(m)` as `m → +∞` (0 only for the zero polynomial).
    pub fn sign_at_pos_infinity(&self) -> f64 {
        let lead = self.coeffs[self.degree()];
        if lead == 0.0 {
            0.0
        } else {
            lead.signum()
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 && !(self.is_zero() && k == 0) {
                continue;
            }
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                1 if a == 1.0 => write!(f, "m")?,
                1 => write!(f, "{a}*m")?,
                _ if a == 1.0 => write!(f, "m^{k}")?,
                _ => write!(f, "{a}*m^{k}")?,
            }
        }
        Ok(())
    }
}
