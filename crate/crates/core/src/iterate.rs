//! Families generated by a member `Q_{m₁}` of a CSK family.
//!
//! Nothing here integrates against `Q_{m₁}` directly: its transforms, its
//! domain of means and its pseudo-variance function all follow from those
//! of the base family.

use crate::error::{CskError, Result};
use crate::family::{CskFamily, PseudoVariance};
use crate::measure::Measure;
use crate::transforms::{m_transform, m_transform_derivative, mean_function_derivative};
use std::f64::consts::PI;

/// Below this distance the difference quotients switch to derivative forms.
const BRANCH_EPS: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct IteratedFamily {
    base: CskFamily,
    pv: PseudoVariance,
    m1: f64,
    theta1: f64,
    v_m1: f64,
    dv_m1: f64,
    mbar_plus: f64,
}

/// The family `𝒦₊(Q_{m₁})`.
pub fn iterate(base: &CskFamily, m1: f64) -> Result<IteratedFamily> {
    if !base.contains(m1) {
        return Err(CskError::domain("iterate", m1, base.m0(), base.m_plus()));
    }
    let pv = base.pv();
    let r1 = pv.over_m(m1)?;
    let v_m1 = m1 * r1;
    let dv_m1 = pv.derivative(m1)?;
    let theta1 = 1.0 / (m1 + r1);
    let g = base.cauchy_at_bound();
    let mbar_plus = if g.is_infinite() {
        base.m_plus()
    } else {
        let num = base.m_plus() * g - m1 * m1 / v_m1;
        let den = g - m1 / v_m1;
        if den.abs() <= 1e-12 * g.abs().max(1.0) {
            return Err(CskError::Degenerate(format!(
                "iterated domain: G(B) = {g} coincides with m1/V(m1)"
            )));
        }
        num / den
    };
    Ok(IteratedFamily {
        base: base.clone(),
        pv,
        m1,
        theta1,
        v_m1,
        dv_m1,
        mbar_plus,
    })
}

impl IteratedFamily {
    pub fn base(&self) -> &CskFamily {
        &self.base
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    /// `θ₁ = ψ(m₁)`.
    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    /// The generating member `Q_{m₁}`.
    pub fn generator(&self) -> Result<Measure> {
        self.base.member(self.m1)
    }

    /// `(m̄₀, m̄₊)` with `m̄₀ = m₁`.
    pub fn domain(&self) -> (f64, f64) {
        (self.m1, self.mbar_plus)
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        let tp = self.base.theta_plus();
        if theta > 0.0 && theta < tp {
            Ok(())
        } else {
            Err(CskError::domain("iterated transform", theta, 0.0, tp))
        }
    }

    /// `M₁(θ) = (θM(θ) − θ₁M(θ₁)) / (M(θ₁)(θ − θ₁))`.
    pub fn m_transform(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        let law = self.base.law();
        let cfg = self.base.config();
        let t1 = self.theta1;
        let m_t1 = m_transform(law, t1, cfg)?;
        let far = |t: f64| -> Result<f64> {
            let m_t = m_transform(law, t, cfg)?;
            Ok((t * m_t - t1 * m_t1) / (m_t1 * (t - t1)))
        };
        if (theta - t1).abs() < BRANCH_EPS {
            let dm = m_transform_derivative(law, t1, cfg)?;
            return self.blend(theta, (m_t1 + t1 * dm) / m_t1, far);
        }
        far(theta)
    }

    /// Within `BRANCH_EPS` of `θ₁`, interpolates linearly between the
    /// derivative form at `θ₁` and the difference form at the window edge,
    /// so the result stays continuous and strictly monotone.
    fn blend<F>(&self, theta: f64, at_t1: f64, far: F) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let d = theta - self.theta1;
        if d == 0.0 {
            return Ok(at_t1);
        }
        let edge = far(self.theta1 + BRANCH_EPS.copysign(d))?;
        Ok(at_t1 + (edge - at_t1) * d.abs() / BRANCH_EPS)
    }

    /// `k₁(θ) = (θk(θ) − θ₁k(θ₁)) / ((θ − θ₁) + θθ₁(k(θ) − k(θ₁)))`.
    pub fn mean(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        let t1 = self.theta1;
        let k1 = self.base.mean(t1)?;
        let far = |t: f64| -> Result<f64> {
            let k = self.base.mean(t)?;
            Ok((t * k - t1 * k1) / ((t - t1) + t * t1 * (k - k1)))
        };
        if (theta - t1).abs() < BRANCH_EPS {
            let dk = mean_function_derivative(self.base.law(), t1, self.base.config())?;
            return self.blend(theta, (k1 + t1 * dk) / (1.0 + t1 * t1 * dk), far);
        }
        far(theta)
    }

    /// `ψ₁(m̄)` by bisection on `k₁` over `(0, θ₊)`.
    pub fn psi1(&self, mbar: f64) -> Result<f64> {
        self.check_mbar(mbar)?;
        let tp = self.base.theta_plus();
        let mut hi = if tp.is_finite() { tp } else { 1.0 };
        if !tp.is_finite() {
            while self.mean(hi)? < mbar {
                hi *= 2.0;
                if hi > 1e300 {
                    return Err(CskError::Bracketing(format!("psi1({mbar})")));
                }
            }
        }
        let mut lo = 0.0;
        loop {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-13 * mid || mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if self.mean(mid)? < mbar {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    /// `m ↦ m̄ = (m²𝕍(m₁) − m₁²𝕍(m)) / (m𝕍(m₁) − m₁𝕍(m))`, which at `m = m₁`
    /// becomes `(2m₁𝕍(m₁) − m₁²𝕍′(m₁)) / (𝕍(m₁) − m₁𝕍′(m₁))`.
    pub fn mean_map(&self, m: f64) -> Result<f64> {
        if !self.base.contains(m) {
            return Err(CskError::domain("mean_map", m, self.base.m0(), self.base.m_plus()));
        }
        let (m1, v1) = (self.m1, self.v_m1);
        // with D = (𝕍(m) − 𝕍(m₁))/(m − m₁) the common factor m − m₁ cancels
        let d = match self.pv.polynomial() {
            Some(p) => p.divided_difference(m, m1),
            None if (m - m1).abs() < BRANCH_EPS => self.dv_m1,
            None => (self.pv.eval(m)? - v1) / (m - m1),
        };
        Ok(((m + m1) * v1 - m1 * m1 * d) / (v1 - m1 * d))
    }

    /// Inverse of [`mean_map`](Self::mean_map), by bisection.
    pub fn mean_map_inverse(&self, mbar: f64) -> Result<f64> {
        self.check_mbar(mbar)?;
        let hi0 = self.base.m_plus();
        let mut lo = self.base.m0();
        if !lo.is_finite() {
            let mut step = 1.0;
            lo = self.m1 - step;
            while self.mean_map(lo)? >= mbar {
                step *= 2.0;
                lo = self.m1 - step;
                if step > 1e300 {
                    return Err(CskError::Bracketing(format!("mean_map_inverse({mbar})")));
                }
            }
        }
        let mut hi = hi0;
        loop {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-15 * mid.abs().max(1.0) || mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if self.mean_map(mid)? < mbar {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    fn check_mbar(&self, mbar: f64) -> Result<()> {
        if mbar > self.m1 && mbar < self.mbar_plus {
            Ok(())
        } else {
            Err(CskError::domain("iterated family", mbar, self.m1, self.mbar_plus))
        }
    }

    /// `𝕍₁(m̄) = m̄(𝕍(m)/m + m − m̄)` with `m` the preimage of `m̄`.
    pub fn pseudo_variance(&self, mbar: f64) -> Result<f64> {
        let m = self.mean_map_inverse(mbar)?;
        Ok(mbar * (self.pv.over_m(m)? + m - mbar))
    }

    /// `v₁(m̄) = (m̄ − m₁)𝕍₁(m̄)/m̄`.
    pub fn variance(&self, mbar: f64) -> Result<f64> {
        let m = self.mean_map_inverse(mbar)?;
        Ok((mbar - self.m1) * (self.pv.over_m(m)? + m - mbar))
    }
}

/// Closed forms for an iterated quadratic family `𝕍(m) = 1 + am + bm²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticIterate {
    pub a: f64,
    pub b: f64,
    pub m1: f64,
}

impl QuadraticIterate {
    pub fn new(a: f64, b: f64, m1: f64) -> Self {
        QuadraticIterate { a, b, m1 }
    }

    pub fn m_of_mbar(&self, mbar: f64) -> f64 {
        let (a, b, m1) = (self.a, self.b, self.m1);
        (mbar - m1) / (1.0 + a * m1 + b * m1 * mbar)
    }

    pub fn v1(&self, mbar: f64) -> f64 {
        let (a, b, m1) = (self.a, self.b, self.m1);
        let p = (1.0 + mbar * (a + b * mbar)) * (1.0 + m1 * (a - mbar + (b + 1.0) * m1));
        p / (1.0 + a * m1 + b * m1 * mbar)
    }
}

/// Closed forms for an iterated cubic family `𝕍(m) = m(am² + bm + c)`, `a > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicIterate {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub m1: f64,
}

impl CubicIterate {
    pub fn new(a: f64, b: f64, c: f64, m1: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(CskError::ParameterOutOfRange {
                name: "a".into(),
                value: a,
                reason: "cubic iteration needs a > 0".into(),
            });
        }
        Ok(CubicIterate { a, b, c, m1 })
    }

    pub fn m_of_mbar(&self, mbar: f64) -> f64 {
        let (a, b, c, m1) = (self.a, self.b, self.c, self.m1);
        -(mbar * (b + a * m1) + c) / (a * (mbar - m1))
    }

    pub fn v1(&self, mbar: f64) -> f64 {
        let (a, b, c, m1) = (self.a, self.b, self.c, self.m1);
        let q = (c + mbar * (b + a * mbar)) * (c - mbar + m1 * (b + a * m1 + 1.0));
        q / (a * (mbar - m1))
    }
}

/// Variance function of the family generated by `Q_{m₂,m₁}`, the mean-`m₂`
/// member of the semicircle family iterated at `m₁`. Valid for
/// `m₂ < m < m₂ + m₁² − m₁m₂ + 1`.
pub fn semicircle_second_iterate_variance(m1: f64, m2: f64, m: f64) -> f64 {
    (1.0 - (m - m1) * m1) * ((m1 - m2) * (m + m1 - m2) + 1.0) / (m1 * m1 - m2 * m1 + 1.0)
}

/// `K(a₁,a₂,a₃,a₄) = 2π(1 − a₁a₂a₃a₄) ∏_{i<j} (1 − aᵢaⱼ)⁻¹`.
pub fn aw_integral(a: [f64; 4]) -> Result<f64> {
    if let Some(&bad) = a.iter().find(|x| !(x.abs() < 1.0)) {
        return Err(CskError::ParameterOutOfRange {
            name: "a".into(),
            value: bad,
            reason: "all |a_i| must be < 1".into(),
        });
    }
    let mut k = 2.0 * PI * (1.0 - a[0] * a[1] * a[2] * a[3]);
    for i in 0..4 {
        for j in i + 1..4 {
            k /= 1.0 - a[i] * a[j];
        }
    }
    Ok(k)
}
