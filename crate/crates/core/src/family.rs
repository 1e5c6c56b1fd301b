//! The CSK family of a law: domain of means, the inverse `ψ` of the mean
//! function, the pseudo-variance function and the tilted members `Q_m`.

use crate::catalog::{Law, SupportBounds};
use crate::error::{CskError, Result};
use crate::measure::Measure;
use crate::poly::Polynomial;
use crate::quadrature::QuadratureConfig;
use crate::solve::{one_sided_limit, Limit};
use crate::transforms::{
    cauchy_at_bound_of, cauchy_transform_of, mean_function_derivative, mean_function_of,
};
use serde::Serialize;
use std::sync::Arc;

/// Relative bracket width at which `ψ` bisection stops.
const PSI_XTOL: f64 = 1e-12;

#[derive(Clone)]
pub struct CskFamily {
    law: Law,
    cfg: QuadratureConfig,
    bounds: SupportBounds,
    m0: f64,
    m_plus: f64,
    g_at_bound: f64,
}

impl std::fmt::Debug for CskFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CskFamily")
            .field("law", &self.law.name())
            .field("m0", &self.m0)
            .field("m_plus", &self.m_plus)
            .field("bounds", &self.bounds)
            .finish()
    }
}

/// Builds the family: `m0 = lim_{θ→0+} k(θ)` and `m₊ = B − 1/G(B)`.
pub fn build_family(law: &Law, cfg: &QuadratureConfig) -> Result<CskFamily> {
    cfg.validate()?;
    let measure = law.measure();
    let bounds = law.support_bounds();
    if !bounds.a.is_finite() {
        return Err(CskError::Degenerate("support not bounded from above".into()));
    }
    let scale = (0.5 * bounds.theta_plus).min(1.0);
    let m0 = match one_sided_limit(|d| mean_function_of(measure, d * scale, cfg))? {
        Limit::Finite(v) => v,
        Limit::NegInfinity => f64::NEG_INFINITY,
    };
    let g_at_bound = cauchy_at_bound_of(measure, cfg)?;
    let m_plus = bounds.b - 1.0 / g_at_bound;
    if !(m0 < m_plus) {
        return Err(CskError::Degenerate(format!(
            "empty domain of means ({m0}, {m_plus})"
        )));
    }
    Ok(CskFamily {
        law: law.clone(),
        cfg: cfg.clone(),
        bounds,
        m0,
        m_plus,
        g_at_bound,
    })
}

impl CskFamily {
    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.cfg
    }

    pub fn bounds(&self) -> SupportBounds {
        self.bounds
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn m_plus(&self) -> f64 {
        self.m_plus
    }

    pub fn theta_plus(&self) -> f64 {
        self.bounds.theta_plus
    }

    /// `lim_{b→B+} G(b)`, possibly `+∞`.
    pub fn cauchy_at_bound(&self) -> f64 {
        self.g_at_bound
    }

    pub fn contains(&self, m: f64) -> bool {
        m > self.m0 && m < self.m_plus
    }

    fn check(&self, what: &'static str, m: f64) -> Result<()> {
        if self.contains(m) {
            Ok(())
        } else {
            Err(CskError::domain(what, m, self.m0, self.m_plus))
        }
    }

    /// `k(θ)` on `(0, θ₊)`.
    pub fn mean(&self, theta: f64) -> Result<f64> {
        if !(theta > 0.0 && theta < self.bounds.theta_plus) {
            return Err(CskError::domain("mean", theta, 0.0, self.bounds.theta_plus));
        }
        mean_function_of(self.law.measure(), theta, &self.cfg)
    }

    pub fn cauchy(&self, z: f64) -> Result<f64> {
        cauchy_transform_of(self.law.measure(), z, &self.cfg)
    }

    /// `ψ(m)`, the `θ ∈ (0, θ₊)` with `k(θ) = m`, by bisection.
    pub fn psi(&self, m: f64) -> Result<f64> {
        self.check("psi", m)?;
        let k = |t: f64| mean_function_of(self.law.measure(), t, &self.cfg);
        let tp = self.bounds.theta_plus;
        let mut hi = if tp.is_finite() { tp } else { 1.0 };
        if !tp.is_finite() {
            while k(hi)? < m {
                hi *= 2.0;
                if hi > 1e300 {
                    return Err(CskError::Bracketing(format!("psi({m}): k stays below target")));
                }
            }
        }
        let mut lo = 0.0;
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= PSI_XTOL * mid || mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if k(mid)? < m {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `𝕍(m)/m = 1/ψ(m) − m` from the numerical inverse; at `m = 0` this is `1/ψ(0)`.
    pub fn pv_over_m_inverted(&self, m: f64) -> Result<f64> {
        Ok(1.0 / self.psi(m)? - m)
    }

    /// Numerically inverted pseudo-variance; `0` at `m = 0`.
    pub fn pseudo_variance(&self, m: f64) -> Result<f64> {
        Ok(m * self.pv_over_m_inverted(m)?)
    }

    /// The pseudo-variance function used downstream: the catalog closed form
    /// when there is one, otherwise the numerical inverse.
    pub fn pv(&self) -> PseudoVariance {
        let inner = match self.law.closed_pseudo_variance() {
            Some(p) => PvInner::Closed(p.clone()),
            None => PvInner::Inverted(Box::new(self.clone())),
        };
        PseudoVariance {
            inner,
            valid: (self.m0, self.m_plus),
        }
    }

    /// `v(m) = (m − m0)·𝕍(m)/m`.
    pub fn variance(&self, m: f64) -> Result<f64> {
        if !self.m0.is_finite() {
            return Err(CskError::VarianceUndefined);
        }
        Ok((m - self.m0) * self.pv_over_m_inverted(m)?)
    }

    /// `z(m) = m + 𝕍(m)/m` (equal to `1/ψ(0)` at `m = 0`).
    pub fn z_of_m(&self, m: f64) -> Result<f64> {
        Ok(m + self.pv().over_m(m)?)
    }

    /// `Q_m(dx) = 𝕍(m)/(𝕍(m) + m(m − x)) ν(dx)`.
    pub fn member(&self, m: f64) -> Result<Measure> {
        self.check("member", m)?;
        let r = self.pv().over_m(m)?;
        tilt_by_mean(self.law.measure(), m, r)
    }

    /// Two-sided domain of means: the lower end comes from the reflected
    /// law when the support is also bounded below.
    pub fn two_sided_domain(&self) -> Result<(f64, f64)> {
        let measure = self.law.measure();
        if !measure.inf_support().is_finite() {
            return Ok((self.m0, self.m_plus));
        }
        let reflected = Law::from_measure(format!("reflected {}", self.law.name()), measure.reflect());
        let g = cauchy_at_bound_of(reflected.measure(), &self.cfg)?;
        let lower = -(reflected.support_bounds().b - 1.0 / g);
        Ok((lower, self.m_plus))
    }
}

/// `r/(z − x)·ν(dx)` with `r = 𝕍(m)/m` and `z = m + r`; this is the kernel of
/// `Q_m` and covers `m = 0` with `r = 𝕍′(0)`.
pub(crate) fn tilt_by_mean(measure: &Measure, m: f64, r: f64) -> Result<Measure> {
    let z = m + r;
    if !(z > measure.sup_support()) || !(r > 0.0) {
        return Err(CskError::NegativeDensity { m, ratio: r });
    }
    Ok(measure.tilt(Arc::new(move |x| r / (z - x)), 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Inverted,
}

#[derive(Clone)]
enum PvInner {
    Closed(Polynomial),
    Inverted(Box<CskFamily>),
}

/// `m ↦ 𝕍(m)` on the domain of means, tagged with where it comes from.
#[derive(Clone)]
pub struct PseudoVariance {
    inner: PvInner,
    valid: (f64, f64),
}

impl std::fmt::Debug for PseudoVariance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PseudoVariance")
            .field("provenance", &self.provenance())
            .field("valid", &self.valid_interval())
            .finish()
    }
}

impl PseudoVariance {
    pub fn provenance(&self) -> Provenance {
        match self.inner {
            PvInner::Closed(_) => Provenance::ClosedForm,
            PvInner::Inverted(_) => Provenance::Inverted,
        }
    }

    pub fn valid_interval(&self) -> (f64, f64) {
        self.valid
    }

    pub fn polynomial(&self) -> Option<&Polynomial> {
        match &self.inner {
            PvInner::Closed(p) => Some(p),
            PvInner::Inverted(_) => None,
        }
    }

    fn check(&self, m: f64) -> Result<()> {
        if m > self.valid.0 && m < self.valid.1 {
            Ok(())
        } else {
            Err(CskError::domain("pseudo_variance", m, self.valid.0, self.valid.1))
        }
    }

    pub fn eval(&self, m: f64) -> Result<f64> {
        self.check(m)?;
        match &self.inner {
            PvInner::Closed(p) => Ok(p.eval(m)),
            PvInner::Inverted(f) => f.pseudo_variance(m),
        }
    }

    /// `𝕍(m)/m`, with the value `1/ψ(0) = 𝕍′(0)` at `m = 0`.
    pub fn over_m(&self, m: f64) -> Result<f64> {
        self.check(m)?;
        match &self.inner {
            PvInner::Closed(p) if m == 0.0 => match p.deflate_at_zero() {
                Some(q) => Ok(q.eval(0.0)),
                None => Err(CskError::domain("pseudo_variance / m", m, 0.0, 0.0)),
            },
            PvInner::Closed(p) => Ok(p.eval(m) / m),
            PvInner::Inverted(f) => f.pv_over_m_inverted(m),
        }
    }

    /// `𝕍′(m)`; for the inverted form by implicit differentiation,
    /// `ψ′ = 1/k′(ψ)`.
    pub fn derivative(&self, m: f64) -> Result<f64> {
        self.check(m)?;
        match &self.inner {
            PvInner::Closed(p) => Ok(p.derivative().eval(m)),
            PvInner::Inverted(f) => {
                let t = f.psi(m)?;
                let kp = mean_function_derivative(&f.law, t, &f.cfg)?;
                Ok(1.0 / t - m / (t * t * kp) - 2.0 * m)
            }
        }
    }
}
