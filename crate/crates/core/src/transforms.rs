//! Cauchy transform `G`, moment transform `M(θ)` and mean function `k(θ)`,
//! all evaluated by quadrature against the generating measure.

use crate::catalog::Law;
use crate::error::{CskError, Result};
use crate::measure::Measure;
use crate::quadrature::{integrate, QuadratureConfig};
use crate::solve::{one_sided_limit, Limit};
use serde::Serialize;

/// Open set of admissible `θ`: a union of open intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaDomain {
    pub intervals: Vec<(f64, f64)>,
}

impl ThetaDomain {
    pub fn contains(&self, theta: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| theta > a && theta < b)
    }

    /// The component `(0, θ₊)`.
    pub fn positive(&self) -> (f64, f64) {
        *self
            .intervals
            .iter()
            .find(|(a, _)| *a == 0.0)
            .expect("positive component always present")
    }

    /// The component `(−∞, 1/A)`, present only when `A < 0`.
    pub fn negative(&self) -> Option<(f64, f64)> {
        self.intervals.iter().copied().find(|(a, _)| *a < 0.0)
    }
}

impl std::fmt::Display for ThetaDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|(a, b)| format!("({a}, {b})"))
            .collect();
        write!(f, "{}", parts.join(" ∪ "))
    }
}

pub fn theta_domain(law: &Law) -> ThetaDomain {
    theta_domain_of(law.measure())
}

pub(crate) fn theta_domain_of(measure: &Measure) -> ThetaDomain {
    let a = measure.sup_support();
    if a < 0.0 {
        ThetaDomain {
            intervals: vec![(f64::NEG_INFINITY, 1.0 / a), (0.0, f64::INFINITY)],
        }
    } else if a == 0.0 {
        ThetaDomain {
            intervals: vec![(0.0, f64::INFINITY)],
        }
    } else {
        ThetaDomain {
            intervals: vec![(0.0, 1.0 / a)],
        }
    }
}

/// `G(z) = ∫ (z − x)⁻¹ ν(dx)` for real `z > A(ν)`, by quadrature.
pub fn cauchy_transform(law: &Law, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
    cauchy_transform_of(law.measure(), z, cfg)
}

pub(crate) fn cauchy_transform_of(measure: &Measure, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let a = measure.sup_support();
    if !(z > a) {
        return Err(CskError::domain("cauchy_transform", z, a, f64::INFINITY));
    }
    Ok(integrate(|x| 1.0 / (z - x), measure, cfg)?.value)
}

fn check_theta(measure: &Measure, theta: f64, what: &'static str) -> Result<()> {
    let dom = theta_domain_of(measure);
    if theta == 0.0 || dom.contains(theta) {
        Ok(())
    } else {
        Err(CskError::Domain {
            what,
            value: theta,
            domain: dom.to_string(),
        })
    }
}

/// `M(θ) = ∫ (1 − θx)⁻¹ ν(dx)`, with `M(0) = 1`.
pub fn m_transform(law: &Law, theta: f64, cfg: &QuadratureConfig) -> Result<f64> {
    m_transform_of(law.measure(), theta, cfg)
}

pub(crate) fn m_transform_of(measure: &Measure, theta: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_theta(measure, theta, "m_transform")?;
    if theta == 0.0 {
        return Ok(1.0);
    }
    Ok(integrate(|x| 1.0 / (1.0 - theta * x), measure, cfg)?.value)
}

/// `M′(θ) = ∫ x (1 − θx)⁻² ν(dx)`.
pub fn m_transform_derivative(law: &Law, theta: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let measure = law.measure();
    check_theta(measure, theta, "m_transform_derivative")?;
    Ok(integrate(
        |x| {
            let d = 1.0 - theta * x;
            x / (d * d)
        },
        measure,
        cfg,
    )?
    .value)
}

/// `k(θ) = (M(θ) − 1)/(θ M(θ))`, computed as `∫ x/(1−θx) dν / ∫ 1/(1−θx) dν`
/// to avoid the cancellation near `θ = 0`.
pub fn mean_function(law: &Law, theta: f64, cfg: &QuadratureConfig) -> Result<f64> {
    mean_function_of(law.measure(), theta, cfg)
}

pub(crate) fn mean_function_of(measure: &Measure, theta: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_theta(measure, theta, "mean_function")?;
    if theta == 0.0 {
        return Err(CskError::Domain {
            what: "mean_function",
            value: 0.0,
            domain: theta_domain_of(measure).to_string(),
        });
    }
    let num = integrate(|x| x / (1.0 - theta * x), measure, cfg)?.value;
    let den = integrate(|x| 1.0 / (1.0 - theta * x), measure, cfg)?.value;
    Ok(num / den)
}

/// `k′(θ) = (N′M − N M′)/M²` with `N = ∫ x/(1−θx) dν`.
pub fn mean_function_derivative(law: &Law, theta: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let measure = law.measure();
    check_theta(measure, theta, "mean_function_derivative")?;
    let m = integrate(|x| 1.0 / (1.0 - theta * x), measure, cfg)?.value;
    let n = integrate(|x| x / (1.0 - theta * x), measure, cfg)?.value;
    let d2 = |x: f64| {
        let d = 1.0 - theta * x;
        d * d
    };
    let mp = integrate(|x| x / d2(x), measure, cfg)?.value;
    let np = integrate(|x| x * x / d2(x), measure, cfg)?.value;
    Ok((np * m - n * mp) / (m * m))
}

/// `lim_{b→B+} G(b)`, `+∞` when the limit diverges.
///
/// When `B > A` the transform is analytic at `B` and is evaluated directly;
/// an atom at `A = B` makes it infinite; otherwise `1/G(B + δ)` is
/// extrapolated from `δ = 10⁻ᵏ`, `k = 2..8`.
pub fn cauchy_transform_at_bound(law: &Law, cfg: &QuadratureConfig) -> Result<f64> {
    cauchy_at_bound_of(law.measure(), cfg)
}

pub(crate) fn cauchy_at_bound_of(measure: &Measure, cfg: &QuadratureConfig) -> Result<f64> {
    let a = measure.sup_support();
    let b = a.max(0.0);
    if b > a {
        return cauchy_transform_of(measure, b, cfg);
    }
    if measure.atom_at(a).is_some() {
        return Ok(f64::INFINITY);
    }
    let scale = b.abs().max(1.0);
    match one_sided_limit(|d| Ok(1.0 / cauchy_transform_of(measure, b + d * scale, cfg)?))? {
        Limit::Finite(r) if r.abs() > 1e-8 => Ok(1.0 / r),
        _ => Ok(f64::INFINITY),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{law_from_spec, semicircle, standard_laws};

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn cauchy_examples() {
        let s = semicircle();
        assert!((cauchy_transform(&s, 2.5, &cfg()).unwrap() - 0.5).abs() < 1e-10);
        let b = law_from_spec("bernoulli").unwrap();
        assert!((cauchy_transform(&b, 2.0, &cfg()).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            cauchy_transform(&s, 2.0, &cfg()),
            Err(CskError::Domain { .. })
        ));
    }

    #[test]
    fn closed_cauchy_agrees_with_quadrature() {
        for law in standard_laws() {
            let a = law.support_bounds().a;
            for dz in [0.05, 0.5, 3.0, 40.0] {
                let z = a + dz;
                let q = cauchy_transform(&law, z, &cfg()).unwrap();
                let c = law.closed_cauchy(z).unwrap();
                assert!(((q - c) / c).abs() < 1e-9, "{} z={z}: {q} vs {c}", law.name());
            }
        }
    }

    #[test]
    fn theta_domains() {
        let d = theta_domain(&semicircle());
        assert_eq!(d.intervals, vec![(0.0, 0.5)]);
        let d = theta_domain(&law_from_spec("isc:p=1").unwrap());
        assert_eq!(d.intervals, vec![(f64::NEG_INFINITY, -4.0), (0.0, f64::INFINITY)]);
        let d = theta_domain(&law_from_spec("free_ressel").unwrap());
        assert_eq!(d.intervals, vec![(f64::NEG_INFINITY, -1.0), (0.0, f64::INFINITY)]);
        assert_eq!(d.negative(), Some((f64::NEG_INFINITY, -1.0)));
        let d = theta_domain(&law_from_spec("free_abel").unwrap());
        assert_eq!(d.intervals, vec![(0.0, f64::INFINITY)]);
    }

    #[test]
    fn m_and_k_examples() {
        let s = semicircle();
        assert!((m_transform(&s, 0.4, &cfg()).unwrap() - 1.25).abs() < 1e-10);
        assert!((mean_function(&s, 0.4, &cfg()).unwrap() - 0.5).abs() < 1e-10);
        assert_eq!(m_transform(&s, 0.0, &cfg()).unwrap(), 1.0);
        assert!(m_transform(&s, 0.6, &cfg()).is_err());
        assert!(m_transform(&s, -0.1, &cfg()).is_err());

        let b = law_from_spec("bernoulli").unwrap();
        assert!((m_transform(&b, 0.5, &cfg()).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((mean_function(&b, 0.7, &cfg()).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn negative_branch_mean_brackets() {
        let isc = law_from_spec("isc:p=1").unwrap();
        let k = mean_function(&isc, -5.0, &cfg()).unwrap();
        assert!(k > -1.0 && k < -0.5, "{k}");
        // psi_ext closed form: θ = 1/(m + m²)
        assert!((1.0 / (k + k * k) + 5.0).abs() < 1e-8);
    }

    #[test]
    fn derivatives_match_differences() {
        let law = law_from_spec("mp:a=0.5").unwrap();
        let t = 0.2;
        let h = 1e-5;
        let fd = (m_transform(&law, t + h, &cfg()).unwrap() - m_transform(&law, t - h, &cfg()).unwrap())
            / (2.0 * h);
        assert!((m_transform_derivative(&law, t, &cfg()).unwrap() - fd).abs() < 1e-5);
        let fd = (mean_function(&law, t + h, &cfg()).unwrap()
            - mean_function(&law, t - h, &cfg()).unwrap())
            / (2.0 * h);
        assert!((mean_function_derivative(&law, t, &cfg()).unwrap() - fd).abs() < 1e-5);
    }

    #[test]
    fn bound_values() {
        // G(2) = 1 for the semicircle, G(0) = 1 for isc p=1, G(0) = 1/2 for Ressel
        let g = cauchy_transform_at_bound(&semicircle(), &cfg()).unwrap();
        assert!((g - 1.0).abs() < 1e-7, "{g}");
        let g = cauchy_transform_at_bound(&law_from_spec("isc:p=1").unwrap(), &cfg()).unwrap();
        assert!((g - 1.0).abs() < 1e-10, "{g}");
        let g = cauchy_transform_at_bound(&law_from_spec("free_ressel").unwrap(), &cfg()).unwrap();
        assert!((g - 0.5).abs() < 1e-10, "{g}");
        let g = cauchy_transform_at_bound(&law_from_spec("free_abel").unwrap(), &cfg()).unwrap();
        assert_eq!(g, f64::INFINITY);
        let g = cauchy_transform_at_bound(&law_from_spec("bernoulli").unwrap(), &cfg()).unwrap();
        assert_eq!(g, f64::INFINITY);
        let g = cauchy_transform_at_bound(&law_from_spec("mp:a=-2").unwrap(), &cfg()).unwrap();
        assert_eq!(g, f64::INFINITY);
    }
}
