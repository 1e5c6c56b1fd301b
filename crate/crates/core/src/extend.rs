//! Extensions of the domain of means past `m₊`.
//!
//! The first extension, to `(m0, 𝐦₊)`, runs `θ` over the negative branch
//! `(−∞, 1/A)` and needs `A < 0`. The second, to `(m0, 𝐌₊)`, adds an atom
//! at `m + 𝕍(m)/m` carrying the mass the tilted density no longer has.

use crate::error::{CskError, Result};
use crate::family::{tilt_by_mean, CskFamily};
use crate::measure::{Atom, Measure};
use crate::poly::Polynomial;
use crate::quadrature::{integrate, Estimate};
use crate::solve::{one_sided_limit, Limit};
use crate::transforms::{cauchy_transform_of, mean_function_of};

/// Points beyond this distance above `𝐦₊` are never searched for companions.
const HORIZON: f64 = 1e6;

#[derive(Clone, Debug)]
pub struct ExtendedFamily {
    base: CskFamily,
    /// Catalog `m0` when known, so sign analysis is not thrown by rounding.
    m0: f64,
    poly: Option<Polynomial>,
    level_route: Option<f64>,
    limit_route: Option<f64>,
    m_plus_bold: f64,
    companion: Option<CompanionRange>,
}

/// Where the companion map `g` is defined: `(m̃, 𝐦₊)`, with `h` increasing
/// on `(𝐦₊, M̃)` up to `sup h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompanionRange {
    pub m_tilde: f64,
    pub big_m_tilde: f64,
    pub sup_h: f64,
}

/// Which `𝐦₊` values were computed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FirstExtension {
    /// `inf{m > m0 : h(m) = A}` from the closed form.
    pub level_set: Option<f64>,
    /// `lim_{θ→1/A−} k(θ)`, available when `A < 0`.
    pub theta_limit: Option<f64>,
}

/// A member of the twice-extended family: `Q_m` plus `p(m) δ_{m + 𝕍(m)/m}`.
#[derive(Clone, Debug)]
pub struct ExtendedMember {
    pub ac_part: Measure,
    pub atom_location: f64,
    pub atom_weight: f64,
}

impl ExtendedMember {
    pub fn measure(&self) -> Measure {
        if self.atom_weight > 0.0 {
            self.ac_part.with_atom(Atom {
                location: self.atom_location,
                weight: self.atom_weight,
            })
        } else {
            self.ac_part.clone()
        }
    }
}

pub fn extend(family: &CskFamily) -> Result<ExtendedFamily> {
    let poly = family.law().closed_pseudo_variance().cloned();
    let m0 = family.law().closed_forms().map_or(family.m0(), |c| c.m0);
    let a = family.bounds().a;
    let level_route = match &poly {
        Some(p) => level_set_bound(p, m0, family.m_plus(), a),
        None => None,
    };
    let limit_route = if a < 0.0 {
        let measure = family.law().measure();
        let cfg = family.config();
        let edge = 1.0 / a;
        let scale = edge.abs();
        match one_sided_limit(|d| {
            let t = edge - d * scale;
            let num = lenient(integrate(|x| x / (1.0 - t * x), measure, cfg))?;
            let den = lenient(integrate(|x| 1.0 / (1.0 - t * x), measure, cfg))?;
            Ok(num / den)
        })? {
            Limit::Finite(v) => Some(v),
            Limit::NegInfinity => None,
        }
    } else {
        None
    };
    let m_plus_bold = if a >= 0.0 {
        family.m_plus()
    } else {
        level_route.or(limit_route).unwrap_or(family.m_plus())
    };
    let mut ext = ExtendedFamily {
        base: family.clone(),
        m0,
        poly,
        level_route,
        limit_route,
        m_plus_bold,
        companion: None,
    };
    ext.companion = ext.companion_range();
    Ok(ext)
}

/// Near `θ = 1/A` the kernel `1 − θx` loses about eight digits to
/// cancellation, so the target tolerance can be out of reach while the
/// estimate is still good to the `1e-5` the limit needs.
fn lenient(r: Result<Estimate>) -> Result<f64> {
    match r {
        Ok(e) => Ok(e.value),
        Err(CskError::NonConvergence { value, error, .. }) if error <= 1e-6 * value.abs() => Ok(value),
        Err(e) => Err(e),
    }
}

/// Smallest `m > m0` (and `≥ m₊`) with `𝕍(m)/m + m = A`.
fn level_set_bound(p: &Polynomial, m0: f64, m_plus: f64, a: f64) -> Option<f64> {
    // 𝕍(m) + m² − A m = 0, excluding m = 0
    let mut c = p.coeffs().to_vec();
    c.resize(c.len().max(3), 0.0);
    c[1] -= a;
    c[2] += 1.0;
    let q = Polynomial::new(c);
    let tol = 1e-9 * m_plus.abs().max(1.0);
    q.real_roots()
        .into_iter()
        .map(|r| polish_double_root(&q, r))
        .filter(|&r| r > m0 && r != 0.0 && r >= m_plus - tol)
        .find(|&r| (h_poly(p, r) - a).abs() <= 1e-9 * a.abs().max(1.0))
}

/// Where `h` touches `A` at its minimum the root is double and only good to
/// about `√ε`; Newton on `q′` recovers the full precision.
fn polish_double_root(q: &Polynomial, r: f64) -> f64 {
    let d1 = q.derivative();
    let d2 = d1.derivative();
    let scale = r.abs().max(1.0);
    if d1.eval(r).abs() > 1e-6 * scale * scale {
        return r;
    }
    let mut x = r;
    for _ in 0..8 {
        let curv = d2.eval(x);
        if curv == 0.0 {
            return r;
        }
        let step = d1.eval(x) / curv;
        x -= step;
        if step.abs() <= 1e-16 * scale {
            break;
        }
    }
    if (x - r).abs() <= 1e-6 * scale {
        x
    } else {
        r
    }
}

/// `inf{m > m0 : p(m)/m < 0}`, `+∞` if there is none.
pub(crate) fn sign_change_bound(p: &Polynomial, m0: f64) -> f64 {
    let mut knots: Vec<f64> = p.real_roots().into_iter().filter(|&r| r > m0).collect();
    if 0.0 > m0 {
        knots.push(0.0);
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let ratio = |m: f64| p.eval(m) / m;
    let mut left = m0;
    for &k in knots.iter().chain(std::iter::once(&f64::INFINITY)) {
        let probe = match (left.is_finite(), k.is_finite()) {
            (true, true) => 0.5 * (left + k),
            (true, false) => left + left.abs().max(1.0),
            (false, true) => k - k.abs().max(1.0),
            (false, false) => 1.0,
        };
        if ratio(probe) < 0.0 {
            return left;
        }
        left = k;
    }
    f64::INFINITY
}

fn h_poly(p: &Polynomial, m: f64) -> f64 {
    if m == 0.0 {
        return p.deflate_at_zero().map_or(f64::NAN, |q| q.eval(0.0));
    }
    p.eval(m) / m + m
}

impl ExtendedFamily {
    pub fn base(&self) -> &CskFamily {
        &self.base
    }

    pub fn first_extension(&self) -> FirstExtension {
        FirstExtension {
            level_set: self.level_route,
            theta_limit: self.limit_route,
        }
    }

    /// `𝐦₊(ν)`; equal to `m₊` when `A ≥ 0`.
    pub fn first_extension_bound(&self) -> f64 {
        self.m_plus_bold
    }

    fn poly(&self, what: &'static str) -> Result<&Polynomial> {
        self.poly.as_ref().ok_or(CskError::ClosedFormRequired(what))
    }

    /// `𝐌₊ = inf{m > m0 : 𝕍(m)/m < 0}`.
    pub fn second_extension_bound(&self) -> Result<f64> {
        let p = self.poly("second_extension_bound")?;
        Ok(sign_change_bound(p, self.m0).max(self.m_plus_bold))
    }

    /// `h(m) = 𝕍(m)/m + m` from the closed form.
    pub fn h(&self, m: f64) -> Result<f64> {
        Ok(h_poly(self.poly("h")?, m))
    }

    /// `k(θ)` on the negative branch `(−∞, 1/A)`.
    pub fn mean_negative(&self, theta: f64) -> Result<f64> {
        let a = self.base.bounds().a;
        if !(a < 0.0 && theta < 1.0 / a) {
            return Err(CskError::domain("mean_negative", theta, f64::NEG_INFINITY, 1.0 / a));
        }
        mean_function_of(self.base.law().measure(), theta, self.base.config())
    }

    /// `(lim_{θ→−∞} k(θ), lim_{θ→1/A−} k(θ))`.
    pub fn branch_limits(&self) -> Result<(f64, f64)> {
        let a = self.base.bounds().a;
        if !(a < 0.0) {
            return Err(CskError::domain("branch_limits", a, f64::NEG_INFINITY, 0.0));
        }
        let low = match one_sided_limit(|d| self.mean_negative(-1.0 / (d * d)))? {
            Limit::Finite(v) => v,
            Limit::NegInfinity => f64::NEG_INFINITY,
        };
        let high = self.limit_route.unwrap_or(f64::NEG_INFINITY);
        Ok((low, high))
    }

    /// Inverse of `k` on the negative branch, for `m ∈ (m₊, 𝐦₊)`.
    pub fn psi_ext(&self, m: f64) -> Result<f64> {
        let a = self.base.bounds().a;
        let (lo_m, hi_m) = (self.base.m_plus(), self.m_plus_bold);
        if !(a < 0.0 && m > lo_m && m < hi_m) {
            return Err(CskError::domain("psi_ext", m, lo_m, hi_m));
        }
        let edge = 1.0 / a;
        let mut lo = 2.0 * edge;
        while self.mean_negative(lo)? > m {
            lo *= 2.0;
            if lo < -1e300 {
                return Err(CskError::Bracketing(format!("psi_ext({m})")));
            }
        }
        let mut hi = edge;
        loop {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-13 * mid.abs() || mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if self.mean_negative(mid)? < m {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    /// `𝕍(m)/m` on `(m0, 𝐌₊)`: closed form when known, else the first-branch
    /// or negative-branch inverse.
    fn pv_over_m(&self, m: f64) -> Result<f64> {
        if let Some(p) = &self.poly {
            return Ok(h_poly(p, m) - m);
        }
        if self.base.contains(m) {
            self.base.pv_over_m_inverted(m)
        } else {
            Ok(1.0 / self.psi_ext(m)? - m)
        }
    }

    fn check_second(&self, what: &'static str, m: f64) -> Result<f64> {
        let upper = match &self.poly {
            Some(_) => self.second_extension_bound()?,
            None => self.m_plus_bold,
        };
        if m > self.m0 && m < upper {
            Ok(upper)
        } else {
            Err(CskError::domain(what, m, self.m0, upper))
        }
    }

    /// `p(m) = 1 − (𝕍(m)/m)·G(m + 𝕍(m)/m)`, and `0` for `m ≤ m₊`.
    pub fn atom_weight(&self, m: f64) -> Result<f64> {
        self.check_second("atom_weight", m)?;
        if m <= self.base.m_plus() {
            return Ok(0.0);
        }
        let r = self.pv_over_m(m)?;
        self.weight_from(m, r)
    }

    fn weight_from(&self, m: f64, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(CskError::NegativeDensity { m, ratio: r });
        }
        let g = cauchy_transform_of(self.base.law().measure(), m + r, self.base.config())?;
        let p = 1.0 - r * g;
        if p < -1e-6 || p > 1.0 + 1e-6 {
            return Err(CskError::NegativeDensity { m, ratio: r });
        }
        Ok(p.clamp(0.0, 1.0))
    }

    /// `Q̄_m = Q_m + p(m) δ_{m + 𝕍(m)/m}` on `(m0, 𝐌₊)`.
    pub fn extended_member(&self, m: f64) -> Result<ExtendedMember> {
        self.check_second("extended_member", m)?;
        let r = self.pv_over_m(m)?;
        let ac_part = tilt_by_mean(self.base.law().measure(), m, r)?;
        let atom_weight = if m <= self.base.m_plus() {
            0.0
        } else {
            self.weight_from(m, r)?
        };
        Ok(ExtendedMember {
            ac_part,
            atom_location: m + r,
            atom_weight,
        })
    }

    fn companion_range(&self) -> Option<CompanionRange> {
        let p = self.poly.as_ref()?;
        let mb = self.m_plus_bold;
        let m0 = self.m0;
        // h(m)·m = 𝕍(m) + m² for m > 0
        let mut c = p.coeffs().to_vec();
        c.resize(c.len().max(3), 0.0);
        c[2] += 1.0;
        let q = Polynomial::new(c);
        let (sup_h, big_m_tilde) = if q.degree() >= 2 && q.sign_at_pos_infinity() > 0.0 {
            (f64::INFINITY, f64::INFINITY)
        } else {
            let mut best = (f64::NEG_INFINITY, mb);
            for i in 0..=400 {
                let x = mb + HORIZON * 10f64.powf(-12.0 + 12.0 * i as f64 / 400.0);
                let v = h_poly(p, x);
                if v > best.0 {
                    best = (v, x);
                }
            }
            best
        };
        let a = h_poly(p, mb);
        if !(sup_h > a + 1e-12 * a.abs().max(1.0)) {
            return None;
        }
        let m_tilde = if sup_h.is_infinite() {
            m0
        } else {
            // h decreases on (m0, 𝐦₊): find h(m̃) = sup h
            let mut lo = if m0.is_finite() { m0 } else { mb - 1.0 };
            while !m0.is_finite() && h_poly(p, lo) < sup_h {
                lo = mb - 2.0 * (mb - lo);
            }
            let mut hi = mb;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if h_poly(p, mid) > sup_h {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        Some(CompanionRange {
            m_tilde,
            big_m_tilde,
            sup_h,
        })
    }

    pub fn companion_range_checked(&self) -> Result<CompanionRange> {
        self.poly("companion_mean_map")?;
        self.companion.ok_or(CskError::NoExtension)
    }

    /// `g(m) = inf{m′ ≥ 𝐦₊ : h(m′) = h(m)}` for `m ∈ (m̃, 𝐦₊)`.
    pub fn companion_mean_map(&self, m: f64) -> Result<f64> {
        let range = self.companion_range_checked()?;
        let mb = self.m_plus_bold;
        if !(m > range.m_tilde && m < mb) {
            return Err(CskError::domain("companion_mean_map", m, range.m_tilde, mb));
        }
        let p = self.poly("companion_mean_map")?;
        let target = h_poly(p, m);
        let f = |x: f64| h_poly(p, x) - target;
        let eps = 1e-9 * mb.abs().max(1.0);
        let mut prev = mb;
        let mut step = eps;
        loop {
            let x = mb + step;
            if f(x) >= 0.0 {
                let mut lo = prev;
                let mut hi = x;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if f(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(0.5 * (lo + hi));
            }
            prev = x;
            step *= 2.0;
            if step > HORIZON {
                return Err(CskError::NoCompanion(m));
            }
        }
    }

    /// `𝕍` on `(m0, 𝐌₊)` through `ψ` alone: the numerical inverse below `m₊`,
    /// `ψ_ext` on `(m₊, 𝐦₊)`, and above `𝐦₊` the value `ψ(m′)` at the
    /// companion preimage `m′ < 𝐦₊` with `h(m′) = h(m)`.
    pub fn extended_pseudo_variance(&self, m: f64) -> Result<f64> {
        let mb = self.m_plus_bold;
        if self.base.contains(m) {
            return self.base.pseudo_variance(m);
        }
        if m > self.base.m_plus() && m < mb {
            return Ok(m * (1.0 / self.psi_ext(m)? - m));
        }
        let range = self.companion_range_checked()?;
        let upper = self.second_extension_bound()?;
        if !(m > mb && m < upper) {
            return Err(CskError::domain("extended_pseudo_variance", m, mb, upper));
        }
        let p = self.poly("extended_pseudo_variance")?;
        let target = h_poly(p, m);
        if !(target < range.sup_h) || m >= range.big_m_tilde {
            return Err(CskError::NoCompanion(m));
        }
        // preimage on the decreasing side
        let m0 = self.m0;
        let mut lo = if m0.is_finite() { m0 } else { mb - 1.0 };
        while !m0.is_finite() && h_poly(p, lo) < target {
            lo = mb - 2.0 * (mb - lo);
            if lo < -1e300 {
                return Err(CskError::NoCompanion(m));
            }
        }
        let mut hi = mb;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if h_poly(p, mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mp = 0.5 * (lo + hi);
        let theta = if self.base.contains(mp) {
            self.base.psi(mp)?
        } else {
            self.psi_ext(mp)?
        };
        Ok(m * (1.0 / theta - m))
    }

    /// `𝐌₊` of `m ↦ α𝕍(m/α)` with `m0` scaled to `α·m0`, checked against `α·𝐌₊`.
    pub fn free_power_bound(&self, alpha: f64) -> Result<f64> {
        if !(alpha >= 1.0) {
            return Err(CskError::ParameterOutOfRange {
                name: "alpha".into(),
                value: alpha,
                reason: "free convolution powers need alpha >= 1".into(),
            });
        }
        let p = self.poly("free_power_bound")?;
        let scaled = p.dilate(alpha);
        let computed = sign_change_bound(&scaled, alpha * self.m0);
        let expected = alpha * sign_change_bound(p, self.m0);
        let agree = if expected.is_infinite() {
            computed == expected
        } else {
            (computed - expected).abs() <= 1e-10 * expected.abs().max(1.0)
        };
        if !agree {
            return Err(CskError::ScalingMismatch { computed, expected });
        }
        Ok(computed)
    }
}
