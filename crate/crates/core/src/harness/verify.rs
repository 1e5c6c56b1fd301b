//! Numerical re-derivation of the identities behind each module, reported
//! check by check.

use super::expect::{default_m1, expectations, Expectations};
use super::interior_grid;
use crate::catalog::{law_from_spec, Law, LawKind};
use crate::error::{CskError, Result};
use crate::extend::{extend, ExtendedFamily};
use crate::family::{build_family, CskFamily};
use crate::iterate::{aw_integral, iterate, semicircle_second_iterate_variance, IteratedFamily};
use crate::measure::{Endpoint, Measure};
use crate::quadrature::{integrate, integrate_interval, QuadratureConfig};
use crate::solve::{one_sided_limit, Limit};
use crate::transforms::{cauchy_transform, m_transform, mean_function};
use serde::Serialize;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Transforms,
    Family,
    Iterate,
    Extend,
    All,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl FromStr for Suite {
    type Err = CskError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transforms" => Ok(Suite::Transforms),
            "family" => Ok(Suite::Family),
            "iterate" => Ok(Suite::Iterate),
            "extend" => Ok(Suite::Extend),
            "all" => Ok(Suite::All),
            _ => Err(CskError::Config(format!(
                "unknown suite `{s}` (expected transforms, family, iterate, extend or all)"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Transforms => "transforms",
            Suite::Family => "family",
            Suite::Iterate => "iterate",
            Suite::Extend => "extend",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub cfg: QuadratureConfig,
    /// Replaces the tolerance of every numeric check (count checks keep 0).
    pub tol: Option<f64>,
    /// Generator mean for the iteration suite; a per-law default otherwise.
    pub m1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    /// Set when the check failed because the numerics did not converge.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub numeric: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub law_spec: String,
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub wall_time_ms: u64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    /// True if some failure came from the numerics rather than a wrong value.
    pub fn numeric_failure(&self) -> bool {
        self.failures().any(|c| c.numeric)
    }
}

struct Collector {
    checks: Vec<Check>,
    tol: Option<f64>,
}

/// `|got − want| / max(1, |want|)`, with equal infinities counting as exact.
fn scaled_diff(got: f64, want: f64) -> f64 {
    if want.is_infinite() || got.is_infinite() {
        return if got == want { 0.0 } else { f64::INFINITY };
    }
    let r = (got - want).abs() / want.abs().max(1.0);
    if r.is_nan() {
        f64::INFINITY
    } else {
        r
    }
}

fn rel_diff(got: f64, want: f64) -> f64 {
    let r = (got - want).abs() / want.abs().max(f64::MIN_POSITIVE);
    if r.is_nan() {
        f64::INFINITY
    } else {
        r
    }
}

impl Collector {
    fn record(&mut self, name: String, r: Result<f64>, tolerance: f64) {
        let (residual, detail, numeric) = match r {
            Ok(v) if v.is_nan() => (f64::INFINITY, Some("residual is NaN".to_string()), false),
            Ok(v) => (v, None, false),
            Err(e) => (f64::INFINITY, Some(e.to_string()), e.is_numeric()),
        };
        let status = if residual <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        self.checks.push(Check {
            name,
            residual,
            tolerance,
            status,
            detail,
            numeric,
        });
    }

    /// A residual compared against a tolerance that `--tol` may replace.
    fn residual(&mut self, name: impl Into<String>, r: Result<f64>, tol: f64) {
        let tol = self.tol.unwrap_or(tol);
        self.record(name.into(), r, tol);
    }

    fn close(&mut self, name: impl Into<String>, got: Result<f64>, want: f64, tol: f64) {
        self.residual(name, got.map(|g| scaled_diff(g, want)), tol);
    }

    /// Number of violations of a sampled property; passes only at zero.
    fn count(&mut self, name: impl Into<String>, r: Result<usize>) {
        self.record(name.into(), r.map(|n| n as f64), 0.0);
    }
}

fn max_over<I, F>(points: I, mut f: F) -> Result<f64>
where
    I: IntoIterator<Item = f64>,
    F: FnMut(f64) -> Result<f64>,
{
    let mut worst: f64 = 0.0;
    for p in points {
        let r = f(p)?;
        if r.is_nan() {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(r);
    }
    Ok(worst)
}

fn count_not_increasing(values: &[f64]) -> usize {
    values.windows(2).filter(|w| !(w[1] > w[0])).count()
}

fn sample<F>(points: &[f64], mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    points.iter().map(|&p| f(p)).collect()
}

struct Moments {
    mass: f64,
    mean: f64,
    central2: Option<f64>,
}

/// Mass, mean and, when `center` is given, the second moment about it.
fn moments(measure: &Measure, center: Option<f64>, cfg: &QuadratureConfig) -> Result<Moments> {
    let mass = integrate(|_| 1.0, measure, cfg)?.value;
    let mean = integrate(|x| x, measure, cfg)?.value;
    let central2 = match center {
        Some(c) => Some(integrate(|x| (x - c) * (x - c), measure, cfg)?.value),
        None => None,
    };
    Ok(Moments {
        mass,
        mean,
        central2,
    })
}

fn limit_value(l: Limit) -> f64 {
    match l {
        Limit::Finite(v) => v,
        Limit::NegInfinity => f64::NEG_INFINITY,
    }
}

/// Runs `suite` on the law named by `spec`.
pub fn verify(spec: &str, suite: Suite, opts: &VerifyOptions) -> Result<VerificationReport> {
    let law = law_from_spec(spec)?;
    Ok(verify_law(spec, &law, suite, opts))
}

/// Runs `suite` on an already constructed law.
pub fn verify_law(label: &str, law: &Law, suite: Suite, opts: &VerifyOptions) -> VerificationReport {
    let start = Instant::now();
    let mut c = Collector {
        checks: Vec::new(),
        tol: opts.tol,
    };
    let cfg = &opts.cfg;
    match build_family(law, cfg) {
        Err(e) => c.record("family.build".into(), Err(e), 0.0),
        Ok(fam) => {
            if suite.includes(Suite::Transforms) {
                transforms_suite(&mut c, law, &fam, cfg);
            }
            if suite.includes(Suite::Family) {
                family_suite(&mut c, law, &fam, cfg);
            }
            let m1 = opts
                .m1
                .unwrap_or_else(|| default_m1(law, fam.m0(), fam.m_plus()));
            let exp = expectations(law, m1);
            if suite.includes(Suite::Iterate) {
                iterate_suite(&mut c, law, &fam, m1, exp.as_ref(), cfg);
            }
            if suite.includes(Suite::Extend) {
                extend_suite(&mut c, law, &fam, exp.as_ref(), cfg);
            }
        }
    }
    let mut checks = c.checks;
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    VerificationReport {
        law_spec: label.to_string(),
        suite,
        checks,
        wall_time_ms: start.elapsed().as_millis() as u64,
    }
}

fn transforms_suite(c: &mut Collector, law: &Law, fam: &CskFamily, cfg: &QuadratureConfig) {
    let measure = law.measure();
    c.close(
        "transforms.mass",
        integrate(|_| 1.0, measure, cfg).map(|e| e.value),
        1.0,
        1e-7,
    );

    let b = fam.bounds();
    if let Some(cf) = law.closed_forms() {
        c.close("transforms.sup_support", Ok(b.a), cf.sup_support, 1e-12);
        c.close("transforms.theta_plus", Ok(b.theta_plus), cf.theta_plus(), 1e-12);
    }

    let pos = interior_grid(0.0, b.theta_plus, 50);
    c.count(
        "transforms.k_increasing.positive",
        sample(&pos, |t| mean_function(law, t, cfg)).map(|v| count_not_increasing(&v)),
    );
    if b.a < 0.0 {
        let neg = interior_grid(f64::NEG_INFINITY, 1.0 / b.a, 50);
        c.count(
            "transforms.k_increasing.negative",
            sample(&neg, |t| mean_function(law, t, cfg)).map(|v| count_not_increasing(&v)),
        );
    }

    // M(θ)(1 − θk(θ)) = 1
    let thetas = interior_grid(0.0, b.theta_plus, 6);
    c.residual(
        "transforms.m_k_identity",
        max_over(thetas.iter().copied(), |t| {
            let m = m_transform(law, t, cfg)?;
            let k = mean_function(law, t, cfg)?;
            Ok((m * (1.0 - t * k) - 1.0).abs())
        }),
        1e-9,
    );

    let z = b.b + 1e8;
    c.close(
        "transforms.cauchy_at_infinity",
        cauchy_transform(law, z, cfg).map(|g| z * g),
        1.0,
        1e-3,
    );

    if law.closed_cauchy(b.b + 1.0).is_some() {
        c.residual(
            "transforms.cauchy_closed",
            max_over([0.5, 2.0, 10.0].map(|d| b.b + d), |z| {
                let want = law.closed_cauchy(z).unwrap_or(f64::NAN);
                Ok(rel_diff(cauchy_transform(law, z, cfg)?, want))
            }),
            1e-8,
        );
    }

    if let Some(ac) = measure.ac_part() {
        let xs = interior_grid(ac.lo, ac.hi, 50);
        c.count(
            "transforms.density_nonnegative",
            Ok(xs.iter().filter(|&&x| !(ac.eval(x) >= 0.0)).count()),
        );
    }
    if !measure.atoms().is_empty() {
        c.count(
            "transforms.atoms_positive",
            Ok(measure.atoms().iter().filter(|a| !(a.weight > 0.0)).count()),
        );
    }
}

fn family_suite(c: &mut Collector, law: &Law, fam: &CskFamily, cfg: &QuadratureConfig) {
    let (m0, mp) = (fam.m0(), fam.m_plus());
    if let Some(cf) = law.closed_forms() {
        c.close("family.m0", Ok(m0), cf.m0, 1e-6);
        c.close("family.m_plus", Ok(mp), cf.m_plus, 1e-6);
    }
    let grid = interior_grid(m0, mp, 20);

    c.residual(
        "family.psi_roundtrip",
        max_over(grid.iter().copied(), |m| {
            let t = fam.psi(m)?;
            Ok(scaled_diff(fam.mean(t)?, m))
        }),
        1e-9,
    );

    if let Some(p) = law.closed_pseudo_variance() {
        c.residual(
            "family.pv_closed",
            max_over(grid.iter().copied(), |m| {
                Ok(rel_diff(fam.pseudo_variance(m)?, p.eval(m)))
            }),
            1e-6,
        );
    }

    let pv = fam.pv();
    c.count(
        "family.pv_over_m_positive",
        sample(&grid, |m| pv.over_m(m)).map(|v| v.iter().filter(|&&r| !(r > 0.0)).count()),
    );
    let a = fam.bounds().a;
    c.count(
        "family.z_above_support",
        sample(&grid, |m| fam.z_of_m(m)).map(|v| v.iter().filter(|&&z| !(z > a)).count()),
    );

    // G(z(m))·𝕍(m) = m, scaled by max(1, |m|)
    c.residual(
        "family.cauchy_identity",
        max_over(grid.iter().copied(), |m| {
            let r = pv.over_m(m)?;
            let g = fam.cauchy(m + r)?;
            Ok((g * r - 1.0).abs() * m.abs().min(1.0))
        }),
        1e-7,
    );

    let members = interior_grid(m0, mp, 5);
    let mut mass = Vec::new();
    let mut mean = Vec::new();
    let mut var = Vec::new();
    for &m in &members {
        match fam.member(m).and_then(|q| moments(&q, Some(m).filter(|_| m0.is_finite()), cfg)) {
            Ok(mo) => {
                mass.push(Ok((mo.mass - 1.0).abs()));
                mean.push(Ok(scaled_diff(mo.mean, m)));
                if m0.is_finite() {
                    let want = law
                        .closed_forms()
                        .and_then(|cf| cf.variance(m))
                        .map_or_else(|| fam.variance(m), Ok);
                    var.push(want.map(|w| scaled_diff(mo.central2.unwrap_or(f64::NAN), w)));
                }
            }
            Err(e) => {
                mass.push(Err(e.clone()));
                mean.push(Err(e.clone()));
                var.push(Err(e));
            }
        }
    }
    let worst = |v: Vec<Result<f64>>| -> Result<f64> {
        v.into_iter().try_fold(0.0f64, |acc, r| Ok(acc.max(r?)))
    };
    c.residual("family.member.mass", worst(mass), 1e-6);
    c.residual("family.member.mean", worst(mean), 1e-6);
    if m0.is_finite() {
        c.residual("family.member.variance", worst(var), 1e-6);
    }

    // Q_m against P_θ(dx) = ν(dx)/(M(θ)(1 − θx)) at θ = ψ(m)
    c.residual(
        "family.member.density_vs_theta",
        max_over(interior_grid(m0, mp, 3), |m| {
            let q = fam.member(m)?;
            let t = fam.psi(m)?;
            let mt = m_transform(law, t, cfg)?;
            let mut worst: f64 = 0.0;
            if let Some(ac) = law.measure().ac_part() {
                for x in interior_grid(ac.lo, ac.hi, 5) {
                    let want = ac.eval(x) / (mt * (1.0 - t * x));
                    worst = worst.max(rel_diff(q.density(x)?, want));
                }
            }
            for atom in law.measure().atoms() {
                let want = atom.weight / (mt * (1.0 - t * atom.location));
                let got = q.atom_at(atom.location).unwrap_or(0.0);
                worst = worst.max(rel_diff(got, want));
            }
            Ok(worst)
        }),
        1e-7,
    );
}

fn iterate_suite(
    c: &mut Collector,
    law: &Law,
    fam: &CskFamily,
    m1: f64,
    exp: Option<&Expectations>,
    cfg: &QuadratureConfig,
) {
    let it = match iterate(fam, m1) {
        Ok(it) => it,
        Err(e) => {
            c.record("iterate.build".into(), Err(e), 0.0);
            return;
        }
    };
    let (lo, hi) = it.domain();
    if let Some(e) = exp {
        c.close("iterate.domain_upper", Ok(hi), e.iterated_upper, 1e-6);
        let pts = interior_grid(lo, hi, 10);
        c.residual(
            "iterate.v1_closed",
            max_over(pts.iter().copied(), |mb| {
                Ok(scaled_diff(it.variance(mb)?, e.closed_iterate.v1(mb)))
            }),
            1e-6,
        );
        c.residual(
            "iterate.mean_map_inverse_closed",
            max_over(pts.iter().copied(), |mb| {
                Ok(scaled_diff(it.mean_map_inverse(mb)?, e.closed_iterate.m_of_mbar(mb)))
            }),
            1e-6,
        );
    }

    let base_pts = interior_grid(fam.m0(), fam.m_plus(), 5);
    c.residual(
        "iterate.psi_preserved",
        max_over(base_pts.iter().copied(), |m| {
            let mb = it.mean_map(m)?;
            Ok(rel_diff(it.psi1(mb)?, fam.psi(m)?))
        }),
        1e-8,
    );
    c.residual(
        "iterate.k1_matches_mean_map",
        max_over(base_pts.iter().copied(), |m| {
            let t = fam.psi(m)?;
            Ok(scaled_diff(it.mean(t)?, it.mean_map(m)?))
        }),
        1e-8,
    );

    let generator = it.generator();
    c.residual(
        "iterate.m_transform_direct",
        generator.as_ref().map_err(Clone::clone).and_then(|q| {
            max_over(interior_grid(0.0, fam.theta_plus(), 4), |t| {
                let direct = integrate(|x| 1.0 / (1.0 - t * x), q, cfg)?.value;
                Ok(rel_diff(it.m_transform(t)?, direct))
            })
        }),
        1e-7,
    );
    c.close(
        "iterate.generator_mean",
        generator
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|q| Ok(integrate(|x| x, q, cfg)?.value)),
        m1,
        1e-6,
    );

    let scale = (0.5 * fam.theta_plus()).min(1.0);
    c.close(
        "iterate.k1_limit_at_zero",
        one_sided_limit(|d| it.mean(d * scale)).map(limit_value),
        m1,
        1e-5,
    );

    let dense = interior_grid(fam.m0(), fam.m_plus(), 30);
    c.count(
        "iterate.mean_map_increasing",
        sample(&dense, |m| it.mean_map(m)).map(|v| {
            count_not_increasing(&v) + v.iter().filter(|&&mb| !(mb > lo && mb < hi)).count()
        }),
    );
    c.residual(
        "iterate.mean_map_roundtrip",
        max_over(base_pts.iter().copied(), |m| {
            Ok(scaled_diff(it.mean_map_inverse(it.mean_map(m)?)?, m))
        }),
        1e-8,
    );

    c.residual(
        "iterate.direct_vs_derived",
        direct_vs_derived(&it, generator, cfg),
        1e-6,
    );

    if law.kind() == LawKind::Semicircle {
        c.residual("iterate.second_iteration", second_iteration(cfg, 0.3, 0.5), 1e-5);
        c.residual("iterate.askey_wilson", askey_wilson(AW_TUPLES), 1e-9);
    }
}

/// `𝕍₁` from the pipeline against `𝕍` of `Q_{m₁}` wrapped as a new law.
fn direct_vs_derived(it: &IteratedFamily, generator: Result<Measure>, cfg: &QuadratureConfig) -> Result<f64> {
    let raw = Law::from_measure("generator", generator?);
    let f1 = build_family(&raw, cfg)?;
    let (lo, hi) = it.domain();
    max_over(interior_grid(lo, hi, 3), |mb| {
        Ok(rel_diff(f1.pseudo_variance(mb)?, it.pseudo_variance(mb)?))
    })
}

/// Variance function of the family generated by `Q_{m₂,m₁}` against its
/// closed form.
pub fn second_iteration(cfg: &QuadratureConfig, m1: f64, m2: f64) -> Result<f64> {
    let base = build_family(&crate::catalog::semicircle(), cfg)?;
    let first = build_family(&Law::from_measure("Q_m1", base.member(m1)?), cfg)?;
    let second = build_family(&Law::from_measure("Q_m2_m1", first.member(m2)?), cfg)?;
    let hi = m2 + m1 * m1 - m1 * m2 + 1.0;
    max_over(interior_grid(m2, hi, 5), |m| {
        Ok(scaled_diff(
            second.variance(m)?,
            semicircle_second_iterate_variance(m1, m2, m),
        ))
    })
}

const AW_TUPLES: &[[f64; 4]] = &[
    [0.1, -0.2, 0.3, 0.4],
    [0.5, 0.5, -0.5, 0.2],
    [0.0, 0.0, 0.6, -0.6],
    [-0.3, 0.25, 0.45, -0.1],
];

/// Product formula against quadrature of `√(4 − x²) ∏ (1 + aⱼ² − aⱼx)⁻¹`.
pub fn askey_wilson(tuples: &[[f64; 4]]) -> Result<f64> {
    let cfg = QuadratureConfig {
        rel_tol: 1e-13,
        abs_tol: 0.0,
        ..QuadratureConfig::default()
    };
    let mut worst: f64 = 0.0;
    for &a in tuples {
        let f = |x: f64| {
            let mut v = (4.0 - x * x).max(0.0).sqrt();
            for aj in a {
                v /= 1.0 + aj * aj - aj * x;
            }
            v
        };
        let q = integrate_interval(f, -2.0, 2.0, Endpoint::SqrtVanishing, Endpoint::SqrtVanishing, &cfg)?;
        worst = worst.max(rel_diff(q.value, aw_integral(a)?));
    }
    Ok(worst)
}

fn extend_suite(
    c: &mut Collector,
    law: &Law,
    fam: &CskFamily,
    exp: Option<&Expectations>,
    cfg: &QuadratureConfig,
) {
    let ext = match extend(fam) {
        Ok(e) => e,
        Err(e) => {
            c.record("extend.build".into(), Err(e), 0.0);
            return;
        }
    };
    let closed = law.closed_pseudo_variance().is_some();
    let m0 = law.closed_forms().map_or(fam.m0(), |cf| cf.m0);
    let mb = ext.first_extension_bound();
    let big = ext.second_extension_bound();
    let a = fam.bounds().a;

    if let Some(e) = exp {
        c.close("extend.first_bound", Ok(mb), e.first_bound, 1e-6);
        c.close("extend.second_bound", big.clone(), e.second_bound, 1e-6);
    }
    let tiny = 1e-9 * fam.m_plus().abs().max(1.0);
    c.count(
        "extend.bounds_ordered",
        Ok(usize::from(!(mb >= fam.m_plus() - tiny)) + big.as_ref().map_or(0, |&bm| usize::from(!(bm >= mb)))),
    );
    if closed && mb.is_finite() {
        c.close("extend.h_at_first_bound", ext.h(mb), a, 1e-8);
    }
    let routes = ext.first_extension();
    if let (Some(l), Some(t)) = (routes.level_set, routes.theta_limit) {
        c.close("extend.routes_agree", Ok(t), l, 1e-5);
    }

    if a < 0.0 {
        let neg = interior_grid(f64::NEG_INFINITY, 1.0 / a, 50);
        c.count(
            "extend.negative_branch_increasing",
            sample(&neg, |t| ext.mean_negative(t)).map(|v| count_not_increasing(&v)),
        );
        match ext.branch_limits() {
            Ok((low, high)) => {
                c.close("extend.branch_limit.minus_infinity", Ok(low), fam.m_plus(), 1e-5);
                c.close("extend.branch_limit.one_over_a", Ok(high), mb, 1e-5);
            }
            Err(e) => c.record("extend.branch_limits".into(), Err(e), 1e-5),
        }
    }

    if !closed {
        return;
    }
    let upper = *big.as_ref().unwrap_or(&f64::INFINITY);
    c.count(
        "extend.pv_over_m_nonnegative",
        sample(&interior_grid(m0, upper.min(mb + 100.0 * mb.abs().max(1.0)), 40), |m| {
            Ok(ext.h(m)? - m)
        })
        .map(|v| v.iter().filter(|&&r| !(r >= 0.0)).count()),
    );
    c.count(
        "extend.h_decreasing_below",
        sample(&interior_grid(m0, mb, 30), |m| ext.h(m)).map(|v| {
            let rev: Vec<f64> = v.into_iter().rev().collect();
            count_not_increasing(&rev)
        }),
    );

    // below m₊ the tilted density already has mass one
    c.residual(
        "extend.atom_identity_below",
        max_over(interior_grid(fam.m0(), fam.m_plus(), 5), |m| {
            let r = fam.pv().over_m(m)?;
            Ok((1.0 - r * fam.cauchy(m + r)?).abs())
        }),
        1e-7,
    );

    let companion = exp.and_then(|e| e.companion.as_ref());
    match ext.companion_range_checked() {
        Err(CskError::NoExtension) if exp.is_some() && companion.is_none() => {
            c.count("extend.cannot_extend", Ok(0));
            let beyond = mb + 0.2 * mb.abs().max(1.0);
            c.count(
                "extend.cannot_extend.pseudo_variance",
                Ok(usize::from(ext.extended_pseudo_variance(beyond).is_ok())),
            );
        }
        Err(e) => c.record("extend.companion_range".into(), Err(e), 0.0),
        Ok(range) => {
            if exp.is_some() && companion.is_none() {
                c.count("extend.cannot_extend", Ok(1));
            }
            let top = range.big_m_tilde.min(mb + 100.0 * mb.abs().max(1.0));
            c.count(
                "extend.h_increasing_above",
                sample(&interior_grid(mb, top, 30), |m| ext.h(m)).map(|v| count_not_increasing(&v)),
            );
            if let Some((g, pts)) = companion {
                c.residual(
                    "extend.companion.closed",
                    max_over(pts.iter().copied(), |m| {
                        Ok(scaled_diff(ext.companion_mean_map(m)?, g.eval(m)))
                    }),
                    1e-8,
                );
            }
            let lo = if range.m_tilde.is_finite() { range.m_tilde } else { f64::NEG_INFINITY };
            let grid = interior_grid(lo, mb, 20);
            c.residual(
                "extend.companion.h_level",
                max_over(grid.iter().copied(), |m| {
                    let hm = ext.h(m)?;
                    Ok(scaled_diff(ext.h(ext.companion_mean_map(m)?)?, hm))
                }),
                1e-9,
            );
            c.count(
                "extend.companion.decreasing",
                sample(&grid, |m| ext.companion_mean_map(m)).map(|v| {
                    let rev: Vec<f64> = v.into_iter().rev().collect();
                    count_not_increasing(&rev)
                }),
            );
        }
    }

    if let Some(e) = exp {
        for &m in e.extended_points.iter().filter(|&&m| m < upper) {
            qbar_checks(c, law, &ext, m0, m, cfg);
        }
        let p = law.closed_pseudo_variance().expect("closed form checked above");
        let beyond: Vec<f64> = e
            .extended_points
            .iter()
            .copied()
            .filter(|&m| m > fam.m_plus() && m < upper)
            .collect();
        if companion.is_some() && !beyond.is_empty() {
            c.residual(
                "extend.pseudo_variance_continued",
                max_over(beyond, |m| Ok(rel_diff(ext.extended_pseudo_variance(m)?, p.eval(m)))),
                1e-6,
            );
        }
    }

    if let Ok(bm) = big {
        c.residual(
            "extend.free_power",
            max_over([1.5, 2.0, 4.0], |alpha| Ok(scaled_diff(ext.free_power_bound(alpha)?, alpha * bm))),
            1e-8,
        );
    }
}

fn qbar_checks(c: &mut Collector, law: &Law, ext: &ExtendedFamily, m0: f64, m: f64, cfg: &QuadratureConfig) {
    let tag = format!("extend.qbar[m={m}]");
    let member = match ext.extended_member(m) {
        Ok(q) => q,
        Err(e) => {
            c.record(format!("{tag}.member"), Err(e), 0.0);
            return;
        }
    };
    match moments(&member.measure(), Some(m).filter(|_| m0.is_finite()), cfg) {
        Ok(mo) => {
            c.close(format!("{tag}.mass"), Ok(mo.mass), 1.0, 1e-6);
            c.close(format!("{tag}.mean"), Ok(mo.mean), m, 1e-6);
            if m0.is_finite() {
                let want = law.closed_forms().and_then(|cf| cf.variance(m)).unwrap_or(f64::NAN);
                c.close(format!("{tag}.variance"), Ok(mo.central2.unwrap_or(f64::NAN)), want, 1e-6);
            }
        }
        Err(e) => c.record(format!("{tag}.moments"), Err(e), 1e-6),
    }
    let isc_unit = matches!(law.kind(), LawKind::InverseSemicircle { p } if p == 1.0);
    if isc_unit && m > -0.5 {
        let ac = &member.ac_part;
        c.close(
            format!("{tag}.ac_mass"),
            integrate(|_| 1.0, ac, cfg).map(|e| e.value),
            m * m / ((1.0 + m) * (1.0 + m)),
            1e-7,
        );
        c.close(
            format!("{tag}.ac_mean"),
            integrate(|x| x, ac, cfg).map(|e| e.value),
            -m * m / (1.0 + m),
            1e-7,
        );
        c.close(
            format!("{tag}.atom_weight"),
            ext.atom_weight(m),
            (1.0 + 2.0 * m).max(0.0) / ((1.0 + m) * (1.0 + m)),
            1e-7,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_diff_handles_infinities() {
        assert_eq!(scaled_diff(f64::INFINITY, f64::INFINITY), 0.0);
        assert_eq!(scaled_diff(1e9, f64::INFINITY), f64::INFINITY);
        assert_eq!(scaled_diff(f64::NAN, 1.0), f64::INFINITY);
        assert!((scaled_diff(2.0 + 1e-9, 2.0) - 5e-10).abs() < 1e-15);
    }

    #[test]
    fn suite_names_roundtrip() {
        for s in ["transforms", "family", "iterate", "extend", "all"] {
            assert_eq!(s.parse::<Suite>().unwrap().to_string(), s);
        }
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn askey_wilson_fixed_tuples() {
        assert!(askey_wilson(AW_TUPLES).unwrap() < 1e-9);
    }

    #[test]
    fn semicircle_all_passes() {
        let r = verify("semicircle", Suite::All, &VerifyOptions::default()).unwrap();
        let failed: Vec<_> = r.failures().collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert!(r.checks.len() >= 25, "{}", r.checks.len());
        assert!(r.checks.windows(2).all(|w| w[0].name <= w[1].name));
    }

    #[test]
    fn bernoulli_extension_reported_impossible() {
        let r = verify("bernoulli", Suite::Extend, &VerifyOptions::default()).unwrap();
        let c = r.checks.iter().find(|c| c.name == "extend.cannot_extend").unwrap();
        assert_eq!(c.status, Status::Pass);
        assert!(r.passed(), "{:#?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn tight_override_fails_numeric_checks_only() {
        let opts = VerifyOptions {
            tol: Some(0.0),
            ..VerifyOptions::default()
        };
        let r = verify("semicircle", Suite::Transforms, &opts).unwrap();
        assert!(!r.passed());
        let k = r.checks.iter().find(|c| c.name == "transforms.k_increasing.positive").unwrap();
        assert_eq!(k.status, Status::Pass);
    }
}
