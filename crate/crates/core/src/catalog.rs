//! Built-in laws and the `name:key=value,...` spec parser.

use crate::error::{CskError, Result};
use crate::measure::{AcPart, Atom, Endpoint, Measure};
use crate::poly::Polynomial;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum LawKind {
    Semicircle,
    MarchenkoPastur { a: f64 },
    FreeAbel,
    FreeRessel,
    FreeStrictArcsine,
    InverseSemicircle { p: f64 },
    BernoulliSymmetric,
    /// A measure supplied directly, e.g. a member re-wrapped as a generator.
    Raw,
}

/// Analytic values known for a catalog law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedForms {
    pub pseudo_variance: Polynomial,
    /// One-sided domain of means `(m0, m+)`.
    pub m0: f64,
    pub m_plus: f64,
    pub sup_support: f64,
}

impl ClosedForms {
    pub fn b(&self) -> f64 {
        self.sup_support.max(0.0)
    }

    pub fn theta_plus(&self) -> f64 {
        1.0 / self.b()
    }

    /// `v(m) = (m − m0)·𝕍(m)/m`, defined when `m0` is finite.
    pub fn variance(&self, m: f64) -> Option<f64> {
        if !self.m0.is_finite() {
            return None;
        }
        if m == 0.0 {
            return Some(self.pseudo_variance.derivative().eval(0.0) * (m - self.m0));
        }
        Some((m - self.m0) * self.pseudo_variance.eval(m) / m)
    }
}

/// A named law: its measure together with whatever closed forms are known.
#[derive(Clone)]
pub struct Law {
    kind: LawKind,
    name: String,
    params: BTreeMap<String, f64>,
    measure: Measure,
    closed: Option<ClosedForms>,
}

/// `(A, B, θ₊)` with `A = sup supp ν`, `B = max(0, A)`, `θ₊ = 1/B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportBounds {
    pub a: f64,
    pub b: f64,
    pub theta_plus: f64,
}

impl Law {
    /// Wraps an arbitrary measure; no closed forms are attached.
    pub fn from_measure(name: impl Into<String>, measure: Measure) -> Law {
        Law {
            kind: LawKind::Raw,
            name: name.into(),
            params: BTreeMap::new(),
            measure,
            closed: None,
        }
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn closed_forms(&self) -> Option<&ClosedForms> {
        self.closed.as_ref()
    }

    pub fn closed_pseudo_variance(&self) -> Option<&Polynomial> {
        self.closed.as_ref().map(|c| &c.pseudo_variance)
    }

    pub fn support_bounds(&self) -> SupportBounds {
        let a = self.measure.sup_support();
        let b = a.max(0.0);
        SupportBounds {
            a,
            b,
            theta_plus: 1.0 / b,
        }
    }

    /// Closed-form Cauchy transform at real `z > A`, when known.
    pub fn closed_cauchy(&self, z: f64) -> Option<f64> {
        let a_sup = self.measure.sup_support();
        if !(z > a_sup) {
            return None;
        }
        let g = match self.kind {
            LawKind::Semicircle => 2.0 / (z + (z * z - 4.0).sqrt()),
            LawKind::MarchenkoPastur { a } => {
                let w = z - a;
                let m = 2.0 / (w + (w * w - 4.0).sqrt());
                m / (1.0 + a * m)
            }
            LawKind::FreeAbel => 1.0 / (z + z.sqrt()),
            LawKind::FreeRessel => {
                let s = (1.0 + z).sqrt();
                1.0 / (s * (1.0 + s))
            }
            LawKind::FreeStrictArcsine => {
                let m = -0.5 * (1.0 + (4.0 * z - 3.0).sqrt());
                1.0 / (1.0 + m * m)
            }
            LawKind::InverseSemicircle { p } => {
                let p2 = p * p;
                let m = -0.5 * (p2 + (p2 * p2 + 4.0 * p2 * z).sqrt());
                p2 / (m * m)
            }
            LawKind::BernoulliSymmetric => z / (z * z - 1.0),
            LawKind::Raw => return None,
        };
        Some(g)
    }
}

impl fmt::Debug for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Law")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("measure", &self.measure)
            .field("closed", &self.closed)
            .finish()
    }
}

/// Catalog listing entry.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    pub params: &'static [(&'static str, &'static str)],
    pub support: &'static str,
    pub domain: &'static str,
    pub pseudo_variance: &'static str,
    pub tags: &'static [&'static str],
}

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "semicircle",
            aliases: &[],
            params: &[],
            support: "(-2, 2)",
            domain: "(0, 1)",
            pseudo_variance: "1",
            tags: &["compact", "quadratic"],
        },
        CatalogEntry {
            name: "mp",
            aliases: &["marchenko_pastur"],
            params: &[("a", "real, |a| != 1 (a = 0 is the semicircle law)")],
            support: "(a-2, a+2), plus an atom at -1/a of weight 1-1/a^2 when a^2 > 1",
            domain: "(0, 1) for a > -1; (0, -1/a) for a < -1",
            pseudo_variance: "1 + a*m",
            tags: &["compact", "quadratic", "atom"],
        },
        CatalogEntry {
            name: "free_abel",
            aliases: &[],
            params: &[],
            support: "(-inf, 0)",
            domain: "(-inf, 0)",
            pseudo_variance: "m^2 (m - 1)",
            tags: &["heavy_tail", "cubic"],
        },
        CatalogEntry {
            name: "free_ressel",
            aliases: &[],
            params: &[],
            support: "(-inf, -1)",
            domain: "(-inf, -2)",
            pseudo_variance: "m^2 (m + 1)",
            tags: &["heavy_tail", "cubic"],
        },
        CatalogEntry {
            name: "arcsine",
            aliases: &["free_strict_arcsine"],
            params: &[],
            support: "(-inf, 3/4)",
            domain: "(-inf, -1/2)",
            pseudo_variance: "m (1 + m^2)",
            tags: &["heavy_tail", "cubic"],
        },
        CatalogEntry {
            name: "isc",
            aliases: &["inverse_semicircle"],
            params: &[("p", "real, p > 0")],
            support: "(-inf, -p^2/4)",
            domain: "(-inf, -p^2)",
            pseudo_variance: "m^3 / p^2",
            tags: &["heavy_tail", "cubic"],
        },
        CatalogEntry {
            name: "bernoulli",
            aliases: &["bernoulli_symmetric"],
            params: &[],
            support: "{-1, 1}",
            domain: "(0, 1) one-sided; (-1, 1) two-sided",
            pseudo_variance: "1 - m^2",
            tags: &["compact", "atom", "quadratic"],
        },
    ]
}

fn malformed(spec: &str, reason: impl Into<String>) -> CskError {
    CskError::MalformedSpec {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

fn parse_value(spec: &str, s: &str) -> Result<f64> {
    let ok_chars = !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'))
        && s.chars().any(|c| c.is_ascii_digit());
    match s.parse::<f64>() {
        Ok(v) if ok_chars && v.is_finite() => Ok(v),
        _ => Err(malformed(spec, format!("`{s}` is not a decimal real"))),
    }
}

fn parse_params(spec: &str, body: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for pair in body.split(',') {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| malformed(spec, format!("expected key=value, got `{pair}`")))?;
        let key_ok = !k.is_empty()
            && k.starts_with(|c: char| c.is_ascii_lowercase())
            && k.chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
        if !key_ok {
            return Err(malformed(spec, format!("bad key `{k}`")));
        }
        if out.insert(k.to_string(), parse_value(spec, v)?).is_some() {
            return Err(malformed(spec, format!("duplicate key `{k}`")));
        }
    }
    Ok(out)
}

fn take_param(
    spec: &str,
    params: &mut BTreeMap<String, f64>,
    key: &str,
) -> Result<f64> {
    params
        .remove(key)
        .ok_or_else(|| malformed(spec, format!("missing parameter `{key}`")))
}

/// Parses `name(:key=value(,key=value)*)?` into a catalog law.
pub fn law_from_spec(spec: &str) -> Result<Law> {
    let (name, body) = match spec.split_once(':') {
        Some((n, b)) => (n, Some(b)),
        None => (spec, None),
    };
    if name.is_empty() {
        return Err(malformed(spec, "empty law name"));
    }
    let mut params = match body {
        Some(b) => parse_params(spec, b)?,
        None => BTreeMap::new(),
    };
    let law = match name {
        "semicircle" => semicircle(),
        "mp" | "marchenko_pastur" => {
            let a = take_param(spec, &mut params, "a")?;
            marchenko_pastur(a)?
        }
        "free_abel" => free_abel(),
        "free_ressel" => free_ressel(),
        "arcsine" | "free_strict_arcsine" => free_strict_arcsine(),
        "isc" | "inverse_semicircle" => {
            let p = take_param(spec, &mut params, "p")?;
            inverse_semicircle(p)?
        }
        "bernoulli" | "bernoulli_symmetric" => bernoulli_symmetric(),
        other => return Err(CskError::UnknownLaw(other.to_string())),
    };
    if let Some(k) = params.keys().next() {
        return Err(malformed(spec, format!("unexpected parameter `{k}` for `{name}`")));
    }
    Ok(law)
}

fn ac(
    density: impl Fn(f64) -> f64 + Send + Sync + 'static,
    lo: f64,
    hi: f64,
    lo_b: Endpoint,
    hi_b: Endpoint,
) -> AcPart {
    AcPart::new(Arc::new(density), lo, hi, lo_b, hi_b).expect("catalog supports are non-empty")
}

fn build(
    kind: LawKind,
    name: String,
    params: BTreeMap<String, f64>,
    ac_part: Option<AcPart>,
    atoms: Vec<Atom>,
    closed: ClosedForms,
) -> Law {
    let measure = Measure::new(ac_part, atoms, 1.0).expect("catalog measures are valid");
    Law {
        kind,
        name,
        params,
        measure,
        closed: Some(closed),
    }
}

pub fn semicircle() -> Law {
    build(
        LawKind::Semicircle,
        "semicircle".into(),
        BTreeMap::new(),
        Some(ac(
            |x| ((2.0 - x) * (2.0 + x)).max(0.0).sqrt() / (2.0 * PI),
            -2.0,
            2.0,
            Endpoint::SqrtVanishing,
            Endpoint::SqrtVanishing,
        )),
        vec![],
        ClosedForms {
            pseudo_variance: Polynomial::new(vec![1.0]),
            m0: 0.0,
            m_plus: 1.0,
            sup_support: 2.0,
        },
    )
}

/// Marchenko–Pastur law with parameter `a`; `a = 0` gives the semicircle law.
pub fn marchenko_pastur(a: f64) -> Result<Law> {
    if !a.is_finite() || a.abs() == 1.0 {
        return Err(CskError::ParameterOutOfRange {
            name: "a".into(),
            value: a,
            reason: "|a| = 1 is excluded".into(),
        });
    }
    if a == 0.0 {
        return Ok(semicircle());
    }
    let mut atoms = Vec::new();
    if a * a > 1.0 {
        atoms.push(Atom {
            location: -1.0 / a,
            weight: 1.0 - 1.0 / (a * a),
        });
    }
    let (sup_support, m_plus) = if a < -1.0 {
        (-1.0 / a, -1.0 / a)
    } else {
        (a + 2.0, 1.0)
    };
    Ok(build(
        LawKind::MarchenkoPastur { a },
        format!("mp:a={a}"),
        BTreeMap::from([("a".to_string(), a)]),
        Some(ac(
            move |x| {
                ((a + 2.0 - x) * (x - a + 2.0)).max(0.0).sqrt() / (2.0 * PI * (1.0 + a * x))
            },
            a - 2.0,
            a + 2.0,
            Endpoint::SqrtVanishing,
            Endpoint::SqrtVanishing,
        )),
        atoms,
        ClosedForms {
            pseudo_variance: Polynomial::new(vec![1.0, a]),
            m0: 0.0,
            m_plus,
            sup_support,
        },
    ))
}

pub fn free_abel() -> Law {
    build(
        LawKind::FreeAbel,
        "free_abel".into(),
        BTreeMap::new(),
        Some(ac(
            |x| 1.0 / (PI * (1.0 - x) * (-x).sqrt()),
            f64::NEG_INFINITY,
            0.0,
            Endpoint::Regular,
            Endpoint::InverseSqrt,
        )),
        vec![],
        ClosedForms {
            pseudo_variance: Polynomial::new(vec![0.0, 0.0, -1.0, 1.0]),
            m0: f64::NEG_INFINITY,
            m_plus: 0.0,
            sup_support: 0.0,
        },
    )
}

pub fn free_ressel() -> Law {
    build(
        LawKind::FreeRessel,
        "free_ressel".into(),
        BTreeMap::new(),
        Some(ac(
            |x| -1.0 / (PI * x * (-1.0 - x).sqrt()),
            f64::NEG_INFINITY,
            -1.0,
            Endpoint::Regular,
            Endpoint::InverseSqrt,
        )),
        vec![],
        ClosedForms {
            pseudo_variance: Polynomial::new(vec![0.0, 0.0, 1.0, 1.0]),
            m0: f64::NEG_INFINITY,
            m_plus: -2.0,
            sup_support: -1.0,
        },
    )
}

pub fn free_strict_arcsine() -> Law {
    build(
        LawKind::FreeStrictArcsine,
        "arcsine".into(),
        BTreeMap::new(),
        Some(ac(
            |x| (3.0 - 4.0 * x).max(0.0).sqrt() / (2.0 * PI * (1.0 + x * x)),
            f64::NEG_INFINITY,
            0.75,
            Endpoint::Regular,
            Endpoint::SqrtVanishing,
        )),
        vec![],
        ClosedForms {
            pseudo_variance: Polynomial::new(vec![0.0, 1.0, 0.0, 1.0]),
            m0: f64::NEG_INFINITY,
            m_plus: -0.5,
            sup_support: 0.75,
        },
    )
}

pub fn inverse_semicircle(p: f64) -> Result<Law> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(CskError::ParameterOutOfRange {
            name: "p".into(),
            value: p,
            reason: "p must be > 0".into(),
        });
    }
    let p2 = p * p;
    Ok(build(
        LawKind::InverseSemicircle { p },
        format!("isc:p={p}"),
        BTreeMap::from([("p".to_string(), p)]),
        Some(ac(
            move |x| p * (-p2 - 4.0 * x).max(0.0).sqrt() / (2.0 * PI * x * x),
            f64::NEG_INFINITY,
            -p2 / 4.0,
            Endpoint::Regular,
            Endpoint::SqrtVanishing,
        )),
        vec![],
        ClosedForms {
            pseudo_variance: Polynomial::new(vec![0.0, 0.0, 0.0, 1.0 / p2]),
            m0: f64::NEG_INFINITY,
            m_plus: -p2,
            sup_support: -p2 / 4.0,
        },
    ))
}

pub fn bernoulli_symmetric() -> Law {
    build(
        LawKind::BernoulliSymmetric,
        "bernoulli".into(),
        BTreeMap::new(),
        None,
        vec![
            Atom {
                location: -1.0,
                weight: 0.5,
            },
            Atom {
                location: 1.0,
                weight: 0.5,
            },
        ],
        ClosedForms {
            pseudo_variance: Polynomial::new(vec![1.0, 0.0, -1.0]),
            m0: 0.0,
            m_plus: 1.0,
            sup_support: 1.0,
        },
    )
}

/// The seven catalog laws at the parameters used throughout the tests.
pub fn standard_laws() -> Vec<Law> {
    [
        "semicircle",
        "mp:a=0.5",
        "free_abel",
        "free_ressel",
        "arcsine",
        "isc:p=1",
        "bernoulli",
    ]
    .iter()
    .map(|s| law_from_spec(s).expect("standard spec"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let l = law_from_spec("semicircle").unwrap();
        assert_eq!(l.kind(), LawKind::Semicircle);
        assert_eq!(l.closed_pseudo_variance().unwrap().eval(0.7), 1.0);

        let l = law_from_spec("inverse_semicircle:p=1").unwrap();
        assert_eq!(l.closed_pseudo_variance().unwrap().eval(-2.0), -8.0);
        let d = l.measure().density(-1.0).unwrap();
        assert!((d - 3f64.sqrt() / (2.0 * PI)).abs() < 1e-15);

        let l = law_from_spec("marchenko_pastur:a=-2").unwrap();
        assert_eq!(l.measure().atoms().len(), 1);
        assert_eq!(l.measure().atoms()[0].location, 0.5);
        assert_eq!(l.measure().atoms()[0].weight, 0.75);
        let ac = l.measure().ac_part().unwrap();
        assert_eq!((ac.lo, ac.hi), (-4.0, 0.0));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(law_from_spec("gamma"), Err(CskError::UnknownLaw(_))));
        assert!(matches!(
            law_from_spec("mp:a=1"),
            Err(CskError::ParameterOutOfRange { .. })
        ));
        assert!(matches!(
            law_from_spec("mp:a=-1"),
            Err(CskError::ParameterOutOfRange { .. })
        ));
        assert!(matches!(
            law_from_spec("isc:p=0"),
            Err(CskError::ParameterOutOfRange { .. })
        ));
        for bad in ["mp", "mp:", "mp:a", "mp:a=x", "mp:A=0.5", "mp:a=0.5,a=1", "isc:p=nan", "isc:p=inf", "semicircle:a=1", ":a=1"] {
            assert!(
                matches!(law_from_spec(bad), Err(CskError::MalformedSpec { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn mp_zero_aliases_semicircle() {
        assert_eq!(law_from_spec("mp:a=0").unwrap().kind(), LawKind::Semicircle);
    }

    #[test]
    fn atom_presence_by_regime() {
        assert!(law_from_spec("mp:a=0.5").unwrap().measure().atoms().is_empty());
        assert_eq!(law_from_spec("mp:a=2").unwrap().measure().atoms().len(), 1);
    }

    #[test]
    fn support_bounds_examples() {
        let b = law_from_spec("semicircle").unwrap().support_bounds();
        assert_eq!((b.a, b.b, b.theta_plus), (2.0, 2.0, 0.5));
        let b = law_from_spec("isc:p=1").unwrap().support_bounds();
        assert_eq!((b.a, b.b), (-0.25, 0.0));
        assert_eq!(b.theta_plus, f64::INFINITY);
        let b = law_from_spec("arcsine").unwrap().support_bounds();
        assert_eq!((b.a, b.b), (0.75, 0.75));
        assert!((b.theta_plus - 4.0 / 3.0).abs() < 1e-15);
        // support bounds agree with the analytic record for every law
        for law in standard_laws() {
            let c = law.closed_forms().unwrap();
            assert_eq!(law.support_bounds().a, c.sup_support, "{}", law.name());
        }
    }

    #[test]
    fn density_examples() {
        let s = semicircle();
        assert!((s.measure().density(0.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        let a = free_abel();
        assert!((a.measure().density(-1.0).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(bernoulli_symmetric().measure().density(0.0).is_err());
    }

    #[test]
    fn catalog_has_seven_entries() {
        assert_eq!(catalog().len(), 7);
        assert_eq!(standard_laws().len(), 7);
    }
}
