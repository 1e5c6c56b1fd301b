//! Published closed forms for each catalog law, used as targets by the
//! verification suites.

use crate::catalog::{Law, LawKind};
use crate::iterate::{CubicIterate, QuadraticIterate};

#[derive(Clone, Copy, Debug)]
pub(crate) enum ClosedIterate {
    Quadratic(QuadraticIterate),
    Cubic(CubicIterate),
}

impl ClosedIterate {
    pub(crate) fn v1(&self, mbar: f64) -> f64 {
        match self {
            ClosedIterate::Quadratic(q) => q.v1(mbar),
            ClosedIterate::Cubic(c) => c.v1(mbar),
        }
    }

    pub(crate) fn m_of_mbar(&self, mbar: f64) -> f64 {
        match self {
            ClosedIterate::Quadratic(q) => q.m_of_mbar(mbar),
            ClosedIterate::Cubic(c) => c.m_of_mbar(mbar),
        }
    }
}

/// Companion map `g` in closed form.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Companion {
    /// `g(m) = 1/m`
    Reciprocal,
    /// `g(m) = −m − s`
    Reflect(f64),
}

impl Companion {
    pub(crate) fn eval(&self, m: f64) -> f64 {
        match *self {
            Companion::Reciprocal => 1.0 / m,
            Companion::Reflect(s) => -m - s,
        }
    }
}

pub(crate) struct Expectations {
    pub iterated_upper: f64,
    pub closed_iterate: ClosedIterate,
    pub first_bound: f64,
    pub second_bound: f64,
    pub companion: Option<(Companion, Vec<f64>)>,
    pub extended_points: Vec<f64>,
}

pub(crate) fn default_m1(law: &Law, m0: f64, m_plus: f64) -> f64 {
    match law.kind() {
        LawKind::Semicircle | LawKind::BernoulliSymmetric => 0.5,
        LawKind::MarchenkoPastur { .. } => 0.5 * m_plus,
        LawKind::FreeAbel | LawKind::FreeStrictArcsine => -1.0,
        LawKind::FreeRessel => -3.0,
        LawKind::InverseSemicircle { p } => -2.0 * p * p,
        LawKind::Raw if m0.is_finite() => 0.5 * (m0 + m_plus),
        LawKind::Raw => m_plus - m_plus.abs().max(1.0),
    }
}

pub(crate) fn expectations(law: &Law, m1: f64) -> Option<Expectations> {
    let inf = f64::INFINITY;
    let e = match law.kind() {
        LawKind::Semicircle => Expectations {
            iterated_upper: 1.0 + m1,
            closed_iterate: ClosedIterate::Quadratic(QuadraticIterate::new(0.0, 0.0, m1)),
            first_bound: 1.0,
            second_bound: inf,
            companion: Some((Companion::Reciprocal, vec![0.2, 0.5, 0.8])),
            extended_points: vec![0.5, 2.0, 5.0],
        },
        LawKind::MarchenkoPastur { a } => {
            let m_plus = if a < -1.0 { -1.0 / a } else { 1.0 };
            Expectations {
                iterated_upper: if a > -1.0 { 1.0 + (a + 1.0) * m1 } else { m_plus },
                closed_iterate: ClosedIterate::Quadratic(QuadraticIterate::new(a, 0.0, m1)),
                first_bound: m_plus,
                second_bound: if a < 0.0 { -1.0 / a } else { inf },
                companion: Some((Companion::Reciprocal, vec![0.2 * m_plus, 0.5 * m_plus, 0.8 * m_plus])),
                extended_points: vec![0.5 * m_plus, 2.0, 5.0],
            }
        }
        LawKind::FreeAbel => Expectations {
            iterated_upper: 0.0,
            closed_iterate: ClosedIterate::Cubic(CubicIterate::new(1.0, -1.0, 0.0, m1).ok()?),
            first_bound: 0.0,
            second_bound: 0.0,
            companion: Some((Companion::Reflect(0.0), vec![-3.0, -1.0, -0.5])),
            extended_points: vec![-2.0, -0.5],
        },
        LawKind::FreeRessel => Expectations {
            iterated_upper: 2.0 * m1 / (1.0 - m1),
            closed_iterate: ClosedIterate::Cubic(CubicIterate::new(1.0, 1.0, 0.0, m1).ok()?),
            first_bound: -1.0,
            second_bound: -1.0,
            companion: Some((Companion::Reflect(2.0), vec![-4.0, -3.0])),
            extended_points: vec![-3.0, -1.5],
        },
        LawKind::FreeStrictArcsine => Expectations {
            iterated_upper: (2.0 + m1) / (1.0 - 2.0 * m1),
            closed_iterate: ClosedIterate::Cubic(CubicIterate::new(1.0, 0.0, 1.0, m1).ok()?),
            first_bound: -0.5,
            second_bound: inf,
            companion: Some((Companion::Reflect(1.0), vec![-3.0, -2.0])),
            extended_points: vec![-2.0, 0.5, 2.0],
        },
        LawKind::InverseSemicircle { p } => {
            let p2 = p * p;
            Expectations {
                iterated_upper: p2 * m1 / (p2 - m1),
                closed_iterate: ClosedIterate::Cubic(CubicIterate::new(1.0 / p2, 0.0, 0.0, m1).ok()?),
                first_bound: -0.5 * p2,
                second_bound: inf,
                companion: Some((Companion::Reflect(p2), vec![-3.0 * p2, -2.0 * p2, -0.75 * p2])),
                extended_points: [-2.0, -0.75, -0.25, 0.5, 2.0].iter().map(|m| m * p2).collect(),
            }
        }
        LawKind::BernoulliSymmetric => Expectations {
            iterated_upper: 1.0,
            closed_iterate: ClosedIterate::Quadratic(QuadraticIterate::new(0.0, -1.0, m1)),
            first_bound: 1.0,
            second_bound: 1.0,
            companion: None,
            extended_points: vec![0.3, 0.7],
        },
        LawKind::Raw => return None,
    };
    Some(e)
}
