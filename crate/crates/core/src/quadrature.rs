//! Globally adaptive Gauss–Kronrod (7/15) quadrature with endpoint
//! substitutions for square-root behaviour and a rational map for
//! semi-infinite ranges.

use crate::error::{CskError, Result};
use crate::measure::{Endpoint, Measure};
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Map used to bring a semi-infinite range onto a bounded one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMap {
    /// `x = c − (1 − u)/u` with `u = s²`, `s ∈ (0, 1]`.
    Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub tail_map: TailMap,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            max_subdivisions: 2000,
            tail_map: TailMap::Rational,
        }
    }
}

/// Environment variable overriding the default relative tolerance.
pub const RELTOL_ENV: &str = "CSK_QUAD_RELTOL";

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !self.rel_tol.is_finite() {
            return Err(CskError::Config(format!("rel_tol must be > 0, got {}", self.rel_tol)));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(CskError::Config(format!("abs_tol must be >= 0, got {}", self.abs_tol)));
        }
        if self.max_subdivisions < 1 {
            return Err(CskError::Config("max_subdivisions must be >= 1".into()));
        }
        Ok(())
    }

    /// Defaults, with `rel_tol` taken from `CSK_QUAD_RELTOL` when set.
    pub fn from_env() -> Result<Self> {
        let mut cfg = QuadratureConfig::default();
        if let Ok(s) = std::env::var(RELTOL_ENV) {
            cfg.rel_tol = s
                .trim()
                .parse()
                .map_err(|_| CskError::Config(format!("{RELTOL_ENV}={s} is not a number")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Rule {
    value: f64,
    error: f64,
    resabs: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Rule {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = fc.abs() * WGK[7];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    for j in 0..3 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += WG[j] * (f1 + f2);
        resk += WGK[jtw] * (f1 + f2);
        resabs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += WGK[jtwm1] * (f1 + f2);
        resabs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let h = half.abs();
    let value = resk * half;
    resabs *= h;
    resasc *= h;

    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Rule {
        value,
        error,
        resabs,
    }
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    /// `x = e + t²`
    SqrtFromLeft(f64),
    /// `x = e − t²`
    SqrtFromRight(f64),
    /// `x = c − (1 − s²)/s²`
    TailDown(f64),
    /// `x = c + (1 − s²)/s²`
    TailUp(f64),
}

impl Map {
    #[inline]
    fn apply(self, t: f64) -> (f64, f64) {
        match self {
            Map::Identity => (t, 1.0),
            Map::SqrtFromLeft(e) => (e + t * t, 2.0 * t),
            Map::SqrtFromRight(e) => (e - t * t, 2.0 * t),
            Map::TailDown(c) => {
                let s2 = t * t;
                (c - (1.0 - s2) / s2, 2.0 / (s2 * t))
            }
            Map::TailUp(c) => {
                let s2 = t * t;
                (c + (1.0 - s2) / s2, 2.0 / (s2 * t))
            }
        }
    }
}

struct Segment {
    map: Map,
    a: f64,
    b: f64,
}

fn finite_piece(lo: f64, hi: f64, lo_b: Endpoint, hi_b: Endpoint, out: &mut Vec<Segment>) {
    match (lo_b.is_singular(), hi_b.is_singular()) {
        (false, false) => out.push(Segment { map: Map::Identity, a: lo, b: hi }),
        (true, false) => out.push(Segment {
            map: Map::SqrtFromLeft(lo),
            a: 0.0,
            b: (hi - lo).sqrt(),
        }),
        (false, true) => out.push(Segment {
            map: Map::SqrtFromRight(hi),
            a: 0.0,
            b: (hi - lo).sqrt(),
        }),
        (true, true) => {
            let mid = 0.5 * (lo + hi);
            finite_piece(lo, mid, lo_b, Endpoint::Regular, out);
            finite_piece(mid, hi, Endpoint::Regular, hi_b, out);
        }
    }
}

fn segments(lo: f64, hi: f64, lo_b: Endpoint, hi_b: Endpoint) -> Vec<Segment> {
    let mut out = Vec::new();
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => finite_piece(lo, hi, lo_b, hi_b, &mut out),
        (false, true) => {
            let c = hi - hi.abs().max(1.0);
            out.push(Segment { map: Map::TailDown(c), a: 0.0, b: 1.0 });
            finite_piece(c, hi, Endpoint::Regular, hi_b, &mut out);
        }
        (true, false) => {
            let c = lo + lo.abs().max(1.0);
            finite_piece(lo, c, lo_b, Endpoint::Regular, &mut out);
            out.push(Segment { map: Map::TailUp(c), a: 0.0, b: 1.0 });
        }
        (false, false) => {
            out.push(Segment { map: Map::TailDown(-1.0), a: 0.0, b: 1.0 });
            out.push(Segment { map: Map::Identity, a: -1.0, b: 1.0 });
            out.push(Segment { map: Map::TailUp(1.0), a: 0.0, b: 1.0 });
        }
    }
    out
}

struct Piece {
    seg: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    done: bool,
}

#[derive(PartialEq)]
struct Key(f64, usize);
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

/// `∫_lo^hi f(x) dx` with `f` allowed square-root behaviour at endpoints
/// tagged singular. Infinite endpoints are mapped rationally.
pub fn integrate_interval<F>(
    f: F,
    lo: f64,
    hi: f64,
    lo_b: Endpoint,
    hi_b: Endpoint,
    cfg: &QuadratureConfig,
) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    let segs = segments(lo, hi, lo_b, hi_b);
    let integrand = |seg: &Segment, t: f64| {
        let (mut x, jac) = seg.map.apply(t);
        // keep x strictly inside the support after rounding
        if x <= lo {
            x = lo.next_up();
        } else if x >= hi {
            x = hi.next_down();
        }
        f(x) * jac
    };

    let mut evaluations = 0usize;
    let mut pieces: Vec<Piece> = Vec::with_capacity(cfg.max_subdivisions + segs.len());
    let mut heap = BinaryHeap::new();

    let eval_piece = |seg_idx: usize, a: f64, b: f64, evaluations: &mut usize| -> Result<Piece> {
        let seg = &segs[seg_idx];
        let g = |t: f64| integrand(seg, t);
        let r = gk15(&g, a, b);
        *evaluations += 15;
        if !r.value.is_finite() || !r.error.is_finite() {
            return Err(CskError::Degenerate(format!(
                "non-finite integrand on [{a}, {b}] of segment {seg_idx}"
            )));
        }
        let tiny = (b - a).abs() <= 1e-14 * a.abs().max(b.abs()).max(1e-300);
        let at_roundoff = r.error <= 50.0 * f64::EPSILON * r.resabs * 1.000001;
        Ok(Piece {
            seg: seg_idx,
            a,
            b,
            value: r.value,
            error: r.error,
            done: tiny || at_roundoff,
        })
    };

    for (i, s) in segs.iter().enumerate() {
        let p = eval_piece(i, s.a, s.b, &mut evaluations)?;
        if !p.done {
            heap.push(Key(p.error, pieces.len()));
        }
        pieces.push(p);
    }

    let mut splits = 0usize;
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if error <= cfg.abs_tol.max(cfg.rel_tol * value.abs()) || heap.is_empty() {
            return Ok(Estimate {
                value,
                error,
                evaluations,
            });
        }
        if splits >= cfg.max_subdivisions {
            return Err(CskError::NonConvergence {
                value,
                error,
                subdivisions: splits,
            });
        }
        let Key(_, idx) = heap.pop().expect("heap non-empty");
        let (seg, a, b) = (pieces[idx].seg, pieces[idx].a, pieces[idx].b);
        let mid = 0.5 * (a + b);
        let left = eval_piece(seg, a, mid, &mut evaluations)?;
        let right = eval_piece(seg, mid, b, &mut evaluations)?;
        splits += 1;
        if !left.done {
            heap.push(Key(left.error, idx));
        }
        pieces[idx] = left;
        if !right.done {
            heap.push(Key(right.error, pieces.len()));
        }
        pieces.push(right);
    }
}

/// `∫ f dν`: quadrature over the absolutely continuous part plus the exact
/// atom sum.
pub fn integrate<F>(f: F, measure: &Measure, cfg: &QuadratureConfig) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    let mut est = match measure.ac_part() {
        Some(ac) => integrate_interval(
            |x| f(x) * ac.eval(x),
            ac.lo,
            ac.hi,
            ac.lo_behavior,
            ac.hi_behavior,
            cfg,
        )?,
        None => Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        },
    };
    for atom in measure.atoms() {
        if atom.weight != 0.0 {
            est.value += atom.weight * f(atom.location);
            est.evaluations += 1;
        }
    }
    Ok(est)
}
