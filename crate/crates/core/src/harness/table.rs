//! Grids of a single quantity, emitted as CSV or JSON.

use crate::catalog::law_from_spec;
use crate::error::{CskError, Result};
use crate::extend::{extend, ExtendedFamily};
use crate::family::{build_family, CskFamily};
use crate::iterate::iterate;
use crate::measure::Measure;
use crate::quadrature::QuadratureConfig;
use serde::Serialize;
use serde_json::{Map, Value};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Density,
    MemberDensity,
    Pv,
    Variance,
    MeanMap,
    V1,
    AtomWeight,
}

impl Quantity {
    pub const ALL: [Quantity; 7] = [
        Quantity::Density,
        Quantity::MemberDensity,
        Quantity::Pv,
        Quantity::Variance,
        Quantity::MeanMap,
        Quantity::V1,
        Quantity::AtomWeight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Density => "density",
            Quantity::MemberDensity => "member_density",
            Quantity::Pv => "pv",
            Quantity::Variance => "variance",
            Quantity::MeanMap => "mean_map",
            Quantity::V1 => "v1",
            Quantity::AtomWeight => "atom_weight",
        }
    }

    /// Name of the grid column.
    pub fn key(self) -> &'static str {
        match self {
            Quantity::Density | Quantity::MemberDensity => "x",
            Quantity::V1 => "mbar",
            _ => "m",
        }
    }
}

impl FromStr for Quantity {
    type Err = CskError;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Quantity::ALL.iter().map(|q| q.name()).collect();
                CskError::Config(format!("unknown quantity `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const MAX_POINTS: usize = 1_000_000;

fn decimals(s: &str) -> usize {
    let mantissa = s.split(['e', 'E']).next().unwrap_or(s);
    let frac = mantissa.split_once('.').map_or(0, |(_, f)| f.len());
    let exp: i64 = s
        .split_once(['e', 'E'])
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    (frac as i64 - exp).clamp(0, 17) as usize
}

/// Parses `start:step:stop` into the points `start + i·step ≤ stop`, rounded
/// to the number of decimals written in the spec so `0.1` steps land on
/// `0.3` rather than `0.30000000000000004`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |reason: &str| CskError::Config(format!("grid `{spec}`: {reason}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected start:step:stop"));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| bad(&format!("`{p}` is not a finite number")))?;
    }
    let [start, step, stop] = v;
    if !(step > 0.0) {
        return Err(bad("step must be > 0"));
    }
    if stop < start {
        return Err(bad("stop must be >= start"));
    }
    let n = ((stop - start) / step * (1.0 + 1e-12) + 1e-9).floor() + 1.0;
    if n > MAX_POINTS as f64 {
        return Err(bad("too many points"));
    }
    let d = parts.iter().map(|p| decimals(p.trim())).max().unwrap_or(0);
    let scale = 10f64.powi(d as i32);
    Ok((0..n as usize)
        .map(|i| {
            let x = start + i as f64 * step;
            if d < 15 {
                (x * scale).round() / scale
            } else {
                x
            }
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct TableRequest {
    pub law_spec: String,
    pub quantity: Quantity,
    pub grid: Vec<f64>,
    /// Member mean, for `member_density`.
    pub m: Option<f64>,
    /// Generator mean, for `mean_map` and `v1`.
    pub m1: Option<f64>,
    pub cfg: QuadratureConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub key: f64,
    pub value: Option<f64>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub key: &'static str,
    pub quantity: &'static str,
    pub rows: Vec<Row>,
}

fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

impl Table {
    /// Header `key,quantity,reason`; numbers use the same shortest
    /// round-trip form as the JSON output.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut write = |rec: [&str; 3]| w.write_record(rec).expect("writing to memory");
        write([self.key, self.quantity, "reason"]);
        for r in &self.rows {
            let key = number(r.key).to_string();
            let value = r.value.map_or(Value::Null, number).to_string();
            write([&key, &value, r.reason.as_deref().unwrap_or("")]);
        }
        String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is utf-8")
    }

    pub fn to_json_value(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let mut o = Map::new();
                    o.insert(self.key.into(), number(r.key));
                    o.insert(self.quantity.into(), r.value.map_or(Value::Null, number));
                    o.insert("reason".into(), r.reason.clone().map_or(Value::Null, Value::String));
                    Value::Object(o)
                })
                .collect(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("table values serialize")
    }
}

fn rows<F>(grid: &[f64], mut f: F) -> Vec<Row>
where
    F: FnMut(f64) -> Result<f64>,
{
    grid.iter()
        .map(|&x| match f(x) {
            Ok(v) if v.is_finite() => Row { key: x, value: Some(v), reason: None },
            Ok(v) => Row { key: x, value: None, reason: Some(format!("value is {v}")) },
            Err(e) => Row { key: x, value: None, reason: Some(e.to_string()) },
        })
        .collect()
}

fn required(what: &str, v: Option<f64>, quantity: Quantity) -> Result<f64> {
    v.ok_or_else(|| CskError::Config(format!("quantity `{quantity}` needs --{what}")))
}

/// `𝕍` on the whole extended domain: the numerical inverse inside
/// `(m0, m₊)`, the extension machinery beyond.
fn pv_anywhere(fam: &CskFamily, ext: &Result<ExtendedFamily>, m: f64) -> Result<f64> {
    if fam.contains(m) {
        return fam.pseudo_variance(m);
    }
    ext.as_ref().map_err(Clone::clone)?.extended_pseudo_variance(m)
}

pub fn table(req: &TableRequest) -> Result<Table> {
    let law = law_from_spec(&req.law_spec)?;
    let q = req.quantity;
    let fam = build_family(&law, &req.cfg)?;
    let rows = match q {
        Quantity::Density => rows(&req.grid, |x| law.measure().density(x)),
        Quantity::MemberDensity => {
            let m = required("m", req.m, q)?;
            let member: Result<Measure> = if fam.contains(m) {
                fam.member(m)
            } else {
                extend(&fam).and_then(|e| e.extended_member(m)).map(|q| q.ac_part)
            };
            rows(&req.grid, |x| member.as_ref().map_err(Clone::clone)?.density(x))
        }
        Quantity::Pv => {
            let ext = extend(&fam);
            rows(&req.grid, |m| pv_anywhere(&fam, &ext, m))
        }
        Quantity::Variance => {
            let ext = extend(&fam);
            let m0 = law.closed_forms().map_or(fam.m0(), |c| c.m0);
            rows(&req.grid, |m| {
                if !m0.is_finite() {
                    return Err(CskError::VarianceUndefined);
                }
                if fam.contains(m) {
                    fam.variance(m)
                } else {
                    Ok((m - m0) * pv_anywhere(&fam, &ext, m)? / m)
                }
            })
        }
        Quantity::MeanMap | Quantity::V1 => {
            let it = iterate(&fam, required("m1", req.m1, q)?)?;
            if q == Quantity::MeanMap {
                rows(&req.grid, |m| it.mean_map(m))
            } else {
                rows(&req.grid, |mb| it.variance(mb))
            }
        }
        Quantity::AtomWeight => {
            let ext = extend(&fam);
            rows(&req.grid, |m| ext.as_ref().map_err(Clone::clone)?.atom_weight(m))
        }
    };
    Ok(Table {
        key: q.key(),
        quantity: q.name(),
        rows,
    })
}

/// Quantities of the iterated family `𝒦₊(Q_{m₁})`: `v1` and `pv` over `m̄`,
/// `mean_map` over `m`.
pub fn iterated_table(
    law_spec: &str,
    m1: f64,
    quantity: Quantity,
    grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Table> {
    let law = law_from_spec(law_spec)?;
    let it = iterate(&build_family(&law, cfg)?, m1)?;
    let (key, rows) = match quantity {
        Quantity::V1 | Quantity::Variance => ("mbar", rows(grid, |mb| it.variance(mb))),
        Quantity::Pv => ("mbar", rows(grid, |mb| it.pseudo_variance(mb))),
        Quantity::MeanMap => ("m", rows(grid, |m| it.mean_map(m))),
        other => {
            return Err(CskError::Config(format!(
                "quantity `{other}` is not available for an iterated family (use v1, pv or mean_map)"
            )))
        }
    };
    Ok(Table {
        key,
        quantity: quantity.name(),
        rows,
    })
}
