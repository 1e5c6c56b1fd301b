//! Measures on the real line: an absolutely continuous part on an interval
//! plus finitely many atoms.

use crate::error::{CskError, Result};
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

/// Density of the absolutely continuous part.
pub type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Local behaviour of a density at a finite endpoint `e` of its support.
///
/// Both non-regular variants are removed by the substitution `x = e ± t²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Regular,
    /// `~ √|x − e|`
    SqrtVanishing,
    /// `~ 1/√|x − e|`
    InverseSqrt,
}

impl Endpoint {
    pub fn is_singular(self) -> bool {
        self != Endpoint::Regular
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Absolutely continuous part: a density on `(lo, hi)`, either end possibly infinite.
#[derive(Clone)]
pub struct AcPart {
    density: Density,
    pub lo: f64,
    pub hi: f64,
    pub lo_behavior: Endpoint,
    pub hi_behavior: Endpoint,
}

impl AcPart {
    pub fn new(
        density: Density,
        lo: f64,
        hi: f64,
        lo_behavior: Endpoint,
        hi_behavior: Endpoint,
    ) -> Result<Self> {
        if !(lo < hi) || lo.is_nan() || hi.is_nan() {
            return Err(CskError::Degenerate(format!("empty support ({lo}, {hi})")));
        }
        Ok(AcPart {
            density,
            lo,
            hi,
            lo_behavior: if lo.is_finite() { lo_behavior } else { Endpoint::Regular },
            hi_behavior: if hi.is_finite() { hi_behavior } else { Endpoint::Regular },
        })
    }

    /// Density without the support check; callers stay inside `(lo, hi)`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.density)(x)
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

/// Density plus atoms. Immutable once built.
#[derive(Clone)]
pub struct Measure {
    ac: Option<AcPart>,
    atoms: Vec<Atom>,
    total_mass_hint: f64,
}

impl Measure {
    pub fn new(ac: Option<AcPart>, atoms: Vec<Atom>, total_mass_hint: f64) -> Result<Self> {
        if ac.is_none() && atoms.is_empty() {
            return Err(CskError::Degenerate("measure with no mass".into()));
        }
        for (i, a) in atoms.iter().enumerate() {
            if !(a.weight >= 0.0) || !a.location.is_finite() {
                return Err(CskError::Degenerate(format!(
                    "atom {i} at {} has weight {}",
                    a.location, a.weight
                )));
            }
            if atoms[..i].iter().any(|b| b.location == a.location) {
                return Err(CskError::Degenerate(format!(
                    "duplicate atom location {}",
                    a.location
                )));
            }
        }
        Ok(Measure {
            ac,
            atoms,
            total_mass_hint,
        })
    }

    pub fn ac_part(&self) -> Option<&AcPart> {
        self.ac.as_ref()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass_hint(&self) -> f64 {
        self.total_mass_hint
    }

    /// Density at an interior point of the absolutely continuous support.
    pub fn density(&self, x: f64) -> Result<f64> {
        match &self.ac {
            None => Err(CskError::Domain {
                what: "density",
                value: x,
                domain: "empty set (purely atomic measure)".into(),
            }),
            Some(ac) if !ac.contains(x) => Err(CskError::domain("density", x, ac.lo, ac.hi)),
            Some(ac) => Ok(ac.eval(x)),
        }
    }

    /// Supremum of the support, `A(ν)`.
    pub fn sup_support(&self) -> f64 {
        let ac = self.ac.as_ref().map_or(f64::NEG_INFINITY, |a| a.hi);
        self.atoms
            .iter()
            .filter(|a| a.weight > 0.0)
            .map(|a| a.location)
            .fold(ac, f64::max)
    }

    pub fn inf_support(&self) -> f64 {
        let ac = self.ac.as_ref().map_or(f64::INFINITY, |a| a.lo);
        self.atoms
            .iter()
            .filter(|a| a.weight > 0.0)
            .map(|a| a.location)
            .fold(ac, f64::min)
    }

    /// Positive atom weight at exactly `x`, if any.
    pub fn atom_at(&self, x: f64) -> Option<f64> {
        self.atoms
            .iter()
            .find(|a| a.location == x && a.weight > 0.0)
            .map(|a| a.weight)
    }

    /// Multiplies the measure by a nonnegative function: `kernel(x)·ν(dx)`.
    pub fn tilt(&self, kernel: Arc<dyn Fn(f64) -> f64 + Send + Sync>, total_mass_hint: f64) -> Measure {
        let ac = self.ac.as_ref().map(|ac| {
            let base = ac.density.clone();
            let k = kernel.clone();
            AcPart {
                density: Arc::new(move |x| k(x) * base(x)),
                ..ac.clone()
            }
        });
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                location: a.location,
                weight: a.weight * kernel(a.location),
            })
            .collect();
        Measure {
            ac,
            atoms,
            total_mass_hint,
        }
    }

    /// Image under `x ↦ −x`.
    pub fn reflect(&self) -> Measure {
        let ac = self.ac.as_ref().map(|ac| {
            let base = ac.density.clone();
            AcPart {
                density: Arc::new(move |x| base(-x)),
                lo: -ac.hi,
                hi: -ac.lo,
                lo_behavior: ac.hi_behavior,
                hi_behavior: ac.lo_behavior,
            }
        });
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                location: -a.location,
                weight: a.weight,
            })
            .collect();
        Measure {
            ac,
            atoms,
            total_mass_hint: self.total_mass_hint,
        }
    }

    /// Adds an atom, merging with an existing one at the same location.
    pub fn with_atom(&self, atom: Atom) -> Measure {
        let mut out = self.clone();
        if let Some(a) = out.atoms.iter_mut().find(|a| a.location == atom.location) {
            a.weight += atom.weight;
        } else {
            out.atoms.push(atom);
        }
        out.total_mass_hint += atom.weight;
        out
    }
}

impl fmt::Debug for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("Measure");
        if let Some(ac) = &self.ac {
            d.field("ac_support", &(ac.lo, ac.hi))
                .field("endpoints", &(ac.lo_behavior, ac.hi_behavior));
        }
        d.field("atoms", &self.atoms)
            .field("total_mass_hint", &self.total_mass_hint)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> Measure {
        let ac = AcPart::new(
            Arc::new(|_| 0.5),
            -1.0,
            1.0,
            Endpoint::Regular,
            Endpoint::Regular,
        )
        .unwrap();
        Measure::new(Some(ac), vec![], 1.0).unwrap()
    }

    #[test]
    fn density_domain() {
        let m = uniform();
        assert_eq!(m.density(0.3).unwrap(), 0.5);
        assert!(m.density(1.0).is_err());
        assert!(m.density(-2.0).is_err());
    }

    #[test]
    fn atoms_validated() {
        let bad = vec![
            Atom { location: 1.0, weight: 0.5 },
            Atom { location: 1.0, weight: 0.5 },
        ];
        assert!(Measure::new(None, bad, 1.0).is_err());
        let neg = vec![Atom { location: 1.0, weight: -0.1 }];
        assert!(Measure::new(None, neg, 1.0).is_err());
        assert!(Measure::new(None, vec![], 1.0).is_err());
    }

    #[test]
    fn support_and_reflection() {
        let m = uniform().with_atom(Atom { location: 3.0, weight: 0.0 });
        // zero-weight atoms do not count
        assert_eq!(m.sup_support(), 1.0);
        let m = uniform().with_atom(Atom { location: 3.0, weight: 0.2 });
        assert_eq!(m.sup_support(), 3.0);
        let r = m.reflect();
        assert_eq!(r.inf_support(), -3.0);
        assert_eq!(r.sup_support(), 1.0);
        assert_eq!(r.atom_at(-3.0), Some(0.2));
    }

    #[test]
    fn tilt_reweights_atoms() {
        let m = Measure::new(
            None,
            vec![
                Atom { location: -1.0, weight: 0.5 },
                Atom { location: 1.0, weight: 0.5 },
            ],
            1.0,
        )
        .unwrap();
        let t = m.tilt(Arc::new(|x| 1.0 + x), 1.0);
        assert_eq!(t.atom_at(1.0), Some(1.0));
        assert_eq!(t.atom_at(-1.0), None);
        assert!(t.density(0.0).is_err());
    }
}
