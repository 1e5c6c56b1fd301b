//! Cauchy–Stieltjes kernel (CSK) families of probability measures.
//!
//! Starting from a generating measure `ν` with support bounded from above,
//! the crate computes the transforms `G`, `M(θ)`, `k(θ)`, the one-sided
//! domain of means, the pseudo-variance function `𝕍` and the tilted members
//! `Q_m`; iterates families generated by a member `Q_{m₁}`; and extends the
//! domain of means beyond its natural upper endpoint, first through the
//! negative-`θ` branch and then with members carrying an atom.
//!
//! Every quantity that has a closed form in the catalog is also computed
//! numerically, so the two routes can be checked against each other.

pub mod catalog;
pub mod error;
pub mod extend;
pub mod family;
pub mod harness;
pub mod iterate;
pub mod measure;
pub mod poly;
pub mod quadrature;
pub mod solve;
pub mod transforms;

pub use catalog::{law_from_spec, Law, LawKind, SupportBounds};
pub use error::{CskError, Result};
pub use extend::{extend, CompanionRange, ExtendedFamily, ExtendedMember, FirstExtension};
pub use family::{build_family, CskFamily, Provenance, PseudoVariance};
pub use iterate::{aw_integral, iterate, CubicIterate, IteratedFamily, QuadraticIterate};
pub use measure::{AcPart, Atom, Endpoint, Measure};
pub use poly::Polynomial;
pub use quadrature::{integrate, integrate_interval, Estimate, QuadratureConfig};
