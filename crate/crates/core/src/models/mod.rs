//! Closed-form solution families.

pub mod epsilon;
pub mod n2;

pub use epsilon::{EpsilonAdjoint, EpsilonModel, EpsilonVelocity};
pub use n2::{DualMode, N2Biflat, N2DualLame, N2Model, N2NaturalLame};
