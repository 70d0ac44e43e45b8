//! Numerical construction and verification of bi-flat semisimple F-manifolds
//! in canonical coordinates.
//!
//! The crate is organised bottom-up: [`geometry`] holds the pointwise tensor
//! checks, [`darboux_egorov`] builds connections from rotation and Lamé
//! coefficients, [`models`] supplies closed-form families, [`painleve`] covers
//! the three-dimensional case through its six-equation reduction, and
//! [`hierarchy`] deals with symmetries, recursion and flow commutativity.

pub mod darboux_egorov;
pub mod error;
pub mod fd;
pub mod geometry;
pub mod hierarchy;
pub mod interp;
pub mod models;
pub mod ode;
pub mod painleve;
pub mod point;
pub mod quadrature;
pub mod sampling;
pub mod tensor;

pub use error::{Error, Result};
pub use point::Point;
