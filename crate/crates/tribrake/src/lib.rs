//! Reduced planar three-body problem at zero angular momentum and negative energy.
//!
//! Shape coordinates `(x, y)` live in the unit disk (collinear shapes on the unit
//! circle), the size is `r = sqrt(I)`, and triple collision is blown up to `r = 0`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod isosceles;
pub mod jm;
pub mod model;
pub mod potential;
pub mod restpoint;
pub mod syzygy;

pub use error::{Error, Pair};
pub use model::{JacobiState, MassParams, ShapePoint};
