//! Exploration laboratory for the maximum of `per(I - A)` over doubly
//! substochastic matrices with a fixed entry sum.
//!
//! The library keeps two parallel arithmetic worlds and checks one against
//! the other wherever a claim matters:
//!
//! - exact rationals for permanents ([`permanent`]), cycle products
//!   ([`cycles`]), closed-form bounds and extremal constructions
//!   ([`bounds`]), and permanent-non-decreasing transforms ([`transforms`]);
//! - floating point for the multistart hill climb and the grid scans in
//!   [`search`], whose winners are rationalized and re-scored exactly.
//!
//! [`strategy`] exposes the interchangeable permanent evaluators behind one
//! registry, and [`sampling`] draws the random matrix classes the property
//! checks run on.

// Index loops mirror the i/j subscripts of the matrix formulas they implement.
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod cycles;
pub mod error;
pub mod matrix;
pub mod permanent;
pub mod sampling;
pub mod search;
pub mod serde_util;
pub mod strategy;
pub mod transforms;

pub use error::{Error, Result};
pub use matrix::{frac, whole, ClassificationReport, Matrix, Rational};
pub use permanent::{per_i_minus, permanent_gray, permanent_naive, permanent_ryser, FloatMatrix};
pub use strategy::{PermanentStrategy, PermanentValue, StrategyRegistry};
