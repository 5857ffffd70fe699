//! Scaling and increment flows on piecewise paths, stable and Mittag-Leffler
//! laws, renewal processes, cocycles, renewal shift models, log-average
//! estimators and order-two fractal densities.

// Guards such as `!(x > 0.0)` also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cocycle;
pub mod error;
pub mod estimators;
pub mod fractal;
pub mod lab;
pub mod paths;
pub mod renewal;
pub mod shift_models;
pub mod stable_ml;

pub use error::{Error, Result};
