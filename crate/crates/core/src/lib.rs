//! Pathwise tools for differential equations driven by fractional Brownian
//! motion: path sampling, fractional calculus, Young integration, a
//! flow-preserving solver and reproducible numerical experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod experiment;
pub mod fbm;
pub mod fraccalc;
pub mod norms;
pub mod path;
pub mod sde;
mod quadrature;
pub mod stats;
pub mod young;

pub use error::{Error, Result};
pub use fraccalc::FracOrder;
pub use path::{GridPath, HolderOrder};
