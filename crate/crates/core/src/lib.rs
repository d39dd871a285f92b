//! Unified-transform solver suite for the half-line m-th order dispersion KdV problem
//!
//! `u_t + (-1)^{j+1} d_x^m u + u u_x = f`, `m = 2j + 1`, on `x > 0`, `0 < t < T`,
//! with `j` Dirichlet-type boundary traces at `x = 0`.

pub mod audit;
pub mod bourgain;
pub mod config;
pub mod contour;
pub mod data;
pub mod elimination;
pub mod error;
pub mod evaluator;
pub mod fd;
pub mod field;
pub mod picard;
pub mod problem;
pub mod quadrature;
pub mod runner;
pub mod special;
pub mod transforms;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
