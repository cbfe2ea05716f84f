// NaN-rejecting range checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod aoa;
pub mod approx;
pub mod blocking;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod quadrature;
