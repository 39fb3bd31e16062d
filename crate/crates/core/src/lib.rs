// NaN must fail validation, so guards are written as `!(x >= lo)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod error;
pub mod model;
pub mod scenarios;
pub mod stochastic;
pub mod suite;
