//! Load distribution and dimensioning of noise-limited Poisson cellular
//! networks, with Monte-Carlo and discrete-event oracles.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod config;
pub mod dynsim;
pub mod error;
pub mod geomc;
pub mod linkbudget;
pub mod quad;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};
