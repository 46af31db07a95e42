pub mod autodiff;
pub mod cli;
pub mod data;
pub mod distributions;
pub mod error;
pub mod eval;
mod io_util;
pub mod losses;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod selftest;
pub mod special;
pub mod sphere;
pub mod train;

pub use error::{Error, Result};
