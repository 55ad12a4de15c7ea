//! Agent-based market of noise traders, MACD chartists and fundamentalists,
//! with the statistics needed to check its log returns for stylised facts
//! (heavy tails, volatility clustering, aggregational Gaussianity).
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`, which is what the CLI uses.

// `!(x > 0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod market;
pub mod num;
pub mod stats;
pub mod traders;

pub use error::{Error, Result};
pub use num::Real;

pub type Params = market::ModelParams<f64>;
pub type Market = market::Market<f64>;
pub type Simulation = market::SimulationOutput<f64>;
pub type Returns = stats::ReturnSeries<f64>;
pub type Report = stats::StatsReport<f64>;

pub type Params32 = market::ModelParams<f32>;
pub type Simulation32 = market::SimulationOutput<f32>;
