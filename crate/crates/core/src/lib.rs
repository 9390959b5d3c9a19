//! Next-day option-direction forecasting.
//!
//! The pipeline solves the Black-Scholes equation forwards in time on a
//! per-option bid/ask rectangle as a regularized least-squares problem,
//! feeds the resulting price estimates plus market quotes into a small 1-D
//! convolutional classifier, and backtests a buy/hold rule with
//! accuracy/precision/recall reporting.

pub mod bs;
pub mod cnn;
pub mod config;
pub mod features;
pub mod market;
pub mod pipeline;
pub mod qrm;
pub mod strategy;
