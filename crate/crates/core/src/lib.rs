//! Simulation, limit-distribution tabulation and variance-ratio rank tests
//! for cointegrated censored-and-kinked structural VARs.
//!
//! The model is a two-regime structural VAR in which `y` enters through its
//! positive and negative parts. [`simulate`] generates paths, [`ranktest`]
//! computes the MB and SB statistics, [`limitdist`] tabulates their limiting
//! critical values, [`lrv`] estimates the standardized initial value and
//! [`montecarlo`] runs the rejection-rate study.

pub mod cksvar;
pub mod cli;
pub mod error;
pub mod limitdist;
pub mod lrv;
pub mod mat;
pub mod montecarlo;
pub mod paramfile;
pub mod pencil;
pub mod ranktest;
pub mod rng;
pub mod series;
pub mod simulate;

pub use cksvar::{check_case_ii, check_coherency, to_canonical, CksvarParams, CointCaseTwoSpec};
pub use error::{Error, Result};
pub use limitdist::{make_table, CritValTable, LimitSimConfig};
pub use mat::Mat;
pub use montecarlo::{run_table, verify_lln, McConfig};
pub use ranktest::{lambda_stat, run_test, TestOutcome, Variant};
pub use rng::RngState;
pub use series::SeriesMatrix;
pub use simulate::{mc_design, simulate_path, DesignKind, SimOptions};
