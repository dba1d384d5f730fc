//! Simulation and control of a coupled PV/battery plant trading on day-ahead,
//! continuous intra-day and dual-price balancing markets.
//!
//! The crate is organised bottom-up:
//!
//! * [`market`] holds prices, positions and per-PTU settlement arithmetic.
//! * [`forecast`] holds empirical predictive distributions, issue-time keyed
//!   forecast stores and Gaussian-copula scenario generation.
//! * [`battery`] implements storage dynamics, rainflow counting and the
//!   cycling-aging cost.
//! * [`lp`] is the linear-program contract used by every optimizing controller.
//! * [`control`] contains the bidding rules and the scenario-based MPC
//!   controllers.
//! * [`simulator`] replays a study period on a 30-minute clock.
//! * [`sizing`] post-processes simulation results into storage-size and
//!   revenue tables.
//!
//! All energies are MWh per PTU, all prices EUR/MWh, all timestamps UTC.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod control;
pub mod error;
pub mod forecast;
pub mod lp;
pub mod market;
pub mod simulator;
pub mod sizing;
pub mod time;

pub use error::{Error, Result};
pub use time::{Ptu, PTU_HOURS, PTUS_PER_DAY};
