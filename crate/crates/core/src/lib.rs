//! Decentralized channel and power allocation for NOMA self-organizing
//! networks, learned with multi-player bandits.
//!
//! Channel allocation runs first: every AP learns channel means by uniform
//! sampling, plays trial-and-error matching, then exploits its most content
//! subset. The frozen assignment is then refined per channel by a power-level
//! game. [`oracle`] supplies brute-force optima and theory bounds; [`ucb`] is
//! the baseline; [`harness`] runs seeded experiments.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actions;
pub mod channel_agent;
pub mod env;
pub mod harness;
pub mod error;
pub mod matching;
pub mod noma;
pub mod oracle;
pub mod power_agent;
pub mod schedule;
pub mod ucb;

pub use error::{Error, Result};
