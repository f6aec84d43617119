//! Market-based short-term bandwidth allocation for CoMP small-cell clusters.
//!
//! - [`market`]: buyer utility, seller profit and the closed-form clearing price.
//! - [`allocation`]: the shared bid table served by BSs in a random order.
//! - [`simulator`]: the epoch-driven cluster experiment and its baseline.
//! - [`penalty`]: Proportional-Share with penalty, its equilibrium solver and a
//!   water-filling reference.
//! - [`flawed`]: the simplified iterative variant whose outcome is fixed by its
//!   initialization.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod error;
pub mod flawed;
pub mod market;
pub mod penalty;
pub mod roots;
pub mod simulator;

pub use error::{Error, Result};
