//! Optimal prior and posterior bounds over classes of priors, with
//! brute-force oracles for every closed form.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod bounds;
pub mod cli;
pub mod error;
mod flow;
mod lp;
pub mod measures;
pub mod moments;
pub mod oracle;
pub mod scenarios;

pub use error::{Error, Result};
