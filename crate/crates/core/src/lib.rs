//! Dead-fuel moisture modeling and data assimilation.
//!
//! - [`moisture`]: equilibrium moisture and the exact time-lag step.
//! - [`assimilation`]: augmented extended Kalman filter on `(m, ΔE)`.
//! - [`rnn`]: linear recurrent network with Euler-equivalent initialization
//!   and truncated-BPTT training.
//! - [`dataset`]: synthetic scenarios, CSV ingestion, learning/forecast split.
//! - [`harness`]: the two end-to-end pipelines and their comparison.

// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assimilation;
pub mod dataset;
mod error;
pub mod moisture;
pub mod rnn;

pub mod harness;

pub use error::{Error, Result};

// Runs the book's snippets as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/moisture.md")]
    mod moisture {}
    #[doc = include_str!("../../../book/src/assimilation.md")]
    mod assimilation {}
    #[doc = include_str!("../../../book/src/rnn.md")]
    mod rnn {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
