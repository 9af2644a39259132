//! Multi-aspect embedding of heterogeneous information networks.
//!
//! A network is split into *aspects* (connected edge-type subsets) that are
//! internally consistent, each aspect gets its own embedding space, and the
//! spaces are concatenated for downstream tasks.

pub mod alias;
pub mod aspect;
pub mod compose;
pub mod error;
pub mod eval;
pub mod hin;
pub mod pipeline;
pub mod synthetic;
pub mod train;

pub use error::{Error, Result};
