#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bipodal;
pub mod error;
pub mod grid;
pub mod optimizer;
pub mod roots;
pub mod sampler;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};
