#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments,
    clippy::redundant_guards
)]

pub mod catalog;
pub mod central;
pub mod error;
pub mod frame;
pub mod grid;
pub mod kahler;
pub mod report;
pub mod scalar;
pub mod warped;

pub use error::{Error, Result};
