#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod lindblad;
pub mod optimal;
pub mod linalg;
pub mod liouville;
pub mod qsl;
pub mod random;
pub mod spectral;

pub use error::{Error, Result};
