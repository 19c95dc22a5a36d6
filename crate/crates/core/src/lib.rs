// `!(x > 0.0)` is used on purpose so that NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispersion;
pub mod error;
pub mod green;
pub mod kernels;
pub mod models;
pub mod profile;
pub mod quad;
