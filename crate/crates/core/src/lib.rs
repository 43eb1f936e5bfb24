//! Explicit solenoidal vector field on the unit ball whose shear-dependent
//! weight `(1 + |Du|)^(p-2)` fails every Muckenhoupt condition, together with
//! the machinery to check its construction numerically.

// `!(x > 0.0)` is used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod dd;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod geometry;
pub mod muckenhoupt;
pub mod report;
pub mod sampling;

pub use error::{Error, Result};
