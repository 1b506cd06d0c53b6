//! Critical-event response engine for enterprises.
//!
//! A Horn-clause inference engine orchestrates pattern-recognition
//! diagnostics, least-squares prediction and decision analysis in response
//! to critical events, and conducts a Yes/No dialogue with an operator.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the matrix formulas in the numeric kernels.
#![allow(clippy::needless_range_loop)]

pub mod decision;
pub mod diagnostics;
pub mod gateway;
pub mod inference;
pub mod kb;
pub mod lang;
pub mod lsq;
pub mod prediction;
pub mod scenarios;
