//! Numerics for covert phase sensing with an amplified-spontaneous-emission
//! probe: Gaussian states, covertness budgets, estimation bounds, the
//! free-space link model and a truncated Fock-space cross-check.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod fock;
pub mod gaussian;
pub mod link;
pub mod montecarlo;
pub mod numerics;
pub mod qre;
pub mod scenario;
