//! Deterministic co-simulation of embedded control loops sharing one CPU,
//! with open-loop, ideal and fuzzy feedback scheduling of the loop periods.

// Range checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod feedback;
pub mod fuzzy;
pub mod harness;
pub mod noise;
pub mod rt;
