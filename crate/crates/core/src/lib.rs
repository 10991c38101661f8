// NaN-rejecting guards like `!(q > 0.0)` are intentional
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod fields;
pub mod groups;
pub mod harmonic;
pub mod hitting;
pub mod line;
pub mod stats;
pub mod walk;
