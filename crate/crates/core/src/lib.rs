//! Mixed-integer conic optimization by outer approximation.
//!
//! The crate is `no_std` (with `alloc`). Everything that touches files,
//! clocks or the terminal lives in the `micone` companion crate.

#![no_std]
// negated comparisons keep NaN failing bound checks
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::should_implement_trait)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod compiler;
pub mod conic;
pub mod dcp;
pub mod cones;
pub mod linalg;
pub mod lp;
pub mod milp;
pub mod oa;
pub mod program;
