//! Numerics for Hausdorff operators on Herz, Morrey-Herz and central Morrey
//! spaces with variable exponents: norms, operator images, bound constants
//! and a verification harness.

// `!(x > 0.0)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod exponents;
pub mod harness;
pub mod hausdorff;
pub mod luxemburg;
pub mod matrices;
pub mod quad;
pub mod spaces;

