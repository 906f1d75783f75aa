//! Numerical laboratory for local Lie groups, Hausdorff products and
//! asymptotic germ comparisons.

pub mod bch;
pub mod germ;
pub mod lie;
pub mod local_group;
pub mod matrix;
pub mod near_fit;
pub mod olver;
pub mod rng;
