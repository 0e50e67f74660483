//! Recurrence laboratory for expanding maps of the unit cube.
//!
//! Counts how often an orbit `T^k x` returns to shrinking axis-parallel
//! rectangles `R(x, r_k)` around its own starting point, and compares the
//! count with `h(x) * sum_k 2^d r_{k,1} ... r_{k,d}` where `h` is the
//! invariant density. Around that core sit exact and high-precision orbit
//! engines, measure computations, correlation estimators, structural
//! condition checks and a reproducible experiment harness.

// `!(x > 0.0)` is used on purpose so that NaN lands in the error branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod correlations;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod measure;
pub mod recurrence;
pub mod schedule;
pub mod systems;

pub use error::{Error, Result};
pub use geometry::{Hyperrectangle, Point};
pub use schedule::{partial_normalizer, RadiusSchedule, ThinnedSchedule};
pub use systems::{Orbit, OrbitMode, Seed, SystemDescriptor, SystemKind};
