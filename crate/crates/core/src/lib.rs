//! Point sets in the unit cube with certified small dispersion.
//!
//! Random points on the dyadic grid `M_k^d` hit every axis-parallel box of
//! volume above `2^-k` once there are enough of them. This crate samples such
//! sets, certifies them exactly through the core boxes of the box-class
//! partition, computes dispersion exactly by largest-empty-box search, and
//! evaluates the counting, probability and sample-size bounds behind the
//! construction.
//!
//! - [`grid`]: resolution `k`, grid values, point sets
//! - [`empty_box`]: boxes, exact volumes, largest empty box
//! - [`partition`]: box classes `(p, s)`, feasibility, core boxes, counts
//! - [`probability`]: hit probabilities, key inequality, failure bounds
//! - [`bounds`]: closed-form sample sizes and dispersion bounds
//! - [`construct`]: sampling, certification, Monte Carlo
//! - [`io`], [`cli`]: file format and command line

pub mod bounds;
pub mod cli;
pub mod construct;
pub mod dyadic;
pub mod empty_box;
pub mod error;
pub mod grid;
pub mod io;
pub mod partition;
pub mod probability;

pub use dyadic::Dyadic;
pub use empty_box::{
    box_contains, box_volume, has_empty_box_above, largest_empty_box, largest_empty_box_with,
    DispersionResult, DyadicBox, PointRef, SearchOptions, Volume,
};
pub use error::{Error, Result};
pub use grid::{
    epsilon_range, grid_values, k_from_epsilon, GridCoord, GridParams, GridPointSet, PointSet,
    RealPointSet, DEFAULT_ENUM_LIMIT,
};
pub use partition::{class_is_feasible, classify_box, core_box, BoxClass, CoreBox};
