//! Effective conductivity of doubly periodic two-dimensional composites with
//! non-overlapping circular inclusions.
//!
//! The crate is organized bottom-up:
//!
//! * [`lattice`]: unit-area cell, Eisenstein functions `E_n` and lattice sums `S_n`.
//! * [`geometry`]: disk configurations, random sequential addition, regular arrays.
//! * [`esums`]: structural convolution sums `e_{m1...mq}`.
//! * [`series`]: cluster (concentration) and contrast series, `ζ1`, dilute and Padé formulas.
//! * [`solver`]: successive approximations for the functional equations on Taylor-truncated fluxes.
//! * [`pipeline`]: Monte Carlo ensembles, statistics, method comparison and output files.

pub mod error;
pub mod esums;
pub mod format;
pub mod geometry;
pub mod io;
pub mod lattice;
pub mod pipeline;
pub mod series;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::{DiskConfiguration, EnsembleDescriptor};
pub use lattice::{make_cell, Cell};
