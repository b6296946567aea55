//! Approximation of compact invariant sets of discrete dynamical systems by
//! energy minimization over point clouds.
//!
//! The idea: a finite set X̃ approximates an invariant set of a map f exactly
//! when f(X̃) is close to X̃ *as a set*. The [`energy`] module scores that
//! closeness with a modified Hausdorff energy (mean squared nearest-neighbor
//! mismatch in both directions) and differentiates it with the
//! nearest-neighbor assignments frozen; [`optimize`] drives the cloud to a
//! minimizer with limited-memory BFGS. An optional Lennard-Jones term with a
//! trainable radius δ spreads the points evenly over the set instead of
//! letting them clump.
//!
//! [`dynamics`] ships the benchmark maps, [`sampling`] the initial clouds,
//! [`verify`] reference sets and quality metrics, [`runner`] the JSON-config
//! experiment pipeline behind the CLI, and [`plot`] SVG scatter rendering.
//!
//! Everything is deterministic: a run's outputs are a pure function of its
//! config and seed, independent of thread count.

pub mod dynamics;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod knn;
pub mod optimize;
pub mod plot;
pub mod runner;
pub mod sampling;
pub mod verify;

mod par;

pub use error::{Error, Result};
