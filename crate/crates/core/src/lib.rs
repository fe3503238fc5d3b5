//! Range-free multihop localization for wireless sensor networks.
//!
//! The crate is `no_std` and only needs an allocator. It covers the whole
//! algorithmic pipeline:
//!
//! * [`geometry`]: deployment regions, uniform sampling and anchor layouts,
//! * [`connectivity`]: pair connectedness functions and random link realization,
//! * [`graph`]: hop counting over the realized network (simulated flooding),
//! * [`training`]: Monte Carlo estimation of the hop/distance density, the
//!   per-hop Gaussian fit with polynomial smoothing, and density estimation,
//! * [`localization`]: the maximum-likelihood solver and the DV-hop baseline.
//!
//! IO, configuration, experiment orchestration and the CLI live in the
//! companion `khoploc` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod connectivity;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod localization;
pub mod quadrature;
pub mod rng;
pub mod training;

pub use connectivity::{realize_links, ConnectionModel};
pub use error::{Error, Result};
pub use geometry::{fixed_anchor_layout, Point, Region};
pub use graph::{build_hop_table, hop_counts_from, Adjacency, HopMatrix, HopTable};
pub use localization::{
    localize_dvhop, localize_khoploc, AnchorObservation, Estimate, SolverOptions,
};
pub use training::{FitModel, HopGaussian, ShellHistogram, ShellSpec, TrainingConfig};
