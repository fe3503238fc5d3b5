//! Simulator and experiment harness for kHopLoc multihop localization.
//!
//! The algorithms live in [`khoploc_core`]; this crate adds the
//! configuration format, the fit-file format, parallel training, the
//! experiment runner and CSV output used by the `khoploc` binary.

pub mod config;
pub mod fitfile;
pub mod harness;
pub mod report;
pub mod train;

pub use config::{Algorithm, AnchorMode, DensityMode, ExperimentSpec, RegionMode, SweepAxis, SweepRange};
pub use fitfile::FitFile;
pub use harness::{deploy, mean_error, run_experiment, sweep, Deployment, ExperimentResult, NodeRecord, NodeStatus};
