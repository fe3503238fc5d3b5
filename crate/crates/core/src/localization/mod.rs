//! Position estimation from hop counts to anchors.
//!
//! [`localize_khoploc`] maximizes the product of per-anchor Gaussian
//! distance likelihoods, which reduces to minimizing
//! `Σ A(hᵢ) (dᵢ − B(hᵢ))²`. [`localize_dvhop`] is the DV-hop baseline:
//! calibrated hop sizes times hop counts, then linear least-squares
//! trilateration.

mod dvhop;
mod mle;

pub use dvhop::{dvhop_hop_sizes, localize_dvhop, trilaterate};
pub use mle::{localize_khoploc, mle_gradient, mle_objective};

use crate::connectivity::ConnectionModel;
use crate::geometry::Point;

/// Position of a reachable anchor and the target's hop count to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorObservation {
    pub position: Point,
    pub hop: u32,
}

impl AnchorObservation {
    pub fn new(position: Point, hop: u32) -> Self {
        AnchorObservation { position, hop }
    }
}

/// Anchors needed for an unambiguous 2-D fix.
pub const MIN_CONFIDENT_ANCHORS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub position: Point,
    /// Objective at `position`: the likelihood penalty for kHopLoc, the
    /// squared range residual for DV-hop.
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub anchors_used: usize,
    /// Fewer than three anchors were available.
    pub low_confidence: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Candidates closer than this to an anchor are nudged along +x before
    /// the gradient is evaluated.
    pub singularity_eps: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-6,
            max_iterations: 500,
            singularity_eps: 1e-9,
        }
    }
}

impl SolverOptions {
    /// Defaults with the singularity guard scaled to the model's range.
    pub fn for_model(model: &ConnectionModel) -> Self {
        SolverOptions {
            singularity_eps: 1e-9 * model.effective_range(),
            ..SolverOptions::default()
        }
    }
}
