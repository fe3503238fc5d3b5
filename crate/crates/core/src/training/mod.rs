//! Monte Carlo training of the hop/distance density and its parametric fit.
//!
//! Each iteration deploys a fresh random network with the target density,
//! realizes links, computes all-pairs hop counts and bins every unordered
//! pair by distance shell and hop count. The binned joint density is then
//! fitted per hop count by a log-quadratic (Gaussian) profile, and the
//! per-hop parameters are smoothed by low-degree polynomials in the hop
//! count.

mod density;
mod fit;
mod histogram;

pub use density::{
    estimate_density, estimate_density_in_region, estimate_density_unknown_region,
    link_probability, pair_link_probability,
};
pub use fit::{
    default_a_floor, fit_hop_polynomials, fit_log_quadratic, fit_model, fit_per_hop_gaussian,
    FitModel, HopGaussian, Polynomial, DEFAULT_DEGREE, DEFAULT_MIN_PAIRS,
};
pub use histogram::{ShellHistogram, ShellSpec};

use alloc::format;

use crate::connectivity::{realize_links, ConnectionModel};
use crate::error::{invalid, Result};
use crate::geometry::Region;
use crate::graph::HopMatrix;
use crate::rng::{derive_seed, substream};

pub const DEFAULT_ITERATIONS: usize = 100;
pub const DEFAULT_MAX_HOPS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    pub region: Region,
    pub model: ConnectionModel,
    /// Node intensity ρ (nodes per unit area).
    pub density: f64,
    pub iterations: usize,
    pub max_hops: u32,
    pub shells: ShellSpec,
    pub seed: u64,
}

impl TrainingConfig {
    /// Config with default iteration count and shells sized for the model.
    pub fn new(region: Region, model: ConnectionModel, density: f64, seed: u64) -> Result<Self> {
        let max_hops = DEFAULT_MAX_HOPS;
        let cfg = TrainingConfig {
            region,
            model,
            density,
            iterations: DEFAULT_ITERATIONS,
            max_hops,
            shells: ShellSpec::for_model(&model, max_hops)?,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        self.model.validate()?;
        if !(self.density.is_finite() && self.density > 0.0) {
            return Err(invalid(format!("density must be > 0, got {}", self.density)));
        }
        if self.iterations == 0 {
            return Err(invalid("at least one training iteration is required"));
        }
        if self.max_hops == 0 {
            return Err(invalid("max hop count K must be >= 1"));
        }
        Ok(())
    }

    /// Nodes per iteration: `round(ρ A)`.
    pub fn node_count(&self) -> Result<usize> {
        Ok(libm::round(self.density * self.region.area()?) as usize)
    }
}

/// A single Monte Carlo iteration, drawing from its own substream.
///
/// Iterations are independent, so they can be computed in any order (or
/// concurrently) and merged with [`ShellHistogram::merge`].
pub fn training_iteration(config: &TrainingConfig, iteration: usize) -> Result<ShellHistogram> {
    config.validate()?;
    let mut rng = substream(derive_seed(config.seed, iteration as u64), 0);
    let n = config.node_count()?;
    let points = config.region.sample_points(n, &mut rng);
    let adj = realize_links(&points, &config.model, &mut rng)?;
    let hops = HopMatrix::from_adjacency(&adj, config.max_hops)?;
    let mut hist = ShellHistogram::new(config.shells, config.max_hops);
    hist.accumulate(&points, &hops)?;
    Ok(hist)
}

/// Runs all iterations serially and returns the merged histogram.
pub fn run_training(config: &TrainingConfig) -> Result<ShellHistogram> {
    config.validate()?;
    let mut hist = ShellHistogram::new(config.shells, config.max_hops);
    for i in 0..config.iterations {
        hist.merge(&training_iteration(config, i)?)?;
    }
    Ok(hist)
}
