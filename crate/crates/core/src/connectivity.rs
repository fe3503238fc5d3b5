//! Pair connectedness functions `H(d)` and random link realization.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::geometry::Point;
use crate::graph::Adjacency;
use crate::quadrature::adaptive_simpson_piecewise;

/// Below this value the Rayleigh integrand is treated as zero when choosing
/// the truncation radius of the effective-area integral.
const RAYLEIGH_TAIL: f64 = 1e-12;

pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-9;

/// Probability that two nodes a distance `d` apart share a direct link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConnectionModel {
    /// `H(d) = exp(-beta * d^eta)`: Rayleigh fading outage model.
    Rayleigh { beta: f64, eta: f64 },
    /// Quasi unit disk graph: certain link below `d_max / doi`, linear
    /// fall-off to zero at `d_max`.
    Qudg { d_max: f64, doi: f64 },
}

impl ConnectionModel {
    pub fn rayleigh(beta: f64, eta: f64) -> Result<Self> {
        let m = ConnectionModel::Rayleigh { beta, eta };
        m.validate()?;
        Ok(m)
    }

    pub fn qudg(d_max: f64, doi: f64) -> Result<Self> {
        let m = ConnectionModel::Qudg { d_max, doi };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ConnectionModel::Rayleigh { beta, eta } => {
                if !(beta.is_finite() && beta > 0.0) {
                    return Err(invalid(format!("rayleigh beta must be > 0, got {beta}")));
                }
                if !(eta.is_finite() && eta >= 1.0) {
                    return Err(invalid(format!("rayleigh eta must be >= 1, got {eta}")));
                }
            }
            ConnectionModel::Qudg { d_max, doi } => {
                if !(d_max.is_finite() && d_max > 0.0) {
                    return Err(invalid(format!("qudg d_max must be > 0, got {d_max}")));
                }
                if !(doi.is_finite() && doi > 1.0) {
                    return Err(invalid(format!("qudg doi must be > 1, got {doi}")));
                }
            }
        }
        Ok(())
    }

    /// Effective communication range: `beta^(-1/eta)` for Rayleigh,
    /// `d_max` for QUDG. This is the natural length unit of the model.
    pub fn effective_range(&self) -> f64 {
        match *self {
            ConnectionModel::Rayleigh { beta, eta } => libm::pow(beta, -1.0 / eta),
            ConnectionModel::Qudg { d_max, .. } => d_max,
        }
    }

    /// `H(d)`, validating the model and the distance.
    pub fn connect_prob(&self, d: f64) -> Result<f64> {
        self.validate()?;
        if !(d >= 0.0) {
            return Err(invalid(format!("distance must be >= 0, got {d}")));
        }
        Ok(self.h(d))
    }

    /// `H(d)` without validation. The model must be valid and `d >= 0`.
    #[inline]
    pub fn h(&self, d: f64) -> f64 {
        match *self {
            ConnectionModel::Rayleigh { beta, eta } => {
                let dn = if eta == 2.0 { d * d } else { libm::pow(d, eta) };
                libm::exp(-beta * dn)
            }
            ConnectionModel::Qudg { d_max, doi } => {
                if d < d_max / doi {
                    1.0
                } else if d <= d_max {
                    doi * (d_max - d) / (d_max * (doi - 1.0))
                } else {
                    0.0
                }
            }
        }
    }

    /// Radius beyond which `H` is zero (QUDG) or below `1e-12` (Rayleigh).
    pub fn interaction_radius(&self) -> f64 {
        match *self {
            ConnectionModel::Rayleigh { beta, eta } => {
                libm::pow(-libm::log(RAYLEIGH_TAIL) / beta, 1.0 / eta)
            }
            ConnectionModel::Qudg { d_max, .. } => d_max,
        }
    }

    /// Radii where `H` has a kink (QUDG band edges); empty for Rayleigh.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            ConnectionModel::Rayleigh { .. } => Vec::new(),
            ConnectionModel::Qudg { d_max, doi } => alloc::vec![d_max / doi, d_max],
        }
    }

    /// Average communication area `2π ∫ r H(r) dr`.
    ///
    /// The Rayleigh integral is truncated where `H` drops below `1e-12`;
    /// the neglected tail is `π e^{-R^η}`-sized, far below any sensible
    /// tolerance.
    pub fn effective_area(&self, quadrature_tol: f64) -> Result<f64> {
        self.validate()?;
        let breaks: Vec<f64> = match *self {
            ConnectionModel::Rayleigh { .. } => {
                let r0 = self.effective_range();
                let upper = self.interaction_radius();
                let steps = libm::ceil(upper / r0) as usize;
                (0..=steps)
                    .map(|i| (i as f64 * r0).min(upper))
                    .collect()
            }
            ConnectionModel::Qudg { d_max, doi } => alloc::vec![0.0, d_max / doi, d_max],
        };
        let tol = quadrature_tol / (2.0 * PI);
        let radial = adaptive_simpson_piecewise(|r| r * self.h(r), &breaks, tol)?;
        Ok(2.0 * PI * radial)
    }
}

/// Draws one link realization over `points`.
///
/// Unordered pairs are visited in `(i, j)` order with `i < j`; exactly one
/// uniform `ζ ∈ [0, 1)` is drawn per pair and the pair is linked iff
/// `ζ < H(d)`.
pub fn realize_links<R: Rng + ?Sized>(
    points: &[Point],
    model: &ConnectionModel,
    rng: &mut R,
) -> Result<Adjacency> {
    model.validate()?;
    let n = points.len();
    let mut adj = Adjacency::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let zeta: f64 = rng.random();
            if zeta < model.h(points[i].distance(points[j])) {
                adj.push_edge_unchecked(i, j);
            }
        }
    }
    Ok(adj)
}
