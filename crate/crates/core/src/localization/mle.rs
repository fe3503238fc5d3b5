use alloc::format;
use alloc::vec::Vec;

use super::{AnchorObservation, Estimate, SolverOptions, MIN_CONFIDENT_ANCHORS};
use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::training::FitModel;

/// Armijo sufficient-decrease constant.
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;

/// Per-anchor terms `A (d − B)²` with the fit already evaluated.
struct Terms {
    terms: Vec<(Point, f64, f64)>,
}

impl Terms {
    fn new(obs: &[AnchorObservation], fit: &FitModel) -> Result<Self> {
        if obs.is_empty() {
            return Err(invalid("at least one anchor observation is required"));
        }
        let terms = obs
            .iter()
            .map(|o| Ok((o.position, fit.a(o.hop)?, fit.b(o.hop)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Terms { terms })
    }

    fn objective(&self, p: Point) -> f64 {
        self.terms
            .iter()
            .map(|&(q, a, b)| {
                let r = p.distance(q) - b;
                a * r * r
            })
            .sum()
    }

    fn nearest_within(&self, p: Point, eps: f64) -> Option<usize> {
        self.terms.iter().position(|&(q, _, _)| p.distance(q) < eps)
    }

    /// Gradient, assuming `p` is at least `eps` from every anchor.
    fn gradient(&self, p: Point) -> Point {
        self.terms.iter().fold(Point::default(), |acc, &(q, a, b)| {
            let diff = p - q;
            let d = diff.norm();
            acc + diff.scale(2.0 * a * (d - b) / d)
        })
    }

    /// Moves `p` along +x in steps of `eps` until it clears every anchor.
    fn clear_of_anchors(&self, mut p: Point, eps: f64) -> Point {
        for _ in 0..8 {
            if self.nearest_within(p, eps).is_none() {
                break;
            }
            p.x += eps;
        }
        p
    }
}

/// `Σ A(hᵢ) (dᵢ − B(hᵢ))²` at `candidate`.
pub fn mle_objective(candidate: Point, obs: &[AnchorObservation], fit: &FitModel) -> Result<f64> {
    Ok(Terms::new(obs, fit)?.objective(candidate))
}

/// Analytic gradient of [`mle_objective`].
///
/// Fails with [`Error::Singularity`] when `candidate` is within `eps` of an
/// anchor, where the distance term is not differentiable.
pub fn mle_gradient(
    candidate: Point,
    obs: &[AnchorObservation],
    fit: &FitModel,
    eps: f64,
) -> Result<(f64, f64)> {
    let terms = Terms::new(obs, fit)?;
    if let Some(anchor) = terms.nearest_within(candidate, eps) {
        return Err(Error::Singularity { anchor, eps });
    }
    let g = terms.gradient(candidate);
    Ok((g.x, g.y))
}

/// Maximum-likelihood position from hop counts.
///
/// Gradient descent with Armijo backtracking from five starts: the anchor
/// centroid weighted by `1/hᵢ`, and that centroid shifted by `±B(h_min)`
/// along each axis. The start reaching the lowest objective wins.
pub fn localize_khoploc(
    obs: &[AnchorObservation],
    fit: &FitModel,
    opts: &SolverOptions,
) -> Result<Estimate> {
    if !(opts.tolerance > 0.0 && opts.singularity_eps > 0.0) {
        return Err(invalid("solver tolerance and singularity eps must be positive"));
    }
    let terms = Terms::new(obs, fit)?;
    if obs.iter().any(|o| o.hop == 0) {
        return Err(invalid("hop counts to anchors must be >= 1"));
    }

    let weight_sum: f64 = obs.iter().map(|o| 1.0 / o.hop as f64).sum();
    let centroid = obs
        .iter()
        .fold(Point::default(), |acc, o| acc + o.position.scale(1.0 / o.hop as f64))
        .scale(1.0 / weight_sum);
    let h_min = obs.iter().map(|o| o.hop).min().unwrap_or(1);
    let spread = fit.b(h_min)?;
    let starts = [
        centroid,
        centroid + Point::new(spread, 0.0),
        centroid - Point::new(spread, 0.0),
        centroid + Point::new(0.0, spread),
        centroid - Point::new(0.0, spread),
    ];

    let mut best: Option<Estimate> = None;
    for start in starts {
        let run = descend(&terms, start, opts);
        if best.is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    let mut est = best.ok_or_else(|| Error::Numerical(format!("no solver start for {} anchors", obs.len())))?;
    est.anchors_used = obs.len();
    est.low_confidence = obs.len() < MIN_CONFIDENT_ANCHORS;
    Ok(est)
}

fn descend(terms: &Terms, start: Point, opts: &SolverOptions) -> Estimate {
    let eps = opts.singularity_eps;
    let mut x = terms.clear_of_anchors(start, eps);
    let mut f = terms.objective(x);
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        x = terms.clear_of_anchors(x, eps);
        f = terms.objective(x);
        let g = terms.gradient(x);
        let g2 = g.x * g.x + g.y * g.y;
        if libm::sqrt(g2) < opts.tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let mut t = step;
        loop {
            let cand = x - g.scale(t);
            let fc = terms.objective(cand);
            if fc <= f - ARMIJO * t * g2 {
                x = cand;
                f = fc;
                step = t * 2.0;
                break;
            }
            t *= 0.5;
            if t < MIN_STEP {
                // no descent possible at floating-point resolution
                return Estimate {
                    position: x,
                    objective: f,
                    converged: false,
                    iterations,
                    anchors_used: 0,
                    low_confidence: false,
                };
            }
        }
    }
    Estimate {
        position: x,
        objective: f,
        converged,
        iterations,
        anchors_used: 0,
        low_confidence: false,
    }
}
