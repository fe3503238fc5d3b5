//! Node density estimation from the observed mean one-hop degree.

use alloc::format;
use alloc::vec::Vec;
use core::cell::Cell;

use rand::Rng;

use crate::connectivity::{ConnectionModel, DEFAULT_QUADRATURE_TOL};
use crate::error::{invalid, Error, Result};
use crate::geometry::Region;
use crate::quadrature::adaptive_simpson_piecewise;

/// `ρ_e = N_e / A_e`: mean degree over the unbounded-plane communication
/// area.
///
/// This ignores the degree deficit of nodes near the region border, so on
/// bounded regions it underestimates the density (about 11% low on the
/// 10 × 10 square at ρ = 3 under Rayleigh(1, 2)).
pub fn estimate_density(mean_degree: f64, model: &ConnectionModel) -> Result<f64> {
    check_degree(mean_degree)?;
    let area = model.effective_area(DEFAULT_QUADRATURE_TOL)?;
    Ok(mean_degree / area)
}

fn check_degree(mean_degree: f64) -> Result<()> {
    if !(mean_degree.is_finite() && mean_degree >= 0.0) {
        return Err(invalid(format!("mean degree must be >= 0, got {mean_degree}")));
    }
    Ok(())
}

/// Monte Carlo estimate of `P(link)` for two nodes placed independently and
/// uniformly in `region`.
pub fn pair_link_probability<R: Rng + ?Sized>(
    region: &Region,
    model: &ConnectionModel,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    region.validate()?;
    model.validate()?;
    if samples == 0 {
        return Err(invalid("at least one sample pair is required"));
    }
    let mut acc = 0.0;
    for _ in 0..samples {
        let p = region.sample_points(2, rng);
        acc += model.h(p[0].distance(p[1]));
    }
    Ok(acc / samples as f64)
}

/// Absolute accuracy of [`link_probability`].
const LINK_TOL: f64 = 1e-10;

/// `P(link)` for two nodes placed independently and uniformly in `region`,
/// by deterministic quadrature.
///
/// `P = A⁻² ∫ H(|v|) g(v) dv`, where `g(v) = |R ∩ (R + v)|` is the set
/// covariogram. For a union of disjoint rectangles `g` is a sum of products
/// of one-dimensional trapezoids, so the integral splits into nested
/// one-dimensional integrals with known kinks.
pub fn link_probability(region: &Region, model: &ConnectionModel) -> Result<f64> {
    let area = region.area()?;
    model.validate()?;
    let rects = region.rectangles();
    let radius = model.interaction_radius();
    let r0 = model.effective_range();
    let kinks = model.kinks();
    let per_pair_tol = LINK_TOL * area * area / (rects.len() * rects.len()) as f64;

    let mut total = 0.0;
    for ri in &rects {
        for rj in &rects {
            let tx = Trapezoid::overlap(ri[0], ri[1], rj[0], rj[1]);
            let ty = Trapezoid::overlap(ri[2], ri[3], rj[2], rj[3]);
            let Some(xs) = tx.breaks(radius, r0, &kinks, radius) else { continue };
            let inner_tol = per_pair_tol / ((xs[xs.len() - 1] - xs[0]) * tx.peak).max(1e-300);
            let failure = Cell::new(None);
            let outer = |vx: f64| {
                let w = tx.at(vx);
                if w == 0.0 {
                    return 0.0;
                }
                let reach = libm::sqrt((radius * radius - vx * vx).max(0.0));
                let circles: Vec<f64> = kinks
                    .iter()
                    .filter(|&&k| k > libm::fabs(vx))
                    .map(|&k| libm::sqrt(k * k - vx * vx))
                    .collect();
                let Some(ys) = ty.breaks(reach, r0, &circles, radius) else { return 0.0 };
                let f = |vy: f64| model.h(libm::hypot(vx, vy)) * ty.at(vy);
                match adaptive_simpson_piecewise(f, &ys, inner_tol) {
                    Ok(v) => w * v,
                    Err(e) => {
                        failure.set(Some(e));
                        0.0
                    }
                }
            };
            let value = adaptive_simpson_piecewise(outer, &xs, per_pair_tol)?;
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            total += value;
        }
    }
    Ok((total / (area * area)).clamp(0.0, 1.0))
}

/// `v ↦ |[a0, a1] ∩ [b0 + v, b1 + v]|`, a trapezoid in the shift `v`.
struct Trapezoid {
    /// Kinks in increasing order; zero outside `[k[0], k[3]]`.
    k: [f64; 4],
    peak: f64,
}

impl Trapezoid {
    fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> Self {
        let mut k = [a0 - b1, a0 - b0, a1 - b1, a1 - b0];
        k.sort_by(f64::total_cmp);
        Trapezoid {
            k,
            peak: (a1 - a0).min(b1 - b0),
        }
    }

    fn at(&self, v: f64) -> f64 {
        let [k0, k1, k2, k3] = self.k;
        if v <= k0 || v >= k3 {
            0.0
        } else if v < k1 {
            self.peak * (v - k0) / (k1 - k0)
        } else if v <= k2 {
            self.peak
        } else {
            self.peak * (k3 - v) / (k3 - k2)
        }
    }

    /// Sorted integration breakpoints on the support clipped to
    /// `[-reach, reach]`: the trapezoid kinks, `±extra`, and a grid of
    /// step `r0` so that narrow features of `H` are never stepped over.
    fn breaks(&self, reach: f64, r0: f64, extra: &[f64], radius: f64) -> Option<Vec<f64>> {
        let lo = self.k[0].max(-reach);
        let hi = self.k[3].min(reach);
        if !(hi > lo) {
            return None;
        }
        let steps = libm::ceil(radius / r0) as i64;
        let mut pts: Vec<f64> = self.k.to_vec();
        pts.extend(extra.iter().flat_map(|&e| [-e, e]));
        pts.extend((-steps..=steps).map(|i| i as f64 * r0));
        pts.retain(|&p| p > lo && p < hi);
        pts.push(lo);
        pts.push(hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        Some(pts)
    }
}

/// Border-corrected density for a known region.
///
/// With `N` uniform nodes the expected degree is `(N − 1) P(link)`, so
/// `N_e = mean_degree / P(link) + 1` and `ρ_e = N_e / A`.
pub fn estimate_density_in_region(
    mean_degree: f64,
    region: &Region,
    model: &ConnectionModel,
) -> Result<f64> {
    check_degree(mean_degree)?;
    if mean_degree == 0.0 {
        return Ok(0.0);
    }
    let p = link_probability(region, model)?;
    Ok((mean_degree / p + 1.0) / region.area()?)
}

/// Density and side of the square that is self-consistent with the
/// observed mean degree of `n_nodes` nodes, for an unknown region.
///
/// Solves `mean_degree = (n − 1) P_square(s)` for the side `s`, then
/// `ρ_e = n / s²`. The pair sample is drawn once on the unit square and
/// rescaled, which keeps `P_square` exactly monotone in `s` for the
/// bisection.
pub fn estimate_density_unknown_region(
    mean_degree: f64,
    n_nodes: usize,
    model: &ConnectionModel,
) -> Result<(f64, f64)> {
    check_degree(mean_degree)?;
    model.validate()?;
    if n_nodes < 2 {
        return Err(invalid("need at least two nodes to estimate density"));
    }
    let target = mean_degree / (n_nodes - 1) as f64;
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InsufficientData(format!(
            "mean degree {mean_degree} with {n_nodes} nodes does not determine a finite region"
        )));
    }
    let prob = |side: f64| link_probability(&Region::Square { side }, model);

    let r = model.effective_range();
    let (mut lo, mut hi) = (0.0, r);
    while prob(hi)? > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 * r {
            return Err(Error::Numerical("density bisection failed to bracket".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if prob(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    let side = 0.5 * (lo + hi);
    Ok((n_nodes as f64 / (side * side), side))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use core::f64::consts::PI;

    fn rayleigh() -> ConnectionModel {
        ConnectionModel::rayleigh(1.0, 2.0).unwrap()
    }

    #[test]
    fn plain_estimate() {
        assert_eq!(estimate_density(0.0, &rayleigh()).unwrap(), 0.0);
        assert!((estimate_density(3.0 * PI, &rayleigh()).unwrap() - 3.0).abs() < 1e-8);
        assert!(estimate_density(-1.0, &rayleigh()).is_err());
    }

    /// For `H = exp(-|v|²)` on the square of side `s` the covariogram
    /// integral separates: `(∫ e^{-x²}(s − |x|) dx)²` over `|x| < s`.
    fn gaussian_square_oracle(s: f64) -> f64 {
        let line = s * libm::sqrt(PI) * libm::erf(s) - (1.0 - libm::exp(-s * s));
        line * line / (s * s * s * s)
    }

    #[test]
    fn link_probability_matches_closed_form_on_squares() {
        for s in [0.3, 1.0, 3.0, 10.0, 25.0] {
            let p = link_probability(&Region::square(s).unwrap(), &rayleigh()).unwrap();
            let expected = gaussian_square_oracle(s);
            assert!((p - expected).abs() < 1e-9, "s = {s}: {p} vs {expected}");
        }
    }

    #[test]
    fn link_probability_is_one_inside_the_certain_disk() {
        // diagonal 0.566 < d_max / doi = 0.667
        let q = ConnectionModel::qudg(1.0, 1.5).unwrap();
        let p = link_probability(&Region::square(0.4).unwrap(), &q).unwrap();
        assert!((p - 1.0).abs() < 1e-9, "{p}");
    }

    #[test]
    fn link_probability_agrees_with_monte_carlo() {
        let models = [
            rayleigh(),
            ConnectionModel::rayleigh(0.5, 3.0).unwrap(),
            ConnectionModel::qudg(1.0, 1.5).unwrap(),
        ];
        let regions = [
            Region::square(10.0).unwrap(),
            Region::c_shape(10.0, 2.0).unwrap(),
            Region::square(2.0).unwrap(),
        ];
        let samples = 400_000;
        for (i, model) in models.iter().enumerate() {
            for (j, region) in regions.iter().enumerate() {
                let exact = link_probability(region, model).unwrap();
                let mut rng = substream(77, (3 * i + j) as u64);
                let mc = pair_link_probability(region, model, samples, &mut rng).unwrap();
                // H ∈ [0, 1] so Var(H) ≤ E[H] = P
                let se = libm::sqrt(exact / samples as f64);
                assert!((mc - exact).abs() < 4.5 * se, "{model:?} {region:?}: {mc} vs {exact}");
            }
        }
    }

    #[test]
    fn monte_carlo_rejects_zero_samples() {
        let tiny = Region::square(1e-3).unwrap();
        let p = pair_link_probability(&tiny, &rayleigh(), 10, &mut substream(1, 0)).unwrap();
        assert!(p > 0.999_99);
        assert!(pair_link_probability(&tiny, &rayleigh(), 0, &mut substream(1, 0)).is_err());
    }

    #[test]
    fn corrected_estimate_inverts_expected_degree() {
        // Feed the exact expected degree for ρ = 3 on the square back in.
        let region = Region::square(10.0).unwrap();
        let mean_degree = 299.0 * gaussian_square_oracle(10.0);
        let rho = estimate_density_in_region(mean_degree, &region, &rayleigh()).unwrap();
        assert!((rho - 3.0).abs() < 1e-6, "{rho}");
        assert_eq!(estimate_density_in_region(0.0, &region, &rayleigh()).unwrap(), 0.0);
    }

    #[test]
    fn unknown_region_square_is_self_consistent() {
        let mean_degree = 299.0 * gaussian_square_oracle(10.0);
        let (rho, side) = estimate_density_unknown_region(mean_degree, 300, &rayleigh()).unwrap();
        assert!((side - 10.0).abs() < 1e-6, "side {side}");
        assert!((rho - 3.0).abs() < 1e-6, "rho {rho}");
        assert!(estimate_density_unknown_region(0.0, 300, &rayleigh()).is_err());
        assert!(estimate_density_unknown_region(5.0, 1, &rayleigh()).is_err());
    }
}
