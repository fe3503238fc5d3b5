use alloc::format;
use alloc::vec::Vec;

use super::{AnchorObservation, Estimate, MIN_CONFIDENT_ANCHORS};
use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::graph::Hops;

/// Relative determinant threshold below which the trilateration normal
/// equations are treated as singular.
const RANK_TOL: f64 = 1e-12;

/// Average one-hop distance seen by each anchor.
///
/// `sizes[i] = Σ_{j≠i} ‖pᵢ − pⱼ‖ / Σ_{j≠i} hops(i, j)` over anchors `j`
/// reachable from `i`. Anchors that reach no other anchor get `None`.
pub fn dvhop_hop_sizes(anchor_positions: &[Point], anchor_hops: &[Vec<Hops>]) -> Result<Vec<Option<f64>>> {
    let m = anchor_positions.len();
    if m < 2 {
        return Err(invalid("hop-size calibration needs at least two anchors"));
    }
    if anchor_hops.len() != m || anchor_hops.iter().any(|row| row.len() != m) {
        return Err(invalid(format!("anchor hop matrix must be {m} x {m}")));
    }
    Ok((0..m)
        .map(|i| {
            let (dist, hops) = (0..m)
                .filter(|&j| j != i)
                .filter_map(|j| match anchor_hops[i][j] {
                    Some(h) if h > 0 => Some((anchor_positions[i].distance(anchor_positions[j]), h)),
                    _ => None,
                })
                .fold((0.0, 0u64), |(d, h), (dj, hj)| (d + dj, h + hj as u64));
            (hops > 0).then(|| dist / hops as f64)
        })
        .collect())
}

/// Linear least-squares position from anchor ranges.
///
/// The last anchor's circle equation is subtracted from the others, giving
/// an overdetermined linear system solved through its normal equations.
pub fn trilaterate(anchors: &[Point], distances: &[f64]) -> Result<Point> {
    let m = anchors.len();
    if m < MIN_CONFIDENT_ANCHORS {
        return Err(invalid(format!("trilateration needs 3 anchors, got {m}")));
    }
    if distances.len() != m {
        return Err(invalid("one distance per anchor is required"));
    }
    let last = anchors[m - 1];
    let d_last = distances[m - 1];
    let k_last = last.x * last.x + last.y * last.y;
    // Accumulate AᵀA and Aᵀb for rows [2(x_m − x_i), 2(y_m − y_i)].
    let (mut sxx, mut sxy, mut syy, mut bx, mut by) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..m - 1 {
        let p = anchors[i];
        let ax = 2.0 * (last.x - p.x);
        let ay = 2.0 * (last.y - p.y);
        let rhs = distances[i] * distances[i] - d_last * d_last - (p.x * p.x + p.y * p.y) + k_last;
        sxx += ax * ax;
        sxy += ax * ay;
        syy += ay * ay;
        bx += ax * rhs;
        by += ay * rhs;
    }
    let det = sxx * syy - sxy * sxy;
    let trace = sxx + syy;
    if !(det > RANK_TOL * trace * trace) {
        return Err(Error::DegenerateGeometry);
    }
    Ok(Point::new((syy * bx - sxy * by) / det, (sxx * by - sxy * bx) / det))
}

/// DV-hop estimate.
///
/// `hop_sizes[i]` is the calibrated hop size of the anchor in `obs[i]`.
/// Every range uses the hop size of the anchor with the fewest hops to the
/// target (first one on ties).
pub fn localize_dvhop(obs: &[AnchorObservation], hop_sizes: &[f64]) -> Result<Estimate> {
    if obs.len() < MIN_CONFIDENT_ANCHORS {
        return Err(invalid(format!("DV-hop needs 3 reachable anchors, got {}", obs.len())));
    }
    if hop_sizes.len() != obs.len() {
        return Err(invalid("one hop size per observation is required"));
    }
    let nearest = (0..obs.len()).min_by_key(|&i| obs[i].hop).unwrap_or(0);
    let size = hop_sizes[nearest];
    if !(size.is_finite() && size > 0.0) {
        return Err(invalid(format!("hop size must be positive, got {size}")));
    }
    let anchors: Vec<Point> = obs.iter().map(|o| o.position).collect();
    let ranges: Vec<f64> = obs.iter().map(|o| size * o.hop as f64).collect();
    let position = trilaterate(&anchors, &ranges)?;
    let objective = anchors
        .iter()
        .zip(&ranges)
        .map(|(a, r)| {
            let e = position.distance(*a) - r;
            e * e
        })
        .sum();
    Ok(Estimate {
        position,
        objective,
        converged: true,
        iterations: 0,
        anchors_used: obs.len(),
        low_confidence: false,
    })
}
