use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::connectivity::ConnectionModel;
use crate::error::{invalid, Result};
use crate::geometry::Point;
use crate::graph::HopMatrix;

/// Margin applied to `K · r_eff` when choosing the outer shell radius.
const RADIUS_SAFETY: f64 = 1.2;
/// Shells per effective range.
const SHELLS_PER_RANGE: f64 = 10.0;

/// Partition of the disk of radius `D` into `L` concentric shells of width
/// `2δ = D / L`. Shell `l` (zero-based) covers `(2lδ, 2(l+1)δ]` and has
/// centre `δ(2l + 1)`; the first shell also takes `d = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellSpec {
    max_distance: f64,
    shells: usize,
}

impl ShellSpec {
    pub fn new(max_distance: f64, shells: usize) -> Result<Self> {
        if !(max_distance.is_finite() && max_distance > 0.0) {
            return Err(invalid(format!("shell radius D must be > 0, got {max_distance}")));
        }
        if shells == 0 {
            return Err(invalid("shell count L must be >= 1"));
        }
        Ok(ShellSpec {
            max_distance,
            shells,
        })
    }

    /// `D = 1.2 K r_eff`, with shells about `r_eff / 10` wide.
    pub fn for_model(model: &ConnectionModel, max_hops: u32) -> Result<Self> {
        model.validate()?;
        if max_hops == 0 {
            return Err(invalid("max hop count K must be >= 1"));
        }
        let r_eff = model.effective_range();
        let d = RADIUS_SAFETY * max_hops as f64 * r_eff;
        let l = libm::round(d / (r_eff / SHELLS_PER_RANGE)).max(1.0) as usize;
        ShellSpec::new(d, l)
    }

    pub fn max_distance(&self) -> f64 {
        self.max_distance
    }

    pub fn shells(&self) -> usize {
        self.shells
    }

    /// Half-width δ.
    pub fn delta(&self) -> f64 {
        self.max_distance / (2.0 * self.shells as f64)
    }

    pub fn width(&self) -> f64 {
        self.max_distance / self.shells as f64
    }

    pub fn center(&self, shell: usize) -> f64 {
        self.delta() * (2 * shell + 1) as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.shells).map(|l| self.center(l)).collect()
    }

    pub fn shell_of(&self, d: f64) -> Option<usize> {
        if !(0.0..=self.max_distance).contains(&d) {
            return None;
        }
        let idx = libm::ceil(d / self.width()) as usize;
        Some(idx.saturating_sub(1).min(self.shells - 1))
    }
}

/// Discretized estimate of `p(k | d) p(d)` over shells × hop counts.
///
/// Raw pair counts are the source of truth; `values` is derived from them
/// as `count / (total_pairs · 2δ)`, except for histograms built from
/// explicit values with [`ShellHistogram::from_values`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShellHistogram {
    spec: ShellSpec,
    max_hops: u32,
    counts: Vec<u64>,
    values: Vec<f64>,
    total_pairs: u64,
}

impl ShellHistogram {
    pub fn new(spec: ShellSpec, max_hops: u32) -> Self {
        let cells = spec.shells * max_hops as usize;
        ShellHistogram {
            spec,
            max_hops,
            counts: vec![0; cells],
            values: vec![0.0; cells],
            total_pairs: 0,
        }
    }

    /// Histogram with prescribed density values and pair counts, laid out
    /// row-major by hop (`k = 1..=K`), then shell. Used for synthetic data.
    pub fn from_values(
        spec: ShellSpec,
        max_hops: u32,
        values: Vec<f64>,
        counts: Vec<u64>,
    ) -> Result<Self> {
        let cells = spec.shells * max_hops as usize;
        if values.len() != cells || counts.len() != cells {
            return Err(invalid(format!(
                "expected {cells} cells, got {} values and {} counts",
                values.len(),
                counts.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("histogram values must be finite and >= 0"));
        }
        Ok(ShellHistogram {
            spec,
            max_hops,
            total_pairs: counts.iter().sum(),
            counts,
            values,
        })
    }

    pub fn spec(&self) -> &ShellSpec {
        &self.spec
    }

    pub fn max_hops(&self) -> u32 {
        self.max_hops
    }

    pub fn total_pairs(&self) -> u64 {
        self.total_pairs
    }

    fn cell(&self, k: u32, shell: usize) -> usize {
        debug_assert!(k >= 1 && k <= self.max_hops);
        (k as usize - 1) * self.spec.shells + shell
    }

    pub fn count(&self, k: u32, shell: usize) -> u64 {
        self.counts[self.cell(k, shell)]
    }

    pub fn value(&self, k: u32, shell: usize) -> f64 {
        self.values[self.cell(k, shell)]
    }

    /// Density row for hop count `k`.
    pub fn hop_values(&self, k: u32) -> &[f64] {
        let start = self.cell(k, 0);
        &self.values[start..start + self.spec.shells]
    }

    pub fn hop_counts(&self, k: u32) -> &[u64] {
        let start = self.cell(k, 0);
        &self.counts[start..start + self.spec.shells]
    }

    /// Number of binned pairs at hop count `k`.
    pub fn hop_pairs(&self, k: u32) -> u64 {
        self.hop_counts(k).iter().sum()
    }

    /// `Σ values · 2δ`, the probability mass of pairs with `k ≤ K` and
    /// `d ≤ D`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.width()
    }

    /// Bins every unordered pair of `points` using the all-pairs hop counts.
    ///
    /// Every pair adds to the denominator; only pairs with `d ≤ D` and a
    /// finite hop count `k ≤ K` add to a cell.
    pub fn accumulate(&mut self, points: &[Point], hops: &HopMatrix) -> Result<()> {
        if hops.len() != points.len() {
            return Err(invalid(format!(
                "hop matrix covers {} nodes but {} points were given",
                hops.len(),
                points.len()
            )));
        }
        let n = points.len();
        for i in 0..n {
            for j in i + 1..n {
                self.total_pairs += 1;
                let Some(k) = hops.get(i, j) else { continue };
                if k == 0 || k > self.max_hops {
                    continue;
                }
                if let Some(l) = self.spec.shell_of(points[i].distance(points[j])) {
                    let cell = self.cell(k, l);
                    self.counts[cell] += 1;
                }
            }
        }
        self.refresh();
        Ok(())
    }

    /// Adds the counts of `other`, which must share shells and `K`.
    pub fn merge(&mut self, other: &ShellHistogram) -> Result<()> {
        if self.spec != other.spec || self.max_hops != other.max_hops {
            return Err(invalid("cannot merge histograms with different shells or K"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total_pairs += other.total_pairs;
        self.refresh();
        Ok(())
    }

    fn refresh(&mut self) {
        if self.total_pairs == 0 {
            self.values.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let norm = self.total_pairs as f64 * self.spec.width();
        for (v, &c) in self.values.iter_mut().zip(&self.counts) {
            *v = c as f64 / norm;
        }
    }

    /// Mean shell-centre distance of the pairs at hop count `k`.
    pub fn mean_distance(&self, k: u32) -> Option<f64> {
        let counts = self.hop_counts(k);
        let total: u64 = counts.iter().sum();
        (total > 0).then(|| {
            counts
                .iter()
                .enumerate()
                .map(|(l, &c)| c as f64 * self.spec.center(l))
                .sum::<f64>()
                / total as f64
        })
    }

    /// Empirical CDF over shells of the distance given hop count `k`.
    pub fn conditional_cdf(&self, k: u32) -> Vec<f64> {
        let counts = self.hop_counts(k);
        let total = counts.iter().sum::<u64>().max(1) as f64;
        let mut acc = 0u64;
        counts
            .iter()
            .map(|&c| {
                acc += c;
                acc as f64 / total
            })
            .collect()
    }

    /// Total variation distance between the normalized joint distributions
    /// of two compatible histograms.
    pub fn total_variation(&self, other: &ShellHistogram) -> Result<f64> {
        if self.spec != other.spec || self.max_hops != other.max_hops {
            return Err(invalid("histograms have different shells or K"));
        }
        let sa = self.counts.iter().sum::<u64>().max(1) as f64;
        let sb = other.counts.iter().sum::<u64>().max(1) as f64;
        Ok(0.5
            * self
                .counts
                .iter()
                .zip(&other.counts)
                .map(|(&a, &b)| libm::fabs(a as f64 / sa - b as f64 / sb))
                .sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::{realize_links, ConnectionModel};
    use crate::geometry::Region;
    use crate::graph::Adjacency;
    use crate::rng::substream;

    #[test]
    fn shell_partition() {
        let spec = ShellSpec::new(10.0, 5).unwrap();
        assert_eq!(spec.delta(), 1.0);
        assert_eq!(spec.centers(), vec![1.0, 3.0, 5.0, 7.0, 9.0]);
        assert_eq!(spec.shell_of(0.0), Some(0));
        assert_eq!(spec.shell_of(2.0), Some(0));
        assert_eq!(spec.shell_of(2.0001), Some(1));
        assert_eq!(spec.shell_of(10.0), Some(4));
        assert_eq!(spec.shell_of(10.0001), None);
        assert!(ShellSpec::new(0.0, 3).is_err());
        assert!(ShellSpec::new(1.0, 0).is_err());
    }

    #[test]
    fn model_sized_shells() {
        let spec = ShellSpec::for_model(&ConnectionModel::rayleigh(1.0, 2.0).unwrap(), 20).unwrap();
        assert!((spec.max_distance() - 24.0).abs() < 1e-12);
        assert_eq!(spec.shells(), 240);
        let c = spec.centers();
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert!(c[c.len() - 1] < spec.max_distance());
    }

    #[test]
    fn single_linked_pair() {
        let spec = ShellSpec::new(10.0, 10).unwrap();
        let points = [Point::new(0.0, 0.0), Point::new(5.0, 0.0)];
        let adj = Adjacency::from_edges(2, &[(0, 1)]).unwrap();
        let hops = HopMatrix::from_adjacency(&adj, 3).unwrap();
        let mut hist = ShellHistogram::new(spec, 3);
        hist.accumulate(&points, &hops).unwrap();
        assert_eq!(hist.total_pairs(), 1);
        // d = 5 = D/2 closes shell L/2 (the fifth shell)
        assert_eq!(hist.count(1, 4), 1);
        assert_eq!(hist.value(1, 4), 1.0 / 1.0);
        assert!((hist.mass() - 1.0).abs() < 1e-12);

        let before = hist.clone();
        let empty = HopMatrix::from_adjacency(&Adjacency::new(0), 3).unwrap();
        hist.accumulate(&[], &empty).unwrap();
        assert_eq!(hist, before);
    }

    #[test]
    fn unreachable_and_far_pairs_only_count_in_denominator() {
        let spec = ShellSpec::new(2.0, 4).unwrap();
        let points = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(5.0, 0.0)];
        let adj = Adjacency::from_edges(3, &[(1, 2)]).unwrap();
        let hops = HopMatrix::from_adjacency(&adj, 3).unwrap();
        let mut hist = ShellHistogram::new(spec, 3);
        hist.accumulate(&points, &hops).unwrap();
        assert_eq!(hist.total_pairs(), 3);
        assert_eq!((1..=3).map(|k| hist.hop_pairs(k)).sum::<u64>(), 0);
    }

    #[test]
    fn matches_brute_force_recount() {
        let region = Region::square(8.0).unwrap();
        let model = ConnectionModel::rayleigh(1.0, 2.0).unwrap();
        let mut rng = substream(17, 0);
        let points = region.sample_points(200, &mut rng);
        let adj = realize_links(&points, &model, &mut rng).unwrap();
        let k_max = 12;
        let hops = HopMatrix::from_adjacency(&adj, k_max).unwrap();
        let spec = ShellSpec::new(9.0, 45).unwrap();
        let mut hist = ShellHistogram::new(spec, k_max);
        hist.accumulate(&points, &hops).unwrap();

        // Independent recount: per-source BFS and explicit interval search.
        let mut counts = vec![vec![0u64; 45]; k_max as usize];
        let edges: Vec<f64> = (0..=45).map(|l| l as f64 * 0.2).collect();
        for i in 0..200 {
            let row = crate::graph::hop_counts_from(&adj, i, k_max).unwrap();
            for j in i + 1..200 {
                let Some(k) = row[j] else { continue };
                let d = points[i].distance(points[j]);
                if let Some(l) = (0..45).find(|&l| d > edges[l] && d <= edges[l + 1]) {
                    counts[k as usize - 1][l] += 1;
                }
            }
        }
        let total = 200 * 199 / 2;
        assert_eq!(hist.total_pairs(), total);
        for k in 1..=k_max {
            for l in 0..45 {
                assert_eq!(hist.count(k, l), counts[k as usize - 1][l]);
                let v = counts[k as usize - 1][l] as f64 / (total as f64 * 0.2);
                assert!((hist.value(k, l) - v).abs() <= 1e-15 * v.max(1.0));
            }
        }
        assert!(hist.mass() <= 1.0 + 1e-12);
    }

    #[test]
    fn merge_requires_matching_layout() {
        let a = ShellHistogram::new(ShellSpec::new(1.0, 2).unwrap(), 2);
        let mut b = ShellHistogram::new(ShellSpec::new(1.0, 3).unwrap(), 2);
        assert!(b.merge(&a).is_err());
        assert!(ShellHistogram::from_values(ShellSpec::new(1.0, 2).unwrap(), 2, vec![0.0; 3], vec![0; 4]).is_err());
    }
}
