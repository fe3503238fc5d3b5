use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::histogram::ShellHistogram;
use crate::connectivity::ConnectionModel;
use crate::error::{invalid, Error, Result};

/// Polynomial degree used to smooth the per-hop parameters.
pub const DEFAULT_DEGREE: usize = 4;

/// Hop counts seen in fewer training pairs than this are left out of the
/// polynomial smoothing.
pub const DEFAULT_MIN_PAIRS: u64 = 100;

/// Lower clamp for `A(k)`, relative to `r_eff⁻²`.
const A_FLOOR_RELATIVE: f64 = 1e-6;

const SVD_EPS: f64 = 1e-14;

/// Gaussian profile `exp(-A (d - B)² + C)` of the joint density at one hop
/// count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopGaussian {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HopGaussian {
    pub fn log_density(&self, d: f64) -> f64 {
        let r = d - self.b;
        -self.a * r * r + self.c
    }
}

/// Weighted least-squares fit of `y ≈ a d² + b d + c`, returned in
/// Gaussian form.
///
/// Fails with [`Error::InsufficientData`] for fewer than three points and
/// [`Error::DegenerateFit`] (hop reported as 0) when the fitted parabola is
/// not concave.
pub fn fit_log_quadratic(d: &[f64], log_values: &[f64], weights: &[f64]) -> Result<HopGaussian> {
    if d.len() != log_values.len() || d.len() != weights.len() {
        return Err(invalid("distance, value and weight slices differ in length"));
    }
    let used: Vec<usize> = (0..d.len()).filter(|&i| weights[i] > 0.0).collect();
    if used.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "log-quadratic fit needs 3 weighted points, got {}",
            used.len()
        )));
    }
    let design = DMatrix::from_fn(used.len(), 3, |r, c| {
        let i = used[r];
        let sw = libm::sqrt(weights[i]);
        match c {
            0 => sw * d[i] * d[i],
            1 => sw * d[i],
            _ => sw,
        }
    });
    let rhs = DVector::from_iterator(
        used.len(),
        used.iter().map(|&i| libm::sqrt(weights[i]) * log_values[i]),
    );
    let coef = solve_least_squares(design, rhs)?;
    let (a, b, c) = (coef[0], coef[1], coef[2]);
    if !(a < 0.0) {
        return Err(Error::DegenerateFit { hop: 0 });
    }
    Ok(HopGaussian {
        a: -a,
        b: -b / (2.0 * a),
        c: c - b * b / (4.0 * a),
    })
}

/// Gaussian fit of hop count `k`, over shells with positive mass,
/// weighted by raw pair counts.
pub fn fit_per_hop_gaussian(hist: &ShellHistogram, k: u32) -> Result<HopGaussian> {
    if k == 0 || k > hist.max_hops() {
        return Err(invalid(format!("hop count {k} outside 1..={}", hist.max_hops())));
    }
    let centers = hist.spec().centers();
    let values = hist.hop_values(k);
    let counts = hist.hop_counts(k);
    let positive: Vec<usize> = (0..centers.len())
        .filter(|&l| values[l] > 0.0 && counts[l] > 0)
        .collect();
    if positive.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "hop {k} has {} shells with positive mass, need 3",
            positive.len()
        )));
    }
    let d: Vec<f64> = positive.iter().map(|&l| centers[l]).collect();
    let y: Vec<f64> = positive.iter().map(|&l| libm::log(values[l])).collect();
    let w: Vec<f64> = positive.iter().map(|&l| counts[l] as f64).collect();
    fit_log_quadratic(&d, &y, &w).map_err(|e| match e {
        Error::DegenerateFit { .. } => Error::DegenerateFit { hop: k },
        other => other,
    })
}

/// Polynomial with ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Polynomial { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Ordinary least-squares fit of the given degree.
    pub fn fit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(invalid("x and y slices differ in length"));
        }
        if xs.len() < degree + 1 {
            return Err(Error::InsufficientData(format!(
                "degree-{degree} polynomial needs {} points, got {}",
                degree + 1,
                xs.len()
            )));
        }
        let design = DMatrix::from_fn(xs.len(), degree + 1, |r, c| libm::pow(xs[r], c as f64));
        let rhs = DVector::from_column_slice(ys);
        let coef = solve_least_squares(design, rhs)?;
        Ok(Polynomial::new(coef.iter().copied().collect()))
    }
}

fn solve_least_squares(design: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.max();
    if !(max_sv > 0.0) || svd.rank(max_sv * 1e-12) < svd.singular_values.len() {
        return Err(Error::Numerical("least-squares design matrix is rank deficient".to_string()));
    }
    svd.solve(&rhs, SVD_EPS * max_sv)
        .map_err(|e| Error::Numerical(e.to_string()))
}

/// Smoothed hop/distance model: `A(k)`, `B(k)`, `C(k)` as polynomials in
/// the hop count, valid for `k ∈ [1, max_hops]`.
///
/// `A` is clamped below at `a_floor` and `B` at zero when evaluated, so the
/// localization objective stays a sum of non-negative penalties even where
/// the polynomial oscillates.
#[derive(Debug, Clone, PartialEq)]
pub struct FitModel {
    max_hops: u32,
    degree: usize,
    per_hop: Vec<(u32, HopGaussian)>,
    poly_a: Polynomial,
    poly_b: Polynomial,
    poly_c: Polynomial,
    a_floor: f64,
}

impl FitModel {
    /// Assembles a model from already-fitted parts (e.g. read back from a
    /// file).
    pub fn from_parts(
        max_hops: u32,
        degree: usize,
        per_hop: Vec<(u32, HopGaussian)>,
        polys: [Polynomial; 3],
        a_floor: f64,
    ) -> Result<Self> {
        if max_hops == 0 {
            return Err(invalid("fit model must cover at least hop count 1"));
        }
        if polys.iter().any(|p| p.coeffs.len() != degree + 1) {
            return Err(invalid(format!("expected {} coefficients per polynomial", degree + 1)));
        }
        if !(a_floor > 0.0 && a_floor.is_finite()) {
            return Err(invalid("A floor must be positive"));
        }
        let [poly_a, poly_b, poly_c] = polys;
        Ok(FitModel {
            max_hops,
            degree,
            per_hop,
            poly_a,
            poly_b,
            poly_c,
            a_floor,
        })
    }

    pub fn max_hops(&self) -> u32 {
        self.max_hops
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn per_hop(&self) -> &[(u32, HopGaussian)] {
        &self.per_hop
    }

    pub fn polynomials(&self) -> [&Polynomial; 3] {
        [&self.poly_a, &self.poly_b, &self.poly_c]
    }

    pub fn a_floor(&self) -> f64 {
        self.a_floor
    }

    pub fn covers(&self, k: u32) -> bool {
        (1..=self.max_hops).contains(&k)
    }

    fn check(&self, k: u32) -> Result<f64> {
        if self.covers(k) {
            Ok(k as f64)
        } else {
            Err(invalid(format!("hop count {k} outside fit range 1..={}", self.max_hops)))
        }
    }

    pub fn a(&self, k: u32) -> Result<f64> {
        Ok(self.poly_a.eval(self.check(k)?).max(self.a_floor))
    }

    pub fn b(&self, k: u32) -> Result<f64> {
        Ok(self.poly_b.eval(self.check(k)?).max(0.0))
    }

    pub fn c(&self, k: u32) -> Result<f64> {
        Ok(self.poly_c.eval(self.check(k)?))
    }
}

/// `1e-6 · r_eff⁻²`.
pub fn default_a_floor(model: &ConnectionModel) -> f64 {
    let r = model.effective_range();
    A_FLOOR_RELATIVE / (r * r)
}

/// Smooths per-hop parameters with OLS polynomials of `degree` in `k`.
pub fn fit_hop_polynomials(
    per_hop: &[(u32, HopGaussian)],
    degree: usize,
    a_floor: f64,
) -> Result<FitModel> {
    if per_hop.len() < degree + 1 {
        return Err(Error::InsufficientData(format!(
            "{} per-hop fits available, degree {degree} needs {}",
            per_hop.len(),
            degree + 1
        )));
    }
    if per_hop.iter().any(|&(k, _)| k == 0) {
        return Err(invalid("hop counts start at 1"));
    }
    let ks: Vec<f64> = per_hop.iter().map(|&(k, _)| k as f64).collect();
    let series = |f: fn(&HopGaussian) -> f64| -> Vec<f64> { per_hop.iter().map(|(_, g)| f(g)).collect() };
    let poly_a = Polynomial::fit(&ks, &series(|g| g.a), degree)?;
    let poly_b = Polynomial::fit(&ks, &series(|g| g.b), degree)?;
    let poly_c = Polynomial::fit(&ks, &series(|g| g.c), degree)?;
    let max_hops = per_hop.iter().map(|&(k, _)| k).max().unwrap_or(0);
    FitModel::from_parts(max_hops, degree, per_hop.to_vec(), [poly_a, poly_b, poly_c], a_floor)
}

/// Full fitting stage: per-hop Gaussians for every hop count with at least
/// `min_pairs` binned pairs (hop counts whose fit fails are skipped), then
/// polynomial smoothing.
pub fn fit_model(
    hist: &ShellHistogram,
    degree: usize,
    min_pairs: u64,
    a_floor: f64,
) -> Result<FitModel> {
    let per_hop: Vec<(u32, HopGaussian)> = (1..=hist.max_hops())
        .filter(|&k| hist.hop_pairs(k) >= min_pairs)
        .filter_map(|k| fit_per_hop_gaussian(hist, k).ok().map(|g| (k, g)))
        .collect();
    fit_hop_polynomials(&per_hop, degree, a_floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::ShellSpec;
    use alloc::vec;

    fn synthetic(scale: f64) -> ShellHistogram {
        let spec = ShellSpec::new(8.0, 40).unwrap();
        let k_max = 2;
        let mut values = vec![0.0; 80];
        for (l, d) in spec.centers().into_iter().enumerate() {
            values[l] = scale * libm::exp(-2.0 * (d - 3.0) * (d - 3.0) + 0.5);
        }
        ShellHistogram::from_values(spec, k_max, values, vec![1; 80]).unwrap()
    }

    #[test]
    fn recovers_log_quadratic_exactly() {
        let g = fit_per_hop_gaussian(&synthetic(1.0), 1).unwrap();
        assert!((g.a - 2.0).abs() < 1e-9, "{g:?}");
        assert!((g.b - 3.0).abs() < 1e-9, "{g:?}");
        assert!((g.c - 0.5).abs() < 1e-9, "{g:?}");

        let g10 = fit_per_hop_gaussian(&synthetic(10.0), 1).unwrap();
        assert!((g10.a - 2.0).abs() < 1e-9);
        assert!((g10.b - 3.0).abs() < 1e-9);
        assert!((g10.c - (0.5 + libm::log(10.0))).abs() < 1e-9);
    }

    #[test]
    fn fit_errors() {
        // row k = 2 is all zero
        assert!(matches!(
            fit_per_hop_gaussian(&synthetic(1.0), 2),
            Err(Error::InsufficientData(_))
        ));
        assert!(fit_per_hop_gaussian(&synthetic(1.0), 3).is_err());

        // convex log-density
        let spec = ShellSpec::new(4.0, 4).unwrap();
        let values: Vec<f64> = spec.centers().iter().map(|d| libm::exp(d * d)).collect();
        let hist = ShellHistogram::from_values(spec, 1, values, vec![1; 4]).unwrap();
        assert_eq!(fit_per_hop_gaussian(&hist, 1), Err(Error::DegenerateFit { hop: 1 }));
    }

    #[test]
    fn polynomial_interpolation_identity() {
        let truth = Polynomial::new(vec![0.5, -1.0, 0.25, 0.01, -0.002]);
        let ks: Vec<f64> = (1..=12).map(|k| k as f64).collect();
        let ys: Vec<f64> = ks.iter().map(|&k| truth.eval(k)).collect();
        let fit = Polynomial::fit(&ks, &ys, 4).unwrap();
        for (c, t) in fit.coeffs.iter().zip(&truth.coeffs) {
            assert!((c - t).abs() < 1e-9, "{:?}", fit.coeffs);
        }
        let residual: f64 = ks.iter().zip(&ys).map(|(&k, &y)| (fit.eval(k) - y).abs()).sum();
        assert!(residual < 1e-9);
    }

    #[test]
    fn nested_linear_b() {
        let per_hop: Vec<(u32, HopGaussian)> = (1..=20)
            .map(|k| (k, HopGaussian { a: 1.0, b: k as f64, c: 0.0 }))
            .collect();
        let fit = fit_hop_polynomials(&per_hop, 4, 1e-6).unwrap();
        assert_eq!(fit.max_hops(), 20);
        for k in 1..=20 {
            assert!((fit.b(k).unwrap() - k as f64).abs() < 1e-9);
            assert!((fit.a(k).unwrap() - 1.0).abs() < 1e-9);
        }
        assert!(fit.b(21).is_err());
        assert!(fit.a(0).is_err());
    }

    #[test]
    fn clamping() {
        let per_hop: Vec<(u32, HopGaussian)> = (1..=6)
            .map(|k| (k, HopGaussian { a: 3.0 - k as f64, b: 2.0 - k as f64, c: 0.0 }))
            .collect();
        let fit = fit_hop_polynomials(&per_hop, 4, 1e-6).unwrap();
        assert_eq!(fit.a(5).unwrap(), 1e-6);
        assert_eq!(fit.b(5).unwrap(), 0.0);
        assert!((fit.a(1).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_hops() {
        let per_hop: Vec<(u32, HopGaussian)> = (1..=4)
            .map(|k| (k, HopGaussian { a: 1.0, b: 1.0, c: 0.0 }))
            .collect();
        assert!(matches!(
            fit_hop_polynomials(&per_hop, 4, 1e-6),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn a_floor_scales_with_range() {
        let m = ConnectionModel::qudg(2.0, 1.5).unwrap();
        assert!((default_a_floor(&m) - 0.25e-6).abs() < 1e-18);
    }
}
