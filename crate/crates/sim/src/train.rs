//! Parallel Monte Carlo training.

use khoploc_core::training::{default_a_floor, fit_model, training_iteration, FitModel, ShellHistogram, TrainingConfig};
use khoploc_core::Result;
use rayon::prelude::*;

/// Runs the training iterations on the current rayon pool.
///
/// Each iteration draws from its own substream and pair counts are integers,
/// so the merged histogram is identical to the serial
/// [`khoploc_core::training::run_training`] for any thread count.
pub fn train_histogram(config: &TrainingConfig) -> Result<ShellHistogram> {
    config.validate()?;
    let parts = (0..config.iterations)
        .into_par_iter()
        .map(|i| training_iteration(config, i))
        .collect::<Result<Vec<_>>>()?;
    let mut hist = ShellHistogram::new(config.shells, config.max_hops);
    for part in &parts {
        hist.merge(part)?;
    }
    Ok(hist)
}

/// Histogram followed by the per-hop fit and polynomial smoothing.
pub fn train_fit(config: &TrainingConfig, degree: usize, min_pairs: u64) -> Result<FitModel> {
    let hist = train_histogram(config)?;
    fit_model(&hist, degree, min_pairs, default_a_floor(&config.model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use khoploc_core::training::run_training;
    use khoploc_core::{ConnectionModel, Region};

    #[test]
    fn parallel_matches_serial() {
        let mut cfg = TrainingConfig::new(
            Region::square(6.0).unwrap(),
            ConnectionModel::rayleigh(1.0, 2.0).unwrap(),
            3.0,
            42,
        )
        .unwrap();
        cfg.iterations = 8;
        let serial = run_training(&cfg).unwrap();
        for threads in [1, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let parallel = pool.install(|| train_histogram(&cfg)).unwrap();
            assert_eq!(parallel, serial);
        }
    }
}
