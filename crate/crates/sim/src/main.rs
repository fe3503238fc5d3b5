use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use khoploc::config::parse_algorithms;
use khoploc::harness::{deploy, train_for_known_density};
use khoploc::report::write_csv;
use khoploc::{run_experiment, sweep, ExperimentResult, ExperimentSpec, FitFile, SweepAxis, SweepRange};
use khoploc_core::training::{estimate_density, estimate_density_in_region, estimate_density_unknown_region};

#[derive(Parser)]
#[command(name = "khoploc", version, about = "Multihop localization simulator (kHopLoc and DV-hop)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the default configuration.
    Defaults,
    /// Train a fit model for the configured deployment and write it out.
    Train(Common),
    /// Localize every target of a single network and write per-node CSV.
    Localize(Common),
    /// Run all configured trials and write CSV.
    Experiment(Common),
    /// Repeat the experiment over a range of node or anchor counts.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `nodes` or `anchors` (overrides `sweep_axis`).
        #[arg(long)]
        axis: Option<SweepAxis>,
        /// `start:end[:step]`, inclusive (overrides `sweep_range`).
        #[arg(long)]
        range: Option<SweepRange>,
    },
    /// Estimate the node density from realized networks.
    Density(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of `khoploc,dvhop`.
    #[arg(long)]
    algorithms: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_file(path)?,
            None => ExperimentSpec::default(),
        };
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if let Some(out) = &self.out {
            spec.output = Some(out.clone());
        }
        if let Some(algs) = &self.algorithms {
            spec.algorithms = parse_algorithms(algs).map_err(anyhow::Error::msg)?;
        }
        if let Some(trials) = self.trials {
            spec.trials = trials;
        }
        if let Some(threads) = self.threads {
            spec.threads = threads;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn output(spec: &ExperimentSpec) -> Result<Box<dyn Write>> {
    Ok(match &spec.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_results(spec: &ExperimentSpec, results: &[ExperimentResult]) -> Result<()> {
    let mut w = output(spec)?;
    write_csv(&mut w, results)?;
    w.flush()?;
    Ok(())
}

fn report(result: &ExperimentResult) {
    for &alg in &result.algorithms {
        let mean = result.mean_error(alg).map_or("n/a".to_string(), |e| format!("{e:.4}"));
        let sd = result.error_stddev(alg).map_or("n/a".to_string(), |e| format!("{e:.4}"));
        eprintln!(
            "N={} M={} {alg:>8}: mean error {mean} (sd {sd}), {} localized, {:.0} messages/trial",
            result.n_total,
            result.n_anchors,
            result.errors(alg).len(),
            result.mean_messages(alg)
        );
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Defaults => {
            println!("# khoploc experiment configuration (defaults)");
            print!("{}", ExperimentSpec::default().to_config_string());
        }
        Command::Train(common) => {
            let spec = common.spec()?;
            let fit = train_for_known_density(&spec)?;
            let area = spec.region.area()?;
            let file = FitFile {
                model: spec.model,
                region: spec.region,
                density: spec.n_total as f64 / area,
                max_hops: spec.max_hops,
                iterations: spec.iterations,
                seed: spec.seed,
                fit,
            };
            let mut w = output(&spec)?;
            w.write_all(file.to_text().as_bytes())?;
            w.flush()?;
        }
        Command::Localize(common) => {
            let mut spec = common.spec()?;
            spec.trials = 1;
            let result = run_experiment(&spec)?;
            report(&result);
            write_results(&spec, &[result])?;
        }
        Command::Experiment(common) => {
            let spec = common.spec()?;
            let result = run_experiment(&spec)?;
            report(&result);
            write_results(&spec, &[result])?;
        }
        Command::Sweep { common, axis, range } => {
            let spec = common.spec()?;
            let axis = axis.unwrap_or(spec.sweep_axis);
            let Some(range) = range.or(spec.sweep_range) else {
                bail!("no sweep range: pass --range or set `sweep_range` in the config");
            };
            let results = sweep(&spec, axis, range)?;
            results.iter().for_each(report);
            write_results(&spec, &results)?;
        }
        Command::Density(common) => {
            let spec = common.spec()?;
            let mut w = output(&spec)?;
            let true_density = spec.n_total as f64 / spec.region.area()?;
            writeln!(w, "trial,mean_degree,true_density,plain,region_corrected,assume_square,assumed_side")?;
            for trial in 0..spec.trials {
                let dep = deploy(&spec, trial)?;
                let deg = dep.adjacency.mean_degree();
                let plain = estimate_density(deg, &spec.model)?;
                let corrected = estimate_density_in_region(deg, &spec.region, &spec.model)?;
                let (square, side) = estimate_density_unknown_region(deg, spec.n_total, &spec.model)?;
                writeln!(w, "{trial},{deg},{true_density},{plain},{corrected},{square},{side}")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
