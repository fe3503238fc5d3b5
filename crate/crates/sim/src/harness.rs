//! Experiment orchestration: deployment, flooding, training, localization
//! and per-node bookkeeping.
//!
//! Trial `t` draws everything from `derive_seed(seed, t)`, so results do
//! not depend on the order in which trials run or on the thread count.
//! When the density is known, one model is trained per experiment from
//! `derive_seed(seed, TRAINING_STREAM)` and shared by all trials; with an
//! estimated density each trial trains its own model.

use khoploc_core::connectivity::realize_links;
use khoploc_core::geometry::fixed_anchor_layout;
use khoploc_core::graph::{build_hop_table, Adjacency, HopTable};
use khoploc_core::localization::{dvhop_hop_sizes, localize_dvhop, localize_khoploc, AnchorObservation};
use khoploc_core::rng::{derive_seed, substream};
use khoploc_core::training::{
    estimate_density_in_region, estimate_density_unknown_region, FitModel, ShellSpec, TrainingConfig,
};
use khoploc_core::{Error as CoreError, Point, Region};
use log::{debug, info, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Algorithm, AnchorMode, ConfigError, DensityMode, ExperimentSpec, RegionMode, SweepAxis, SweepRange};
use crate::fitfile::{FitFile, FitFileError};
use crate::train::train_fit;

/// Substream index reserved for the shared training run.
pub const TRAINING_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    FitFile(#[from] FitFileError),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("{0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    /// Localized from at least three anchors.
    Ok,
    /// kHopLoc estimate from one or two anchors; excluded from mean errors.
    LowConfidence,
    /// No anchor reachable within the hop cap (and fit range).
    NoAnchors,
    /// DV-hop needs three anchors with a calibrated hop size.
    InsufficientAnchors,
    /// Collinear or otherwise rank-deficient trilateration.
    Degenerate,
    /// Any other per-node failure, including a failed per-trial training.
    Error,
}

impl NodeStatus {
    pub fn keyword(self) -> &'static str {
        match self {
            NodeStatus::Ok => "ok",
            NodeStatus::LowConfidence => "low_confidence",
            NodeStatus::NoAnchors => "no_anchors",
            NodeStatus::InsufficientAnchors => "insufficient_anchors",
            NodeStatus::Degenerate => "degenerate",
            NodeStatus::Error => "error",
        }
    }

    pub fn is_failure(self) -> bool {
        !matches!(self, NodeStatus::Ok | NodeStatus::LowConfidence)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub trial: usize,
    pub node_id: usize,
    pub algorithm: Algorithm,
    pub truth: Point,
    pub estimate: Option<Point>,
    pub anchors_used: usize,
    pub degree: usize,
    pub converged: bool,
    pub status: NodeStatus,
}

impl NodeRecord {
    pub fn error(&self) -> Option<f64> {
        self.estimate.map(|e| e.distance(self.truth))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub trial: usize,
    pub algorithm: Algorithm,
    /// Mean error over `Ok` nodes; `None` when no node was localized.
    pub mean_error: Option<f64>,
    pub stddev: Option<f64>,
    pub localized: usize,
    pub low_confidence: usize,
    pub failed: usize,
    /// Flooding messages spent by the algorithm in this trial.
    pub messages: u64,
    pub mean_degree: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub n_total: usize,
    pub n_anchors: usize,
    /// Length unit of normalized errors.
    pub r_eff: f64,
    pub algorithms: Vec<Algorithm>,
    pub nodes: Vec<NodeRecord>,
    pub trials: Vec<TrialSummary>,
}

impl ExperimentResult {
    /// Errors of all `Ok` nodes of `alg`, over every trial.
    pub fn errors(&self, alg: Algorithm) -> Vec<f64> {
        self.nodes
            .iter()
            .filter(|r| r.algorithm == alg && r.status == NodeStatus::Ok)
            .filter_map(NodeRecord::error)
            .collect()
    }

    /// Mean error over all localized nodes of all trials.
    pub fn mean_error(&self, alg: Algorithm) -> Option<f64> {
        mean(&self.errors(alg))
    }

    pub fn error_stddev(&self, alg: Algorithm) -> Option<f64> {
        sample_stddev(&self.errors(alg))
    }

    /// Per-trial mean errors, skipping trials with nothing localized.
    pub fn trial_means(&self, alg: Algorithm) -> Vec<f64> {
        self.summaries(alg).filter_map(|s| s.mean_error).collect()
    }

    pub fn summaries(&self, alg: Algorithm) -> impl Iterator<Item = &TrialSummary> {
        self.trials.iter().filter(move |s| s.algorithm == alg)
    }

    pub fn mean_messages(&self, alg: Algorithm) -> f64 {
        let counts: Vec<f64> = self.summaries(alg).map(|s| s.messages as f64).collect();
        mean(&counts).unwrap_or(0.0)
    }

    pub fn mean_degree(&self) -> f64 {
        let degrees: Vec<f64> = self.trials.iter().map(|s| s.mean_degree).collect();
        mean(&degrees).unwrap_or(0.0)
    }
}

pub(crate) fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub(crate) fn sample_stddev(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return None;
    }
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Mean Euclidean distance between paired estimates and true positions.
pub fn mean_error(estimates: &[Point], truths: &[Point]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(HarnessError::Input("mean error of an empty batch".into()));
    }
    if estimates.len() != truths.len() {
        return Err(HarnessError::Input(format!(
            "{} estimates for {} true positions",
            estimates.len(),
            truths.len()
        )));
    }
    let total: f64 = estimates.iter().zip(truths).map(|(e, t)| e.distance(*t)).sum();
    Ok(total / estimates.len() as f64)
}

/// One realized network: anchors are nodes `0..n_anchors`.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub points: Vec<Point>,
    pub n_anchors: usize,
    pub adjacency: Adjacency,
    pub hops: HopTable,
}

impl Deployment {
    pub fn anchor_positions(&self) -> &[Point] {
        &self.points[..self.n_anchors]
    }

    pub fn targets(&self) -> std::ops::Range<usize> {
        self.n_anchors..self.points.len()
    }
}

/// Deploys, links and floods the network of trial `trial`.
pub fn deploy(spec: &ExperimentSpec, trial: usize) -> Result<Deployment> {
    let mut rng = substream(derive_seed(spec.seed, trial as u64), 0);
    let m = spec.n_anchors;
    let points = match spec.anchor_mode {
        AnchorMode::Fixed => {
            let mut points = fixed_anchor_layout(&spec.region)?;
            if points.len() != m {
                return Err(HarnessError::Input(format!(
                    "fixed layout has {} anchors, spec asks for {m}",
                    points.len()
                )));
            }
            points.extend(spec.region.sample_points(spec.n_total - m, &mut rng));
            points
        }
        AnchorMode::Random => spec.region.sample_points(spec.n_total, &mut rng),
    };
    let adjacency = realize_links(&points, &spec.model, &mut rng)?;
    let anchors: Vec<usize> = (0..m).collect();
    let hops = build_hop_table(&adjacency, &anchors, spec.max_hops)?;
    Ok(Deployment { points, n_anchors: m, adjacency, hops })
}

/// Where the fit used by kHopLoc comes from.
enum FitSource {
    Shared(FitModel),
    PerTrial,
}

fn training_config(spec: &ExperimentSpec, region: Region, density: f64, seed: u64) -> Result<TrainingConfig> {
    let cfg = TrainingConfig {
        region,
        model: spec.model,
        density,
        iterations: spec.iterations,
        max_hops: spec.max_hops,
        shells: ShellSpec::for_model(&spec.model, spec.max_hops)?,
        seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Trains the shared model when the density is known.
pub fn train_for_known_density(spec: &ExperimentSpec) -> Result<FitModel> {
    let area = spec.region.area()?;
    let density = spec.n_total as f64 / area;
    let region = match spec.region_mode {
        RegionMode::Known => spec.region,
        RegionMode::AssumeSquare => Region::square(area.sqrt())?,
    };
    let cfg = training_config(spec, region, density, derive_seed(spec.seed, TRAINING_STREAM))?;
    info!("training on {region:?} at density {density} ({} iterations)", cfg.iterations);
    Ok(train_fit(&cfg, spec.degree, spec.min_pairs)?)
}

/// Trains a model for one trial from its observed mean degree.
pub fn train_for_estimated_density(spec: &ExperimentSpec, dep: &Deployment, trial: usize) -> Result<FitModel> {
    let mean_degree = dep.adjacency.mean_degree();
    let (region, density) = match spec.region_mode {
        RegionMode::Known => (
            spec.region,
            estimate_density_in_region(mean_degree, &spec.region, &spec.model)?,
        ),
        RegionMode::AssumeSquare => {
            let (rho, side) = estimate_density_unknown_region(mean_degree, dep.points.len(), &spec.model)?;
            (Region::square(side)?, rho)
        }
    };
    debug!("trial {trial}: mean degree {mean_degree}, estimated density {density}");
    let seed = derive_seed(derive_seed(spec.seed, trial as u64), 1);
    let cfg = training_config(spec, region, density, seed)?;
    Ok(train_fit(&cfg, spec.degree, spec.min_pairs)?)
}

fn fit_source(spec: &ExperimentSpec) -> Result<FitSource> {
    if !spec.algorithms.contains(&Algorithm::KHopLoc) {
        return Ok(FitSource::PerTrial);
    }
    if let Some(path) = &spec.fit_model {
        let file = FitFile::read(path)?;
        if file.model != spec.model {
            warn!("fit file {} was trained for {:?}, experiment uses {:?}", path.display(), file.model, spec.model);
        }
        return Ok(FitSource::Shared(file.fit));
    }
    match spec.density_mode {
        DensityMode::Known => Ok(FitSource::Shared(train_for_known_density(spec)?)),
        DensityMode::Estimated => Ok(FitSource::PerTrial),
    }
}

fn run_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}

/// Runs every trial of `spec` on a pool of `spec.threads` workers.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    run_pool(spec.threads, || experiment_in_pool(spec))?
}

fn experiment_in_pool(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let source = fit_source(spec)?;
    let per_trial = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, t, &source))
        .collect::<Result<Vec<_>>>()?;
    let mut result = ExperimentResult {
        n_total: spec.n_total,
        n_anchors: spec.n_anchors,
        r_eff: spec.r_eff(),
        algorithms: spec.algorithms.clone(),
        nodes: Vec::new(),
        trials: Vec::new(),
    };
    for (nodes, summaries) in per_trial {
        result.nodes.extend(nodes);
        result.trials.extend(summaries);
    }
    Ok(result)
}

/// One experiment per value of `range` along `axis`, all with the base
/// seed of `spec`. An empty range gives no results.
pub fn sweep(spec: &ExperimentSpec, axis: SweepAxis, range: SweepRange) -> Result<Vec<ExperimentResult>> {
    let specs = range
        .values()
        .into_iter()
        .map(|v| {
            let mut s = spec.clone();
            match axis {
                SweepAxis::Nodes => s.n_total = v,
                SweepAxis::Anchors => s.n_anchors = v,
            }
            s.validate()?;
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    if specs.is_empty() {
        return Ok(Vec::new());
    }
    run_pool(spec.threads, || {
        specs
            .iter()
            .map(|s| {
                info!("sweep point n_total = {}, n_anchors = {}", s.n_total, s.n_anchors);
                experiment_in_pool(s)
            })
            .collect()
    })?
}

fn run_trial(
    spec: &ExperimentSpec,
    trial: usize,
    source: &FitSource,
) -> Result<(Vec<NodeRecord>, Vec<TrialSummary>)> {
    let dep = deploy(spec, trial)?;
    let mut nodes = Vec::new();
    let mut summaries = Vec::new();
    for &alg in &spec.algorithms {
        let (records, messages) = match alg {
            Algorithm::KHopLoc => {
                let mut messages = dep.hops.messages;
                let fit = match source {
                    FitSource::Shared(fit) => Ok(fit.clone()),
                    FitSource::PerTrial => {
                        // degree reports to the centre plus the parameter broadcast
                        messages += 2 * dep.points.len() as u64;
                        train_for_estimated_density(spec, &dep, trial)
                    }
                };
                let records = match fit {
                    Ok(fit) => localize_all_khoploc(spec, &dep, trial, &fit),
                    Err(e) => {
                        warn!("trial {trial}: training failed: {e}");
                        failed_records(&dep, trial, alg)
                    }
                };
                (records, messages)
            }
            Algorithm::DvHop => (localize_all_dvhop(&dep, trial), 2 * dep.hops.messages),
        };
        summaries.push(summarize(trial, alg, &records, messages, dep.adjacency.mean_degree()));
        nodes.extend(records);
    }
    Ok((nodes, summaries))
}

fn summarize(trial: usize, algorithm: Algorithm, records: &[NodeRecord], messages: u64, mean_degree: f64) -> TrialSummary {
    let errors: Vec<f64> = records
        .iter()
        .filter(|r| r.status == NodeStatus::Ok)
        .filter_map(NodeRecord::error)
        .collect();
    TrialSummary {
        trial,
        algorithm,
        mean_error: mean(&errors),
        stddev: sample_stddev(&errors),
        localized: errors.len(),
        low_confidence: records.iter().filter(|r| r.status == NodeStatus::LowConfidence).count(),
        failed: records.iter().filter(|r| r.status.is_failure()).count(),
        messages,
        mean_degree,
    }
}

fn record(dep: &Deployment, trial: usize, node: usize, algorithm: Algorithm) -> NodeRecord {
    NodeRecord {
        trial,
        node_id: node,
        algorithm,
        truth: dep.points[node],
        estimate: None,
        anchors_used: 0,
        degree: dep.adjacency.degree(node),
        converged: false,
        status: NodeStatus::Error,
    }
}

fn failed_records(dep: &Deployment, trial: usize, alg: Algorithm) -> Vec<NodeRecord> {
    dep.targets().map(|t| record(dep, trial, t, alg)).collect()
}

fn status_of(err: &CoreError) -> NodeStatus {
    match err {
        CoreError::DegenerateGeometry => NodeStatus::Degenerate,
        _ => NodeStatus::Error,
    }
}

/// Anchors reachable from `node` whose hop count the fit covers.
pub fn khoploc_observations(dep: &Deployment, node: usize, fit: &FitModel) -> Vec<AnchorObservation> {
    (0..dep.n_anchors)
        .filter_map(|a| {
            let h = dep.hops.hop(a, node)?;
            (h >= 1 && fit.covers(h)).then(|| AnchorObservation::new(dep.points[a], h))
        })
        .collect()
}

fn localize_all_khoploc(spec: &ExperimentSpec, dep: &Deployment, trial: usize, fit: &FitModel) -> Vec<NodeRecord> {
    dep.targets()
        .into_par_iter()
        .map(|t| {
            let mut rec = record(dep, trial, t, Algorithm::KHopLoc);
            let obs = khoploc_observations(dep, t, fit);
            rec.anchors_used = obs.len();
            if obs.is_empty() {
                rec.status = NodeStatus::NoAnchors;
                return rec;
            }
            match localize_khoploc(&obs, fit, &spec.solver) {
                Ok(est) => {
                    rec.estimate = Some(est.position);
                    rec.converged = est.converged;
                    rec.status = if est.low_confidence { NodeStatus::LowConfidence } else { NodeStatus::Ok };
                }
                Err(e) => {
                    debug!("trial {trial} node {t}: khoploc: {e}");
                    rec.status = status_of(&e);
                }
            }
            rec
        })
        .collect()
}

fn localize_all_dvhop(dep: &Deployment, trial: usize) -> Vec<NodeRecord> {
    let sizes = match dvhop_hop_sizes(dep.anchor_positions(), &dep.hops.anchor_hops()) {
        Ok(sizes) => sizes,
        Err(e) => {
            warn!("trial {trial}: hop-size calibration failed: {e}");
            return failed_records(dep, trial, Algorithm::DvHop);
        }
    };
    for (a, s) in sizes.iter().enumerate() {
        if s.is_none() {
            debug!("trial {trial}: anchor {a} reaches no other anchor and is excluded");
        }
    }
    dep.targets()
        .into_par_iter()
        .map(|t| {
            let mut rec = record(dep, trial, t, Algorithm::DvHop);
            let (obs, hop_sizes): (Vec<AnchorObservation>, Vec<f64>) = (0..dep.n_anchors)
                .filter_map(|a| {
                    let h = dep.hops.hop(a, t)?;
                    let size = sizes[a]?;
                    (h >= 1).then(|| (AnchorObservation::new(dep.points[a], h), size))
                })
                .unzip();
            rec.anchors_used = obs.len();
            if obs.is_empty() {
                rec.status = NodeStatus::NoAnchors;
                return rec;
            }
            if obs.len() < khoploc_core::localization::MIN_CONFIDENT_ANCHORS {
                rec.status = NodeStatus::InsufficientAnchors;
                return rec;
            }
            match localize_dvhop(&obs, &hop_sizes) {
                Ok(est) => {
                    rec.estimate = Some(est.position);
                    rec.converged = est.converged;
                    rec.status = NodeStatus::Ok;
                }
                Err(e) => {
                    debug!("trial {trial} node {t}: dvhop: {e}");
                    rec.status = status_of(&e);
                }
            }
            rec
        })
        .collect()
}
