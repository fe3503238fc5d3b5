//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Every key is optional and
//! falls back to the value printed by [`ExperimentSpec::to_config_string`]
//! on the default spec. Unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use khoploc_core::training::{DEFAULT_DEGREE, DEFAULT_ITERATIONS, DEFAULT_MAX_HOPS, DEFAULT_MIN_PAIRS};
use khoploc_core::{fixed_anchor_layout, ConnectionModel, Region, SolverOptions};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    Value { key: String, value: String, reason: String },
    #[error(transparent)]
    Core(#[from] khoploc_core::Error),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    KHopLoc,
    DvHop,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KHopLoc => "khoploc",
            Algorithm::DvHop => "dvhop",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "khoploc" => Ok(Algorithm::KHopLoc),
            "dvhop" | "dv-hop" => Ok(Algorithm::DvHop),
            other => Err(format!("unknown algorithm `{other}` (expected khoploc or dvhop)")),
        }
    }
}

/// Parses a comma-separated algorithm list, dropping duplicates and keeping
/// the canonical order (kHopLoc first).
pub fn parse_algorithms(s: &str) -> Result<Vec<Algorithm>, String> {
    let mut algs = s
        .split(',')
        .filter(|part| !part.trim().is_empty())
        .map(Algorithm::from_str)
        .collect::<Result<Vec<_>, _>>()?;
    algs.sort();
    algs.dedup();
    if algs.is_empty() {
        return Err("at least one algorithm is required".into());
    }
    Ok(algs)
}

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub fn keyword(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        "expected one of {}, got `{other}`",
                        [$($text),+].join(" | ")
                    )),
                }
            }
        }
    };
}

keyword_enum!(AnchorMode { Fixed => "fixed", Random => "random" });
keyword_enum!(DensityMode { Known => "known", Estimated => "estimated" });
keyword_enum!(RegionMode { Known => "known", AssumeSquare => "assume_square" });
keyword_enum!(SweepAxis { Nodes => "nodes", Anchors => "anchors" });

/// Inclusive integer range `start..=end` in steps of `step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepRange {
    pub start: usize,
    pub end: usize,
    pub step: usize,
}

impl SweepRange {
    pub fn values(&self) -> Vec<usize> {
        if self.step == 0 || self.start > self.end {
            return Vec::new();
        }
        (self.start..=self.end).step_by(self.step).collect()
    }
}

impl FromStr for SweepRange {
    type Err = String;
    /// `start:end:step`, or `start:end` with step 1.
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |p: &str| p.parse::<usize>().map_err(|e| format!("`{p}`: {e}"));
        let (start, end, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => return Err("expected start:end[:step]".into()),
        };
        if step == 0 {
            return Err("sweep step must be >= 1".into());
        }
        Ok(SweepRange { start, end, step })
    }
}

impl fmt::Display for SweepRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub region: Region,
    pub model: ConnectionModel,
    pub n_total: usize,
    pub n_anchors: usize,
    pub anchor_mode: AnchorMode,
    pub seed: u64,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub density_mode: DensityMode,
    pub region_mode: RegionMode,
    /// Hop-count cap K for flooding and training.
    pub max_hops: u32,
    /// Monte Carlo training iterations.
    pub iterations: usize,
    /// Degree of the smoothing polynomials.
    pub degree: usize,
    /// Minimum binned pairs for a hop count to enter the fit.
    pub min_pairs: u64,
    pub solver: SolverOptions,
    /// Pretrained fit file; skips training when set.
    pub fit_model: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
    pub sweep_axis: SweepAxis,
    pub sweep_range: Option<SweepRange>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let model = ConnectionModel::Rayleigh { beta: 1.0, eta: 2.0 };
        ExperimentSpec {
            region: Region::Square { side: 10.0 },
            model,
            n_total: 300,
            n_anchors: 13,
            anchor_mode: AnchorMode::Fixed,
            seed: 1,
            trials: 20,
            algorithms: vec![Algorithm::KHopLoc, Algorithm::DvHop],
            density_mode: DensityMode::Known,
            region_mode: RegionMode::Known,
            max_hops: DEFAULT_MAX_HOPS,
            iterations: DEFAULT_ITERATIONS,
            degree: DEFAULT_DEGREE,
            min_pairs: DEFAULT_MIN_PAIRS,
            solver: SolverOptions::for_model(&model),
            fit_model: None,
            output: None,
            threads: 0,
            sweep_axis: SweepAxis::Nodes,
            sweep_range: None,
        }
    }
}

const KEYS: &[&str] = &[
    "region",
    "side",
    "arm_width",
    "model",
    "beta",
    "eta",
    "d_max",
    "doi",
    "n_total",
    "n_anchors",
    "anchor_mode",
    "seed",
    "trials",
    "algorithms",
    "density_mode",
    "region_mode",
    "max_hops",
    "iterations",
    "degree",
    "min_pairs",
    "solver_tol",
    "solver_max_iter",
    "fit_model",
    "output",
    "threads",
    "sweep_axis",
    "sweep_range",
];

struct Entries {
    map: BTreeMap<String, String>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax { line, text: content.to_string() });
            };
            let key = key.trim().to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { line, key });
            }
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate { line, key });
            }
        }
        Ok(Entries { map })
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e: T::Err| ConfigError::Value {
                key: key.to_string(),
                value: v.clone(),
                reason: e.to_string(),
            }),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.map.get(key).filter(|v| !v.is_empty()).map(PathBuf::from)
    }
}

fn value_error(key: &str, value: impl fmt::Display, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

impl ExperimentSpec {
    pub fn from_config_str(text: &str) -> Result<Self, ConfigError> {
        let e = Entries::parse(text)?;
        let d = ExperimentSpec::default();

        let region = match e.get("region", "square".to_string())?.to_ascii_lowercase().as_str() {
            "square" => Region::square(e.get("side", 10.0)?)?,
            "c_shape" | "cshape" => Region::c_shape(e.get("side", 10.0)?, e.get("arm_width", 2.0)?)?,
            other => return Err(value_error("region", other, "expected square | c_shape")),
        };
        let model = match e.get("model", "rayleigh".to_string())?.to_ascii_lowercase().as_str() {
            "rayleigh" => ConnectionModel::rayleigh(e.get("beta", 1.0)?, e.get("eta", 2.0)?)?,
            "qudg" => ConnectionModel::qudg(e.get("d_max", 1.0)?, e.get("doi", 1.5)?)?,
            other => return Err(value_error("model", other, "expected rayleigh | qudg")),
        };
        let algorithms = match e.map.get("algorithms") {
            None => d.algorithms.clone(),
            Some(v) => parse_algorithms(v).map_err(|r| value_error("algorithms", v, r))?,
        };
        let sweep_range = match e.map.get("sweep_range") {
            None => None,
            Some(v) if v.is_empty() => None,
            Some(v) => Some(v.parse::<SweepRange>().map_err(|r| value_error("sweep_range", v, r))?),
        };
        let mut solver = SolverOptions::for_model(&model);
        solver.tolerance = e.get("solver_tol", solver.tolerance)?;
        solver.max_iterations = e.get("solver_max_iter", solver.max_iterations)?;

        let spec = ExperimentSpec {
            region,
            model,
            n_total: e.get("n_total", d.n_total)?,
            n_anchors: e.get("n_anchors", d.n_anchors)?,
            anchor_mode: e.get("anchor_mode", d.anchor_mode)?,
            seed: e.get("seed", d.seed)?,
            trials: e.get("trials", d.trials)?,
            algorithms,
            density_mode: e.get("density_mode", d.density_mode)?,
            region_mode: e.get("region_mode", d.region_mode)?,
            max_hops: e.get("max_hops", d.max_hops)?,
            iterations: e.get("iterations", d.iterations)?,
            degree: e.get("degree", d.degree)?,
            min_pairs: e.get("min_pairs", d.min_pairs)?,
            solver,
            fit_model: e.path("fit_model"),
            output: e.path("output"),
            threads: e.get("threads", d.threads)?,
            sweep_axis: e.get("sweep_axis", d.sweep_axis)?,
            sweep_range,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_config_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.region.validate()?;
        self.model.validate()?;
        if self.n_anchors < 3 {
            return Err(value_error("n_anchors", self.n_anchors, "at least 3 anchors are required"));
        }
        if self.n_anchors >= self.n_total {
            return Err(value_error(
                "n_anchors",
                self.n_anchors,
                format!("must be smaller than n_total = {}", self.n_total),
            ));
        }
        if self.anchor_mode == AnchorMode::Fixed {
            let layout = fixed_anchor_layout(&self.region)?;
            if layout.len() != self.n_anchors {
                return Err(value_error(
                    "n_anchors",
                    self.n_anchors,
                    format!("the fixed layout for this region has {} anchors", layout.len()),
                ));
            }
        }
        if self.trials == 0 {
            return Err(value_error("trials", 0, "at least one trial is required"));
        }
        if self.algorithms.is_empty() {
            return Err(value_error("algorithms", "", "at least one algorithm is required"));
        }
        if self.max_hops == 0 {
            return Err(value_error("max_hops", 0, "must be >= 1"));
        }
        if self.iterations == 0 {
            return Err(value_error("iterations", 0, "must be >= 1"));
        }
        if !(self.solver.tolerance > 0.0) {
            return Err(value_error("solver_tol", self.solver.tolerance, "must be > 0"));
        }
        Ok(())
    }

    /// The spec in config-file syntax; parsing it back yields an equal spec.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        match self.region {
            Region::Square { side } => {
                kv("region", "square".into());
                kv("side", side.to_string());
            }
            Region::CShape { outer_side, arm_width } => {
                kv("region", "c_shape".into());
                kv("side", outer_side.to_string());
                kv("arm_width", arm_width.to_string());
            }
        }
        match self.model {
            ConnectionModel::Rayleigh { beta, eta } => {
                kv("model", "rayleigh".into());
                kv("beta", beta.to_string());
                kv("eta", eta.to_string());
            }
            ConnectionModel::Qudg { d_max, doi } => {
                kv("model", "qudg".into());
                kv("d_max", d_max.to_string());
                kv("doi", doi.to_string());
            }
        }
        kv("n_total", self.n_total.to_string());
        kv("n_anchors", self.n_anchors.to_string());
        kv("anchor_mode", self.anchor_mode.keyword().into());
        kv("seed", self.seed.to_string());
        kv("trials", self.trials.to_string());
        let algs: Vec<&str> = self.algorithms.iter().map(|a| a.name()).collect();
        kv("algorithms", algs.join(","));
        kv("density_mode", self.density_mode.keyword().into());
        kv("region_mode", self.region_mode.keyword().into());
        kv("max_hops", self.max_hops.to_string());
        kv("iterations", self.iterations.to_string());
        kv("degree", self.degree.to_string());
        kv("min_pairs", self.min_pairs.to_string());
        kv("solver_tol", self.solver.tolerance.to_string());
        kv("solver_max_iter", self.solver.max_iterations.to_string());
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        kv("fit_model", path(&self.fit_model));
        kv("output", path(&self.output));
        kv("threads", self.threads.to_string());
        kv("sweep_axis", self.sweep_axis.keyword().into());
        kv(
            "sweep_range",
            self.sweep_range.map(|r| r.to_string()).unwrap_or_default(),
        );
        out
    }

    /// Effective communication range of the model, the length unit of
    /// normalized errors.
    pub fn r_eff(&self) -> f64 {
        self.model.effective_range()
    }
}
