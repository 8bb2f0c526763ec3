//! Reproducible Monte Carlo experiments.
//!
//! Replicates run in parallel but each draws from its own stream
//! (`replicate_rng(master_seed, tag, replicate)`) and results are gathered in
//! replicate order, so statistics do not depend on the thread count.

mod band;
mod experiments;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cadlag::MetricError;
use crate::fields::FieldError;
use crate::measures::{MeasureError, WeightError, WeightFunction};
use crate::ray_knight::RayKnight;
use crate::stats::StatsError;
use crate::walk::{simulate_to_t, LocalTimeProfile, Sign, WalkError, WalkParams};
use crate::{replicate_rng, RandomSource};

pub use band::{choose_delta1, choose_delta2, BandChoice};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExperimentId {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    E7,
    E8,
    E9,
    E10,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 10] = [
        Self::E1,
        Self::E2,
        Self::E3,
        Self::E4,
        Self::E5,
        Self::E6,
        Self::E7,
        Self::E8,
        Self::E9,
        Self::E10,
    ];

    pub fn index(self) -> u64 {
        Self::ALL.iter().position(|e| *e == self).unwrap() as u64 + 1
    }

    pub fn title(self) -> &'static str {
        match self {
            Self::E1 => "local time profile approaches the triangle",
            Self::E2 => "T / N^2 approaches (|x| + 2 theta)^2",
            Self::E3 => "Gaussian fluctuations of T",
            Self::E4 => "marginal variances of the fluctuation fields",
            Self::E5 => "M1 proximity of Y_N^± and Y_N",
            Self::E6 => "band statistic separating Y_N^± from the limit",
            Self::E7 => "concentration of the hitting indices",
            Self::E8 => "hitting time of zero by the L-chain",
            Self::E9 => "integral of Brownian motion",
            Self::E10 => "T against twice the integral of Y_N'",
        }
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|e| format!("{e:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown experiment `{s}`, expected E1..E10"))
    }
}

/// Weight specification in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    /// `w(k) = exp(beta k)`.
    Exponential { beta: f64, radius: usize },
    /// `lo` below zero, `hi` above.
    Bounded { lo: f64, hi: f64, radius: usize },
    /// `k value` table file.
    Table { path: PathBuf },
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Exponential {
            beta: 1.0,
            radius: 10,
        }
    }
}

impl WeightSpec {
    pub fn build(&self) -> Result<WeightFunction<f64>, WeightError> {
        match self {
            WeightSpec::Exponential { beta, radius } => WeightFunction::exponential(*beta, *radius),
            WeightSpec::Bounded { lo, hi, radius } => WeightFunction::bounded(*lo, *hi, *radius),
            WeightSpec::Table { path } => WeightFunction::load(path),
        }
    }
}

/// Which sampler produces the local-time profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Direct simulation up to `N = 400`, the site recursions beyond.
    #[default]
    Auto,
    Direct,
    Eta,
}

/// Largest `N` simulated directly under [`Backend::Auto`].
pub const DIRECT_MAX_N: u64 = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    #[serde(default)]
    pub weight: WeightSpec,
    /// Scales `N`; for E8 the starting values of the L-chain, unused by E9.
    #[serde(default)]
    pub n_list: Vec<u64>,
    #[serde(default = "default_x")]
    pub x: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_iota")]
    pub iota: Sign,
    pub replicates: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub backend: Backend,
    /// Overrides of the experiment's default thresholds and tuning values.
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
}

fn default_x() -> f64 {
    1.0
}

fn default_theta() -> f64 {
    0.5
}

fn default_iota() -> Sign {
    Sign::Minus
}

impl ExperimentConfig {
    /// Desk-scale defaults of an experiment.
    pub fn default_for(experiment: ExperimentId) -> Self {
        use ExperimentId::*;
        let (n_list, replicates) = match experiment {
            E1 => (vec![250, 1000, 4000], 100),
            E2 => (vec![100, 400, 1000], 200),
            E3 => (vec![250, 1000, 4000], 1000),
            E4 => (vec![1000], 500),
            E5 => (vec![250, 1000, 4000], 500),
            E6 => (vec![250, 1000, 4000], 500),
            E7 => (vec![1000, 4000], 500),
            E8 => (vec![5, 20, 80], 2000),
            E9 => (vec![], 10_000),
            E10 => (vec![250, 1000], 300),
        };
        Self {
            experiment,
            weight: WeightSpec::default(),
            n_list,
            x: default_x(),
            theta: default_theta(),
            iota: default_iota(),
            replicates,
            master_seed: 20241015,
            output: None,
            backend: Backend::Auto,
            thresholds: BTreeMap::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.replicates == 0 {
            return Err(HarnessError::ConfigInvalid(
                "replicates must be at least 1".into(),
            ));
        }
        if self.experiment != ExperimentId::E9 && self.n_list.is_empty() {
            return Err(HarnessError::ConfigInvalid("n_list is empty".into()));
        }
        if self.experiment != ExperimentId::E8 && self.experiment != ExperimentId::E9 {
            for &n in &self.n_list {
                WalkParams::new(n, self.x, self.theta, self.iota)
                    .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
            }
        }
        let defaults = experiments::default_thresholds(self.experiment);
        for key in self.thresholds.keys() {
            if !defaults.contains_key(key) {
                return Err(HarnessError::ConfigInvalid(format!(
                    "unknown threshold `{key}` for {:?}",
                    self.experiment
                )));
            }
        }
        Ok(())
    }

    /// Defaults merged with the overrides.
    pub fn effective_thresholds(&self) -> BTreeMap<String, f64> {
        let mut t = experiments::default_thresholds(self.experiment);
        t.extend(self.thresholds.iter().map(|(k, v)| (k.clone(), *v)));
        t
    }

    fn walk(&self, n: u64) -> Result<WalkParams, HarnessError> {
        Ok(WalkParams::new(n, self.x, self.theta, self.iota)?)
    }
}

/// One pass/fail decision, with everything needed to recheck it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub statistic: f64,
    /// One of `<=`, `<`, `>=`, `>`, `decreasing`, `non-increasing`.
    pub comparison: String,
    pub threshold: f64,
    pub passed: bool,
}

impl Verdict {
    pub fn at_most(name: &str, statistic: f64, threshold: f64) -> Self {
        Self::new(name, statistic, "<=", threshold, statistic <= threshold)
    }

    pub fn below(name: &str, statistic: f64, threshold: f64) -> Self {
        Self::new(name, statistic, "<", threshold, statistic < threshold)
    }

    pub fn at_least(name: &str, statistic: f64, threshold: f64) -> Self {
        Self::new(name, statistic, ">=", threshold, statistic >= threshold)
    }

    pub fn above(name: &str, statistic: f64, threshold: f64) -> Self {
        Self::new(name, statistic, ">", threshold, statistic > threshold)
    }

    fn new(name: &str, statistic: f64, comparison: &str, threshold: f64, passed: bool) -> Self {
        Self {
            name: name.to_string(),
            statistic,
            comparison: comparison.to_string(),
            threshold,
            passed,
        }
    }
}

/// Summary statistics of one scale.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScaleSummary {
    pub n: u64,
    pub stats: BTreeMap<String, f64>,
    pub ks: BTreeMap<String, crate::stats::KsResult>,
    pub variance_ci: BTreeMap<String, crate::stats::VarianceCi>,
}

impl ScaleSummary {
    fn new(n: u64) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }

    /// Panics if the experiment records no `key`.
    pub fn stat(&self, key: &str) -> f64 {
        self.stats[key]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    /// Walk steps represented by the sampled profiles (sum of `T`).
    pub walk_steps: u64,
}

/// Per-replicate values written to `samples.csv`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleTable {
    pub columns: Vec<String>,
    /// `(n, replicate, values)`.
    pub rows: Vec<(u64, u64, Vec<f64>)>,
}

impl SampleTable {
    fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, n: u64, rep: u64, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push((n, rep, values));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,replicate");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (n, rep, values) in &self.rows {
            let _ = write!(out, "{n},{rep}");
            for v in values {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub experiment: ExperimentId,
    pub title: String,
    pub config: ExperimentConfig,
    pub thresholds: BTreeMap<String, f64>,
    /// `Var(rho_)` of the configured weight.
    pub var_rho: f64,
    pub scales: Vec<ScaleSummary>,
    /// Experiment-wide values such as the band parameters.
    pub extra: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    pub note: String,
    pub timing: Timing,
    #[serde(skip)]
    pub samples: SampleTable,
}

pub const THRESHOLD_NOTE: &str =
    "finite-N thresholds are desk-scale engineering choices; the limit statements fix only exponents";

impl RunResult {
    /// JSON of everything except the timing and output location, for
    /// reproducibility checks.
    pub fn statistics_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("result serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        if let Some(cfg) = v.get_mut("config").and_then(|c| c.as_object_mut()) {
            cfg.remove("output");
        }
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(), HarnessError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("result.json"), serde_json::to_string_pretty(self)?)?;
        std::fs::write(dir.join("samples.csv"), self.samples.to_csv())?;
        Ok(())
    }
}

/// Shared state of a run.
pub(crate) struct Context {
    pub cfg: ExperimentConfig,
    pub thresholds: BTreeMap<String, f64>,
    pub weight: WeightFunction<f64>,
    pub rk: RayKnight,
    pub var_rho: f64,
}

impl Context {
    fn threshold(&self, key: &str) -> f64 {
        *self
            .thresholds
            .get(key)
            .unwrap_or_else(|| panic!("threshold `{key}` has no default"))
    }

    /// Stream family for scale `n` and sub-stream `sub` of this experiment.
    fn tag(&self, n: u64, sub: u64) -> u64 {
        (self.cfg.experiment.index() << 56) ^ (sub << 48) ^ n
    }

    fn rng(&self, n: u64, sub: u64, rep: u64) -> RandomSource {
        replicate_rng(self.cfg.master_seed, self.tag(n, sub), rep)
    }

    fn direct(&self, n: u64) -> bool {
        match self.cfg.backend {
            Backend::Auto => n <= DIRECT_MAX_N,
            Backend::Direct => true,
            Backend::Eta => false,
        }
    }

    fn profile<R: RngCore>(
        &self,
        p: &WalkParams,
        rng: &mut R,
    ) -> Result<LocalTimeProfile, HarnessError> {
        Ok(if self.direct(p.n) {
            simulate_to_t(&self.weight, p, rng)?
        } else {
            self.rk.profile(p, rng)?
        })
    }

    /// `f(rep)` for every replicate, in replicate order.
    fn replicates<T: Send>(
        &self,
        f: impl Fn(u64) -> Result<T, HarnessError> + Sync + Send,
    ) -> Result<Vec<T>, HarnessError> {
        (0..self.cfg.replicates).into_par_iter().map(f).collect()
    }
}

/// Runs an experiment on the current rayon pool; writes `result.json` and
/// `samples.csv` when the config names an output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let weight = cfg.weight.build()?;
    let mut rk = RayKnight::new(&weight)?;
    if !matches!(cfg.experiment, ExperimentId::E8 | ExperimentId::E9) {
        for &n in &cfg.n_list {
            rk.prepare_coupling(n)?;
        }
    }
    let var_rho = rk.rho().variance();
    let ctx = Context {
        cfg: cfg.clone(),
        thresholds: cfg.effective_thresholds(),
        weight,
        rk,
        var_rho,
    };
    let out = experiments::run(&ctx)?;
    let passed = out.verdicts.iter().all(|v| v.passed);
    let result = RunResult {
        experiment: cfg.experiment,
        title: cfg.experiment.title().to_string(),
        config: cfg.clone(),
        thresholds: ctx.thresholds.clone(),
        var_rho,
        scales: out.scales,
        extra: out.extra,
        verdicts: out.verdicts,
        passed,
        note: THRESHOLD_NOTE.to_string(),
        timing: Timing {
            wall_seconds: start.elapsed().as_secs_f64(),
            walk_steps: out.walk_steps,
        },
        samples: out.samples,
    };
    if let Some(dir) = &cfg.output {
        result.write(dir)?;
    }
    Ok(result)
}

/// [`run_experiment`] on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(
    cfg: &ExperimentConfig,
    threads: usize,
) -> Result<RunResult, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    pool.install(|| run_experiment(cfg))
}
