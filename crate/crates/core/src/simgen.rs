//! Synthetic generative models, replicate experiments and power analysis.
//!
//! Every replicate `r` of an experiment seeded with `seed` is generated from a
//! ChaCha8 stream seeded with `seed + r`, so results do not depend on how many
//! worker threads run them.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::bf::TestResult;
use crate::config::{Method, PartitionConfig};
use crate::diffcoexp::with_workers;
use crate::error::{Error, Result};
use crate::transforms::PairedSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Parabolic,
    Sinusoidal,
    Circular,
    Checkerboard,
    Independent,
}

impl ModelKind {
    pub const DEPENDENT: [ModelKind; 5] = [
        ModelKind::Linear,
        ModelKind::Parabolic,
        ModelKind::Sinusoidal,
        ModelKind::Circular,
        ModelKind::Checkerboard,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Parabolic => "parabolic",
            ModelKind::Sinusoidal => "sinusoidal",
            ModelKind::Circular => "circular",
            ModelKind::Checkerboard => "checkerboard",
            ModelKind::Independent => "independent",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "linear" => ModelKind::Linear,
            "parabolic" => ModelKind::Parabolic,
            "sinusoidal" => ModelKind::Sinusoidal,
            "circular" => ModelKind::Circular,
            "checkerboard" => ModelKind::Checkerboard,
            "independent" => ModelKind::Independent,
            other => return Err(Error::InvalidInput(format!("unknown model '{other}'"))),
        })
    }
}

/// Range of the shared offset `θ` in the checkerboard model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckerTheta {
    /// `θ ~ U[0, 2π]`
    #[default]
    TwoPi,
    /// `θ ~ U[0, 1]`
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimModel {
    pub kind: ModelKind,
    /// Standard deviation of the additive noise.
    pub sigma: f64,
    /// Support of the uniform `x` in the linear, parabolic and sinusoidal models.
    pub x_range: (f64, f64),
    pub checker_theta: CheckerTheta,
}

pub const DEFAULT_X_RANGE: (f64, f64) = (0.0, 10.0);

impl SimModel {
    pub fn new(kind: ModelKind, sigma: f64) -> Self {
        Self {
            kind,
            sigma,
            x_range: DEFAULT_X_RANGE,
            checker_theta: CheckerTheta::default(),
        }
    }

    pub fn with_checker_theta(mut self, theta: CheckerTheta) -> Self {
        self.checker_theta = theta;
        self
    }

    pub fn with_x_range(mut self, lo: f64, hi: f64) -> Self {
        self.x_range = (lo, hi);
        self
    }

    /// The independent model with the same settings, used for false-positive
    /// rates.
    pub fn null_counterpart(&self) -> Self {
        Self {
            kind: ModelKind::Independent,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        let (lo, hi) = self.x_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInput(format!("invalid x range [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// `a mod b` for non-negative integers, with `mod(a, 0) = 0`.
fn int_mod(a: u32, b: u32) -> u32 {
    if b == 0 {
        0
    } else {
        a % b
    }
}

/// Draw `n` pairs from `model`; a pure function of `(model, n, seed)`.
pub fn generate(model: &SimModel, n: usize, seed: u64) -> Result<PairedSample> {
    model.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput(
            "cannot generate an empty sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = model.sigma;
    let (lo, hi) = model.x_range;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let (xi, yi) = match model.kind {
            ModelKind::Linear | ModelKind::Parabolic | ModelKind::Sinusoidal => {
                let xi = rng.random_range(lo..hi);
                let eta: f64 = rng.sample(StandardNormal);
                let f = match model.kind {
                    ModelKind::Linear => 2.0 * xi / 3.0,
                    ModelKind::Parabolic => 2.0 * xi * xi / 3.0,
                    _ => 2.0 * xi.sin(),
                };
                (xi, f + sigma * eta)
            }
            ModelKind::Circular => {
                let theta = rng.random_range(0.0..TAU);
                let ex: f64 = rng.sample(StandardNormal);
                let ey: f64 = rng.sample(StandardNormal);
                (
                    10.0 * theta.cos() + sigma * ex,
                    10.0 * theta.sin() + sigma * ey,
                )
            }
            ModelKind::Checkerboard => {
                let ix: u32 = rng.random_range(0..4);
                let u: u32 = rng.random_range(0..2);
                let iy = int_mod(2 * u, ix);
                let theta = match model.checker_theta {
                    CheckerTheta::TwoPi => rng.random_range(0.0..TAU),
                    CheckerTheta::Unit => rng.random_range(0.0..1.0),
                };
                let ex: f64 = rng.sample(StandardNormal);
                let ey: f64 = rng.sample(StandardNormal);
                (
                    10.0 * (ix as f64 + theta) + sigma * ex,
                    10.0 * (iy as f64 + theta) + sigma * ey,
                )
            }
            ModelKind::Independent => (rng.sample(StandardNormal), rng.sample(StandardNormal)),
        };
        x.push(xi);
        y.push(yi);
    }
    PairedSample::new(x, y)
}

/// Linearly interpolated quantile of sorted data.
fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Order-statistic quantile: the `ceil(n p)`-th smallest value.
pub fn order_statistic_quantile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty set");
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let h = s.len() as f64 * p;
    // n * p is computed in floating point; snap values that are integers up
    // to rounding so 500 * 0.95 selects the 475th value.
    let k = if (h - h.round()).abs() < 1e-9 {
        h.round()
    } else {
        h.ceil()
    };
    let k = (k as usize).clamp(1, s.len());
    s[k - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Percentiles {
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

impl Percentiles {
    pub fn of(values: &[f64]) -> Self {
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        Self {
            p5: interpolated_quantile(&s, 0.05),
            p25: interpolated_quantile(&s, 0.25),
            p50: interpolated_quantile(&s, 0.50),
            p75: interpolated_quantile(&s, 0.75),
            p95: interpolated_quantile(&s, 0.95),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSummary {
    pub model: SimModel,
    pub n: usize,
    pub reps: usize,
    pub p_dependent: Percentiles,
    /// Percentiles of `B_k` for `k = 1..=levels.len()`.
    pub levels: Vec<Percentiles>,
    /// Per-replicate results in replicate order.
    pub results: Vec<TestResult>,
}

impl ReplicateSummary {
    pub fn p_values(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.p_dependent).collect()
    }

    pub fn level_values(&self, k: usize) -> Vec<f64> {
        self.results.iter().map(|r| r.level(k)).collect()
    }
}

/// Number of levels summarized by [`replicate_experiment`].
pub const SUMMARY_LEVELS: usize = 5;

/// Generate and test `reps` independent samples of size `n`.
pub fn replicate_experiment(
    model: &SimModel,
    n: usize,
    reps: usize,
    cfg: &PartitionConfig,
    method: &Method,
    seed: u64,
    workers: usize,
) -> Result<ReplicateSummary> {
    if reps == 0 {
        return Err(Error::InvalidInput("reps must be at least 1".into()));
    }
    model.validate()?;
    cfg.validate()?;
    let results = with_workers(workers, || {
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let s = generate(model, n, seed.wrapping_add(r as u64))?;
                crate::run_test(&s, cfg, method)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let p: Vec<f64> = results.iter().map(|r| r.p_dependent).collect();
    let levels = (1..=SUMMARY_LEVELS)
        .map(|k| Percentiles::of(&results.iter().map(|r| r.level(k)).collect::<Vec<_>>()))
        .collect();
    Ok(ReplicateSummary {
        model: *model,
        n,
        reps,
        p_dependent: Percentiles::of(&p),
        levels,
        results,
    })
}

/// A scalar dependence statistic; larger values mean stronger dependence.
pub trait DependenceStatistic: Sync {
    fn name(&self) -> String;
    fn compute(&self, sample: &PairedSample) -> Result<f64>;
}

/// Posterior probability of dependence under the Pólya-tree model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolyaTreeStatistic {
    pub cfg: PartitionConfig,
    pub method: Method,
}

impl DependenceStatistic for PolyaTreeStatistic {
    fn name(&self) -> String {
        match self.method {
            Method::Basic => "PT".into(),
            Method::EmpiricalBayes(_) => "EPT".into(),
        }
    }

    fn compute(&self, sample: &PairedSample) -> Result<f64> {
        Ok(crate::run_test(sample, &self.cfg, &self.method)?.p_dependent)
    }
}

/// Absolute Pearson correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AbsPearson;

impl DependenceStatistic for AbsPearson {
    fn name(&self) -> String {
        "abs_pearson".into()
    }

    fn compute(&self, sample: &PairedSample) -> Result<f64> {
        let n = sample.len() as f64;
        let mx = sample.x().iter().sum::<f64>() / n;
        let my = sample.y().iter().sum::<f64>() / n;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (x, y) in sample.x().iter().zip(sample.y()) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
        }
        if sxx == 0.0 || syy == 0.0 {
            return Err(Error::DegenerateSample(
                "correlation of a constant margin".into(),
            ));
        }
        Ok((sxy / (sxx * syy).sqrt()).abs())
    }
}

/// Null statistics from randomly re-pairing `y` against `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationNull {
    pub statistics: Vec<f64>,
    pub level: f64,
    /// Order-statistic `(1 - level)` quantile of `statistics`.
    pub threshold: f64,
}

pub const DEFAULT_PERMUTATIONS: usize = 500;
pub const DEFAULT_LEVEL: f64 = 0.05;

fn permutation_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
    rng.set_stream(1);
    rng
}

fn permuted(sample: &PairedSample, rng: &mut ChaCha8Rng) -> PairedSample {
    let mut order: Vec<usize> = (0..sample.len()).collect();
    order.shuffle(rng);
    sample.repaired(&order)
}

fn validate_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "level must lie in (0, 1), got {level}"
        )))
    }
}

/// Permutation null distribution of `stat` for one sample.
pub fn permutation_null(
    sample: &PairedSample,
    n_perm: usize,
    stat: &dyn DependenceStatistic,
    level: f64,
    seed: u64,
    workers: usize,
) -> Result<PermutationNull> {
    pooled_permutation_null(
        std::slice::from_ref(sample),
        n_perm,
        stat,
        level,
        seed,
        workers,
    )
}

/// Permutation null pooled over several samples: permutation `i` re-pairs
/// sample `i mod samples.len()`.
pub fn pooled_permutation_null(
    samples: &[PairedSample],
    n_perm: usize,
    stat: &dyn DependenceStatistic,
    level: f64,
    seed: u64,
    workers: usize,
) -> Result<PermutationNull> {
    if n_perm == 0 {
        return Err(Error::InvalidInput("need at least one permutation".into()));
    }
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples to permute".into()));
    }
    validate_level(level)?;
    let statistics = with_workers(workers, || {
        (0..n_perm)
            .into_par_iter()
            .map(|i| {
                let mut rng = permutation_rng(seed, i);
                stat.compute(&permuted(&samples[i % samples.len()], &mut rng))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let threshold = order_statistic_quantile(&statistics, 1.0 - level);
    Ok(PermutationNull {
        statistics,
        level,
        threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    /// Fixed cut at posterior probability 0.5.
    Posterior,
    /// Quantile of a permutation null.
    Permutation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSettings {
    pub source: ThresholdSource,
    pub n_perm: usize,
    pub level: f64,
    pub workers: usize,
}

impl Default for PowerSettings {
    fn default() -> Self {
        Self {
            source: ThresholdSource::Posterior,
            n_perm: DEFAULT_PERMUTATIONS,
            level: DEFAULT_LEVEL,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub model: ModelKind,
    pub n: usize,
    pub sigma: f64,
    pub reps: usize,
    pub method: String,
    pub tpr: f64,
    pub fpr: f64,
    /// Cut applied to the dependent-model replicates.
    pub threshold: f64,
    /// Cut applied to the independent-model replicates.
    pub fpr_threshold: f64,
    pub threshold_source: ThresholdSource,
    #[serde(skip)]
    pub dependent_stats: Vec<f64>,
    #[serde(skip)]
    pub null_stats: Vec<f64>,
}

impl PowerReport {
    pub fn roc(&self) -> Vec<(f64, f64)> {
        roc_curve(&self.dependent_stats, &self.null_stats)
    }
}

fn replicate_stats(
    model: &SimModel,
    n: usize,
    reps: usize,
    stat: &dyn DependenceStatistic,
    seed: u64,
    workers: usize,
) -> Result<(Vec<PairedSample>, Vec<f64>)> {
    let samples = (0..reps)
        .map(|r| generate(model, n, seed.wrapping_add(r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let stats = with_workers(workers, || {
        samples
            .par_iter()
            .map(|s| stat.compute(s))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok((samples, stats))
}

/// True-positive rate on `model` and false-positive rate on its independent
/// counterpart. A replicate is called dependent when its statistic strictly
/// exceeds the threshold.
///
/// With [`ThresholdSource::Permutation`] each rate uses its own pooled null:
/// permutation `i` re-pairs replicate `i mod reps` of the same model.
pub fn power_experiment(
    model: &SimModel,
    n: usize,
    reps: usize,
    stat: &dyn DependenceStatistic,
    settings: &PowerSettings,
    seed: u64,
) -> Result<PowerReport> {
    if reps == 0 {
        return Err(Error::InvalidInput("reps must be at least 1".into()));
    }
    model.validate()?;
    let null_model = model.null_counterpart();
    let (dep_samples, dependent_stats) =
        replicate_stats(model, n, reps, stat, seed, settings.workers)?;
    let (null_samples, null_stats) =
        replicate_stats(&null_model, n, reps, stat, seed, settings.workers)?;
    let (threshold, fpr_threshold) = match settings.source {
        ThresholdSource::Posterior => (0.5, 0.5),
        ThresholdSource::Permutation => {
            let dep = pooled_permutation_null(
                &dep_samples,
                settings.n_perm,
                stat,
                settings.level,
                seed,
                settings.workers,
            )?;
            let null = pooled_permutation_null(
                &null_samples,
                settings.n_perm,
                stat,
                settings.level,
                seed,
                settings.workers,
            )?;
            (dep.threshold, null.threshold)
        }
    };
    let rate = |stats: &[f64], t: f64| {
        stats.iter().filter(|&&s| s > t).count() as f64 / stats.len() as f64
    };
    Ok(PowerReport {
        model: model.kind,
        n,
        sigma: model.sigma,
        reps,
        method: stat.name(),
        tpr: rate(&dependent_stats, threshold),
        fpr: rate(&null_stats, fpr_threshold),
        threshold,
        fpr_threshold,
        threshold_source: settings.source,
        dependent_stats,
        null_stats,
    })
}

/// ROC points `(fpr, tpr)` obtained by sweeping the threshold down through
/// every observed statistic, starting at `(0, 0)` and ending at `(1, 1)`.
pub fn roc_curve(positives: &[f64], negatives: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = positives.iter().chain(negatives).copied().collect();
    cuts.sort_by(|a, b| b.total_cmp(a));
    cuts.dedup();
    let rate = |v: &[f64], t: f64| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().filter(|&&s| s >= t).count() as f64 / v.len() as f64
        }
    };
    let mut out = vec![(0.0, 0.0)];
    out.extend(
        cuts.iter()
            .map(|&t| (rate(negatives, t), rate(positives, t))),
    );
    if out.last() != Some(&(1.0, 1.0)) {
        out.push((1.0, 1.0));
    }
    out
}
