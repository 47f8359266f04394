//! Monte-Carlo simulation of pairwise-comparison experiments.
//!
//! Synthetic observers answer according to the Case V model around known
//! true scores. Scaling many simulated experiments shows how bias, spread,
//! confidence-interval size and RMSE depend on the number of observers,
//! the experimental design, the spacing of the true scores and whether
//! observers may answer "no preference".
//!
//! Every run draws from its own random stream derived from the seed and
//! the run index, so results do not depend on how runs are scheduled
//! across threads.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::pool_matrices;
use crate::rng::{child_seed, substream};
use crate::scaling::{scale_mle, CountMatrix, ScaleOptions, DEFAULT_GAMMA, JOD_SIGMA};
use crate::stats::bootstrap_with;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Design {
    /// Every pair of conditions.
    Complete,
    /// Only neighbours: `(1, 2), (2, 3), …`.
    IncompleteChain,
}

/// Unordered pairs compared by every observer.
pub fn design_pairs(n: usize, design: Design) -> Vec<(usize, usize)> {
    match design {
        Design::Complete => (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect(),
        Design::IncompleteChain => (1..n).map(|i| (i - 1, i)).collect(),
    }
}

/// Observers answer "no preference" when the perceived difference is
/// smaller than a personal threshold drawn from `N(mean, sd)` truncated at 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TieModel {
    pub threshold_mean: f64,
    pub threshold_sd: f64,
}

impl Default for TieModel {
    fn default() -> Self {
        TieModel {
            threshold_mean: 0.7,
            threshold_sd: 0.3,
        }
    }
}

impl TieModel {
    pub fn draw_threshold<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.threshold_sd == 0.0 {
            return self.threshold_mean.max(0.0);
        }
        let dist = Normal::new(self.threshold_mean, self.threshold_sd)
            .expect("tie threshold spread validated as finite and non-negative");
        loop {
            let t: f64 = dist.sample(rng);
            if t >= 0.0 {
                return t;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// True scores in JOD; the first must be 0.
    pub q_true: Vec<f64>,
    pub design: Design,
    pub observers: usize,
    pub repetitions: usize,
    pub runs: usize,
    pub sigma: f64,
    pub tie_model: Option<TieModel>,
    pub use_prior: bool,
    pub gamma: f64,
    /// Remove unanimously answered pairs before scaling.
    pub drop_unanimous: bool,
    /// Extra observers who answer every comparison by a fair coin flip.
    pub random_observers: usize,
    /// Runs (the first ones) that also get bootstrap confidence intervals.
    pub ci_runs: usize,
    pub ci_bootstrap: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            q_true: vec![0.0, 1.0, 2.0, 3.0, 4.0],
            design: Design::Complete,
            observers: 10,
            repetitions: 3,
            runs: 1000,
            sigma: JOD_SIGMA,
            tie_model: None,
            use_prior: true,
            gamma: DEFAULT_GAMMA,
            drop_unanimous: false,
            random_observers: 0,
            ci_runs: 50,
            ci_bootstrap: 200,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Evenly spaced true scores `0, s, 2s, …`.
    pub fn evenly_spaced(n: usize, spacing: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * spacing).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.q_true.len() < 2 {
            return bad("at least two conditions are required".into());
        }
        if self.q_true[0] != 0.0 {
            return bad(format!("first true score must be 0, got {}", self.q_true[0]));
        }
        if self.q_true.iter().any(|q| !q.is_finite()) {
            return bad("true scores must be finite".into());
        }
        if self.observers == 0 || self.repetitions == 0 || self.runs == 0 {
            return bad("observers, repetitions and runs must all be at least 1".into());
        }
        if let Some(t) = &self.tie_model {
            if !(t.threshold_mean.is_finite() && t.threshold_sd.is_finite() && t.threshold_sd >= 0.0)
            {
                return bad("tie threshold distribution must be finite with sd >= 0".into());
            }
            if t.threshold_mean < 0.0 && t.threshold_sd == 0.0 {
                return bad("tie threshold cannot be negative".into());
            }
        }
        self.scale_options().validate()
    }

    pub fn scale_options(&self) -> ScaleOptions {
        ScaleOptions {
            sigma: self.sigma,
            use_prior: self.use_prior,
            gamma: self.gamma,
            ..Default::default()
        }
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        design_pairs(self.q_true.len(), self.design)
    }

    /// Comparisons made by all observers in one experiment.
    pub fn total_comparisons(&self) -> usize {
        (self.observers + self.random_observers) * self.repetitions * self.pairs().len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum TrialOutcome {
    IWins,
    JWins,
    Tie,
}

/// One simulated comparison: the perceived difference is drawn from
/// `N(q_i - q_j, σ_ij)`; it is a tie when smaller in magnitude than the
/// threshold.
pub fn simulate_trial<R: Rng + ?Sized>(
    q_i: f64,
    q_j: f64,
    sigma: f64,
    tie_threshold: Option<f64>,
    rng: &mut R,
) -> TrialOutcome {
    let noise: f64 = StandardNormal.sample(rng);
    let delta = q_i - q_j + sigma * noise;
    match tie_threshold {
        Some(t) if delta.abs() < t => TrialOutcome::Tie,
        _ if delta > 0.0 => TrialOutcome::IWins,
        _ => TrialOutcome::JWins,
    }
}

/// "No preference" answers per unordered pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TieTally {
    n: usize,
    ties: Vec<u32>,
}

impl TieTally {
    pub fn new(n: usize) -> Self {
        TieTally {
            n,
            ties: vec![0; n * n],
        }
    }

    pub fn add(&mut self, i: usize, j: usize, count: u32) {
        let (a, b) = (i.min(j), i.max(j));
        self.ties[a * self.n + b] += count;
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        let (a, b) = (i.min(j), i.max(j));
        self.ties[a * self.n + b]
    }

    pub fn total(&self) -> u64 {
        self.ties.iter().map(|&t| t as u64).sum()
    }
}

/// Splits every tie into half a vote for each side. An odd number of ties
/// leaves one half-vote pair, which goes whole to a randomly chosen side so
/// that the pair keeps its exact number of trials.
pub fn apply_equal_split<R: Rng + ?Sized>(
    ties: &TieTally,
    counts: &CountMatrix,
    rng: &mut R,
) -> Result<CountMatrix> {
    let n = counts.dim();
    if ties.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: ties.n,
        });
    }
    let mut out = counts.clone();
    for i in 0..n {
        for j in i + 1..n {
            let t = ties.get(i, j);
            if t == 0 {
                continue;
            }
            let half = t / 2;
            out.add_wins(i, j, half);
            out.add_wins(j, i, half);
            if t % 2 == 1 {
                if rng.random_bool(0.5) {
                    out.add_wins(i, j, 1);
                } else {
                    out.add_wins(j, i, 1);
                }
            }
        }
    }
    Ok(out)
}

/// Per-observer count matrices of one simulated experiment. Random
/// responders, if any, come after the regular observers.
pub fn simulate_experiment(config: &SimConfig, run_index: u64) -> Result<Vec<CountMatrix>> {
    config.validate()?;
    let mut rng = substream(config.seed, run_index);
    let n = config.q_true.len();
    let pairs = config.pairs();
    let q = &config.q_true;

    let mut matrices = Vec::with_capacity(config.observers + config.random_observers);
    for _ in 0..config.observers {
        let threshold = config.tie_model.map(|m| m.draw_threshold(&mut rng));
        let mut counts = CountMatrix::zeros(n);
        let mut ties = TieTally::new(n);
        for _ in 0..config.repetitions {
            for &(i, j) in &pairs {
                match simulate_trial(q[i], q[j], config.sigma, threshold, &mut rng) {
                    TrialOutcome::IWins => counts.add_wins(i, j, 1),
                    TrialOutcome::JWins => counts.add_wins(j, i, 1),
                    TrialOutcome::Tie => ties.add(i, j, 1),
                }
            }
        }
        if ties.total() > 0 {
            counts = apply_equal_split(&ties, &counts, &mut rng)?;
        }
        matrices.push(counts);
    }
    for _ in 0..config.random_observers {
        let mut counts = CountMatrix::zeros(n);
        for _ in 0..config.repetitions {
            for &(i, j) in &pairs {
                if rng.random_bool(0.5) {
                    counts.add_wins(i, j, 1);
                } else {
                    counts.add_wins(j, i, 1);
                }
            }
        }
        matrices.push(counts);
    }
    Ok(matrices)
}

/// Zeroes every pair answered unanimously.
pub fn drop_unanimous_pairs(counts: &CountMatrix) -> CountMatrix {
    let mut out = counts.clone();
    for (i, j) in counts.compared_pairs() {
        if counts.wins(i, j) == 0 || counts.wins(j, i) == 0 {
            out.set(i, j, 0);
            out.set(j, i, 0);
        }
    }
    out
}

/// `√(Σ_{i≥2} (q_i - q̂_i)² / (n - 1))`; the anchored first condition is
/// excluded.
pub fn rmse(estimate: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(estimate.len(), truth.len(), "score vectors differ in length");
    let n = truth.len();
    if n < 2 {
        return 0.0;
    }
    let sse: f64 = estimate[1..]
        .iter()
        .zip(&truth[1..])
        .map(|(e, t)| (t - e).powi(2))
        .sum();
    (sse / (n - 1) as f64).sqrt()
}

/// Sample standard deviation of each condition across runs.
fn column_std(run_scores: &[Vec<f64>], mean: &[f64]) -> Vec<f64> {
    let r = run_scores.len();
    (0..mean.len())
        .map(|i| {
            let ss: f64 = run_scores.iter().map(|s| (s[i] - mean[i]).powi(2)).sum();
            (ss / (r - 1) as f64).sqrt()
        })
        .collect()
}

fn column_mean(run_scores: &[Vec<f64>]) -> Vec<f64> {
    let n = run_scores.first().map_or(0, Vec::len);
    let r = run_scores.len() as f64;
    (0..n)
        .map(|i| run_scores.iter().map(|s| s[i]).sum::<f64>() / r)
        .collect()
}

/// Mean adjacent gap of the averaged scores in units of estimation spread:
///
/// `d = 1/(n-1) Σ_{i=1}^{n-1} (q̄_{i+1} - q̄_i) / σ_{q̂_{i+1}}`.
///
/// The anchored first condition never varies, so each gap is divided by the
/// spread of its upper (estimated) condition.
pub fn effect_size(run_scores: &[Vec<f64>]) -> Result<f64> {
    let n = run_scores.first().map_or(0, Vec::len);
    if run_scores.len() < 2 || n < 2 {
        return Err(Error::InvalidParameter(
            "effect size needs at least two runs of at least two conditions".into(),
        ));
    }
    if let Some(bad) = run_scores.iter().find(|s| s.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    let mean = column_mean(run_scores);
    let std = column_std(run_scores, &mean);
    let mut sum = 0.0;
    for i in 0..n - 1 {
        if std[i + 1] == 0.0 {
            return Err(Error::ZeroVariance(i + 1));
        }
        sum += (mean[i + 1] - mean[i]) / std[i + 1];
    }
    Ok(sum / (n - 1) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimMetrics {
    /// `q̄`, the average estimate of each condition over completed runs.
    pub mean_jod: Vec<f64>,
    /// Spread of the estimates across runs; absent with a single run.
    pub std_jod: Option<Vec<f64>>,
    /// `q̄ - q`.
    pub bias: Vec<f64>,
    pub effect_size: Option<f64>,
    /// Average over runs of the per-run RMSE.
    pub rmse: f64,
    /// Average 95% interval half-size over non-anchor conditions and
    /// bootstrapped runs.
    pub mean_ci_size: Option<f64>,
    pub ci_size_per_condition: Option<Vec<f64>>,
    /// Fraction of (run, non-anchor condition) intervals containing the
    /// true score.
    pub ci_coverage: Option<f64>,
    pub runs_completed: usize,
    pub runs_failed: usize,
    pub ci_runs_completed: usize,
}

struct RunOutcome {
    jod: Vec<f64>,
    ci: Option<(Vec<f64>, Vec<f64>)>,
}

fn simulate_run(config: &SimConfig, opts: &ScaleOptions, run: usize) -> Result<RunOutcome> {
    let observers = simulate_experiment(config, run as u64)?;
    let n = config.q_true.len();
    let scale = |pooled: &CountMatrix| {
        let counts = if config.drop_unanimous {
            drop_unanimous_pairs(pooled)
        } else {
            pooled.clone()
        };
        scale_mle(&counts, opts).map(|r| r.jod)
    };
    let jod = scale(&pool_matrices(n, &observers)?)?;

    let ci = if run < config.ci_runs && config.ci_bootstrap > 0 && observers.len() >= 2 {
        // a failed bootstrap only loses the interval, not the run
        bootstrap_with(
            &observers,
            config.ci_bootstrap,
            child_seed(config.seed, run as u64),
            scale,
        )
        .ok()
        .map(|b| (b.ci_low, b.ci_high))
    } else {
        None
    };
    Ok(RunOutcome { jod, ci })
}

/// Simulates and scales `config.runs` experiments and aggregates the
/// estimation metrics. Runs that cannot be scaled are excluded and counted.
pub fn run_monte_carlo(config: &SimConfig) -> Result<SimMetrics> {
    config.validate()?;
    let opts = config.scale_options();
    let outcomes: Vec<Result<RunOutcome>> = (0..config.runs)
        .into_par_iter()
        .map(|run| simulate_run(config, &opts, run))
        .collect();

    let mut runs_failed = 0;
    let mut scores = Vec::with_capacity(config.runs);
    let mut intervals = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                scores.push(o.jod);
                intervals.extend(o.ci);
            }
            Err(Error::Disconnected { .. }) | Err(Error::NoComparisons) => runs_failed += 1,
            Err(e) => return Err(e),
        }
    }
    if scores.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "all {runs_failed} simulated runs failed to scale"
        )));
    }

    let truth = &config.q_true;
    let n = truth.len();
    let mean_jod = column_mean(&scores);
    let bias: Vec<f64> = mean_jod.iter().zip(truth).map(|(m, t)| m - t).collect();
    let rmse_mean = scores.iter().map(|s| rmse(s, truth)).sum::<f64>() / scores.len() as f64;
    let std_jod = (scores.len() >= 2).then(|| column_std(&scores, &mean_jod));
    let effect = effect_size(&scores).ok();

    let (mean_ci_size, ci_size_per_condition, ci_coverage) = if intervals.is_empty() {
        (None, None, None)
    } else {
        let k = intervals.len() as f64;
        let per_condition: Vec<f64> = (0..n)
            .map(|i| intervals.iter().map(|(lo, hi)| 0.5 * (hi[i] - lo[i])).sum::<f64>() / k)
            .collect();
        let overall = per_condition[1..].iter().sum::<f64>() / (n - 1) as f64;
        let covered = intervals
            .iter()
            .flat_map(|(lo, hi)| (1..n).map(move |i| lo[i] <= truth[i] && truth[i] <= hi[i]))
            .filter(|&c| c)
            .count();
        let coverage = covered as f64 / (k * (n - 1) as f64);
        (Some(overall), Some(per_condition), Some(coverage))
    };

    Ok(SimMetrics {
        mean_jod,
        std_jod,
        bias,
        effect_size: effect,
        rmse: rmse_mean,
        mean_ci_size,
        ci_size_per_condition,
        ci_coverage,
        runs_completed: scores.len(),
        runs_failed,
        ci_runs_completed: intervals.len(),
    })
}
