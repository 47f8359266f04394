//! Observer screening by leave-one-out likelihood.
//!
//! Each observer is held out in turn, the remaining observers are scaled,
//! and the held-out answers are scored under the resulting preference
//! probabilities. Observers whose log-likelihood falls far below the first
//! quartile are flagged for inspection. Flags are advisory; nothing is
//! removed automatically.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::pool_matrices;
use crate::scaling::{pair_log_likelihood, scale_mle, CountMatrix, ScaleOptions};
use crate::stats::percentile;

/// Scores at or above this many interquartile ranges below Q1 are flagged.
pub const OUTLIER_THRESHOLD: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObserverScore {
    pub log_likelihood: f64,
    pub iqr_score: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutlierReport {
    /// One entry per observer, in input order.
    pub observers: Vec<ObserverScore>,
    pub q1: f64,
    pub q3: f64,
    pub threshold: f64,
}

impl OutlierReport {
    /// Observer indices ordered by descending score, ties by index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.observers.len()).collect();
        idx.sort_by(|&a, &b| {
            self.observers[b]
                .iqr_score
                .total_cmp(&self.observers[a].iqr_score)
                .then(a.cmp(&b))
        });
        idx
    }
}

fn check_dims(per_observer: &[CountMatrix]) -> Result<usize> {
    let n = per_observer.first().map_or(0, CountMatrix::dim);
    if let Some(bad) = per_observer.iter().find(|m| m.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.dim(),
        });
    }
    Ok(n)
}

/// Log-likelihood of one observer's answers under the scale fitted to
/// everybody else.
pub fn observer_loo_loglik(
    per_observer: &[CountMatrix],
    observer: usize,
    opts: &ScaleOptions,
) -> Result<f64> {
    if per_observer.len() < 3 {
        return Err(Error::TooFewObservers {
            required: 3,
            found: per_observer.len(),
        });
    }
    if observer >= per_observer.len() {
        return Err(Error::InvalidParameter(format!(
            "observer index {observer} out of range"
        )));
    }
    let n = check_dims(per_observer)?;
    let rest = pool_matrices(
        n,
        per_observer
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != observer)
            .map(|(_, m)| m),
    )?;
    let jod = scale_mle(&rest, opts)?.jod;

    let held_out = &per_observer[observer];
    held_out
        .compared_pairs()
        .map(|(i, j)| {
            pair_log_likelihood(
                jod[i] - jod[j],
                held_out.wins(i, j),
                held_out.trials(i, j),
                opts.sigma,
            )
        })
        .sum()
}

/// Leave-one-out log-likelihoods turned into interquartile-range scores:
/// `max(0, (Q1 - L) / IQR)`, or 0 for everybody when the IQR vanishes.
pub fn outlier_scores(per_observer: &[CountMatrix], opts: &ScaleOptions) -> Result<OutlierReport> {
    if per_observer.len() < 4 {
        return Err(Error::TooFewObservers {
            required: 4,
            found: per_observer.len(),
        });
    }
    let log_likelihoods = (0..per_observer.len())
        .into_par_iter()
        .map(|k| observer_loo_loglik(per_observer, k, opts))
        .collect::<Result<Vec<f64>>>()?;

    let mut sorted = log_likelihoods.clone();
    sorted.sort_by(f64::total_cmp);
    let q1 = percentile(&sorted, 25.0);
    let q3 = percentile(&sorted, 75.0);
    let iqr = q3 - q1;

    let observers = log_likelihoods
        .into_iter()
        .map(|l| {
            let iqr_score = if iqr > 0.0 {
                ((q1 - l) / iqr).max(0.0)
            } else {
                0.0
            };
            ObserverScore {
                log_likelihood: l,
                iqr_score,
                flagged: iqr_score >= OUTLIER_THRESHOLD,
            }
        })
        .collect();

    Ok(OutlierReport {
        observers,
        q1,
        q3,
        threshold: OUTLIER_THRESHOLD,
    })
}

/// Per-condition selection rates of one observer next to those of everyone
/// else.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreferenceProfile {
    /// `Σ_j c_ij / Σ_j n_ij` for the chosen observer; `None` when the
    /// condition was never shown to them.
    pub observer: Vec<Option<f64>>,
    /// For each condition, the same statistic for every other observer who
    /// saw it.
    pub population: Vec<Vec<f64>>,
}

fn selection_rates(m: &CountMatrix) -> Vec<Option<f64>> {
    (0..m.dim())
        .map(|i| {
            let (wins, shown) = (0..m.dim())
                .filter(|&j| j != i)
                .fold((0u64, 0u64), |(w, s), j| {
                    (w + m.wins(i, j) as u64, s + m.trials(i, j) as u64)
                });
            (shown > 0).then(|| wins as f64 / shown as f64)
        })
        .collect()
}

/// Raw selection probabilities; no scaling is involved.
pub fn observer_preference_profile(
    per_observer: &[CountMatrix],
    observer: usize,
) -> Result<PreferenceProfile> {
    if observer >= per_observer.len() {
        return Err(Error::InvalidParameter(format!(
            "observer index {observer} out of range"
        )));
    }
    let n = check_dims(per_observer)?;
    let mut population = vec![Vec::new(); n];
    for (k, m) in per_observer.iter().enumerate() {
        if k == observer {
            continue;
        }
        for (i, rate) in selection_rates(m).into_iter().enumerate() {
            if let Some(r) = rate {
                population[i].push(r);
            }
        }
    }
    Ok(PreferenceProfile {
        observer: selection_rates(&per_observer[observer]),
        population,
    })
}
