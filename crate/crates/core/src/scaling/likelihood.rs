//! Binomial likelihood of the observed counts given score differences.


use super::{CountMatrix, ScaleOptions};
use crate::error::{Error, Result};
use crate::normal;

/// Log-likelihood that `i` won `wins` of `trials` comparisons against `j`
/// when `q̂_i - q̂_j = delta`:
///
/// `ln C(n, c) + c ln Φ(δ/σ) + (n - c) ln(1 - Φ(δ/σ))`.
pub fn pair_log_likelihood(delta: f64, wins: u32, trials: u32, sigma: f64) -> Result<f64> {
    if wins > trials {
        return Err(Error::CountDomain { wins, trials });
    }
    Ok(pair_log_likelihood_unchecked(delta, wins, trials, sigma))
}

pub(crate) fn pair_log_likelihood_unchecked(delta: f64, wins: u32, trials: u32, sigma: f64) -> f64 {
    let x = delta / sigma;
    let losses = trials - wins;
    let mut ll = ln_binomial(trials, wins);
    // skip zero-count terms so that ±∞ deltas give 0·(-∞) = 0, not NaN
    if wins > 0 {
        ll += wins as f64 * normal::log_cdf(x);
    }
    if losses > 0 {
        ll += losses as f64 * normal::log_sf(x);
    }
    ll
}

/// `ln C(n, k)`.
pub(crate) fn ln_binomial(n: u32, k: u32) -> f64 {
    if k == 0 || k == n {
        return 0.0;
    }
    let (n, k) = (n as f64, k as f64);
    libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)
}

/// `∂/∂δ` of [`pair_log_likelihood`].
pub(crate) fn pair_score(delta: f64, wins: u32, losses: u32, sigma: f64) -> f64 {
    let x = delta / sigma;
    let mut g = 0.0;
    if wins > 0 {
        g += wins as f64 * normal::inverse_mills(x);
    }
    if losses > 0 {
        g -= losses as f64 * normal::inverse_mills(-x);
    }
    g / sigma
}

/// Sum of pair log-likelihoods over every compared unordered pair.
pub fn total_log_likelihood(jod: &[f64], counts: &CountMatrix, opts: &ScaleOptions) -> f64 {
    debug_assert_eq!(jod.len(), counts.dim());
    counts
        .compared_pairs()
        .map(|(i, j)| {
            pair_log_likelihood_unchecked(
                jod[i] - jod[j],
                counts.wins(i, j),
                counts.trials(i, j),
                opts.sigma,
            )
        })
        .sum()
}

/// Gradient of [`total_log_likelihood`] with respect to every score,
/// including the anchored first one.
pub fn log_likelihood_gradient(jod: &[f64], counts: &CountMatrix, opts: &ScaleOptions) -> Vec<f64> {
    let mut grad = vec![0.0; counts.dim()];
    for (i, j) in counts.compared_pairs() {
        let g = pair_score(jod[i] - jod[j], counts.wins(i, j), counts.wins(j, i), opts.sigma);
        grad[i] += g;
        grad[j] -= g;
    }
    grad
}
