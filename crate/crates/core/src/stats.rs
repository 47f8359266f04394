//! Bootstrap confidence intervals and pairwise significance tests.
//!
//! Analytical confidence intervals are not available for Case V scaling, so
//! uncertainty is estimated by resampling observers with replacement,
//! rescaling every pseudo-sample, and reading percentiles and covariances
//! off the resulting score vectors.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::pool_matrices;
use crate::normal;
use crate::rng::substream;
use crate::scaling::{scale_mle, CountMatrix, ScaleOptions};

pub const DEFAULT_BOOTSTRAP_SAMPLES: usize = 500;

/// Lower and upper percentiles of a 95% interval.
pub const CI_PERCENTILES: (f64, f64) = (2.5, 97.5);

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapResult {
    /// One JOD vector per pseudo-sample.
    pub samples: Vec<Vec<f64>>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    /// Covariance of the scores across pseudo-samples, `1/(B-1)` normalised.
    pub covariance: DMatrix<f64>,
    pub mean_jod: Vec<f64>,
    /// Pseudo-samples discarded because they could not be scaled.
    pub redraws: usize,
}

impl BootstrapResult {
    pub fn from_samples(samples: Vec<Vec<f64>>, redraws: usize) -> Result<Self> {
        let b = samples.len();
        let n = samples.first().map_or(0, Vec::len);
        if b == 0 {
            return Err(Error::InvalidParameter("bootstrap needs at least one sample".into()));
        }
        if let Some(bad) = samples.iter().find(|s| s.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }

        let mean_jod: Vec<f64> = (0..n)
            .map(|i| samples.iter().map(|s| s[i]).sum::<f64>() / b as f64)
            .collect();
        let mut covariance = DMatrix::zeros(n, n);
        if b > 1 {
            for s in &samples {
                for i in 0..n {
                    let di = s[i] - mean_jod[i];
                    for j in i..n {
                        covariance[(i, j)] += di * (s[j] - mean_jod[j]);
                    }
                }
            }
            covariance /= (b - 1) as f64;
            covariance.fill_lower_triangle_with_upper_triangle();
        }

        let (lo, hi) = CI_PERCENTILES;
        let mut ci_low = Vec::with_capacity(n);
        let mut ci_high = Vec::with_capacity(n);
        for i in 0..n {
            let mut column: Vec<f64> = samples.iter().map(|s| s[i]).collect();
            column.sort_by(f64::total_cmp);
            ci_low.push(percentile(&column, lo));
            ci_high.push(percentile(&column, hi));
        }

        Ok(BootstrapResult {
            samples,
            ci_low,
            ci_high,
            covariance,
            mean_jod,
            redraws,
        })
    }

    /// Number of pseudo-samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Percentile `p` (0 to 100) of sorted data, interpolating linearly between
/// order statistics (`h = (N - 1) p / 100`).
///
/// # Panics
///
/// Panics on empty input.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let h = (sorted.len() - 1) as f64 * (p / 100.0).clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Observer bootstrap of [`scale_mle`].
///
/// Each pseudo-sample draws as many observers as there are, with
/// replacement, pools their matrices and scales the result. Pseudo-samples
/// whose pooled comparison graph is disconnected are redrawn; more than
/// `10 * samples` redraws in total is an error.
pub fn bootstrap_scale(
    per_observer: &[CountMatrix],
    samples: usize,
    opts: &ScaleOptions,
    seed: u64,
) -> Result<BootstrapResult> {
    opts.validate()?;
    bootstrap_with(per_observer, samples, seed, |pooled| {
        scale_mle(pooled, opts).map(|r| r.jod)
    })
}

/// Observer bootstrap with a caller-supplied scaling of the pooled matrix.
pub fn bootstrap_with<F>(
    per_observer: &[CountMatrix],
    samples: usize,
    seed: u64,
    scale: F,
) -> Result<BootstrapResult>
where
    F: Fn(&CountMatrix) -> Result<Vec<f64>> + Sync,
{
    let m = per_observer.len();
    if m < 2 {
        return Err(Error::TooFewObservers {
            required: 2,
            found: m,
        });
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("bootstrap sample count must be at least 1".into()));
    }
    let n = per_observer[0].dim();
    if let Some(bad) = per_observer.iter().find(|c| c.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.dim(),
        });
    }
    let cap = 10 * samples;

    let drawn: Vec<Result<(Vec<f64>, usize)>> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, k as u64);
            let mut redraws = 0;
            loop {
                let pooled = pool_matrices(
                    n,
                    (0..m).map(|_| &per_observer[rng.random_range(0..m)]),
                )?;
                match scale(&pooled) {
                    Ok(jod) => return Ok((jod, redraws)),
                    Err(_) if redraws < cap => redraws += 1,
                    Err(_) => return Err(Error::BootstrapExhausted { redraws }),
                }
            }
        })
        .collect();

    let mut out = Vec::with_capacity(samples);
    let mut redraws = 0;
    for d in drawn {
        let (jod, r) = d?;
        redraws += r;
        out.push(jod);
    }
    if redraws > cap {
        return Err(Error::BootstrapExhausted { redraws });
    }
    BootstrapResult::from_samples(out, redraws)
}

/// 95% percentile interval per condition.
pub fn confidence_intervals(result: &BootstrapResult) -> Result<Vec<(f64, f64)>> {
    if result.len() < 2 {
        return Err(Error::InvalidParameter(
            "confidence intervals need at least two bootstrap samples".into(),
        ));
    }
    Ok(result
        .ci_low
        .iter()
        .zip(&result.ci_high)
        .map(|(&l, &h)| (l, h))
        .collect())
}

/// Variance of `q̂_i - q̂_j`: `Σ_ii + Σ_jj - 2 Σ_ij`, floored at 0.
pub fn difference_variance(covariance: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    if i == j {
        return 0.0;
    }
    let v = covariance[(i, i)] + covariance[(j, j)] - 2.0 * covariance[(i, j)];
    v.max(0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignificanceReport {
    pub alpha: f64,
    /// `(q̂_i - q̂_j) / √v_ij`; antisymmetric.
    pub z_scores: DMatrix<f64>,
    /// Two-tailed p-values; symmetric with ones on the diagonal.
    pub p_values: DMatrix<f64>,
    pub significant: DMatrix<bool>,
    /// Pairs with zero difference variance but unequal scores. These are
    /// reported as significant with infinite `z`.
    pub degenerate: DMatrix<bool>,
}

/// Two-tailed z-tests of `H0: q_i = q_j` for every pair of conditions.
///
/// No multiple-comparison correction is applied.
pub fn pairwise_significance(
    jod: &[f64],
    covariance: &DMatrix<f64>,
    alpha: f64,
) -> Result<SignificanceReport> {
    let n = jod.len();
    if covariance.nrows() != n || covariance.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: covariance.nrows(),
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }

    let mut z_scores = DMatrix::zeros(n, n);
    let mut p_values = DMatrix::from_element(n, n, 1.0);
    let mut significant = DMatrix::from_element(n, n, false);
    let mut degenerate = DMatrix::from_element(n, n, false);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let diff = jod[i] - jod[j];
            let v = difference_variance(covariance, i, j);
            let (z, p) = if v > 0.0 {
                let z = diff / v.sqrt();
                (z, 2.0 * normal::sf(z.abs()))
            } else if diff == 0.0 {
                (0.0, 1.0)
            } else {
                degenerate[(i, j)] = true;
                (diff.signum() * f64::INFINITY, 0.0)
            };
            z_scores[(i, j)] = z;
            p_values[(i, j)] = p;
            significant[(i, j)] = p < alpha;
        }
    }

    Ok(SignificanceReport {
        alpha,
        z_scores,
        p_values,
        significant,
        degenerate,
    })
}
