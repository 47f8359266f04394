//! Finite-distance prior.
//!
//! The prior is the likelihood of observing a distance `z` between two
//! randomly drawn conditions, estimated from the data itself: the average of
//! the pair likelihood curves of all compared pairs. Unanimous pairs have
//! likelihood curves that never decay, so their counts are first moved to
//! the nearest non-unanimous outcome.

use super::likelihood::{pair_log_likelihood_unchecked, pair_score};
use super::{CountMatrix, ScaleOptions};
use crate::error::{Error, Result};

/// Nearest non-unanimous count: `n - 1` for `c = n`, `1` for `c = 0`.
///
/// A single trial has no non-unanimous neighbour and is returned as is.
pub fn desaturate_counts(wins: u32, trials: u32) -> u32 {
    match (wins, trials) {
        (_, 0 | 1) => wins,
        (c, n) if c >= n => n - 1,
        (0, _) => 1,
        (c, _) => c,
    }
}

/// Mixture density `l(z)` built from a count matrix.
///
/// A randomly drawn pair is equally likely to be presented in either order,
/// so every compared pair contributes both orientations, `(c*, n)` and
/// `(n - c*, n)`. This makes `l` symmetric and independent of how
/// conditions are indexed.
#[derive(Clone, Debug)]
pub struct DistancePrior {
    components: Vec<(u32, u32)>,
    sigma: f64,
}

impl DistancePrior {
    pub fn new(counts: &CountMatrix, sigma: f64) -> Result<Self> {
        let mut components = Vec::new();
        for (i, j) in counts.compared_pairs() {
            let n = counts.trials(i, j);
            let c = desaturate_counts(counts.wins(i, j), n);
            components.push((c, n));
            components.push((n - c, n));
        }
        if components.is_empty() {
            return Err(Error::NoComparisons);
        }
        Ok(DistancePrior { components, sigma })
    }

    pub fn density(&self, z: f64) -> f64 {
        let sum: f64 = self
            .components
            .iter()
            .map(|&(c, n)| pair_log_likelihood_unchecked(z, c, n, self.sigma).exp())
            .sum();
        sum / self.components.len() as f64
    }

    /// `(l(z), l'(z))`.
    pub fn density_and_derivative(&self, z: f64) -> (f64, f64) {
        let mut value = 0.0;
        let mut slope = 0.0;
        for &(c, n) in &self.components {
            let lik = pair_log_likelihood_unchecked(z, c, n, self.sigma).exp();
            value += lik;
            if lik > 0.0 {
                slope += lik * pair_score(z, c, n - c, self.sigma);
            }
        }
        let k = self.components.len() as f64;
        (value / k, slope / k)
    }
}

/// Evaluates the prior density `l(z)` for the counts in `counts`.
pub fn prior_density(z: f64, counts: &CountMatrix, opts: &ScaleOptions) -> Result<f64> {
    Ok(DistancePrior::new(counts, opts.sigma)?.density(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn argmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
        let mut best = (lo, f(lo));
        let mut z = lo;
        while z <= hi {
            let v = f(z);
            if v > best.1 {
                best = (z, v);
            }
            z += step;
        }
        best.0
    }

    #[test]
    fn desaturation_rule() {
        assert_eq!(desaturate_counts(30, 30), 29);
        assert_eq!(desaturate_counts(3, 30), 3);
        assert_eq!(desaturate_counts(0, 30), 1);
        assert_eq!(desaturate_counts(1, 1), 1);
        assert_eq!(desaturate_counts(0, 1), 0);
        assert_eq!(desaturate_counts(2, 2), 1);
    }

    #[test]
    fn empty_matrix_has_no_prior() {
        assert!(matches!(
            prior_density(0.0, &CountMatrix::zeros(3), &ScaleOptions::default()),
            Err(Error::NoComparisons)
        ));
    }

    #[test]
    fn balanced_pair_peaks_at_zero() {
        let m = CountMatrix::from_rows(&[[0u32, 15], [15, 0]]).unwrap();
        let prior = DistancePrior::new(&m, 1.4826).unwrap();
        let z = argmax(|z| prior.density(z), -5.0, 5.0, 0.001);
        assert_abs_diff_eq!(z, 0.0, epsilon = 1e-3);
    }

    #[test]
    fn unanimous_pair_has_a_finite_mode_and_decays() {
        let m = CountMatrix::from_rows(&[[0u32, 0], [30, 0]]).unwrap();
        let prior = DistancePrior::new(&m, 1.4826).unwrap();
        let z = argmax(|z| prior.density(z), 0.0, 20.0, 0.001);
        assert!(z > 2.0 && z < 4.0, "mode at {z}");
        assert!(prior.density(15.0) < 1e-6);
        assert!(prior.density(15.0) > 0.0);
        assert_eq!(prior.density(1e4), 0.0);
    }

    #[test]
    fn toy_matrix_mode_is_about_two_and_a_half_jod() {
        let m = CountMatrix::from_rows(&[[0u32, 3, 0], [27, 0, 7], [30, 23, 0]]).unwrap();
        let prior = DistancePrior::new(&m, 1.4826).unwrap();
        let z = argmax(|z| prior.density(z), 0.0, 8.0, 0.001);
        assert!((z - 2.5).abs() <= 0.5, "mode at {z}");
        assert_abs_diff_eq!(prior.density(z), prior.density(-z), epsilon = 1e-15);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let m = CountMatrix::from_rows(&[[0u32, 3, 0], [27, 0, 7], [30, 23, 0]]).unwrap();
        let prior = DistancePrior::new(&m, 1.4826).unwrap();
        for z in [-4.0, -1.3, 0.0, 0.7, 2.5, 6.0] {
            let h = 1e-5;
            let fd = (prior.density(z + h) - prior.density(z - h)) / (2.0 * h);
            let (_, d) = prior.density_and_derivative(z);
            assert_abs_diff_eq!(d, fd, epsilon = 1e-8);
        }
    }
}
