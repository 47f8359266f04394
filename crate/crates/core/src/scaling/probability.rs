use nalgebra::DMatrix;

use super::{CountMatrix, ScaleOptions};
use crate::error::{Error, Result};
use crate::normal;

/// `p̂_ij = c_ij / (c_ij + c_ji)`; `None` on the diagonal and for pairs never
/// compared.
pub fn empirical_probabilities(counts: &CountMatrix) -> DMatrix<Option<f64>> {
    let n = counts.dim();
    DMatrix::from_fn(n, n, |i, j| {
        let trials = counts.trials(i, j);
        (i != j && trials > 0).then(|| counts.wins(i, j) as f64 / trials as f64)
    })
}

/// Maps a preference probability to a signed JOD distance, `σ_ij Φ⁻¹(p)`.
pub fn prob_to_jod(p: f64, sigma: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ProbabilityDomain(p));
    }
    Ok(sigma * normal::quantile(p))
}

/// Matrix of distances `d_ij = σ_ij Φ⁻¹(p̂_ij)`.
///
/// Unanimous pairs come out as `Some(±∞)`; pairs never compared as `None`.
pub fn distance_matrix(counts: &CountMatrix, opts: &ScaleOptions) -> DMatrix<Option<f64>> {
    empirical_probabilities(counts).map(|p| {
        p.map(|p| match p {
            p if p >= 1.0 => f64::INFINITY,
            p if p <= 0.0 => f64::NEG_INFINITY,
            p => opts.sigma * normal::quantile(p),
        })
    })
}
