use nalgebra::DVector;

use super::bfgs::{self, Settings};
use super::likelihood::{pair_log_likelihood_unchecked, pair_score};
use super::{
    distance_matrix, scale_least_squares, CountMatrix, DistancePrior, ScaleOptions, ScaleResult,
};
use crate::error::Result;

/// Distances beyond this many `σ_ij` are clamped when seeding the optimiser.
const INIT_CLAMP: f64 = 4.0;

struct Pair {
    i: usize,
    j: usize,
    wins: u32,
    losses: u32,
}

struct Objective<'a> {
    pairs: Vec<Pair>,
    prior: Option<DistancePrior>,
    opts: &'a ScaleOptions,
}

impl<'a> Objective<'a> {
    fn new(counts: &CountMatrix, opts: &'a ScaleOptions) -> Result<Self> {
        let pairs = counts
            .compared_pairs()
            .map(|(i, j)| Pair {
                i,
                j,
                wins: counts.wins(i, j),
                losses: counts.wins(j, i),
            })
            .collect();
        let prior = if opts.use_prior {
            Some(DistancePrior::new(counts, opts.sigma)?)
        } else {
            None
        };
        Ok(Objective { pairs, prior, opts })
    }

    fn value(&self, jod: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|p| {
                let delta = jod[p.i] - jod[p.j];
                let mut v =
                    pair_log_likelihood_unchecked(delta, p.wins, p.wins + p.losses, self.opts.sigma);
                if let Some(prior) = &self.prior {
                    v += (prior.density(delta) + self.opts.gamma).ln();
                }
                v
            })
            .sum()
    }

    fn value_and_gradient(&self, jod: &[f64]) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = vec![0.0; jod.len()];
        for p in &self.pairs {
            let delta = jod[p.i] - jod[p.j];
            value += pair_log_likelihood_unchecked(delta, p.wins, p.wins + p.losses, self.opts.sigma);
            let mut g = pair_score(delta, p.wins, p.losses, self.opts.sigma);
            if let Some(prior) = &self.prior {
                let (l, dl) = prior.density_and_derivative(delta);
                let denom = l + self.opts.gamma;
                value += denom.ln();
                g += dl / denom;
            }
            grad[p.i] += g;
            grad[p.j] -= g;
        }
        (value, grad)
    }
}

/// Log of the maximised objective: the likelihood of all compared pairs,
/// multiplied by `l(q̂_i - q̂_j) + γ` for each pair when the prior is enabled.
pub fn log_posterior(jod: &[f64], counts: &CountMatrix, opts: &ScaleOptions) -> Result<f64> {
    Ok(Objective::new(counts, opts)?.value(jod))
}

/// Gradient of [`log_posterior`] for every score, including the anchor.
pub fn log_posterior_gradient(
    jod: &[f64],
    counts: &CountMatrix,
    opts: &ScaleOptions,
) -> Result<Vec<f64>> {
    Ok(Objective::new(counts, opts)?.value_and_gradient(jod).1)
}

/// Maximum-likelihood scaling with the first condition fixed at 0.
///
/// With `opts.use_prior` the likelihood is multiplied by the finite-distance
/// prior, which keeps scores finite when some pairs were answered
/// unanimously. Requires a connected comparison graph.
pub fn scale_mle(counts: &CountMatrix, opts: &ScaleOptions) -> Result<ScaleResult> {
    opts.validate()?;
    let n = counts.dim();
    counts.ensure_connected()?;
    if n < 2 {
        return Ok(ScaleResult {
            jod: vec![0.0; n],
            objective: 0.0,
            converged: true,
            iterations: 0,
        });
    }

    let objective = Objective::new(counts, opts)?;
    let start = initial_scores(counts, opts);

    let settings = Settings {
        tolerance: opts.tolerance,
        gradient_tolerance: opts.gradient_tolerance,
        max_iterations: opts.max_iterations,
        max_step: 2.0 * opts.sigma,
    };
    let negated = |free: &DVector<f64>| {
        let mut jod = Vec::with_capacity(n);
        jod.push(0.0);
        jod.extend_from_slice(free.as_slice());
        let (v, g) = objective.value_and_gradient(&jod);
        (-v, DVector::from_iterator(n - 1, g[1..].iter().map(|g| -g)))
    };
    let outcome = bfgs::minimize(negated, DVector::from_vec(start[1..].to_vec()), &settings);

    let mut jod = Vec::with_capacity(n);
    jod.push(0.0);
    jod.extend_from_slice(outcome.x.as_slice());
    Ok(ScaleResult {
        jod,
        objective: -outcome.value,
        converged: outcome.converged,
        iterations: outcome.iterations,
    })
}

/// Least-squares fit to the distance matrix with infinite entries clamped,
/// or zeros if that fails.
fn initial_scores(counts: &CountMatrix, opts: &ScaleOptions) -> Vec<f64> {
    let bound = INIT_CLAMP * opts.sigma;
    let clamped = distance_matrix(counts, opts).map(|d| d.map(|d| d.clamp(-bound, bound)));
    scale_least_squares(&clamped)
        .map(|r| r.jod)
        .unwrap_or_else(|_| vec![0.0; counts.dim()])
}
