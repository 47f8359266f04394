use nalgebra::{DMatrix, DVector};

use super::{CountMatrix, ScaleResult};
use crate::error::{Error, Result};

/// Least-squares fit of scores to a distance matrix with `q̂₁ = 0`.
///
/// Minimises `Σ ((q̂_i - q̂_j) - d_ij)²` over every present off-diagonal
/// entry. Infinite distances make the problem unbounded and are rejected.
pub fn scale_least_squares(distances: &DMatrix<Option<f64>>) -> Result<ScaleResult> {
    let n = distances.nrows();
    if distances.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: distances.ncols(),
        });
    }

    let mut graph = CountMatrix::zeros(n);
    let mut laplacian = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let Some(d) = distances[(i, j)].filter(|_| i != j) else {
                continue;
            };
            if !d.is_finite() {
                return Err(Error::UnanimousDistances);
            }
            graph.set(i, j, 1);
            laplacian[(i, i)] += 1.0;
            laplacian[(j, j)] += 1.0;
            laplacian[(i, j)] -= 1.0;
            laplacian[(j, i)] -= 1.0;
            rhs[i] += d;
            rhs[j] -= d;
        }
    }
    graph.ensure_connected()?;

    let mut jod = vec![0.0; n];
    if n > 1 {
        let reduced = laplacian.view((1, 1), (n - 1, n - 1)).into_owned();
        let b = rhs.rows(1, n - 1).into_owned();
        let solution = reduced
            .cholesky()
            .map(|c| c.solve(&b))
            .ok_or_else(|| Error::InvalidParameter("singular least-squares system".into()))?;
        jod[1..].copy_from_slice(solution.as_slice());
    }

    let mut sse = 0.0;
    for i in 0..n {
        for j in 0..n {
            if let Some(d) = distances[(i, j)].filter(|_| i != j) {
                sse += (jod[i] - jod[j] - d).powi(2);
            }
        }
    }

    Ok(ScaleResult {
        jod,
        objective: -sse,
        converged: true,
        iterations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::{distance_matrix, ScaleOptions};
    use approx::assert_abs_diff_eq;

    fn antisymmetric(n: usize, entries: &[(usize, usize, f64)]) -> DMatrix<Option<f64>> {
        let mut d = DMatrix::from_element(n, n, None);
        for &(i, j, v) in entries {
            d[(i, j)] = Some(v);
            d[(j, i)] = Some(-v);
        }
        d
    }

    #[test]
    fn single_distance_is_fit_exactly() {
        let r = scale_least_squares(&antisymmetric(2, &[(1, 0, 1.5)])).unwrap();
        assert_eq!(r.jod[0], 0.0);
        assert_abs_diff_eq!(r.jod[1], 1.5, epsilon = 1e-12);
    }

    #[test]
    fn consistent_distances_have_zero_residual() {
        let d = antisymmetric(3, &[(1, 0, 1.0), (2, 1, 1.0), (2, 0, 2.0)]);
        let r = scale_least_squares(&d).unwrap();
        assert_abs_diff_eq!(r.jod[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.jod[2], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.objective, 0.0, epsilon = 1e-20);
    }

    #[test]
    fn unanimous_answers_are_rejected() {
        let c = CountMatrix::from_rows(&[[0u32, 3, 0], [27, 0, 7], [30, 23, 0]]).unwrap();
        let d = distance_matrix(&c, &ScaleOptions::default());
        assert!(matches!(
            scale_least_squares(&d),
            Err(Error::UnanimousDistances)
        ));
    }

    #[test]
    fn disconnected_graph_names_components() {
        let d = antisymmetric(4, &[(1, 0, 1.0), (3, 2, 1.0)]);
        match scale_least_squares(&d) {
            Err(Error::Disconnected { components }) => {
                assert_eq!(components, vec![vec![0, 1], vec![2, 3]]);
            }
            other => panic!("expected disconnected error, got {other:?}"),
        }
    }
}
