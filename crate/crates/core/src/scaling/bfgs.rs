//! Dense BFGS minimiser with a backtracking Armijo line search.

use nalgebra::{DMatrix, DVector};

pub(crate) struct Settings {
    pub tolerance: f64,
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    /// Longest step (∞-norm) the line search starts from.
    pub max_step: f64,
}

pub(crate) struct Outcome {
    pub x: DVector<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;

/// Minimises `f`, which returns the value and gradient at a point.
pub(crate) fn minimize<F>(f: F, x0: DVector<f64>, settings: &Settings) -> Outcome
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let dim = x0.len();
    let mut x = x0;
    let (mut value, mut grad) = f(&x);
    let mut h_inv = DMatrix::<f64>::identity(dim, dim);
    let mut fresh_hessian = true;

    if dim == 0 {
        return Outcome {
            x,
            value,
            converged: true,
            iterations: 0,
        };
    }

    for iteration in 0..settings.max_iterations {
        if grad.amax() < settings.gradient_tolerance {
            return Outcome {
                x,
                value,
                converged: true,
                iterations: iteration,
            };
        }

        let mut direction = -(&h_inv * &grad);
        let mut slope = direction.dot(&grad);
        // negated so that a NaN slope also resets
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(slope < 0.0) {
            h_inv.fill_with_identity();
            fresh_hessian = true;
            direction = -grad.clone();
            slope = direction.dot(&grad);
        }
        let longest = direction.amax();
        if longest > settings.max_step {
            direction *= settings.max_step / longest;
            slope *= settings.max_step / longest;
        }

        let mut alpha = 1.0;
        let accepted = loop {
            let candidate = &x + alpha * &direction;
            let (v, g) = f(&candidate);
            if v.is_finite() && v <= value + ARMIJO * alpha * slope {
                break Some((candidate, v, g));
            }
            alpha *= 0.5;
            if alpha < MIN_STEP {
                break None;
            }
        };

        let Some((x_new, value_new, grad_new)) = accepted else {
            if fresh_hessian {
                // no descent possible along the gradient at this precision
                return Outcome {
                    x,
                    value,
                    converged: false,
                    iterations: iteration,
                };
            }
            h_inv.fill_with_identity();
            fresh_hessian = true;
            continue;
        };

        let s = &x_new - &x;
        let y = &grad_new - &grad;
        let change = (value - value_new).abs() / value.abs().max(value_new.abs()).max(1.0);

        x = x_new;
        value = value_new;
        grad = grad_new;

        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh_hessian {
                // scale the initial inverse Hessian to the observed curvature
                h_inv *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            h_inv += (rho * rho * yhy + rho) * (&s * s.transpose())
                - rho * (&hy * s.transpose() + &s * hy.transpose());
            fresh_hessian = false;
        }

        if change < settings.tolerance {
            return Outcome {
                x,
                value,
                converged: true,
                iterations: iteration + 1,
            };
        }
    }

    let converged = grad.amax() < settings.gradient_tolerance;
    Outcome {
        x,
        value,
        converged,
        iterations: settings.max_iterations,
    }
}
