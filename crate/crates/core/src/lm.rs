//! Small dense Levenberg-Marquardt solver used by the curve fits.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmOptions {
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the cost by less than this fraction.
    pub relative_tolerance: f64,
    /// Largest allowed cosine between the residual and any Jacobian column at a
    /// converged point.
    pub gradient_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            relative_tolerance: 1e-10,
            gradient_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub params: DVector<f64>,
    /// Half the sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Cost below which the residual is numerically zero.
const ZERO_COST: f64 = 1e-28;

/// Minimizes `½‖r(x)‖²`. `residuals` returns `None` where the model is not
/// evaluable (overflow, singular sub-problem); such trial points are rejected.
pub(crate) fn minimize<R, J>(x0: DVector<f64>, residuals: R, jacobian: J, options: LmOptions) -> Option<LmOutcome>
where
    R: Fn(&DVector<f64>) -> Option<DVector<f64>>,
    J: Fn(&DVector<f64>) -> Option<DMatrix<f64>>,
{
    let n = x0.len();
    let mut x = x0;
    let mut r = residuals(&x)?;
    let mut cost = 0.5 * r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = cost <= ZERO_COST;

    while !converged && iterations < options.max_iterations {
        iterations += 1;
        let jac = jacobian(&x)?;
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;

        if gradient_cosine(&jtj, &grad, r.norm()) <= options.gradient_tolerance {
            converged = true;
            break;
        }

        let mut accepted = false;
        let mut stalled = false;
        while lambda < 1e16 {
            let mut damped = jtj.clone();
            for i in 0..n {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let candidate = &x + step;
            match residuals(&candidate) {
                Some(r_new) if r_new.iter().all(|v| v.is_finite()) => {
                    let cost_new = 0.5 * r_new.norm_squared();
                    if cost_new < cost {
                        let relative = (cost - cost_new) / cost;
                        x = candidate;
                        r = r_new;
                        cost = cost_new;
                        lambda = (lambda / 10.0).max(1e-15);
                        accepted = true;
                        if cost <= ZERO_COST {
                            converged = true;
                        } else if relative < options.relative_tolerance {
                            converged = stationary(&jacobian, &x, &r, options.gradient_tolerance.sqrt())?;
                            stalled = !converged;
                        }
                        break;
                    }
                    lambda *= 10.0;
                }
                _ => lambda *= 10.0,
            }
        }
        if !accepted {
            // No descent step exists at machine precision.
            converged = stationary(&jacobian, &x, &r, options.gradient_tolerance.sqrt())?;
            break;
        }
        if stalled {
            break;
        }
    }

    Some(LmOutcome {
        params: x,
        cost,
        iterations,
        converged,
    })
}

fn stationary<J>(jacobian: &J, x: &DVector<f64>, r: &DVector<f64>, tolerance: f64) -> Option<bool>
where
    J: Fn(&DVector<f64>) -> Option<DMatrix<f64>>,
{
    let jac = jacobian(x)?;
    let jtj = jac.transpose() * &jac;
    let grad = jac.transpose() * r;
    Some(gradient_cosine(&jtj, &grad, r.norm()) <= tolerance)
}

/// Scale-free gradient measure: max over parameters of |Jᵢ·r| / (‖Jᵢ‖‖r‖).
fn gradient_cosine(jtj: &DMatrix<f64>, grad: &DVector<f64>, r_norm: f64) -> f64 {
    if r_norm <= ZERO_COST.sqrt() {
        return 0.0;
    }
    (0..grad.len())
        .map(|i| {
            let col = jtj[(i, i)].sqrt();
            if col == 0.0 {
                0.0
            } else {
                grad[i].abs() / (col * r_norm)
            }
        })
        .fold(0.0, f64::max)
}

/// Central-difference Jacobian of a residual function.
pub(crate) fn numeric_jacobian<R>(x: &DVector<f64>, residuals: &R) -> Option<DMatrix<f64>>
where
    R: Fn(&DVector<f64>) -> Option<DVector<f64>>,
{
    let r0 = residuals(x)?;
    let mut jac = DMatrix::zeros(r0.len(), x.len());
    for j in 0..x.len() {
        let h = 1e-7 * x[j].abs().max(1e-3);
        let mut up = x.clone();
        let mut down = x.clone();
        up[j] += h;
        down[j] -= h;
        let diff = (residuals(&up)? - residuals(&down)?) / (2.0 * h);
        jac.set_column(j, &diff);
    }
    Some(jac)
}
