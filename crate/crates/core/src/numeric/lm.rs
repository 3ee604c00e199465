//! Levenberg-Marquardt for small, dense nonlinear least-squares problems.

use alloc::vec::Vec;

use thiserror::Error;

/// A residual model with `P` free parameters.
pub trait LeastSquares<const P: usize> {
    fn residuals(&self, params: &[f64; P], out: &mut Vec<f64>);
    /// One row of partial derivatives per residual.
    fn jacobian(&self, params: &[f64; P], out: &mut Vec<[f64; P]>);
}

#[derive(Debug, Clone, Copy)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the cosine between the residual vector and
    /// each Jacobian column.
    pub gradient_tol: f64,
    pub step_tol: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self { max_iterations: 500, gradient_tol: 1e-8, step_tol: 1e-14 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmReport<const P: usize> {
    pub params: [f64; P],
    pub cost: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LmError {
    #[error("least-squares iteration did not converge in {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("non-finite residual or Jacobian encountered")]
    NonFinite,
}

fn cost(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
fn solve<const P: usize>(mut a: [[f64; P]; P], mut b: [f64; P]) -> Option<[f64; P]> {
    for col in 0..P {
        let pivot = (col..P).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col];
        for row in col + 1..P {
            let m = a[row][col] / pivot_row[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= m * p;
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = [0.0; P];
    for row in (0..P).rev() {
        let mut s = b[row];
        for k in row + 1..P {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

pub fn minimize<const P: usize, M: LeastSquares<P>>(
    model: &M,
    start: [f64; P],
    config: LmConfig,
) -> Result<LmReport<P>, LmError> {
    let mut params = start;
    let mut r = Vec::new();
    let mut jac = Vec::new();
    model.residuals(&params, &mut r);
    let mut current = cost(&r);
    if !current.is_finite() {
        return Err(LmError::NonFinite);
    }
    let mut lambda = 1e-3;
    let mut trial_r = Vec::new();

    for iteration in 0..config.max_iterations {
        model.jacobian(&params, &mut jac);
        let mut jtj = [[0.0; P]; P];
        let mut grad = [0.0; P];
        for (row, &ri) in jac.iter().zip(&r) {
            for i in 0..P {
                grad[i] += row[i] * ri;
                for j in 0..P {
                    jtj[i][j] += row[i] * row[j];
                }
            }
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(LmError::NonFinite);
        }
        let r_norm = libm::sqrt(2.0 * current);
        let converged = r_norm < 1e-300
            || (0..P).all(|i| {
                let col_norm = libm::sqrt(jtj[i][i]);
                col_norm == 0.0 || grad[i].abs() <= config.gradient_tol * col_norm * r_norm
            });
        if converged {
            return Ok(LmReport { params, cost: current, iterations: iteration });
        }

        let mut accepted = false;
        for _ in 0..60 {
            let mut damped = jtj;
            for i in 0..P {
                damped[i][i] += lambda * jtj[i][i].max(1e-12);
            }
            let neg_grad = grad.map(|g| -g);
            let Some(step) = solve(damped, neg_grad) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = params;
            for i in 0..P {
                trial[i] += step[i];
            }
            model.residuals(&trial, &mut trial_r);
            let trial_cost = cost(&trial_r);
            if trial_cost.is_finite() && trial_cost <= current {
                let step_norm = step.iter().map(|s| s * s).sum::<f64>();
                let par_norm = params.iter().map(|p| p * p).sum::<f64>();
                params = trial;
                core::mem::swap(&mut r, &mut trial_r);
                let improvement = current - trial_cost;
                current = trial_cost;
                lambda = (lambda * 0.3).max(1e-15);
                accepted = true;
                if step_norm <= config.step_tol * config.step_tol * (par_norm + config.step_tol)
                    && improvement <= 1e-30 + 1e-15 * current
                {
                    return Ok(LmReport { params, cost: current, iterations: iteration + 1 });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No descent direction reduces the cost: stationary to working precision.
            return Ok(LmReport { params, cost: current, iterations: iteration + 1 });
        }
    }
    Err(LmError::NotConverged { iterations: config.max_iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Exponential {
        xs: Vec<f64>,
        ys: Vec<f64>,
    }

    impl LeastSquares<2> for Exponential {
        fn residuals(&self, p: &[f64; 2], out: &mut Vec<f64>) {
            out.clear();
            out.extend(self.xs.iter().zip(&self.ys).map(|(x, y)| p[0] * libm::exp(-p[1] * x) - y));
        }
        fn jacobian(&self, p: &[f64; 2], out: &mut Vec<[f64; 2]>) {
            out.clear();
            out.extend(self.xs.iter().map(|x| {
                let e = libm::exp(-p[1] * x);
                [e, -p[0] * x * e]
            }));
        }
    }

    #[test]
    fn recovers_exponential_decay() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let ys = xs.iter().map(|x| 3.0 * libm::exp(-0.7 * x)).collect();
        let model = Exponential { xs, ys };
        let fit = minimize(&model, [1.0, 0.1], LmConfig::default()).unwrap();
        assert!((fit.params[0] - 3.0).abs() < 1e-8);
        assert!((fit.params[1] - 0.7).abs() < 1e-8);
    }

    #[test]
    fn linear_solve_pivots() {
        let x = solve([[0.0, 1.0], [2.0, 0.0]], [3.0, 4.0]).unwrap();
        assert_eq!(x, [2.0, 3.0]);
        assert!(solve([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0]).is_none());
    }
}
