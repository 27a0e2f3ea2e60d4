//! Output-error fit of the second-order model.
//!
//! The predictor simulates the model on the logged input torque and the
//! residual is the difference to the logged input angle. Parameters are
//! estimated in log space with a Levenberg-Marquardt loop over a
//! forward-difference Jacobian.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::plant::{Integrator, SecondOrderModel};

use super::log::ExperimentLog;
use super::simulate::simulate_model_with;
use super::{Result, SysIdError};

const PARAMETERS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Forward-difference step in log-parameter space (relative step).
    pub fd_step: f64,
    pub initial_lambda: f64,
    pub max_lambda: f64,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub cost_tolerance: f64,
    /// Stop when the log-space step is shorter than this.
    pub step_tolerance: f64,
    pub integrator: Integrator,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            fd_step: 1e-6,
            initial_lambda: 1e-3,
            max_lambda: 1e10,
            cost_tolerance: 1e-10,
            step_tolerance: 1e-10,
            integrator: Integrator::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: SecondOrderModel,
    /// `100 (1 - |θ - θ̂| / |θ - mean θ|)`
    pub fit_percentage: f64,
    /// rad
    pub residual_rms: f64,
    pub initial_guess: SecondOrderModel,
    /// Jacobian evaluations performed.
    pub iterations: usize,
    /// Half sum of squared residuals at the start and after every accepted step.
    pub cost_history: Vec<f64>,
}

/// Normalized-RMS fit percentage of a prediction against a measurement.
pub fn fit_percentage(measured: &[f64], predicted: &[f64]) -> f64 {
    let n = measured.len().min(predicted.len());
    if n == 0 {
        return f64::NEG_INFINITY;
    }
    let mean = measured[..n].iter().sum::<f64>() / n as f64;
    let error: f64 = measured
        .iter()
        .zip(predicted)
        .map(|(m, p)| (m - p) * (m - p))
        .sum::<f64>()
        .sqrt();
    let spread: f64 = measured[..n]
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        .sqrt();
    if spread == 0.0 {
        return if error == 0.0 {
            100.0
        } else {
            f64::NEG_INFINITY
        };
    }
    100.0 * (1.0 - error / spread)
}

struct Problem<'a> {
    torque: Vec<f64>,
    measured: Vec<f64>,
    dt: f64,
    options: &'a FitOptions,
}

impl Problem<'_> {
    fn model(x: &Vector3<f64>) -> SecondOrderModel {
        SecondOrderModel {
            inertia: x[0].exp(),
            damping: x[1].exp(),
            stiffness: x[2].exp(),
        }
    }

    fn predict(&self, x: &Vector3<f64>) -> Result<Vec<f64>> {
        simulate_model_with(
            &Self::model(x),
            &self.torque,
            self.dt,
            &self.options.integrator,
        )
    }

    fn residual(&self, x: &Vector3<f64>) -> Result<Vec<f64>> {
        Ok(self
            .predict(x)?
            .iter()
            .zip(&self.measured)
            .map(|(p, m)| p - m)
            .collect())
    }

    fn result(
        &self,
        x: &Vector3<f64>,
        init: SecondOrderModel,
        iterations: usize,
        history: Vec<f64>,
    ) -> Result<FitResult> {
        let predicted = self.predict(x)?;
        let sum_sq: f64 = predicted
            .iter()
            .zip(&self.measured)
            .map(|(p, m)| (p - m) * (p - m))
            .sum();
        Ok(FitResult {
            model: Self::model(x),
            fit_percentage: fit_percentage(&self.measured, &predicted),
            residual_rms: (sum_sq / self.measured.len() as f64).sqrt(),
            initial_guess: init,
            iterations,
            cost_history: history,
        })
    }
}

fn cost(residual: &[f64]) -> f64 {
    0.5 * residual.iter().map(|r| r * r).sum::<f64>()
}

pub fn fit_second_order(log: &ExperimentLog, init: &SecondOrderModel) -> Result<FitResult> {
    fit_second_order_with(log, init, &FitOptions::default())
}

pub fn fit_second_order_with(
    log: &ExperimentLog,
    init: &SecondOrderModel,
    options: &FitOptions,
) -> Result<FitResult> {
    let needed = 10 * PARAMETERS;
    if log.len() < needed {
        return Err(SysIdError::InsufficientData {
            needed,
            got: log.len(),
        });
    }
    if !(init.inertia > 0.0 && init.damping > 0.0 && init.stiffness > 0.0)
        || !(init.inertia.is_finite() && init.damping.is_finite() && init.stiffness.is_finite())
    {
        return Err(SysIdError::InvalidModel(*init));
    }
    let problem = Problem {
        torque: log.torque_in(),
        measured: log.theta_in(),
        dt: log.sample_interval(),
        options,
    };

    let mut x = Vector3::new(init.inertia.ln(), init.damping.ln(), init.stiffness.ln());
    let mut r = problem.residual(&x)?;
    let mut current = cost(&r);
    let mut history = vec![current];
    let mut lambda = options.initial_lambda;
    let mut accepted = 0usize;
    let mut iterations = 0usize;

    'outer: while iterations < options.max_iterations {
        iterations += 1;

        let mut columns = [Vec::new(), Vec::new(), Vec::new()];
        for (j, column) in columns.iter_mut().enumerate() {
            let mut xp = x;
            xp[j] += options.fd_step;
            *column = problem
                .residual(&xp)?
                .iter()
                .zip(&r)
                .map(|(a, b)| (a - b) / options.fd_step)
                .collect();
        }
        if columns.iter().all(|c| c.iter().all(|&v| v == 0.0)) {
            // The prediction does not depend on the parameters at all.
            let best = problem.result(&x, *init, iterations, history)?;
            return Err(SysIdError::NoImprovement {
                best: Box::new(best),
                reason: "prediction is insensitive to every parameter".into(),
            });
        }

        let mut normal = Matrix3::zeros();
        let mut gradient = Vector3::zeros();
        for a in 0..PARAMETERS {
            gradient[a] = columns[a].iter().zip(&r).map(|(j, r)| j * r).sum();
            for b in a..PARAMETERS {
                let v: f64 = columns[a].iter().zip(&columns[b]).map(|(p, q)| p * q).sum();
                normal[(a, b)] = v;
                normal[(b, a)] = v;
            }
        }
        if gradient.amax() <= f64::EPSILON * current.max(f64::MIN_POSITIVE) || current == 0.0 {
            break;
        }

        loop {
            let mut damped = normal;
            for a in 0..PARAMETERS {
                damped[(a, a)] += lambda * normal[(a, a)];
            }
            let step = match damped.cholesky() {
                Some(chol) => chol.solve(&(-gradient)),
                None => return Err(SysIdError::SingularJacobian),
            };
            let candidate = x + step;
            let trial = problem.residual(&candidate)?;
            let trial_cost = cost(&trial);
            if trial_cost.is_finite() && trial_cost < current {
                let decrease = (current - trial_cost) / current;
                x = candidate;
                r = trial;
                current = trial_cost;
                history.push(current);
                accepted += 1;
                lambda = (lambda / 10.0).max(1e-12);
                if decrease < options.cost_tolerance || step.amax() < options.step_tolerance {
                    break 'outer;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > options.max_lambda {
                break 'outer;
            }
        }
    }

    let result = problem.result(&x, *init, iterations, history)?;
    if accepted == 0 && lambda > options.max_lambda {
        return Err(SysIdError::NoImprovement {
            best: Box::new(result),
            reason: "no damped step lowered the cost".into(),
        });
    }
    Ok(result)
}
