use crate::plant::{linear_substep, Integrator, SecondOrderModel};

use super::{Result, SysIdError};

/// Angle response of the linear model to a sampled torque, starting at rest.
///
/// Sample `i` is the angle after torque `torque[i]` has acted for one
/// interval `dt`, the convention the plant logs follow.
pub fn simulate_model(model: &SecondOrderModel, torque: &[f64], dt: f64) -> Result<Vec<f64>> {
    simulate_model_with(model, torque, dt, &Integrator::default())
}

pub fn simulate_model_with(
    model: &SecondOrderModel,
    torque: &[f64],
    dt: f64,
    integrator: &Integrator,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(SysIdError::NonPositiveDt(dt));
    }
    model
        .validate()
        .map_err(|_| SysIdError::InvalidModel(*model))?;
    let n = integrator.substeps(dt);
    let h = dt / n as f64;
    let (mut theta, mut omega) = (0.0, 0.0);
    Ok(torque
        .iter()
        .map(|&tau| {
            for _ in 0..n {
                (theta, omega) = linear_substep(model, theta, omega, tau, h);
            }
            theta
        })
        .collect())
}
