//! Identification and characterization from logged experiments.

mod fit;
mod hysteresis;
mod log;
mod simulate;
mod tracking;

use thiserror::Error;

use crate::io::IoError;
use crate::plant::SecondOrderModel;

pub use fit::{fit_percentage, fit_second_order, fit_second_order_with, FitOptions, FitResult};
pub use hysteresis::{
    hysteresis_metrics, hysteresis_metrics_with, percent_of_range, HysteresisOptions,
    HysteresisReport, FULL_TORQUE_RANGE,
};
pub use log::{ExperimentLog, UNIFORM_SAMPLING_TOLERANCE};
pub use simulate::{simulate_model, simulate_model_with};
pub use tracking::{regression_slope, tracking_report, TrackingReport};

#[derive(Debug, Error)]
pub enum SysIdError {
    #[error("time step must be positive (got {0} s)")]
    NonPositiveDt(f64),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("time does not increase at sample {index}")]
    NonMonotonicTime { index: usize },
    #[error("sampling interval deviates at sample {index}")]
    NonUniformSampling { index: usize },
    #[error("invalid model {0:?}")]
    InvalidModel(SecondOrderModel),
    #[error("normal equations are singular")]
    SingularJacobian,
    #[error("fit made no progress: {reason}")]
    NoImprovement {
        best: Box<FitResult>,
        reason: String,
    },
    #[error("log does not contain a full loading cycle ({branches} branches)")]
    InsufficientCycle { branches: usize },
    #[error(transparent)]
    Io(#[from] IoError),
}

pub type Result<T> = std::result::Result<T, SysIdError>;

/// Fit percentage of `model` simulated on the log's input torque.
pub fn validate(model: &SecondOrderModel, log: &ExperimentLog) -> Result<f64> {
    let predicted = simulate_model(model, &log.torque_in(), log.sample_interval())?;
    Ok(fit_percentage(&log.theta_in(), &predicted))
}
