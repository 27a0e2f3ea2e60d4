use serde::{Deserialize, Serialize};

use super::log::ExperimentLog;

/// Input-versus-output agreement of a free-output run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    /// rad
    pub rms_angle_error: f64,
    /// N·m
    pub rms_torque_error: f64,
    pub peak_angle_error: f64,
    pub peak_torque_error: f64,
    /// Least-squares slope of output torque against input torque.
    pub torque_slope: f64,
}

fn rms(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut sum, mut peak, mut n) = (0.0, 0.0f64, 0usize);
    for v in values {
        sum += v * v;
        peak = peak.max(v.abs());
        n += 1;
    }
    if n == 0 {
        (0.0, 0.0)
    } else {
        ((sum / n as f64).sqrt(), peak)
    }
}

/// Ordinary least-squares slope (with intercept) of `y` on `x`.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

pub fn tracking_report(log: &ExperimentLog) -> TrackingReport {
    let s = log.samples();
    let (rms_angle_error, peak_angle_error) = rms(s.iter().map(|r| r.theta_in - r.theta_out));
    let (rms_torque_error, peak_torque_error) = rms(s.iter().map(|r| r.torque_in - r.torque_out));
    TrackingReport {
        rms_angle_error,
        rms_torque_error,
        peak_angle_error,
        peak_torque_error,
        torque_slope: regression_slope(&log.torque_in(), &log.torque_out()),
    }
}
