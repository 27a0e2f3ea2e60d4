//! Torque-angle loop metrics.
//!
//! Samples are split into ascending and descending branches by the sign of
//! the angular velocity (with a deadband). Torque is read off each branch at
//! a common angle by locating the crossing and evaluating a local quadratic
//! fit of torque over time there, which keeps sensor noise out of the gap.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::log::ExperimentLog;
use super::{Result, SysIdError};

/// Full torque range used to express the metrics as a percentage, N·m.
pub const FULL_TORQUE_RANGE: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HysteresisOptions {
    /// rad/s
    pub velocity_deadband: f64,
    /// rad
    pub encoder_resolution: f64,
    /// Samples on each side of a crossing used by the local torque fit.
    pub smoothing_half_width: usize,
    /// Angle levels probed per branch pair.
    pub levels: usize,
    /// N·m
    pub full_range: f64,
}

impl Default for HysteresisOptions {
    fn default() -> Self {
        Self {
            velocity_deadband: 1e-4,
            encoder_resolution: TAU / 8000.0,
            smoothing_half_width: 25,
            levels: 400,
            full_range: FULL_TORQUE_RANGE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HysteresisReport {
    /// Largest torque gap between branches at equal angle, N·m.
    pub max_hysteresis: f64,
    /// Largest torque change while the shaft stays within one encoder count
    /// of a turning point, N·m.
    pub static_friction: f64,
    /// `max_hysteresis` as a percentage of the full torque range.
    pub percent_of_range: f64,
    /// `static_friction` as a percentage of the full torque range.
    pub static_percent_of_range: f64,
}

pub fn percent_of_range(torque: f64, full_range: f64) -> f64 {
    100.0 * torque / full_range
}

/// A run of consecutive samples moving in one direction.
#[derive(Debug, Clone, Copy)]
struct Branch {
    start: usize,
    end: usize,
    direction: f64,
}

struct Loop<'a> {
    time: Vec<f64>,
    torque: Vec<f64>,
    theta: Vec<f64>,
    options: &'a HysteresisOptions,
}

impl Loop<'_> {
    fn branches(&self) -> Vec<Branch> {
        let mut out: Vec<Branch> = Vec::new();
        for i in 1..self.theta.len() {
            let v = (self.theta[i] - self.theta[i - 1]) / (self.time[i] - self.time[i - 1]);
            let direction = if v > self.options.velocity_deadband {
                1.0
            } else if v < -self.options.velocity_deadband {
                -1.0
            } else {
                continue;
            };
            match out.last_mut() {
                Some(b) if b.direction == direction && b.end + 1 == i => b.end = i,
                _ => out.push(Branch {
                    // include the sample the motion started from
                    start: i - 1,
                    end: i,
                    direction,
                }),
            }
        }
        // Short blips inside the deadband split a branch; merge same-direction neighbours.
        let mut merged: Vec<Branch> = Vec::new();
        for b in out {
            match merged.last_mut() {
                Some(last) if last.direction == b.direction => last.end = b.end,
                _ => merged.push(b),
            }
        }
        merged
    }

    /// Time at which the branch passes `level`, interpolated between samples.
    fn crossing(&self, branch: &Branch, level: f64) -> Option<(usize, f64)> {
        (branch.start..branch.end).find_map(|i| {
            let (a, b) = (self.theta[i], self.theta[i + 1]);
            let inside = if branch.direction > 0.0 {
                a <= level && level <= b
            } else {
                b <= level && level <= a
            };
            if !inside || a == b {
                return None;
            }
            let s = (level - a) / (b - a);
            Some((i, self.time[i] + s * (self.time[i + 1] - self.time[i])))
        })
    }

    /// Torque at time `t` near sample `index` from a least-squares quadratic
    /// over the surrounding window, kept inside the branch.
    fn torque_at(&self, branch: &Branch, index: usize, t: f64) -> f64 {
        let w = self.options.smoothing_half_width;
        let lo = index.saturating_sub(w).max(branch.start);
        let hi = (index + w + 1).min(branch.end);
        if hi - lo < 3 {
            return self.torque[index];
        }
        let scale = (self.time[hi] - self.time[lo]).max(f64::MIN_POSITIVE);
        let mut normal = Matrix3::zeros();
        let mut rhs = Vector3::zeros();
        for k in lo..=hi {
            let u = (self.time[k] - t) / scale;
            let basis = Vector3::new(1.0, u, u * u);
            normal += basis * basis.transpose();
            rhs += basis * self.torque[k];
        }
        match normal.lu().solve(&rhs) {
            Some(coef) => coef[0],
            None => self.torque[index],
        }
    }

    fn torque_at_level(&self, branch: &Branch, level: f64) -> Option<f64> {
        self.crossing(branch, level)
            .map(|(i, t)| self.torque_at(branch, i, t))
    }

    fn angle_span(&self, branch: &Branch) -> (f64, f64) {
        self.theta[branch.start..=branch.end]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            })
    }

    fn max_gap(&self, branches: &[Branch]) -> f64 {
        let mut gap: f64 = 0.0;
        for up in branches.iter().filter(|b| b.direction > 0.0) {
            for down in branches.iter().filter(|b| b.direction < 0.0) {
                let (up_lo, up_hi) = self.angle_span(up);
                let (down_lo, down_hi) = self.angle_span(down);
                let lo = up_lo.max(down_lo);
                let hi = up_hi.min(down_hi);
                if !(hi > lo) {
                    continue;
                }
                let n = self.options.levels.max(2);
                for k in 0..n {
                    // interior levels only; the end points belong to the turnarounds
                    let level = lo + (hi - lo) * (k as f64 + 0.5) / n as f64;
                    if let (Some(a), Some(b)) = (
                        self.torque_at_level(up, level),
                        self.torque_at_level(down, level),
                    ) {
                        gap = gap.max((a - b).abs());
                    }
                }
            }
        }
        gap
    }

    fn static_friction(&self, branches: &[Branch]) -> f64 {
        let res = self.options.encoder_resolution;
        let mut friction: f64 = 0.0;
        for pair in branches.windows(2) {
            let (before, after) = (&pair[0], &pair[1]);
            let turn = &self.theta[before.end..=after.start];
            let extreme = if before.direction > 0.0 {
                turn.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            } else {
                turn.iter().cloned().fold(f64::INFINITY, f64::min)
            };
            let level = extreme - before.direction * res;
            let entry = self.torque_at_level(before, level);
            let exit = self.torque_at_level(after, level);
            if let (Some(a), Some(b)) = (entry, exit) {
                friction = friction.max((a - b).abs());
            }
        }
        friction
    }
}

pub fn hysteresis_metrics(log: &ExperimentLog) -> Result<HysteresisReport> {
    hysteresis_metrics_with(log, &HysteresisOptions::default())
}

pub fn hysteresis_metrics_with(
    log: &ExperimentLog,
    options: &HysteresisOptions,
) -> Result<HysteresisReport> {
    let lp = Loop {
        time: log.times(),
        torque: log.torque_in(),
        theta: log.theta_in(),
        options,
    };
    let branches = lp.branches();
    let ascending = branches.iter().any(|b| b.direction > 0.0);
    let descending = branches.iter().any(|b| b.direction < 0.0);
    if !ascending || !descending || branches.len() < 3 {
        return Err(SysIdError::InsufficientCycle {
            branches: branches.len(),
        });
    }
    let max_hysteresis = lp.max_gap(&branches);
    let static_friction = lp.static_friction(&branches);
    Ok(HysteresisReport {
        max_hysteresis,
        static_friction,
        percent_of_range: percent_of_range(max_hysteresis, options.full_range),
        static_percent_of_range: percent_of_range(static_friction, options.full_range),
    })
}
