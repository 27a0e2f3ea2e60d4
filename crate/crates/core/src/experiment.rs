//! Excitation profiles and the loop that plays them on the plant.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::plant::{
    read_sensors, sample_seed, PlantError, PlantState, ScheduleRecord, TrajectoryRecord,
};
use crate::sysid::{ExperimentLog, SysIdError};

/// Inertia hung on the output shaft for hand tracking, kg·m².
pub const HAND_LOAD_INERTIA: f64 = 0.0387;
/// Default logging interval, s.
pub const SAMPLE_INTERVAL: f64 = 1e-3;

/// How the input torque behaves between schedule rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Hold {
    /// Each row's torque is held until the next row.
    #[default]
    Zero,
    /// Torque moves linearly from one row to the next.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentKind {
    /// Consecutive torque steps, output clamped.
    StepFit,
    /// One cubed-sine torque cycle from rest, output clamped.
    SineHysteresis,
    /// Multi-sine hand profile, output free with an inertial load.
    HandTracking,
    /// Held-out multi-sine torque, output clamped.
    Validation,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::StepFit,
        ExperimentKind::SineHysteresis,
        ExperimentKind::HandTracking,
        ExperimentKind::Validation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::StepFit => "step",
            ExperimentKind::SineHysteresis => "sine",
            ExperimentKind::HandTracking => "hand",
            ExperimentKind::Validation => "validation",
        }
    }

    pub fn schedule(self, dt: f64) -> Vec<ScheduleRecord> {
        match self {
            ExperimentKind::StepFit => step_schedule(&DEFAULT_STEPS, 0.25, dt),
            ExperimentKind::SineHysteresis => sine_cubed_schedule(1.0, 0.5, dt),
            ExperimentKind::HandTracking => {
                multisine_schedule(&HAND_COMPONENTS, 8.0, 1.0, false, dt)
            }
            ExperimentKind::Validation => {
                multisine_schedule(&VALIDATION_COMPONENTS, 4.0, 0.5, true, dt)
            }
        }
    }

    /// Step and validation runs hold samples like the identification
    /// predictor does; the smooth profiles are played without hold steps.
    pub fn hold(self) -> Hold {
        match self {
            ExperimentKind::StepFit | ExperimentKind::Validation => Hold::Zero,
            ExperimentKind::SineHysteresis | ExperimentKind::HandTracking => Hold::Linear,
        }
    }

    /// Output-shaft load the experiment is run with, kg·m².
    pub fn load_inertia(self) -> f64 {
        match self {
            ExperimentKind::HandTracking => HAND_LOAD_INERTIA,
            _ => 0.0,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!("unknown experiment `{s}` (expected step, sine, hand or validation)")
            })
    }
}

/// Torque levels of the step experiment, N·m.
pub const DEFAULT_STEPS: [f64; 6] = [0.1, 0.3, 0.0, -0.2, 0.2, 0.0];

/// (frequency Hz, amplitude N·m, phase rad)
const HAND_COMPONENTS: [(f64, f64, f64); 4] = [
    (0.35, 0.6, 0.0),
    (0.8, 0.35, 1.1),
    (1.3, 0.2, 2.3),
    (2.1, 0.1, 0.4),
];
const VALIDATION_COMPONENTS: [(f64, f64, f64); 4] = [
    (1.5, 0.15, 0.0),
    (4.0, 0.1, 0.7),
    (9.0, 0.06, 1.9),
    (17.0, 0.04, 2.8),
];

fn samples(duration: f64, dt: f64) -> usize {
    (duration / dt).round() as usize
}

/// Each level held for `hold` seconds.
pub fn step_schedule(levels: &[f64], hold: f64, dt: f64) -> Vec<ScheduleRecord> {
    let per = samples(hold, dt);
    levels
        .iter()
        .flat_map(|&level| std::iter::repeat_n(level, per))
        .enumerate()
        .map(|(i, torque_in)| ScheduleRecord {
            time: i as f64 * dt,
            torque_in,
            output_clamped: true,
        })
        .collect()
}

/// One period of `amplitude · sin³(2π f t)`.
pub fn sine_cubed_schedule(amplitude: f64, frequency: f64, dt: f64) -> Vec<ScheduleRecord> {
    (0..samples(1.0 / frequency, dt))
        .map(|i| {
            let t = i as f64 * dt;
            ScheduleRecord {
                time: t,
                torque_in: amplitude * (TAU * frequency * t).sin().powi(3),
                output_clamped: true,
            }
        })
        .collect()
}

/// Sum of sines faded in and out over `ramp` seconds with a raised cosine.
pub fn multisine_schedule(
    components: &[(f64, f64, f64)],
    duration: f64,
    ramp: f64,
    output_clamped: bool,
    dt: f64,
) -> Vec<ScheduleRecord> {
    (0..samples(duration, dt))
        .map(|i| {
            let t = i as f64 * dt;
            let edge = t.min(duration - t).max(0.0);
            let envelope = if edge >= ramp {
                1.0
            } else {
                0.5 * (1.0 - (PI * edge / ramp).cos())
            };
            let sum: f64 = components
                .iter()
                .map(|&(f, a, phase)| a * (TAU * f * t + phase).sin())
                .sum();
            ScheduleRecord {
                time: t,
                torque_in: envelope * sum,
                output_clamped,
            }
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("schedule is empty")]
    EmptySchedule,
    #[error("schedule time goes backwards at row {0}")]
    UnorderedSchedule(usize),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Log(#[from] SysIdError),
}

/// Plays `schedule` on the plant, sampling every `dt`; the run ends one
/// interval after the last row. Logged times and angles are relative to the
/// starting state. Torque noise is seeded per sample from `seed`.
pub fn run_schedule(
    plant: &PlantState,
    schedule: &[ScheduleRecord],
    dt: f64,
    seed: u64,
) -> Result<(PlantState, ExperimentLog), ExperimentError> {
    run_schedule_with(plant, schedule, Hold::Zero, dt, seed)
}

fn torque_at(schedule: &[ScheduleRecord], row: usize, t: f64, hold: Hold) -> f64 {
    let here = schedule[row];
    match (hold, schedule.get(row + 1)) {
        (Hold::Linear, Some(next)) if next.time > here.time => {
            let s = ((t - here.time) / (next.time - here.time)).clamp(0.0, 1.0);
            here.torque_in + s * (next.torque_in - here.torque_in)
        }
        _ => here.torque_in,
    }
}

pub fn run_schedule_with(
    plant: &PlantState,
    schedule: &[ScheduleRecord],
    hold: Hold,
    dt: f64,
    seed: u64,
) -> Result<(PlantState, ExperimentLog), ExperimentError> {
    let first = schedule.first().ok_or(ExperimentError::EmptySchedule)?;
    if let Some(i) = schedule.windows(2).position(|w| w[1].time < w[0].time) {
        return Err(ExperimentError::UnorderedSchedule(i + 1));
    }
    let start = first.time;
    let end = schedule.last().map(|r| r.time).unwrap_or(start) + dt;
    let ticks = ((end - start) / dt - 1e-9).ceil().max(1.0) as usize;

    let (theta_in0, theta_out0, time0) = (plant.theta_in, plant.theta_out, plant.time);
    let mut state = *plant;
    let mut row = 0;
    let mut rows = Vec::with_capacity(ticks);
    for k in 0..ticks {
        let t = start + k as f64 * dt;
        while row + 1 < schedule.len() && schedule[row + 1].time <= t + 1e-12 {
            row += 1;
        }
        let clamped = schedule[row].output_clamped;
        state = match hold {
            Hold::Zero => state.step(schedule[row].torque_in, clamped, dt)?,
            Hold::Linear => {
                let mut end_row = row;
                while end_row + 1 < schedule.len() && schedule[end_row + 1].time <= t + dt + 1e-12 {
                    end_row += 1;
                }
                let from = torque_at(schedule, row, t, hold);
                let to = torque_at(schedule, end_row, t + dt, hold);
                state.step_ramp(from, to, clamped, dt)?
            }
        };
        let frame = read_sensors(&state, sample_seed(seed, k as u64));
        let mut record = TrajectoryRecord::from_frame(&state, &frame);
        record.time = (k + 1) as f64 * dt;
        record.theta_in -= theta_in0;
        record.theta_out -= theta_out0;
        rows.push(record);
    }
    state.time = time0 + ticks as f64 * dt;
    Ok((state, ExperimentLog::new(rows)?))
}

/// Runs a named experiment from a plant at rest in its current phase.
/// The output load is set for the experiment and restored afterwards.
pub fn run_experiment(
    plant: &PlantState,
    kind: ExperimentKind,
    dt: f64,
    seed: u64,
) -> Result<(PlantState, ExperimentLog), ExperimentError> {
    let mut start = plant.with_water_offset(plant.line.water_volume_offset);
    start.config.load_inertia = kind.load_inertia();
    start.config.validate()?;
    let (mut end, log) = run_schedule_with(&start, &kind.schedule(dt), kind.hold(), dt, seed)?;
    end.config.load_inertia = plant.config.load_inertia;
    Ok((end, log.with_label("experiment", kind.name())))
}
