use serde::{Deserialize, Serialize};

use super::sensors::SensorFrame;
use super::state::PlantState;
use crate::io::CsvSchema;

/// One logged sample of a plant run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    #[serde(rename = "time_s")]
    pub time: f64,
    #[serde(rename = "torque_in_Nm")]
    pub torque_in: f64,
    #[serde(rename = "torque_out_Nm")]
    pub torque_out: f64,
    #[serde(rename = "theta_in_rad")]
    pub theta_in: f64,
    #[serde(rename = "theta_out_rad")]
    pub theta_out: f64,
    #[serde(rename = "water_kPa")]
    pub water_pressure: f64,
    #[serde(rename = "air_kPa")]
    pub air_pressure: f64,
    #[serde(rename = "volume_offset_mL")]
    pub volume_offset: f64,
}

impl CsvSchema for TrajectoryRecord {
    const HEADER: &'static [&'static str] = &[
        "time_s",
        "torque_in_Nm",
        "torque_out_Nm",
        "theta_in_rad",
        "theta_out_rad",
        "water_kPa",
        "air_kPa",
        "volume_offset_mL",
    ];
}

impl TrajectoryRecord {
    /// Torques and pressure from the sensor frame; angles at full precision.
    pub fn from_frame(state: &PlantState, frame: &SensorFrame) -> Self {
        Self {
            time: state.time,
            torque_in: frame.torque_in,
            torque_out: frame.torque_out,
            theta_in: state.theta_in,
            theta_out: state.theta_out,
            water_pressure: frame.pressure_readout,
            air_pressure: state.line.air_preload_pressure,
            volume_offset: state.line.water_volume_offset,
        }
    }
}

/// One row of a replayable input schedule: from `time_s` on, apply
/// `torque_in_Nm` with the output clamped or free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    #[serde(rename = "time_s")]
    pub time: f64,
    #[serde(rename = "torque_in_Nm")]
    pub torque_in: f64,
    pub output_clamped: bool,
}

impl CsvSchema for ScheduleRecord {
    const HEADER: &'static [&'static str] = &["time_s", "torque_in_Nm", "output_clamped"];
}
