//! Fixed-step simulation of the shafts, the hydraulic line and its sensors.
//!
//! Both shafts carry the identified inertia and damping plus dry friction;
//! the transmission acts as a torsional spring between them whose rest twist
//! is set by the water volume in the line. Valve flow follows `Q = Kv √ΔP`.

mod model;
mod sensors;
mod state;
mod trajectory;
mod valve;

use thiserror::Error;

pub(crate) use model::linear_substep;
pub use model::{Integrator, SecondOrderModel};
pub use sensors::{read_sensors, sample_seed, SensorConfig, SensorFrame};
pub use state::{
    FluidLineState, PlantConfig, PlantState, MAX_STEP, REGULATOR_MAX, SUPPLY_PRESSURE,
};
pub use trajectory::{ScheduleRecord, TrajectoryRecord};
pub use valve::{valve_flow, volume_for_phase, Valve, ValveParams, ValveState, PHASE_PER_ML};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("time step must be positive (got {0} s)")]
    NonPositiveDt(f64),
    #[error("time step {0} s exceeds the 10 ms limit")]
    StepTooLong(f64),
    #[error("pressure drop must be non-negative (got {0} kPa)")]
    NegativePressureDrop(f64),
    #[error("regulator setpoint {0} kPa outside 0..=860 kPa")]
    RegulatorOutOfRange(f64),
    #[error("invalid model {0:?}: need J > 0, B >= 0, K >= 0")]
    InvalidModel(SecondOrderModel),
    #[error("invalid valve {0:?}: need Kv > 0 and latency >= 0")]
    InvalidValve(ValveParams),
    #[error("invalid plant configuration")]
    InvalidConfig,
}

pub type Result<T> = std::result::Result<T, PlantError>;
