//! Valve-time planning and the measure/plan/apply phasing loop.

use serde::{Deserialize, Serialize};

use crate::plant::{read_sensors, sample_seed, PlantState, Valve, ValveParams, SUPPLY_PRESSURE};

use super::{ControllerError, Result};

/// Shaft stepping interval while waiting for the line to settle, s.
const SETTLE_TICK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasingConfig {
    /// Accepted phase offset, deg.
    pub tolerance: f64,
    /// Intake pressure drop used for fine corrections, kPa.
    pub fine_delta_p: f64,
    pub max_iterations: usize,
    /// Water supply pressure behind the intake, kPa.
    pub injection_pressure: f64,
    /// Offsets larger than this are corrected at the current preload, deg.
    pub fine_band: f64,
    /// Wait before each measurement, s.
    pub settle_time: f64,
}

impl Default for PhasingConfig {
    fn default() -> Self {
        Self {
            tolerance: 0.4,
            fine_delta_p: 15.0,
            max_iterations: 20,
            injection_pressure: SUPPLY_PRESSURE,
            fine_band: 2.0,
            settle_time: 0.1,
        }
    }
}

impl PhasingConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tolerance > 0.0
            && self.fine_delta_p > 0.0
            && self.fine_delta_p < self.injection_pressure
            && self.max_iterations > 0
            && self.fine_band >= self.tolerance
            && self.settle_time >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(ControllerError::InvalidPhasingConfig(*self))
        }
    }

    /// Regulator setpoint that leaves `fine_delta_p` across the intake.
    pub fn fine_setpoint(&self) -> f64 {
        self.injection_pressure - self.fine_delta_p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePlan {
    pub valve: Valve,
    /// s
    pub open_time: f64,
    /// mL
    pub predicted_volume: f64,
    /// Phase left over if the valve behaves as planned, deg.
    pub predicted_residual: f64,
    /// Offset measured before the correction, deg.
    pub measured_offset: f64,
    /// Pressure drop assumed by the plan, kPa.
    pub delta_p: f64,
}

/// Valve and opening time that shift the phase by `delta_phi` degrees.
/// Positive corrections add water through the intake.
pub fn plan_correction(
    delta_phi: f64,
    valve: &ValveParams,
    delta_p: f64,
    phase_constant: f64,
) -> Result<PhasePlan> {
    if !(delta_p > 0.0) {
        return Err(ControllerError::ZeroPressureDrop(delta_p));
    }
    let which = if delta_phi > 0.0 {
        Valve::Intake
    } else {
        Valve::Outlet
    };
    let open_time = delta_phi.abs() / (phase_constant * valve.flow_factor * delta_p.sqrt());
    let predicted_volume = valve.flow_factor * delta_p.sqrt() * open_time;
    let moved = predicted_volume * phase_constant;
    Ok(PhasePlan {
        valve: which,
        open_time,
        predicted_volume,
        predicted_residual: delta_phi.abs() - moved,
        measured_offset: -delta_phi,
        delta_p,
    })
}

/// Lets the shafts come to rest with no applied torque.
pub fn settle(plant: &PlantState, seconds: f64) -> Result<PlantState> {
    let mut state = *plant;
    let ticks = (seconds / SETTLE_TICK).round() as usize;
    for _ in 0..ticks {
        state = state.step(0.0, false, SETTLE_TICK)?;
    }
    Ok(state)
}

/// Opens `which` for `command` seconds while the shafts keep moving. Water
/// flows once the valve latency has passed; flow and shaft motion are
/// interleaved every settle tick.
pub fn actuate_valve(plant: &PlantState, which: Valve, command: f64) -> Result<PlantState> {
    let latency = plant.config.valve(which).latency;
    let flow_start = latency;
    let flow_end = command.max(latency);
    let ticks = (command / SETTLE_TICK).ceil() as usize;
    let frozen = plant
        .config
        .constant_delta_p
        .then(|| plant.valve_pressure_drop(which));
    let mut state = *plant;
    for k in 0..ticks {
        let (t0, t1) = (k as f64 * SETTLE_TICK, (k + 1) as f64 * SETTLE_TICK);
        let overlap = t1.min(flow_end) - t0.max(flow_start);
        if overlap > 0.0 {
            state = state.flow_with_drop(which, overlap, frozen);
        }
        state = state.step(0.0, false, SETTLE_TICK)?;
    }
    Ok(state)
}

/// Encoder-based phase offset, deg.
pub fn measure_offset(plant: &PlantState, seed: u64) -> f64 {
    read_sensors(plant, seed).phase_offset(&plant.config.sensors)
}

/// Outcome of a successful phasing run.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasingOutcome {
    pub plant: PlantState,
    pub corrections: Vec<PhasePlan>,
    /// Encoder offset after the last settle, deg.
    pub final_offset: f64,
}

/// Runs the phasing loop with the controller's own valve belief.
pub fn run_phasing(plant: &PlantState, cfg: &PhasingConfig) -> Result<PhasingOutcome> {
    run_phasing_with_belief(plant, cfg, &plant.config.intake, &plant.config.outlet)
}

/// Runs the phasing loop planning with `intake` and `outlet` as the
/// believed valve parameters, which may differ from the plant's.
pub fn run_phasing_with_belief(
    plant: &PlantState,
    cfg: &PhasingConfig,
    intake: &ValveParams,
    outlet: &ValveParams,
) -> Result<PhasingOutcome> {
    cfg.validate()?;
    let restore = plant.line.regulator_setpoint;
    let mut state = *plant;
    state.line.supply_pressure = cfg.injection_pressure;
    let mut corrections = Vec::new();
    let mut lowered = false;

    for iteration in 0..=cfg.max_iterations {
        state = settle(&state, cfg.settle_time)?;
        let measured = measure_offset(&state, sample_seed(state.time.to_bits(), iteration as u64));
        if measured.abs() <= cfg.tolerance {
            if lowered {
                state = state.set_regulator(restore)?;
            }
            return Ok(PhasingOutcome {
                plant: state,
                corrections,
                final_offset: measured,
            });
        }
        if iteration == cfg.max_iterations {
            break;
        }

        let correction = -measured;
        let which = if correction > 0.0 {
            Valve::Intake
        } else {
            Valve::Outlet
        };
        let intake_room = cfg.injection_pressure - state.line.water_pressure;
        let fine = measured.abs() <= cfg.fine_band;
        if (fine || (which == Valve::Intake && intake_room < cfg.fine_delta_p)) && !lowered {
            state = state.set_regulator(cfg.fine_setpoint())?;
            lowered = true;
        }
        let valve = match which {
            Valve::Intake => intake,
            Valve::Outlet => outlet,
        };
        let delta_p = state.valve_pressure_drop(which);
        let mut plan = plan_correction(correction, valve, delta_p, state.config.phase_constant)?;
        plan.measured_offset = measured;
        let command = plan.open_time + state.config.valve(which).latency;
        state = actuate_valve(&state, which, command)?;
        corrections.push(plan);
    }

    if lowered {
        state = state.set_regulator(restore)?;
    }
    Err(ControllerError::DidNotConverge {
        plant: Box::new(state),
        corrections,
    })
}
