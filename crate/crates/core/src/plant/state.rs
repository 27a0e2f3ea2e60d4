use serde::{Deserialize, Serialize};

use super::model::{Integrator, SecondOrderModel, Shaft};
use super::sensors::SensorConfig;
use super::valve::{valve_flow, Valve, ValveParams, ValveState, PHASE_PER_ML};
use super::{PlantError, Result};

/// Upper end of the preload regulator range, kPa.
pub const REGULATOR_MAX: f64 = 860.0;
/// Pump-side water supply pressure, kPa.
pub const SUPPLY_PRESSURE: f64 = 700.0;
/// Longest accepted plant step, s.
pub const MAX_STEP: f64 = 0.010;
/// Sub-step used when integrating valve flow, s.
const FLOW_SUBSTEP: f64 = 1e-4;

/// Static plant parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    /// Input-shaft model; the output shaft shares `inertia` and `damping`.
    pub model: SecondOrderModel,
    /// Extra inertia attached to the output shaft, kg·m².
    pub load_inertia: f64,
    /// Dry friction on each shaft, N·m.
    pub coulomb_torque: f64,
    /// rad/s
    pub stiction_velocity: f64,
    /// deg/mL
    pub phase_constant: f64,
    pub intake: ValveParams,
    pub outlet: ValveParams,
    /// Water-line pressure rise per mL of excess water, kPa/mL.
    pub line_pressure_gain: f64,
    /// Freeze the valve pressure drop at its value when the valve opens.
    pub constant_delta_p: bool,
    pub integrator: Integrator,
    pub sensors: SensorConfig,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            model: SecondOrderModel::FITTED,
            load_inertia: 0.0,
            coulomb_torque: 0.0136,
            stiction_velocity: 1e-4,
            phase_constant: PHASE_PER_ML,
            intake: ValveParams::default(),
            outlet: ValveParams::default(),
            line_pressure_gain: 2.0,
            constant_delta_p: false,
            integrator: Integrator::default(),
            sensors: SensorConfig::default(),
        }
    }
}

impl PlantConfig {
    /// Linear plant: no dry friction.
    pub fn frictionless(self) -> Self {
        Self {
            coulomb_torque: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.intake.validate()?;
        self.outlet.validate()?;
        let ok = self.load_inertia >= 0.0
            && self.coulomb_torque >= 0.0
            && self.stiction_velocity >= 0.0
            && self.phase_constant > 0.0
            && self.line_pressure_gain >= 0.0
            && self.integrator.max_substep > 0.0;
        if ok {
            Ok(())
        } else {
            Err(PlantError::InvalidConfig)
        }
    }

    pub fn valve(&self, which: Valve) -> &ValveParams {
        match which {
            Valve::Intake => &self.intake,
            Valve::Outlet => &self.outlet,
        }
    }

    fn input_shaft(&self) -> Shaft {
        Shaft {
            inertia: self.model.inertia,
            damping: self.model.damping,
            coulomb: self.coulomb_torque,
            stiction_velocity: self.stiction_velocity,
        }
    }

    fn output_shaft(&self) -> Shaft {
        Shaft {
            inertia: self.model.inertia + self.load_inertia,
            ..self.input_shaft()
        }
    }
}

/// Pressures (kPa) and water bookkeeping (mL) of one hydraulic line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidLineState {
    pub water_pressure: f64,
    pub air_preload_pressure: f64,
    /// Water relative to a perfectly phased line; positive is excess.
    pub water_volume_offset: f64,
    pub supply_pressure: f64,
    pub regulator_setpoint: f64,
    /// Undissolved air as a volume fraction of the line.
    pub air_fraction: f64,
    pub intake_state: ValveState,
    pub outlet_state: ValveState,
    /// Cumulative water admitted through the intake, mL.
    pub intake_volume: f64,
    /// Cumulative water released through the outlet, mL.
    pub outlet_volume: f64,
}

impl Default for FluidLineState {
    fn default() -> Self {
        Self {
            water_pressure: 0.0,
            air_preload_pressure: 0.0,
            water_volume_offset: 0.0,
            supply_pressure: SUPPLY_PRESSURE,
            regulator_setpoint: 0.0,
            air_fraction: 0.0064,
            intake_state: ValveState::Closed,
            outlet_state: ValveState::Closed,
            intake_volume: 0.0,
            outlet_volume: 0.0,
        }
    }
}

/// Full simulated state. A plain value: every operation returns a new state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    /// rad
    pub theta_in: f64,
    pub theta_out: f64,
    /// rad/s
    pub omega_in: f64,
    pub omega_out: f64,
    pub line: FluidLineState,
    /// s
    pub time: f64,
    /// Torque applied at the input shaft during the last step, N·m.
    pub torque_in: f64,
    /// Torque carried by the output shaft after the last step, N·m.
    pub torque_out: f64,
    pub config: PlantConfig,
}

impl PlantState {
    pub fn new(config: PlantConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            theta_in: 0.0,
            theta_out: 0.0,
            omega_in: 0.0,
            omega_out: 0.0,
            line: FluidLineState::default(),
            time: 0.0,
            torque_in: 0.0,
            torque_out: 0.0,
            config,
        })
    }

    /// At rest with the shafts already at the equilibrium implied by
    /// `water_volume_offset`.
    pub fn with_water_offset(mut self, water_volume_offset: f64) -> Self {
        self.line.water_volume_offset = water_volume_offset;
        let phase = self.phase_offset_rad();
        self.theta_in = 0.5 * phase;
        self.theta_out = -0.5 * phase;
        self.omega_in = 0.0;
        self.omega_out = 0.0;
        self.torque_out = 0.0;
        self.refresh_pressures();
        self
    }

    /// Phase between the shafts set by the water volume, degrees.
    pub fn phase_offset(&self) -> f64 {
        self.line.water_volume_offset * self.config.phase_constant
    }

    pub fn phase_offset_rad(&self) -> f64 {
        self.phase_offset().to_radians()
    }

    /// Torque in the transmission spring, N·m.
    pub fn spring_torque(&self) -> f64 {
        self.config.model.stiffness * (self.theta_in - self.theta_out - self.phase_offset_rad())
    }

    /// Kinetic plus spring energy, J.
    pub fn mechanical_energy(&self) -> f64 {
        let j_in = self.config.model.inertia;
        let j_out = j_in + self.config.load_inertia;
        let twist = self.theta_in - self.theta_out - self.phase_offset_rad();
        0.5 * j_in * self.omega_in * self.omega_in
            + 0.5 * j_out * self.omega_out * self.omega_out
            + 0.5 * self.config.model.stiffness * twist * twist
    }

    /// Sets the pneumatic preload. The water line follows quasi-statically.
    pub fn set_regulator(mut self, setpoint: f64) -> Result<Self> {
        if !(0.0..=REGULATOR_MAX).contains(&setpoint) {
            return Err(PlantError::RegulatorOutOfRange(setpoint));
        }
        self.line.regulator_setpoint = setpoint;
        self.refresh_pressures();
        Ok(self)
    }

    fn refresh_pressures(&mut self) {
        self.line.air_preload_pressure = self.line.regulator_setpoint;
        self.line.water_pressure = (self.line.air_preload_pressure
            + self.config.line_pressure_gain * self.line.water_volume_offset)
            .max(0.0);
    }

    /// Pressure drop across a valve, kPa. The reservoir behind the outlet is
    /// at atmospheric (0 kPa gauge).
    pub fn valve_pressure_drop(&self, which: Valve) -> f64 {
        match which {
            Valve::Intake => (self.line.supply_pressure - self.line.water_pressure).abs(),
            Valve::Outlet => self.line.water_pressure.abs(),
        }
    }

    /// Advances the shafts by `dt` under `input_torque`. With
    /// `output_clamped` the output shaft is held where it is.
    pub fn step(&self, input_torque: f64, output_clamped: bool, dt: f64) -> Result<Self> {
        self.step_ramp(input_torque, input_torque, output_clamped, dt)
    }

    /// As [`PlantState::step`], with the input torque moving linearly from
    /// `torque_start` to `torque_end` over the interval.
    pub fn step_ramp(
        &self,
        torque_start: f64,
        torque_end: f64,
        output_clamped: bool,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(PlantError::NonPositiveDt(dt));
        }
        if dt > MAX_STEP {
            return Err(PlantError::StepTooLong(dt));
        }
        let mut next = *self;
        let n = self.config.integrator.substeps(dt);
        let h = dt / n as f64;
        let k = self.config.model.stiffness;
        let phase = self.phase_offset_rad();
        let input = self.config.input_shaft();
        let output = self.config.output_shaft();
        let slope = torque_end - torque_start;
        for j in 0..n {
            let torque = torque_start + slope * ((j as f64 + 0.5) / n as f64);
            let spring = k * (next.theta_in - next.theta_out - phase);
            next.omega_in = input.velocity_update(next.omega_in, torque, spring, h);
            if !output_clamped {
                next.omega_out = output.velocity_update(next.omega_out, 0.0, -spring, h);
                next.theta_out += h * next.omega_out;
            }
            next.theta_in += h * next.omega_in;
        }
        if output_clamped {
            next.omega_out = 0.0;
        }
        next.time += dt;
        next.torque_in = torque_end;
        next.torque_out = next.spring_torque();
        Ok(next)
    }

    /// Opens a valve for `duration` seconds. Water moves only after the
    /// valve latency has elapsed.
    pub fn apply_valve(&self, which: Valve, duration: f64) -> Self {
        let latency = self.config.valve(which).latency;
        self.flow_for(which, (duration - latency).max(0.0))
    }

    /// Integrates valve flow for `seconds` with the valve fully open,
    /// recomputing the pressure drop every sub-step unless the plant runs
    /// in constant pressure-drop mode.
    pub fn flow_for(&self, which: Valve, seconds: f64) -> Self {
        let frozen = self
            .config
            .constant_delta_p
            .then(|| self.valve_pressure_drop(which));
        self.flow_with_drop(which, seconds, frozen)
    }

    /// As [`PlantState::flow_for`]; a `frozen_drop` (kPa) overrides the
    /// live pressure drop.
    pub fn flow_with_drop(&self, which: Valve, seconds: f64, frozen_drop: Option<f64>) -> Self {
        let mut next = *self;
        if !(seconds > 0.0) {
            return next;
        }
        let valve = self.config.valve(which).opened();
        let n = (seconds / FLOW_SUBSTEP).ceil().max(1.0) as usize;
        let h = seconds / n as f64;
        for _ in 0..n {
            let drop = frozen_drop.unwrap_or_else(|| next.valve_pressure_drop(which));
            let volume = h * valve_flow(&valve, drop).expect("pressure drop is non-negative");
            match which {
                Valve::Intake => {
                    next.line.water_volume_offset += volume;
                    next.line.intake_volume += volume;
                }
                Valve::Outlet => {
                    next.line.water_volume_offset -= volume;
                    next.line.outlet_volume += volume;
                }
            }
            next.refresh_pressures();
        }
        next.line.intake_state = ValveState::Closed;
        next.line.outlet_state = ValveState::Closed;
        next.torque_out = next.spring_torque();
        next
    }

    /// Marks a valve as energized, for status reporting.
    pub fn with_valve_state(mut self, which: Valve, state: ValveState) -> Self {
        match which {
            Valve::Intake => self.line.intake_state = state,
            Valve::Outlet => self.line.outlet_state = state,
        }
        self
    }
}
