//! Phasing control and the operating procedure around it.
//!
//! [`Controller`] owns the plant between commands. Each command moves the
//! mode machine one edge; transitory modes then run their procedure on the
//! plant and advance until a resting mode is reached.

mod events;
mod mode;
mod phasing;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plant::{PlantError, PlantState, ValveParams, REGULATOR_MAX};

pub use events::{write_events, Event};
pub use mode::{
    complete, next_mode, transition, Command, Mode, OperationMode, HIBERNATION_PRELOAD,
};
pub use phasing::{
    actuate_valve, measure_offset, plan_correction, run_phasing, run_phasing_with_belief, settle,
    PhasePlan, PhasingConfig, PhasingOutcome,
};

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("valve pressure drop must be positive (got {0} kPa)")]
    ZeroPressureDrop(f64),
    #[error("phasing did not converge after {} corrections", corrections.len())]
    DidNotConverge {
        plant: Box<PlantState>,
        corrections: Vec<PhasePlan>,
    },
    #[error("`{command}` is not allowed while {from}")]
    IllegalTransition { from: Mode, command: Command },
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("bleed needs at least one cycle")]
    ZeroBleedCycles,
    #[error("invalid phasing configuration {0:?}")]
    InvalidPhasingConfig(PhasingConfig),
    #[error("invalid controller configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

pub type Result<T> = std::result::Result<T, ControllerError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleedConfig {
    /// Fraction of the undissolved air left after one cycle.
    pub factor: f64,
    /// Air fraction that bleeding cannot go below.
    pub floor: f64,
    pub cycles: u32,
}

impl Default for BleedConfig {
    fn default() -> Self {
        Self {
            factor: 0.5,
            floor: 2e-4,
            cycles: 5,
        }
    }
}

/// Runs `cycles` bleed cycles on the line's air content.
pub fn bleed(plant: &PlantState, cycles: u32, cfg: &BleedConfig) -> Result<PlantState> {
    if cycles == 0 {
        return Err(ControllerError::ZeroBleedCycles);
    }
    let mut state = *plant;
    for _ in 0..cycles {
        state.line.air_fraction = (state.line.air_fraction * cfg.factor).max(cfg.floor);
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// kPa
    pub operating_preload: f64,
    pub phasing: PhasingConfig,
    pub bleed: BleedConfig,
    /// Valve parameters the controller plans with.
    pub intake_belief: ValveParams,
    pub outlet_belief: ValveParams,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            operating_preload: 500.0,
            phasing: PhasingConfig::default(),
            bleed: BleedConfig::default(),
            intake_belief: ValveParams::default(),
            outlet_belief: ValveParams::default(),
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        self.phasing.validate()?;
        self.intake_belief.validate()?;
        self.outlet_belief.validate()?;
        if !(0.0..=REGULATOR_MAX).contains(&self.operating_preload) {
            return Err(ControllerError::InvalidConfig(format!(
                "operating preload {} kPa outside 0..={REGULATOR_MAX}",
                self.operating_preload
            )));
        }
        if !(self.bleed.factor > 0.0 && self.bleed.factor < 1.0 && self.bleed.floor >= 0.0) {
            return Err(ControllerError::InvalidConfig(format!(
                "bleed {:?}",
                self.bleed
            )));
        }
        Ok(())
    }
}

/// Drives the plant through the operating procedure and records events.
#[derive(Debug, Clone)]
pub struct Controller {
    plant: PlantState,
    mode: OperationMode,
    config: ControllerConfig,
    events: Vec<Event>,
    last_phasing: Vec<PhasePlan>,
}

impl Controller {
    pub fn new(plant: PlantState, config: ControllerConfig) -> Result<Self> {
        config.validate()?;
        let plant = plant.set_regulator(0.0)?;
        let mut controller = Self {
            plant,
            mode: OperationMode::depressurized(),
            config,
            events: Vec::new(),
            last_phasing: Vec::new(),
        };
        controller.record("start", 0.0);
        Ok(controller)
    }

    pub fn plant(&self) -> &PlantState {
        &self.plant
    }

    /// Replaces the plant, e.g. after an experiment advanced it.
    pub fn set_plant(&mut self, plant: PlantState) {
        self.plant = plant;
    }

    pub fn mode(&self) -> OperationMode {
        self.mode
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Corrections made by the most recent phasing run.
    pub fn last_phasing(&self) -> &[PhasePlan] {
        &self.last_phasing
    }

    pub fn record(&mut self, event: &str, value: f64) {
        self.events.push(Event {
            time: self.plant.time,
            mode: self.mode.mode,
            event: event.to_string(),
            value,
        });
    }

    /// Applies a command and runs transitory procedures to completion.
    pub fn execute(&mut self, command: Command) -> Result<OperationMode> {
        self.execute_with_cycles(command, self.config.bleed.cycles)
    }

    /// As [`Controller::execute`], with an explicit bleed cycle count.
    pub fn execute_with_cycles(
        &mut self,
        command: Command,
        bleed_cycles: u32,
    ) -> Result<OperationMode> {
        if command == Command::Bleed && bleed_cycles == 0 {
            return Err(ControllerError::ZeroBleedCycles);
        }
        let next = match transition(&self.mode, command, self.config.operating_preload) {
            Ok(next) => next,
            Err(e) => {
                self.record(&format!("rejected_{command}"), 0.0);
                return Err(e);
            }
        };
        self.enter(next)?;
        while self.mode.mode.is_transitory() {
            self.run_procedure(bleed_cycles)?;
        }
        Ok(self.mode)
    }

    fn enter(&mut self, mode: OperationMode) -> Result<()> {
        let changed = mode.mode != self.mode.mode;
        self.mode = mode;
        if changed {
            self.record("enter", mode.target_preload);
        }
        if !mode.mode.is_transitory() && self.plant.line.regulator_setpoint != mode.target_preload {
            self.plant = self.plant.set_regulator(mode.target_preload)?;
            self.record("preload_kPa", mode.target_preload);
        }
        Ok(())
    }

    fn advance(&mut self) -> Result<()> {
        let next = complete(&self.mode, self.config.operating_preload)
            .expect("transitory mode has a successor");
        self.enter(next)
    }

    fn run_procedure(&mut self, bleed_cycles: u32) -> Result<()> {
        match self.mode.mode {
            Mode::Pressurizing | Mode::Depressurizing => {
                self.plant = self.plant.set_regulator(self.mode.target_preload)?;
                self.record("preload_kPa", self.mode.target_preload);
                self.plant = settle(&self.plant, self.config.phasing.settle_time)?;
                self.advance()
            }
            Mode::Bleeding => {
                self.plant = self.plant.set_regulator(self.mode.target_preload)?;
                self.plant = bleed(&self.plant, bleed_cycles, &self.config.bleed)?;
                self.record("air_fraction", self.plant.line.air_fraction);
                self.advance()
            }
            Mode::Phasing => self.phase(),
            _ => Ok(()),
        }
    }

    fn phase(&mut self) -> Result<()> {
        let outcome = run_phasing_with_belief(
            &self.plant,
            &self.config.phasing,
            &self.config.intake_belief,
            &self.config.outlet_belief,
        );
        match outcome {
            Ok(outcome) => {
                self.plant = outcome.plant;
                for plan in &outcome.corrections {
                    self.record(&format!("{}_open_s", plan.valve), plan.open_time);
                }
                self.last_phasing = outcome.corrections;
                self.record("phase_offset_deg", outcome.final_offset);
                self.advance()
            }
            Err(ControllerError::DidNotConverge { plant, corrections }) => {
                self.plant = *plant;
                self.last_phasing = corrections.clone();
                self.record("phasing_failed", corrections.len() as f64);
                // fall back to storage pressure rather than operate out of phase
                self.enter(OperationMode::of(
                    Mode::Hibernating,
                    self.config.operating_preload,
                ))?;
                Err(ControllerError::DidNotConverge {
                    plant: Box::new(self.plant),
                    corrections,
                })
            }
            Err(e) => {
                self.enter(OperationMode::of(
                    Mode::Hibernating,
                    self.config.operating_preload,
                ))?;
                Err(e)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::PlantConfig;

    #[test]
    fn bleed_decays_to_floor() {
        let plant = PlantState::new(PlantConfig::default()).unwrap();
        assert_eq!(plant.line.air_fraction, 0.0064);
        let after = bleed(&plant, 1, &BleedConfig::default()).unwrap();
        assert_eq!(after.line.air_fraction, 0.0032);
        let after = bleed(&plant, 5, &BleedConfig::default()).unwrap();
        assert!((after.line.air_fraction - 2e-4).abs() < 1e-15);
        let after = bleed(&plant, 50, &BleedConfig::default()).unwrap();
        assert_eq!(after.line.air_fraction, 2e-4);
        assert!(matches!(
            bleed(&plant, 0, &BleedConfig::default()),
            Err(ControllerError::ZeroBleedCycles)
        ));
    }

    #[test]
    fn fresh_controller_is_depressurized() {
        let c = Controller::new(
            PlantState::new(PlantConfig::default()).unwrap(),
            ControllerConfig::default(),
        )
        .unwrap();
        assert_eq!(c.mode().mode, Mode::Depressurized);
        assert_eq!(c.plant().line.regulator_setpoint, 0.0);
    }

    #[test]
    fn pressurize_phases_and_operates() {
        let plant = PlantState::new(PlantConfig::default())
            .unwrap()
            .with_water_offset(0.8);
        let mut c = Controller::new(plant, ControllerConfig::default()).unwrap();
        let m = c.execute(Command::Pressurize).unwrap();
        assert_eq!(m.mode, Mode::Operating);
        assert_eq!(c.plant().line.regulator_setpoint, 500.0);
        assert!(!c.last_phasing().is_empty());
        assert!(measure_offset(c.plant(), 1).abs() <= 0.4);

        let m = c.execute(Command::Hibernate).unwrap();
        assert_eq!(m.mode, Mode::Hibernating);
        assert_eq!(c.plant().line.regulator_setpoint, 100.0);
    }

    #[test]
    fn illegal_command_is_logged() {
        let mut c = Controller::new(
            PlantState::new(PlantConfig::default()).unwrap(),
            ControllerConfig::default(),
        )
        .unwrap();
        assert!(c.execute(Command::Operate).is_err());
        assert_eq!(c.mode().mode, Mode::Depressurized);
        assert_eq!(c.events().last().unwrap().event, "rejected_operate");
    }
}
