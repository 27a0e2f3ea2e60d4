use std::fmt;

use serde::{Deserialize, Serialize};

use super::{PlantError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ValveState {
    Open,
    #[default]
    Closed,
}

/// Solenoid valve between the water line and the refill loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValveParams {
    /// Flow factor, mL/(s·√kPa).
    pub flow_factor: f64,
    /// Delay between the open command and flow starting, s.
    pub latency: f64,
    pub state: ValveState,
}

impl ValveParams {
    /// Chosen so a 0.4° correction at a 15 kPa drop takes about 50 ms.
    pub const DEFAULT_FLOW_FACTOR: f64 = 0.2153;
    pub const DEFAULT_LATENCY: f64 = 0.010;

    pub fn new(flow_factor: f64, latency: f64) -> Result<Self> {
        let params = Self {
            flow_factor,
            latency,
            state: ValveState::Closed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.flow_factor > 0.0 && self.flow_factor.is_finite()) || !(self.latency >= 0.0) {
            return Err(PlantError::InvalidValve(*self));
        }
        Ok(())
    }

    pub fn opened(self) -> Self {
        Self {
            state: ValveState::Open,
            ..self
        }
    }
}

impl Default for ValveParams {
    fn default() -> Self {
        Self {
            flow_factor: Self::DEFAULT_FLOW_FACTOR,
            latency: Self::DEFAULT_LATENCY,
            state: ValveState::Closed,
        }
    }
}

/// Which of the two refill valves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Valve {
    /// Admits water from the pressurized supply.
    Intake,
    /// Releases water to the depressurized reservoir.
    Outlet,
}

impl fmt::Display for Valve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valve::Intake => f.write_str("intake"),
            Valve::Outlet => f.write_str("outlet"),
        }
    }
}

/// Volumetric flow `Q = Kv √ΔP` in mL/s for a pressure drop in kPa.
pub fn valve_flow(valve: &ValveParams, delta_p: f64) -> Result<f64> {
    if delta_p < 0.0 || delta_p.is_nan() {
        return Err(PlantError::NegativePressureDrop(delta_p));
    }
    Ok(match valve.state {
        ValveState::Open => valve.flow_factor * delta_p.sqrt(),
        ValveState::Closed => 0.0,
    })
}

/// Default shaft phase change per millilitre of water, deg/mL.
pub const PHASE_PER_ML: f64 = 9.594;

/// Water volume (mL) that shifts the shaft phase by `delta_phi` degrees.
pub fn volume_for_phase(delta_phi: f64, phase_constant: f64) -> f64 {
    debug_assert!(phase_constant > 0.0);
    delta_phi.abs() / phase_constant
}
