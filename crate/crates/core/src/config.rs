//! Flat key-value configuration file.
//!
//! Every key is optional and carries its unit in the name; keys left out
//! keep the prototype defaults.
//!
//! ```toml
//! bulk_modulus_air_Pa = 1.42e5
//! fraction_air = 2e-4
//! coulomb_torque_Nm = 0.0
//! phasing_tolerance_deg = 0.4
//! ```

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::controller::ControllerConfig;
use crate::plant::PlantConfig;
use crate::stiffness::{CompositionMode, TransmissionConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value: {0}")]
    Invalid(String),
}

/// Everything a session needs, assembled from defaults plus file overrides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Config {
    pub transmission: TransmissionConfig,
    pub plant: PlantConfig,
    pub controller: ControllerConfig,
    /// Water in the line at start-up relative to phased, mL.
    pub initial_water_offset: f64,
    /// Undissolved air in the line at start-up, before any bleeding.
    pub line_air_fraction: f64,
    /// Logging interval, s.
    pub sample_interval: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            transmission: TransmissionConfig::prototype(),
            plant: PlantConfig::default(),
            controller: ControllerConfig::default(),
            initial_water_offset: 1.25,
            line_air_fraction: 0.0064,
            sample_interval: 1e-3,
        }
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Overrides {
    pressure_max_Pa: Option<f64>,
    radius_piston_m: Option<f64>,
    radius_capstan_m: Option<f64>,
    cable_modulus_Pa: Option<f64>,
    cable_area_m2: Option<f64>,
    cable_free_length_m: Option<f64>,
    stiffness_core_N_per_m: Option<f64>,
    stiffness_diaphragm_N_per_m: Option<f64>,
    bulk_modulus_water_Pa: Option<f64>,
    bulk_modulus_air_Pa: Option<f64>,
    area_cylinder_m2: Option<f64>,
    area_hose_m2: Option<f64>,
    length_cylinder_m: Option<f64>,
    length_hose_m: Option<f64>,
    fraction_air: Option<f64>,
    composition_mode: Option<CompositionMode>,

    inertia_kg_m2: Option<f64>,
    damping_Nms_per_rad: Option<f64>,
    stiffness_Nm_per_rad: Option<f64>,
    load_inertia_kg_m2: Option<f64>,
    coulomb_torque_Nm: Option<f64>,
    stiction_velocity_rad_per_s: Option<f64>,
    phase_constant_deg_per_mL: Option<f64>,
    intake_kv: Option<f64>,
    outlet_kv: Option<f64>,
    valve_latency_s: Option<f64>,
    line_pressure_gain_kPa_per_mL: Option<f64>,
    constant_delta_p: Option<bool>,
    max_substep_s: Option<f64>,
    encoder_counts_per_rev: Option<u32>,
    torque_noise_std_Nm: Option<f64>,
    pressure_resolution_kPa: Option<f64>,
    line_air_fraction: Option<f64>,
    initial_water_offset_mL: Option<f64>,
    sample_interval_s: Option<f64>,

    operating_preload_kPa: Option<f64>,
    phasing_tolerance_deg: Option<f64>,
    fine_delta_p_kPa: Option<f64>,
    max_iterations: Option<usize>,
    injection_pressure_kPa: Option<f64>,
    fine_band_deg: Option<f64>,
    settle_time_s: Option<f64>,
    intake_kv_belief: Option<f64>,
    outlet_kv_belief: Option<f64>,
    bleed_factor: Option<f64>,
    bleed_floor: Option<f64>,
    bleed_cycles: Option<u32>,
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let o: Overrides = toml::from_str(text)?;
        let mut c = Config::default();

        let t = &mut c.transmission;
        set(&mut t.pressure_max, o.pressure_max_Pa);
        set(&mut t.radius_piston, o.radius_piston_m);
        set(&mut t.radius_capstan, o.radius_capstan_m);
        set(&mut t.cable_modulus, o.cable_modulus_Pa);
        set(&mut t.cable_area, o.cable_area_m2);
        set(&mut t.cable_free_length, o.cable_free_length_m);
        set(&mut t.stiffness_core, o.stiffness_core_N_per_m);
        set(&mut t.stiffness_diaphragm, o.stiffness_diaphragm_N_per_m);
        set(&mut t.fluid.bulk_modulus_water, o.bulk_modulus_water_Pa);
        set(&mut t.fluid.bulk_modulus_air, o.bulk_modulus_air_Pa);
        set(&mut t.fluid.area_cylinder, o.area_cylinder_m2);
        set(&mut t.fluid.area_hose, o.area_hose_m2);
        set(&mut t.fluid.length_cylinder, o.length_cylinder_m);
        set(&mut t.fluid.length_hose, o.length_hose_m);
        if let Some(f) = o.fraction_air {
            t.fluid = t.fluid.with_air_fraction(f);
        }
        set(&mut t.composition_mode, o.composition_mode);

        let p = &mut c.plant;
        set(&mut p.model.inertia, o.inertia_kg_m2);
        set(&mut p.model.damping, o.damping_Nms_per_rad);
        set(&mut p.model.stiffness, o.stiffness_Nm_per_rad);
        set(&mut p.load_inertia, o.load_inertia_kg_m2);
        set(&mut p.coulomb_torque, o.coulomb_torque_Nm);
        set(&mut p.stiction_velocity, o.stiction_velocity_rad_per_s);
        set(&mut p.phase_constant, o.phase_constant_deg_per_mL);
        set(&mut p.intake.flow_factor, o.intake_kv);
        set(&mut p.outlet.flow_factor, o.outlet_kv);
        set(&mut p.intake.latency, o.valve_latency_s);
        set(&mut p.outlet.latency, o.valve_latency_s);
        set(&mut p.line_pressure_gain, o.line_pressure_gain_kPa_per_mL);
        set(&mut p.constant_delta_p, o.constant_delta_p);
        set(&mut p.integrator.max_substep, o.max_substep_s);
        set(
            &mut p.sensors.encoder_counts_per_rev,
            o.encoder_counts_per_rev,
        );
        set(&mut p.sensors.torque_noise_std, o.torque_noise_std_Nm);
        set(
            &mut p.sensors.pressure_resolution,
            o.pressure_resolution_kPa,
        );

        let k = &mut c.controller;
        set(&mut k.operating_preload, o.operating_preload_kPa);
        set(&mut k.phasing.tolerance, o.phasing_tolerance_deg);
        set(&mut k.phasing.fine_delta_p, o.fine_delta_p_kPa);
        set(&mut k.phasing.max_iterations, o.max_iterations);
        set(&mut k.phasing.injection_pressure, o.injection_pressure_kPa);
        set(&mut k.phasing.fine_band, o.fine_band_deg);
        set(&mut k.phasing.settle_time, o.settle_time_s);
        // the controller believes the plant's valves unless told otherwise
        k.intake_belief = p.intake;
        k.outlet_belief = p.outlet;
        set(&mut k.intake_belief.flow_factor, o.intake_kv_belief);
        set(&mut k.outlet_belief.flow_factor, o.outlet_kv_belief);
        set(&mut k.bleed.factor, o.bleed_factor);
        set(&mut k.bleed.floor, o.bleed_floor);
        set(&mut k.bleed.cycles, o.bleed_cycles);

        set(&mut c.initial_water_offset, o.initial_water_offset_mL);
        set(&mut c.sample_interval, o.sample_interval_s);
        set(&mut c.line_air_fraction, o.line_air_fraction);

        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.transmission.validate().map_err(|e| invalid(&e))?;
        self.plant.validate().map_err(|e| invalid(&e))?;
        self.controller.validate().map_err(|e| invalid(&e))?;
        if !(self.sample_interval > 0.0 && self.sample_interval <= crate::plant::MAX_STEP) {
            return Err(ConfigError::Invalid(format!(
                "sample interval {} s",
                self.sample_interval
            )));
        }
        if !(self.line_air_fraction > 0.0 && self.line_air_fraction < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "line air fraction {}",
                self.line_air_fraction
            )));
        }
        if !self.initial_water_offset.is_finite() {
            return Err(ConfigError::Invalid("initial water offset".into()));
        }
        Ok(())
    }
}
