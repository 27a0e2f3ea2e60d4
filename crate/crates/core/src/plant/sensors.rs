//! Simulated encoders, torque cells and pressure transducer.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::state::PlantState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    /// Quadrature counts per shaft revolution.
    pub encoder_counts_per_rev: u32,
    /// Standard deviation of additive torque noise, N·m.
    pub torque_noise_std: f64,
    /// Pressure readout quantum, kPa.
    pub pressure_resolution: f64,
}

impl SensorConfig {
    /// Encoder resolution, rad.
    pub fn encoder_resolution(&self) -> f64 {
        TAU / self.encoder_counts_per_rev as f64
    }

    /// Encoder count for a shaft angle: `floor(theta / resolution)`.
    pub fn encoder_count(&self, theta: f64) -> i64 {
        (theta / TAU * self.encoder_counts_per_rev as f64).floor() as i64
    }

    pub fn count_to_angle(&self, count: i64) -> f64 {
        count as f64 * self.encoder_resolution()
    }
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            encoder_counts_per_rev: 8000,
            torque_noise_std: 0.002,
            pressure_resolution: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub encoder_in: i64,
    pub encoder_out: i64,
    /// N·m
    pub torque_in: f64,
    pub torque_out: f64,
    /// Water-line pressure, kPa.
    pub pressure_readout: f64,
}

impl SensorFrame {
    /// Phase between the shafts as the encoders see it, degrees.
    pub fn phase_offset(&self, config: &SensorConfig) -> f64 {
        config
            .count_to_angle(self.encoder_in - self.encoder_out)
            .to_degrees()
    }
}

/// Samples every sensor. The same `(state, seed)` always yields the same frame.
pub fn read_sensors(state: &PlantState, noise_seed: u64) -> SensorFrame {
    let config = &state.config.sensors;
    let (noise_in, noise_out) = if config.torque_noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let normal = Normal::new(0.0, config.torque_noise_std).expect("finite std");
        (normal.sample(&mut rng), normal.sample(&mut rng))
    } else {
        (0.0, 0.0)
    };
    let pressure_readout = if config.pressure_resolution > 0.0 {
        (state.line.water_pressure / config.pressure_resolution).round()
            * config.pressure_resolution
    } else {
        state.line.water_pressure
    };
    SensorFrame {
        encoder_in: config.encoder_count(state.theta_in),
        encoder_out: config.encoder_count(state.theta_out),
        torque_in: state.torque_in + noise_in,
        torque_out: state.torque_out + noise_out,
        pressure_readout,
    }
}

/// Per-sample seed derived from a session seed (splitmix64 finalizer).
pub fn sample_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
