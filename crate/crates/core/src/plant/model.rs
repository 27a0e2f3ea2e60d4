use serde::{Deserialize, Serialize};

use super::{PlantError, Result};

/// Mass-spring-damper seen at the input shaft with the output locked:
/// `J θ̈ + B θ̇ + K θ = τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderModel {
    /// kg·m²
    pub inertia: f64,
    /// N·m·s/rad
    pub damping: f64,
    /// N·m/rad
    pub stiffness: f64,
}

impl SecondOrderModel {
    /// Coefficients identified on the prototype from a clamped step test.
    pub const FITTED: SecondOrderModel = SecondOrderModel {
        inertia: 5.20e-5,
        damping: 0.0021,
        stiffness: 18.71,
    };

    /// Starting point derived from the theoretical stiffness budget.
    pub const THEORETICAL: SecondOrderModel = SecondOrderModel {
        inertia: 6.54e-5,
        damping: 0.005,
        stiffness: 23.54,
    };

    pub fn new(inertia: f64, damping: f64, stiffness: f64) -> Result<Self> {
        let model = Self {
            inertia,
            damping,
            stiffness,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.inertia > 0.0
            && self.inertia.is_finite()
            && self.damping >= 0.0
            && self.damping.is_finite()
            && self.stiffness >= 0.0
            && self.stiffness.is_finite();
        if ok {
            Ok(())
        } else {
            Err(PlantError::InvalidModel(*self))
        }
    }

    /// rad/s
    pub fn natural_frequency(&self) -> f64 {
        (self.stiffness / self.inertia).sqrt()
    }

    pub fn damping_ratio(&self) -> f64 {
        self.damping / (2.0 * (self.stiffness * self.inertia).sqrt())
    }

    /// Static compliance `θ / τ` at DC.
    pub fn dc_gain(&self) -> f64 {
        1.0 / self.stiffness
    }
}

impl Default for SecondOrderModel {
    fn default() -> Self {
        Self::FITTED
    }
}

/// Fixed-step semi-implicit Euler with internal sub-stepping.
///
/// Every public step of length `dt` is split into `ceil(dt / max_substep)`
/// equal sub-steps. The count depends only on `dt`, so two simulations with
/// the same `dt` advance identically regardless of the model parameters.
/// Accuracy needs `ωn · h ≪ 1`; the default 2.5 µs gives `ωn h ≈ 1.5e-3` for
/// the prototype (ωn ≈ 600 rad/s). Stability needs `ωn h < 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integrator {
    /// s
    pub max_substep: f64,
}

impl Integrator {
    pub const DEFAULT_MAX_SUBSTEP: f64 = 2.5e-6;

    pub fn substeps(&self, dt: f64) -> usize {
        ((dt / self.max_substep).ceil() as usize).max(1)
    }
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            max_substep: Self::DEFAULT_MAX_SUBSTEP,
        }
    }
}

/// Shaft parameters used by the sub-step kernel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Shaft {
    pub inertia: f64,
    pub damping: f64,
    pub coulomb: f64,
    pub stiction_velocity: f64,
}

impl Shaft {
    /// New angular velocity after a sub-step of length `h` under an applied
    /// `torque` and a restoring `spring` torque.
    ///
    /// Dry friction is applied implicitly: it can bring the shaft to rest
    /// within the sub-step but never reverse it. Below `stiction_velocity`
    /// the shaft is held as long as the net torque stays inside the friction
    /// band.
    #[inline]
    pub fn velocity_update(&self, omega: f64, torque: f64, spring: f64, h: f64) -> f64 {
        let free = omega + h * (torque - self.damping * omega - spring) / self.inertia;
        if self.coulomb == 0.0 {
            return free;
        }
        if omega.abs() < self.stiction_velocity && (torque - spring).abs() <= self.coulomb {
            return 0.0;
        }
        let slip = h * self.coulomb / self.inertia;
        if free.abs() <= slip {
            0.0
        } else {
            free - slip * free.signum()
        }
    }
}

/// Advances a linear single-shaft model one sub-step. Shared by the plant
/// (clamped output) and the identification predictor.
#[inline]
pub(crate) fn linear_substep(
    model: &SecondOrderModel,
    theta: f64,
    omega: f64,
    torque: f64,
    h: f64,
) -> (f64, f64) {
    let shaft = Shaft {
        inertia: model.inertia,
        damping: model.damping,
        coulomb: 0.0,
        stiction_velocity: 0.0,
    };
    let omega = shaft.velocity_update(omega, torque, model.stiffness * theta, h);
    (theta + h * omega, omega)
}
