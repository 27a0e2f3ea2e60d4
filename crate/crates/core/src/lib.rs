//! Modeling, simulation, phasing control and identification of a
//! cable-driven rolling-diaphragm hydrostatic transmission.

// `!(x > 0.0)` is how NaN is rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod controller;
pub mod experiment;
pub mod io;
pub mod plant;
pub mod stiffness;
pub mod sysid;

pub use config::Config;
pub use controller::{Command, Controller, Mode};
pub use experiment::ExperimentKind;
pub use plant::{PlantConfig, PlantState, SecondOrderModel, TrajectoryRecord};
pub use sysid::{ExperimentLog, FitResult};
