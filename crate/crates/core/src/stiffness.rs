//! Lumped stiffness budget of the transmission.
//!
//! The transmission is modeled as a chain of springs in series between the
//! driven input capstan and a locked output capstan: the water column, a
//! pocket of undissolved air, a single cable run, the translating cores and
//! the two rolling diaphragms. Fluid and cable stiffnesses are computed from
//! geometry; core and diaphragm stiffnesses are measured constants.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `fraction_water + fraction_air == 1`.
pub const FRACTION_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StiffnessError {
    #[error("{phase} fraction is zero, the fluid column stiffness is unbounded")]
    ZeroFraction { phase: FluidPhase },
    #[error("{what} must be positive (got {value})")]
    NonPositiveInput { what: &'static str, value: f64 },
    #[error("{what} must lie in [0, 1] (got {value})")]
    FractionOutOfRange { what: &'static str, value: f64 },
    #[error("water and air fractions sum to {sum}, expected 1")]
    FractionSum { sum: f64 },
    #[error("{component} stiffness must be positive and finite (got {value})")]
    ZeroStiffnessComponent { component: Component, value: f64 },
    #[error("failed to write csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, StiffnessError>;

fn positive(what: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(StiffnessError::NonPositiveInput { what, value })
    }
}

/// Which constituent of the fluid line a stiffness refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FluidPhase {
    Water,
    Air,
}

impl fmt::Display for FluidPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FluidPhase::Water => f.write_str("water"),
            FluidPhase::Air => f.write_str("air"),
        }
    }
}

/// Fluid line geometry and composition.
///
/// Fractions are dimensionless (`1e-4` is 0.01 %).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidProperties {
    /// Pa
    pub bulk_modulus_water: f64,
    /// Pa
    pub bulk_modulus_air: f64,
    /// m²
    pub area_cylinder: f64,
    /// m²
    pub area_hose: f64,
    /// m
    pub length_cylinder: f64,
    /// m
    pub length_hose: f64,
    pub fraction_water: f64,
    pub fraction_air: f64,
}

impl FluidProperties {
    /// Air fraction of the default line: 0.01 %.
    pub const DEFAULT_AIR_FRACTION: f64 = 1e-4;

    /// Prototype line with the values that reproduce the published
    /// component budget: 142 kPa air bulk modulus and 0.01 % undissolved air.
    pub fn prototype() -> Self {
        Self {
            bulk_modulus_water: 2.20e9,
            bulk_modulus_air: 1.42e5,
            area_cylinder: 9.62e-4,
            area_hose: 3.17e-5,
            length_cylinder: 3.80e-2,
            length_hose: 4.26e-2,
            fraction_water: 1.0 - Self::DEFAULT_AIR_FRACTION,
            fraction_air: Self::DEFAULT_AIR_FRACTION,
        }
    }

    /// The variable table exactly as printed: 1.42 GPa for air and a
    /// 0.99 / 0.01 water/air split.
    ///
    /// Only the water stiffness computed from this set matches its printed
    /// estimate; the air entry does not follow from the formula.
    pub fn table_as_printed() -> Self {
        Self {
            bulk_modulus_air: 1.42e9,
            fraction_water: 0.99,
            fraction_air: 0.01,
            ..Self::prototype()
        }
    }

    /// Same line with a different undissolved-air fraction; the water
    /// fraction takes the complement.
    pub fn with_air_fraction(&self, fraction_air: f64) -> Self {
        Self {
            fraction_air,
            fraction_water: 1.0 - fraction_air,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("bulk_modulus_water", self.bulk_modulus_water)?;
        positive("bulk_modulus_air", self.bulk_modulus_air)?;
        positive("area_cylinder", self.area_cylinder)?;
        positive("area_hose", self.area_hose)?;
        positive("length_cylinder", self.length_cylinder)?;
        positive("length_hose", self.length_hose)?;
        for (what, value) in [
            ("fraction_water", self.fraction_water),
            ("fraction_air", self.fraction_air),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(StiffnessError::FractionOutOfRange { what, value });
            }
        }
        let sum = self.fraction_water + self.fraction_air;
        if (sum - 1.0).abs() > FRACTION_SUM_TOLERANCE {
            return Err(StiffnessError::FractionSum { sum });
        }
        Ok(())
    }

    fn phase_terms(&self, phase: FluidPhase) -> (f64, f64) {
        match phase {
            FluidPhase::Water => (self.fraction_water, self.bulk_modulus_water),
            FluidPhase::Air => (self.fraction_air, self.bulk_modulus_air),
        }
    }
}

impl Default for FluidProperties {
    fn default() -> Self {
        Self::prototype()
    }
}

/// How the translating-core compliance enters the series sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionMode {
    /// The two cores act in parallel: compliance `1 / (2 K_core)`.
    CoresParallel,
    /// One core per actuator unit, in series: compliance `2 / K_core`.
    /// Reproduces the published total and compliance shares.
    #[default]
    CoresSeries,
}

impl CompositionMode {
    fn core_compliance(self, k_core: f64) -> f64 {
        match self {
            CompositionMode::CoresParallel => 1.0 / (2.0 * k_core),
            CompositionMode::CoresSeries => 2.0 / k_core,
        }
    }
}

/// Geometry, ratings and measured constants for one transmission pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionConfig {
    /// Maximum rated diaphragm pressure, Pa.
    pub pressure_max: f64,
    /// m
    pub radius_piston: f64,
    /// m
    pub radius_capstan: f64,
    /// Pa
    pub cable_modulus: f64,
    /// Metallic cross-section, m².
    pub cable_area: f64,
    /// Free cable length between capstan and wrap-around wall, m.
    pub cable_free_length: f64,
    /// N/m
    pub stiffness_core: f64,
    /// N/m
    pub stiffness_diaphragm: f64,
    pub fluid: FluidProperties,
    pub composition_mode: CompositionMode,
}

impl TransmissionConfig {
    /// Prototype rig. Cable area and free length are calibrated so that
    /// `E A / L = 8.98e6 N/m`.
    pub fn prototype() -> Self {
        Self {
            pressure_max: 1.7e6,
            radius_piston: 0.015,
            radius_capstan: 0.010,
            cable_modulus: 200e9,
            cable_area: 1.0e-6,
            cable_free_length: 200e9 * 1.0e-6 / 8.98e6,
            stiffness_core: 3.80e6,
            stiffness_diaphragm: 1.02e6,
            fluid: FluidProperties::prototype(),
            composition_mode: CompositionMode::CoresSeries,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("pressure_max", self.pressure_max)?;
        positive("radius_piston", self.radius_piston)?;
        positive("radius_capstan", self.radius_capstan)?;
        positive("cable_modulus", self.cable_modulus)?;
        positive("cable_area", self.cable_area)?;
        positive("cable_free_length", self.cable_free_length)?;
        positive("stiffness_core", self.stiffness_core)?;
        positive("stiffness_diaphragm", self.stiffness_diaphragm)?;
        self.fluid.validate()
    }
}

impl Default for TransmissionConfig {
    fn default() -> Self {
        Self::prototype()
    }
}

/// Series elements of the stiffness chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Water,
    Air,
    Cable,
    Core,
    Diaphragm,
}

impl Component {
    pub const ALL: [Component; 5] = [
        Component::Water,
        Component::Air,
        Component::Cable,
        Component::Core,
        Component::Diaphragm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Water => "water",
            Component::Air => "air",
            Component::Cable => "cable",
            Component::Core => "core",
            Component::Diaphragm => "diaphragm",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Individual element stiffnesses, N/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentStiffness {
    pub water: f64,
    pub air: f64,
    pub cable: f64,
    pub core: f64,
    pub diaphragm: f64,
}

impl ComponentStiffness {
    /// The published per-component estimates.
    pub fn published() -> Self {
        Self {
            water: 1.54e6,
            air: 9.97e5,
            cable: 8.98e6,
            core: 3.80e6,
            diaphragm: 1.02e6,
        }
    }

    pub fn get(&self, component: Component) -> f64 {
        match component {
            Component::Water => self.water,
            Component::Air => self.air,
            Component::Cable => self.cable,
            Component::Core => self.core,
            Component::Diaphragm => self.diaphragm,
        }
    }

    /// Compliance (m/N) each element contributes to the series sum.
    pub fn compliance_terms(&self, mode: CompositionMode) -> Result<BTreeMap<Component, f64>> {
        let mut terms = BTreeMap::new();
        for component in Component::ALL {
            let k = self.get(component);
            if !(k > 0.0 && k.is_finite()) {
                return Err(StiffnessError::ZeroStiffnessComponent {
                    component,
                    value: k,
                });
            }
            let compliance = match component {
                Component::Core => mode.core_compliance(k),
                Component::Diaphragm => 2.0 / k,
                _ => 1.0 / k,
            };
            terms.insert(component, compliance);
        }
        Ok(terms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StiffnessBreakdown {
    pub k_water: f64,
    pub k_air: f64,
    pub k_cable: f64,
    pub k_core: f64,
    pub k_diaphragm: f64,
    /// N/m
    pub k_total_linear: f64,
    /// N·m/rad
    pub k_total_rotational: f64,
    /// Fraction of the total compliance carried by each element.
    pub compliance_share: BTreeMap<Component, f64>,
    /// Compliance of each series term, m/N.
    pub compliance: BTreeMap<Component, f64>,
}

impl StiffnessBreakdown {
    pub fn components(&self) -> ComponentStiffness {
        ComponentStiffness {
            water: self.k_water,
            air: self.k_air,
            cable: self.k_cable,
            core: self.k_core,
            diaphragm: self.k_diaphragm,
        }
    }

    /// Stiffness of each series term on its own, `1 / compliance`.
    pub fn effective_term_stiffness(&self, component: Component) -> f64 {
        1.0 / self.compliance[&component]
    }

    /// Rows of `component,stiffness_N_per_m,compliance_share`, followed by
    /// `total_linear` and `total_rotational` rows with an empty share.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| StiffnessError::Csv(e.to_string());
        out.write_record(["component", "stiffness_N_per_m", "compliance_share"])
            .map_err(csv_err)?;
        let components = self.components();
        for component in Component::ALL {
            out.write_record([
                component.name().to_string(),
                format!("{:e}", components.get(component)),
                format!("{:.6}", self.compliance_share[&component]),
            ])
            .map_err(csv_err)?;
        }
        out.write_record([
            "total_linear".to_string(),
            format!("{:e}", self.k_total_linear),
            String::new(),
        ])
        .map_err(csv_err)?;
        out.write_record([
            "total_rotational".to_string(),
            format!("{:e}", self.k_total_rotational),
            String::new(),
        ])
        .map_err(csv_err)?;
        out.flush().map_err(|e| StiffnessError::Csv(e.to_string()))
    }
}

/// Axial stiffness of one fluid constituent over two diaphragm cylinders and
/// the connecting hose, scaled by that constituent's volume fraction:
///
/// ```text
/// K = [ p · (2 L_cyl / (A_cyl E) + L_hose / (A_hose E)) ]⁻¹
/// ```
pub fn fluid_stiffness(props: &FluidProperties, phase: FluidPhase) -> Result<f64> {
    props.validate()?;
    let (fraction, modulus) = props.phase_terms(phase);
    if fraction == 0.0 {
        return Err(StiffnessError::ZeroFraction { phase });
    }
    let compliance = fraction
        * (2.0 * props.length_cylinder / (props.area_cylinder * modulus)
            + props.length_hose / (props.area_hose * modulus));
    Ok(1.0 / compliance)
}

/// `E A / L`
pub fn cable_stiffness(modulus: f64, area: f64, length: f64) -> Result<f64> {
    let modulus = positive("cable modulus", modulus)?;
    let area = positive("cable area", area)?;
    let length = positive("cable length", length)?;
    Ok(modulus * area / length)
}

/// Series-combines element stiffnesses and converts the result to a torsional
/// stiffness about a capstan of radius `radius_capstan` (`K_rot = K_lin r²`).
pub fn compose(
    components: &ComponentStiffness,
    mode: CompositionMode,
    radius_capstan: f64,
) -> Result<StiffnessBreakdown> {
    let radius_capstan = positive("radius_capstan", radius_capstan)?;
    let compliance = components.compliance_terms(mode)?;
    let total_compliance: f64 = compliance.values().sum();
    let compliance_share = compliance
        .iter()
        .map(|(&c, &term)| (c, term / total_compliance))
        .collect();
    let k_total_linear = 1.0 / total_compliance;
    Ok(StiffnessBreakdown {
        k_water: components.water,
        k_air: components.air,
        k_cable: components.cable,
        k_core: components.core,
        k_diaphragm: components.diaphragm,
        k_total_linear,
        k_total_rotational: k_total_linear * radius_capstan * radius_capstan,
        compliance_share,
        compliance,
    })
}

/// Element stiffnesses implied by a configuration.
pub fn component_stiffness(config: &TransmissionConfig) -> Result<ComponentStiffness> {
    config.validate()?;
    Ok(ComponentStiffness {
        water: fluid_stiffness(&config.fluid, FluidPhase::Water)?,
        air: fluid_stiffness(&config.fluid, FluidPhase::Air)?,
        cable: cable_stiffness(
            config.cable_modulus,
            config.cable_area,
            config.cable_free_length,
        )?,
        core: config.stiffness_core,
        diaphragm: config.stiffness_diaphragm,
    })
}

pub fn total_stiffness(config: &TransmissionConfig) -> Result<StiffnessBreakdown> {
    let components = component_stiffness(config)?;
    compose(&components, config.composition_mode, config.radius_capstan)
}

/// Total linear stiffness (N/m) for each undissolved-air fraction.
pub fn air_fraction_sweep(
    config: &TransmissionConfig,
    fractions: &[f64],
) -> Result<Vec<(f64, f64)>> {
    fractions
        .iter()
        .map(|&fraction| {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(StiffnessError::FractionOutOfRange {
                    what: "air fraction",
                    value: fraction,
                });
            }
            let swept = TransmissionConfig {
                fluid: config.fluid.with_air_fraction(fraction),
                ..*config
            };
            Ok((fraction, total_stiffness(&swept)?.k_total_linear))
        })
        .collect()
}

/// Largest output force the diaphragm pair supports, `(P_max / 2) π r²`.
pub fn max_force(pressure_max: f64, radius_piston: f64) -> Result<f64> {
    let p = positive("pressure_max", pressure_max)?;
    let r = positive("radius_piston", radius_piston)?;
    Ok(p / 2.0 * (PI * r * r))
}

pub fn max_torque(force: f64, radius_capstan: f64) -> f64 {
    force * radius_capstan
}

/// Preload tensions and moment arms of the balanced capstan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CableTensionSet {
    /// N
    pub tension_left: f64,
    /// N
    pub tension_right: f64,
    /// m
    pub arm_left: f64,
    /// m
    pub arm_right: f64,
}

/// One cable departure from the capstan: its tension, moment arm and the
/// sense of the moment it produces about the bearing axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableDeparture {
    pub tension: f64,
    pub arm: f64,
    pub sense: f64,
}

impl CableDeparture {
    pub fn moment(&self) -> f64 {
        self.sense * self.tension * self.arm
    }
}

impl CableTensionSet {
    /// The four departures of the symmetric layout. Each side's cable leaves
    /// the capstan twice with opposite moment sense.
    pub fn departures(&self) -> [CableDeparture; 4] {
        let d = |tension, arm, sense| CableDeparture {
            tension,
            arm,
            sense,
        };
        [
            d(self.tension_left, self.arm_left, 1.0),
            d(self.tension_left, self.arm_left, -1.0),
            d(self.tension_right, self.arm_right, 1.0),
            d(self.tension_right, self.arm_right, -1.0),
        ]
    }
}

/// Signed sum of departure moments, N·m.
pub fn moment_sum(departures: &[CableDeparture]) -> f64 {
    departures.iter().map(CableDeparture::moment).sum()
}

/// Net bearing moment of the balanced layout; zero for any tensions.
pub fn moment_balance_residual(tensions: &CableTensionSet) -> f64 {
    moment_sum(&tensions.departures())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_props() -> FluidProperties {
        FluidProperties {
            bulk_modulus_water: 1.0,
            bulk_modulus_air: 1.0,
            area_cylinder: 1.0,
            area_hose: 1.0,
            length_cylinder: 1.0,
            length_hose: 1.0,
            fraction_water: 1.0,
            fraction_air: 0.0,
        }
    }

    #[test]
    fn unit_fluid_line() {
        assert_relative_eq!(
            fluid_stiffness(&unit_props(), FluidPhase::Water).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn printed_water_estimate() {
        let k = fluid_stiffness(&FluidProperties::table_as_printed(), FluidPhase::Water).unwrap();
        assert_relative_eq!(k, 1.56e6, max_relative = 0.03);
        assert_relative_eq!(k, 1.58e6, max_relative = 0.03);
        let k = fluid_stiffness(&FluidProperties::prototype(), FluidPhase::Water).unwrap();
        assert_relative_eq!(k, 1.54e6, max_relative = 0.03);
    }

    #[test]
    fn zero_fraction_is_an_error() {
        assert_eq!(
            fluid_stiffness(&unit_props(), FluidPhase::Air),
            Err(StiffnessError::ZeroFraction {
                phase: FluidPhase::Air
            })
        );
    }

    #[test]
    fn doubling_fraction_halves_stiffness() {
        let a = FluidProperties::prototype();
        let b = a.with_air_fraction(2.0 * a.fraction_air);
        let ka = fluid_stiffness(&a, FluidPhase::Air).unwrap();
        let kb = fluid_stiffness(&b, FluidPhase::Air).unwrap();
        assert_relative_eq!(kb, ka / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn invalid_props_rejected() {
        let mut p = FluidProperties::prototype();
        p.fraction_water = 0.5;
        assert!(matches!(
            p.validate(),
            Err(StiffnessError::FractionSum { .. })
        ));
        let mut p = FluidProperties::prototype();
        p.area_hose = 0.0;
        assert!(matches!(
            fluid_stiffness(&p, FluidPhase::Water),
            Err(StiffnessError::NonPositiveInput {
                what: "area_hose",
                ..
            })
        ));
    }

    #[test]
    fn cable() {
        assert_relative_eq!(
            cable_stiffness(200e9, 1e-6, 0.02).unwrap(),
            1.0e7,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            cable_stiffness(200e9, 1e-6, 0.01).unwrap(),
            2.0 * cable_stiffness(200e9, 1e-6, 0.02).unwrap(),
            max_relative = 1e-12
        );
        let c = TransmissionConfig::prototype();
        assert_relative_eq!(
            cable_stiffness(c.cable_modulus, c.cable_area, c.cable_free_length).unwrap(),
            8.98e6,
            max_relative = 1e-12
        );
        assert!(matches!(
            cable_stiffness(200e9, 0.0, 0.02),
            Err(StiffnessError::NonPositiveInput { .. })
        ));
    }

    #[test]
    fn zero_component_rejected() {
        let mut c = ComponentStiffness::published();
        c.core = 0.0;
        assert!(matches!(
            compose(&c, CompositionMode::CoresSeries, 0.01),
            Err(StiffnessError::ZeroStiffnessComponent {
                component: Component::Core,
                ..
            })
        ));
    }

    #[test]
    fn load_limits() {
        let f = max_force(1.7e6, 0.015).unwrap();
        assert!((600.0..=601.0).contains(&f), "{f}");
        assert!(matches!(
            max_force(0.0, 0.015),
            Err(StiffnessError::NonPositiveInput { .. })
        ));
        assert_relative_eq!(
            max_force(1.7e6, 0.03).unwrap(),
            4.0 * f,
            max_relative = 1e-12
        );
        assert_relative_eq!(max_torque(600.0, 0.010), 6.0, max_relative = 1e-12);
        assert_eq!(max_torque(0.0, 0.010), 0.0);
        assert_relative_eq!(max_torque(600.8, 0.010), 6.008, max_relative = 1e-12);
    }

    #[test]
    fn balanced_capstan() {
        let t = CableTensionSet {
            tension_left: 100.0,
            tension_right: 100.0,
            arm_left: 0.01,
            arm_right: 0.01,
        };
        assert_eq!(moment_balance_residual(&t), 0.0);
        let t = CableTensionSet {
            tension_left: 50.0,
            tension_right: 200.0,
            arm_left: 0.01,
            arm_right: 0.02,
        };
        assert_eq!(moment_balance_residual(&t), 0.0);

        let delta = 1e-3;
        let mut d = t.departures();
        d[2].arm += delta;
        assert_relative_eq!(moment_sum(&d), t.tension_right * delta, max_relative = 1e-9);
    }

    #[test]
    fn breakdown_csv() {
        let b = total_stiffness(&TransmissionConfig::prototype()).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("component,stiffness_N_per_m,compliance_share")
        );
        assert!(lines.next().unwrap().starts_with("water,"));
        assert_eq!(text.lines().count(), 8);
    }
}
