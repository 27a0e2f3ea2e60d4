use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdtx_core::controller::*;
use rdtx_core::plant::*;

fn pressurized(phi_deg: f64, config: PlantConfig) -> PlantState {
    PlantState::new(config)
        .unwrap()
        .with_water_offset(phi_deg / config.phase_constant)
        .set_regulator(500.0)
        .unwrap()
}

fn belief(scale: f64) -> ValveParams {
    let mut v = ValveParams::default();
    v.flow_factor *= scale;
    v
}

#[test]
fn ideal_plant_needs_one_correction() {
    let config = PlantConfig {
        constant_delta_p: true,
        ..PlantConfig::default()
    };
    let plant = pressurized(10.0, config);
    let out = run_phasing(&plant, &PhasingConfig::default()).unwrap();
    assert_eq!(out.corrections.len(), 1);
    assert!(out.final_offset.abs() < 0.4);
    assert!(out.plant.phase_offset().abs() < 0.4);

    // The one plan, by hand: outlet against the line pressure, which sits
    // 2 kPa/mL above the 500 kPa preload.
    let plan = out.corrections[0];
    assert_eq!(plan.valve, Valve::Outlet);
    let line = 500.0 + 2.0 * 10.0 / PHASE_PER_ML;
    assert_relative_eq!(plan.delta_p, line, max_relative = 1e-12);
    let expected = plan.measured_offset.abs()
        / (PHASE_PER_ML * ValveParams::DEFAULT_FLOW_FACTOR * line.sqrt());
    assert_relative_eq!(plan.open_time, expected, max_relative = 1e-9);
    assert_eq!(out.plant.line.regulator_setpoint, 500.0);
}

#[test]
fn kv_error_needs_a_few_corrections() {
    let plant = pressurized(10.0, PlantConfig::default());
    let b = belief(1.0 / 1.1);
    let out = run_phasing_with_belief(&plant, &PhasingConfig::default(), &b, &b).unwrap();
    assert!(
        (1..=3).contains(&out.corrections.len()),
        "{}",
        out.corrections.len()
    );
    assert!(out.final_offset.abs() <= 0.4);
}

#[test]
fn small_offset_needs_nothing() {
    let plant = pressurized(0.3, PlantConfig::default());
    let out = run_phasing(&plant, &PhasingConfig::default()).unwrap();
    assert!(out.corrections.is_empty());
    assert_eq!(
        out.plant.line.water_volume_offset,
        plant.line.water_volume_offset
    );
}

#[test]
fn fine_corrections_use_the_reduced_pressure_drop() {
    let plant = pressurized(-1.5, PlantConfig::default());
    let out = run_phasing(&plant, &PhasingConfig::default()).unwrap();
    let plan = out.corrections[0];
    assert_eq!(plan.valve, Valve::Intake);
    assert!((plan.delta_p - 15.0).abs() < 0.5, "{}", plan.delta_p);
    // preload restored afterwards
    assert_eq!(out.plant.line.regulator_setpoint, 500.0);
}

#[test]
fn random_offsets_with_kv_error_converge() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = PhasingConfig::default();
    for case in 0..100 {
        let phi = rng.gen_range(-30.0..=30.0);
        let scale = 1.0 + rng.gen_range(-0.25..=0.25);
        let plant = pressurized(phi, PlantConfig::default());
        let out = run_phasing_with_belief(&plant, &cfg, &belief(scale), &belief(scale))
            .unwrap_or_else(|e| panic!("case {case}: phi {phi} kv scale {scale}: {e}"));
        assert!(out.final_offset.abs() <= cfg.tolerance);
        assert!(out.corrections.len() <= cfg.max_iterations);
    }
}

#[test]
fn half_turn_offsets_converge() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..30 {
        let phi = rng.gen_range(-180.0..=180.0);
        let scale = 1.0 + rng.gen_range(-0.25..=0.25);
        let plant = pressurized(phi, PlantConfig::default());
        let out = run_phasing_with_belief(
            &plant,
            &PhasingConfig::default(),
            &belief(scale),
            &belief(scale),
        )
        .unwrap();
        assert!(out.final_offset.abs() <= 0.4, "{phi}");
    }
}

#[test]
fn offset_never_grows_while_kv_error_is_moderate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let phi = rng.gen_range(-30.0..=30.0);
        let scale = 1.0 + rng.gen_range(-0.45..=0.45);
        let plant = pressurized(phi, PlantConfig::default());
        let out = run_phasing_with_belief(
            &plant,
            &PhasingConfig::default(),
            &belief(scale),
            &belief(scale),
        )
        .unwrap();
        let mut seen: Vec<f64> = out
            .corrections
            .iter()
            .map(|p| p.measured_offset.abs())
            .collect();
        seen.push(out.final_offset.abs());
        for w in seen.windows(2) {
            assert!(w[1] <= w[0], "{seen:?}");
        }
    }
}

#[test]
fn iteration_cap_reports_the_log() {
    let plant = pressurized(20.0, PlantConfig::default());
    let cfg = PhasingConfig {
        max_iterations: 2,
        ..PhasingConfig::default()
    };
    // believing the valves are 5x faster than they are leaves most of the offset
    match run_phasing_with_belief(&plant, &cfg, &belief(5.0), &belief(5.0)) {
        Err(ControllerError::DidNotConverge { plant, corrections }) => {
            assert_eq!(corrections.len(), 2);
            assert_eq!(plant.line.regulator_setpoint, 500.0);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn regulator_stays_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let preload = rng.gen_range(100.0..=860.0);
        let phi = rng.gen_range(-30.0..=30.0);
        let plant = PlantState::new(PlantConfig::default())
            .unwrap()
            .with_water_offset(phi / PHASE_PER_ML)
            .set_regulator(preload)
            .unwrap();
        let out = run_phasing(&plant, &PhasingConfig::default()).unwrap();
        assert!(out.plant.line.regulator_setpoint <= REGULATOR_MAX);
        assert_eq!(out.plant.line.regulator_setpoint, preload);
    }
    assert!(PlantState::new(PlantConfig::default())
        .unwrap()
        .set_regulator(861.0)
        .is_err());
}
