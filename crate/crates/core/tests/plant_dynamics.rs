use approx::assert_relative_eq;
use rdtx_core::plant::*;
use rdtx_core::sysid::simulate_model;

/// Underdamped unit-step response of `J θ'' + B θ' + K θ = τ` from rest.
fn closed_form_step(model: &SecondOrderModel, torque: f64, t: f64) -> f64 {
    let wn = (model.stiffness / model.inertia).sqrt();
    let zeta = model.damping / (2.0 * (model.inertia * model.stiffness).sqrt());
    assert!(zeta < 1.0);
    let wd = wn * (1.0 - zeta * zeta).sqrt();
    let decay = (-zeta * wn * t).exp();
    torque / model.stiffness * (1.0 - decay * ((wd * t).cos() + zeta * wn / wd * (wd * t).sin()))
}

fn worst_error(model: &SecondOrderModel, theta: &[f64], torque: f64, dt: f64) -> f64 {
    let steady = torque / model.stiffness;
    theta
        .iter()
        .enumerate()
        .map(|(i, &th)| (th - closed_form_step(model, torque, (i + 1) as f64 * dt)).abs() / steady)
        .fold(0.0, f64::max)
}

#[test]
fn clamped_plant_matches_closed_form_step() {
    let config = PlantConfig::default().frictionless();
    let dt = 1e-3;
    let mut state = PlantState::new(config).unwrap();
    let mut theta = Vec::new();
    for _ in 0..1000 {
        state = state.step(0.2, true, dt).unwrap();
        theta.push(state.theta_in);
    }
    let err = worst_error(&config.model, &theta, 0.2, dt);
    assert!(err < 0.01, "worst relative error {err}");
}

#[test]
fn predictor_matches_closed_form_for_other_models() {
    for model in [
        SecondOrderModel::FITTED,
        SecondOrderModel::THEORETICAL,
        SecondOrderModel::new(2e-4, 0.01, 5.0).unwrap(),
    ] {
        let wn = model.natural_frequency();
        let dt = (0.5 / wn).min(1e-3);
        let theta = simulate_model(&model, &vec![0.5; 2000], dt).unwrap();
        let err = worst_error(&model, &theta, 0.5, dt);
        assert!(err < 0.01, "{model:?}: {err}");
    }
}

#[test]
fn plant_and_predictor_agree_bit_for_bit() {
    let config = PlantConfig::default().frictionless();
    let torque: Vec<f64> = (0..500).map(|i| ((i as f64) * 0.037).sin() * 0.4).collect();
    let predicted = simulate_model(&config.model, &torque, 1e-3).unwrap();
    let mut state = PlantState::new(config).unwrap();
    for (tau, expected) in torque.iter().zip(&predicted) {
        state = state.step(*tau, true, 1e-3).unwrap();
        assert_eq!(state.theta_in, *expected);
    }
}

#[test]
fn lossless_free_plant_conserves_energy() {
    let mut config = PlantConfig::default().frictionless();
    config.model.damping = 0.0;
    config.load_inertia = 0.0387;
    let mut state = PlantState::new(config).unwrap();
    state.theta_in = 0.05;
    let e0 = state.mechanical_energy();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        state = state.step(0.0, false, 1e-3).unwrap();
        worst = worst.max((state.mechanical_energy() - e0).abs() / e0);
    }
    assert!(worst < 1e-3, "energy drift {worst}");
}

#[test]
fn damping_and_friction_only_remove_energy() {
    let mut state = PlantState::new(PlantConfig::default()).unwrap();
    state.theta_in = 0.05;
    let mut last = state.mechanical_energy();
    for _ in 0..300 {
        state = state.step(0.0, false, 1e-3).unwrap();
        let e = state.mechanical_energy();
        assert!(e <= last * (1.0 + 1e-3));
        last = e;
    }
    assert!(last < 0.05 * 0.5 * 18.71 * 0.05 * 0.05);
}

#[test]
fn phase_offset_follows_water_volume() {
    let config = PlantConfig {
        intake: ValveParams::new(1.0, 0.0).unwrap(),
        outlet: ValveParams::new(1.0, 0.0).unwrap(),
        constant_delta_p: true,
        ..PlantConfig::default()
    };
    let mut s = PlantState::new(config).unwrap();
    s.line.supply_pressure = 4.0;
    let s = s.apply_valve(Valve::Intake, 0.5);
    // Q = 1 · √4 = 2 mL/s for 0.5 s
    assert_relative_eq!(s.line.water_volume_offset, 1.0, max_relative = 1e-12);
    assert_relative_eq!(s.phase_offset(), PHASE_PER_ML, max_relative = 1e-12);
    assert_relative_eq!(s.line.intake_volume, 1.0, max_relative = 1e-12);
}

#[test]
fn valve_flow_slows_as_pressures_equalize() {
    let plant = PlantState::new(PlantConfig::default())
        .unwrap()
        .set_regulator(690.0)
        .unwrap();
    let frozen = PlantState::new(PlantConfig {
        constant_delta_p: true,
        ..PlantConfig::default()
    })
    .unwrap()
    .set_regulator(690.0)
    .unwrap();
    let a = plant.flow_for(Valve::Intake, 2.0);
    let b = frozen.flow_for(Valve::Intake, 2.0);
    assert!(a.line.water_volume_offset < b.line.water_volume_offset);
    assert!(a.line.water_pressure > plant.line.water_pressure);
}

#[test]
fn shafts_settle_at_the_phase_offset() {
    let mut s = PlantState::new(PlantConfig::default().frictionless()).unwrap();
    s.line.water_volume_offset = 0.5;
    for _ in 0..2000 {
        s = s.step(0.0, false, 1e-3).unwrap();
    }
    let twist = (s.theta_in - s.theta_out).to_degrees();
    assert_relative_eq!(twist, 0.5 * PHASE_PER_ML, max_relative = 1e-3);
    let frame = read_sensors(&s, 3);
    assert!((frame.phase_offset(&s.config.sensors) - twist).abs() <= 2.0 * 360.0 / 8000.0);
}

#[test]
fn schedule_csv_round_trip() {
    let rows = vec![
        ScheduleRecord {
            time: 0.0,
            torque_in: 0.1,
            output_clamped: true,
        },
        ScheduleRecord {
            time: 0.5,
            torque_in: -0.2,
            output_clamped: false,
        },
    ];
    let mut buf = Vec::new();
    rdtx_core::io::write_csv(&mut buf, &rows).unwrap();
    assert!(buf.starts_with(b"time_s,torque_in_Nm,output_clamped\n"));
    let back: Vec<ScheduleRecord> = rdtx_core::io::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, rows);
}
