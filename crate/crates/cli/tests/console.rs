use std::fs;
use std::path::Path;
use std::process::Command;

use rdtx_cli::{run_script, sweep_air, Reply, Session, SessionConfig};
use rdtx_core::stiffness::TransmissionConfig;
use rdtx_core::Config;

const FRICTIONLESS: &str = "coulomb_torque_Nm = 0.0\n";

fn session(dir: Option<&Path>, config: Option<&Path>) -> Session {
    Session::new(SessionConfig {
        config_path: config.map(Path::to_path_buf),
        log_directory: dir.map(Path::to_path_buf),
        random_seed: 7,
        realtime: false,
    })
    .unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    let start = text
        .find(key)
        .unwrap_or_else(|| panic!("`{key}` missing in:\n{text}"))
        + key.len();
    let rest = &text[start..];
    let end = rest.find(|c: char| c.is_whitespace()).unwrap_or(rest.len());
    rest[..end].parse().unwrap()
}

fn metric(path: &Path, name: &str) -> f64 {
    let text = fs::read_to_string(path).unwrap();
    let line = text
        .lines()
        .find(|l| l.starts_with(&format!("{name},")))
        .unwrap();
    line.split(',').nth(1).unwrap().parse().unwrap()
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("rdtx.toml");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn fresh_status_is_depressurized() {
    let mut s = session(None, None);
    let reply = s.handle("status");
    assert!(
        reply.text().contains("mode=Depressurized"),
        "{}",
        reply.text()
    );
    assert!(reply.text().contains("preload=0 kPa"), "{}", reply.text());
}

#[test]
fn pressurize_phase_status_ends_aligned() {
    let mut s = session(None, None);
    s.handle("pressurize");
    s.handle("phase");
    let text = s.handle("status").text().to_string();
    assert!(text.contains("mode=Operating"), "{text}");
    assert!(field(&text, "phase offset=").abs() <= 0.4, "{text}");
}

#[test]
fn hibernate_from_operating_holds_100_kpa() {
    let mut s = session(None, None);
    s.handle("pressurize");
    let text = s.handle("hibernate").text().to_string();
    assert!(text.contains("mode=Hibernating"), "{text}");
    assert!(text.contains("preload=100 kPa"), "{text}");
    assert!((field(&text, "regulator=") - 100.0).abs() < 1e-9);
}

#[test]
fn unknown_and_malformed_input_never_crash() {
    let mut s = session(None, None);
    for line in [
        "frobnicate",
        "run",
        "run teleport",
        "bleed -3",
        "sweep 2 5",
        "fit",
        "validate",
        "phase",
    ] {
        match s.handle(line) {
            Reply::Continue(text) => assert!(!text.is_empty(), "{line}"),
            Reply::Exit(_) => panic!("{line} ended the session"),
        }
    }
    assert!(s.handle("frobnicate").text().contains("commands:"));
    assert!(s.handle("run step").text().contains("Operating"));
    assert_eq!(s.handle("   # comment"), Reply::Continue(String::new()));
}

#[test]
fn illegal_transition_is_reported_and_mode_kept() {
    let mut s = session(None, None);
    let text = s.handle("phase").text().to_string();
    assert!(text.starts_with("error"), "{text}");
    assert!(s.handle("status").text().contains("mode=Depressurized"));
}

#[test]
fn step_then_fit_recovers_configured_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FRICTIONLESS);
    let mut s = session(Some(dir.path()), Some(&cfg));
    run_script(&mut s, "pressurize\nrun step\nfit\n");
    let truth = Config::load(&cfg).unwrap().plant.model;
    let fit = dir.path().join("fit.csv");
    for (name, expected) in [
        ("inertia_kg_m2", truth.inertia),
        ("damping_Nms_per_rad", truth.damping),
        ("stiffness_Nm_per_rad", truth.stiffness),
    ] {
        let got = metric(&fit, name);
        assert!(
            (got / expected - 1.0).abs() < 0.05,
            "{name}: {got} vs {expected}"
        );
    }
    let plot = fs::read_to_string(dir.path().join("fit_plot.csv")).unwrap();
    assert!(plot.starts_with("curve,x,y\n"));
    assert_eq!(plot.lines().count(), 1 + 2 * 1500);
}

#[test]
fn frictionless_sine_has_no_hysteresis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "coulomb_torque_Nm = 0.0\ndamping_Nms_per_rad = 0.0\ntorque_noise_std_Nm = 0.0\n",
    );
    let mut s = session(Some(dir.path()), Some(&cfg));
    run_script(&mut s, "pressurize\nrun sine\nreport\n");
    let gap = metric(&dir.path().join("metrics.csv"), "max_hysteresis_Nm");
    assert!(gap < 1e-4, "{gap}");
}

#[test]
fn hand_tracking_slope_near_unity() {
    let mut s = session(None, None);
    s.handle("pressurize");
    let text = s.handle("run hand").text().to_string();
    let slope = field(&text, "torque slope=");
    assert!((slope - 1.0).abs() <= 0.05, "{text}");
}

#[test]
fn sweep_matches_reported_points() {
    let t = TransmissionConfig::default();
    let points = sweep_air(&t, 0.01, 1.0, 41).unwrap();
    assert!(points.windows(2).all(|w| w[1].1 < w[0].1));
    let at = |pct: f64| sweep_air(&t, pct, 1.0, 2).unwrap()[0].1;
    assert!((at(0.01) / 23.54 - 1.0).abs() <= 0.01, "{}", at(0.01));
    assert!((at(0.02) / 18.7 - 1.0).abs() <= 0.05, "{}", at(0.02));
}

#[test]
fn sweep_writes_two_column_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = session(Some(dir.path()), None);
    assert!(s.handle("sweep 0 1").text().starts_with("error"));
    assert!(s.handle("sweep 0.1 1.5").text().starts_with("error"));
    s.handle("sweep 0.01 1 5");
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("air_fraction_pct,k_rot_Nm_per_rad"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn events_log_state_changes() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = session(Some(dir.path()), None);
    run_script(&mut s, "pressurize\nhibernate\n");
    let events = fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert!(events.starts_with("time_s,mode,event,value\n"));
    for mode in ["Pressurizing", "Phasing", "Operating", "Hibernating"] {
        assert!(
            events.contains(&format!(",{mode},enter,")),
            "{mode}\n{events}"
        );
    }
}

const SCRIPT: &str =
    "status\npressurize\nrun step\nfit\nrun sine\nrun hand\nreport\nsweep\nbleed 2\nshutdown\n";

fn run_binary(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rdtx"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

#[test]
fn scripted_runs_are_byte_identical() {
    let runs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut outputs = Vec::new();
    for work in &runs {
        fs::write(work.path().join("script.txt"), SCRIPT).unwrap();
        let out = run_binary(
            work.path(),
            &["--script", "script.txt", "--seed", "3", "--log-dir", "logs"],
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push(out.stdout);
    }
    assert_eq!(outputs[0], outputs[1]);
    let [a, b] = [&runs[0], &runs[1]].map(|w| w.path().join("logs"));
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 8, "{names:?}");
    for name in names {
        assert!(
            fs::read(a.join(&name)).unwrap() == fs::read(b.join(&name)).unwrap(),
            "{name:?} differs"
        );
    }
}

#[test]
fn bad_config_exits_nonzero() {
    let work = tempfile::tempdir().unwrap();
    fs::write(work.path().join("bad.toml"), "no_such_key = 1\n").unwrap();
    let out = run_binary(work.path(), &["--config", "bad.toml"]);
    assert!(!out.status.success());
    fs::write(work.path().join("neg.toml"), "coulomb_torque_Nm = -1.0\n").unwrap();
    assert!(!run_binary(work.path(), &["--config", "neg.toml"])
        .status
        .success());
}
