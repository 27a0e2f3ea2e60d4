use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use rdtx_core::controller::{measure_offset, write_events, Controller, ControllerError, Mode};
use rdtx_core::experiment::{run_experiment, ExperimentKind};
use rdtx_core::io::write_table;
use rdtx_core::plant::{sample_seed, PlantState};
use rdtx_core::stiffness::{air_fraction_sweep, total_stiffness, TransmissionConfig};
use rdtx_core::sysid::{
    fit_second_order, hysteresis_metrics, simulate_model, tracking_report, validate, ExperimentLog,
    FitResult,
};
use rdtx_core::{Config, SecondOrderModel};

use crate::command::{parse_line, CliCommand, ParseOutcome, Verb, HELP};

#[derive(Debug, Clone, Default)]
pub struct SessionConfig {
    pub config_path: Option<PathBuf>,
    pub log_directory: Option<PathBuf>,
    pub random_seed: u64,
    /// Pace the simulation against the wall clock.
    pub realtime: bool,
}

/// What the caller should do after a line.
#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    Continue(String),
    Exit(String),
}

impl Reply {
    pub fn text(&self) -> &str {
        match self {
            Reply::Continue(s) | Reply::Exit(s) => s,
        }
    }
}

pub struct Session {
    config: Config,
    settings: SessionConfig,
    controller: Controller,
    experiments: u64,
    last_fit: Option<FitResult>,
    step_log: Option<ExperimentLog>,
    sine_log: Option<ExperimentLog>,
    hand_log: Option<ExperimentLog>,
    validation_log: Option<ExperimentLog>,
}

fn fmt_mode(mode: Mode) -> &'static str {
    mode.name()
}

impl Session {
    pub fn new(settings: SessionConfig) -> Result<Self> {
        let config = match &settings.config_path {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        Self::with_config(config, settings)
    }

    pub fn with_config(config: Config, settings: SessionConfig) -> Result<Self> {
        config.validate()?;
        let mut plant =
            PlantState::new(config.plant)?.with_water_offset(config.initial_water_offset);
        plant.line.air_fraction = config.line_air_fraction;
        plant.line.supply_pressure = config.controller.phasing.injection_pressure;
        let controller = Controller::new(plant, config.controller)?;
        if let Some(dir) = &settings.log_directory {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let session = Self {
            config,
            settings,
            controller,
            experiments: 0,
            last_fit: None,
            step_log: None,
            sine_log: None,
            hand_log: None,
            validation_log: None,
        };
        session.write_events()?;
        Ok(session)
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn last_fit(&self) -> Option<&FitResult> {
        self.last_fit.as_ref()
    }

    /// Handles one input line. Errors become messages; only the end of the
    /// session is signalled separately.
    pub fn handle(&mut self, line: &str) -> Reply {
        let command = match parse_line(line) {
            ParseOutcome::Empty => return Reply::Continue(String::new()),
            ParseOutcome::Unknown(word) => {
                return Reply::Continue(format!("unknown command `{word}`\n{HELP}"))
            }
            ParseOutcome::Command(c) => c,
        };
        let start = self.controller.plant().time;
        let result = self.dispatch(&command);
        if let Err(e) = self.write_events() {
            return Reply::Continue(format!("error: {e:#}"));
        }
        if self.settings.realtime {
            let elapsed = self.controller.plant().time - start;
            if elapsed > 0.0 {
                std::thread::sleep(Duration::from_secs_f64(elapsed));
            }
        }
        match (command.verb, result) {
            (Verb::Quit, Ok(text)) | (Verb::Shutdown, Ok(text)) => Reply::Exit(text),
            (_, Ok(text)) => Reply::Continue(text),
            (_, Err(e)) => Reply::Continue(format!("error: {e:#}")),
        }
    }

    fn dispatch(&mut self, c: &CliCommand) -> Result<String> {
        match c.verb {
            Verb::Status => Ok(self.status()),
            Verb::Help => Ok(HELP.to_string()),
            Verb::Quit => Ok("bye".to_string()),
            Verb::RunExperiment => self.run(c),
            Verb::FitModel => self.fit(c),
            Verb::Validate => self.validate(c),
            Verb::Report => self.report(),
            Verb::Sweep => self.sweep(c),
            _ => self.procedure(c),
        }
    }

    fn procedure(&mut self, c: &CliCommand) -> Result<String> {
        let command = c.verb.controller_command().expect("procedure verb");
        let cycles = match c.number(0, "cycles").map_err(anyhow::Error::msg)? {
            Some(n) if n >= 1.0 && n.fract() == 0.0 => n as u32,
            Some(n) => bail!("bleed cycles must be a positive integer (got {n})"),
            None => self.config.controller.bleed.cycles,
        };
        match self.controller.execute_with_cycles(command, cycles) {
            Ok(_) => Ok(self.status()),
            Err(ControllerError::DidNotConverge { corrections, .. }) => bail!(
                "phasing did not converge after {} corrections; line returned to {}\n{}",
                corrections.len(),
                fmt_mode(self.controller.mode().mode),
                self.status()
            ),
            Err(e) => Err(e.into()),
        }
    }

    pub fn status(&self) -> String {
        let plant = self.controller.plant();
        let mode = self.controller.mode();
        let seed = sample_seed(self.settings.random_seed, plant.time.to_bits());
        let offset = measure_offset(plant, seed);
        let k_rot = total_stiffness(&TransmissionConfig {
            fluid: self
                .config
                .transmission
                .fluid
                .with_air_fraction(plant.line.air_fraction),
            ..self.config.transmission
        })
        .map(|b| format!("{:.2} N·m/rad", b.k_total_rotational))
        .unwrap_or_else(|e| format!("n/a ({e})"));
        let mut s = String::new();
        let _ = writeln!(
            s,
            "mode={} preload={:.0} kPa",
            fmt_mode(mode.mode),
            mode.target_preload
        );
        let _ = writeln!(
            s,
            "water={:.1} kPa air={:.1} kPa regulator={:.1} kPa",
            plant.line.water_pressure,
            plant.line.air_preload_pressure,
            plant.line.regulator_setpoint
        );
        let _ = writeln!(
            s,
            "phase offset={offset:.3} deg water offset={:.4} mL",
            plant.line.water_volume_offset
        );
        let _ = writeln!(
            s,
            "undissolved air={:.4} % theoretical k_rot={k_rot}",
            100.0 * plant.line.air_fraction
        );
        let _ = write!(s, "time={:.3} s", plant.time);
        if let Some(fit) = &self.last_fit {
            let _ = write!(s, "\nlast fit: {}", describe_fit(fit));
        }
        s
    }

    fn run(&mut self, c: &CliCommand) -> Result<String> {
        let kind: ExperimentKind = c
            .arg(0, "kind")
            .unwrap_or("step")
            .parse()
            .map_err(anyhow::Error::msg)?;
        if self.controller.mode().mode != Mode::Operating {
            bail!(
                "experiments need mode=Operating (now {}); try `pressurize`",
                fmt_mode(self.controller.mode().mode)
            );
        }
        self.experiments += 1;
        let seed = sample_seed(self.settings.random_seed, self.experiments);
        let (end, log) = run_experiment(
            self.controller.plant(),
            kind,
            self.config.sample_interval,
            seed,
        )?;
        self.controller.set_plant(end);
        self.controller
            .record(&format!("run_{kind}"), log.len() as f64);
        let file = self.write_log(&format!("run{:02}_{kind}.csv", self.experiments), &log)?;
        let mut text = format!(
            "{kind}: {} samples at {:.0} Hz",
            log.len(),
            log.sample_rate()
        );
        match kind {
            ExperimentKind::StepFit => self.step_log = Some(log),
            ExperimentKind::SineHysteresis => {
                let r = hysteresis_metrics(&log)?;
                let _ = write!(
                    text,
                    "\nhysteresis={:.4} N·m ({:.2} % of 6 N·m) static friction={:.4} N·m",
                    r.max_hysteresis, r.percent_of_range, r.static_friction
                );
                self.sine_log = Some(log);
            }
            ExperimentKind::HandTracking => {
                let r = tracking_report(&log);
                let _ = write!(
                    text,
                    "\ntorque slope={:.4} rms torque error={:.4} N·m rms angle error={:.4} rad",
                    r.torque_slope, r.rms_torque_error, r.rms_angle_error
                );
                self.hand_log = Some(log);
            }
            ExperimentKind::Validation => self.validation_log = Some(log),
        }
        if let Some(path) = file {
            let _ = write!(text, "\nlog: {}", path.display());
        }
        Ok(text)
    }

    fn load_or(
        &self,
        c: &CliCommand,
        fallback: Option<&ExperimentLog>,
        what: &str,
    ) -> Result<ExperimentLog> {
        match c.arg(0, "log") {
            Some(path) => {
                let file = File::open(path).with_context(|| format!("opening {path}"))?;
                Ok(ExperimentLog::read_csv(file)?)
            }
            None => fallback
                .cloned()
                .with_context(|| format!("no {what} log yet; run one or pass a csv file")),
        }
    }

    fn fit(&mut self, c: &CliCommand) -> Result<String> {
        let log = self.load_or(c, self.step_log.as_ref(), "step")?;
        let fit = fit_second_order(&log, &SecondOrderModel::THEORETICAL)?;
        if let Some(dir) = &self.settings.log_directory {
            write_fit(dir, &fit, &log)?;
        }
        let text = describe_fit(&fit);
        self.controller.record("fit_percent", fit.fit_percentage);
        self.last_fit = Some(fit);
        Ok(text)
    }

    fn validate(&mut self, c: &CliCommand) -> Result<String> {
        let fit = self
            .last_fit
            .clone()
            .context("no fitted model yet; run `fit` first")?;
        let fallback = self.validation_log.as_ref().or(self.hand_log.as_ref());
        let log = self.load_or(c, fallback, "validation")?;
        let score = validate(&fit.model, &log)?;
        self.controller.record("validation_percent", score);
        Ok(format!("validation fit={score:.2} %"))
    }

    fn report(&mut self) -> Result<String> {
        let breakdown = total_stiffness(&self.config.transmission)?;
        let mut text = format!(
            "stiffness: {:.4e} N/m linear, {:.2} N·m/rad at the capstan",
            breakdown.k_total_linear, breakdown.k_total_rotational
        );
        for (component, share) in &breakdown.compliance_share {
            let _ = write!(text, "\n  {:<10} {:5.1} %", component.name(), 100.0 * share);
        }
        if let Some(fit) = &self.last_fit {
            let _ = write!(text, "\nfit: {}", describe_fit(fit));
        }
        let hysteresis = self.sine_log.as_ref().map(hysteresis_metrics).transpose()?;
        if let Some(r) = &hysteresis {
            let _ = write!(
                text,
                "\nhysteresis: {:.4} N·m ({:.2} %), static friction {:.4} N·m",
                r.max_hysteresis, r.percent_of_range, r.static_friction
            );
        }
        let tracking = self.hand_log.as_ref().map(tracking_report);
        if let Some(r) = &tracking {
            let _ = write!(
                text,
                "\ntracking: slope {:.4}, rms torque error {:.4} N·m",
                r.torque_slope, r.rms_torque_error
            );
        }
        if let Some(dir) = &self.settings.log_directory {
            breakdown.write_csv(create(&dir.join("stiffness.csv"))?)?;
            let mut rows = Vec::new();
            if let Some(r) = &hysteresis {
                rows.push(row("max_hysteresis_Nm", r.max_hysteresis));
                rows.push(row("static_friction_Nm", r.static_friction));
                rows.push(row("hysteresis_percent_of_range", r.percent_of_range));
                rows.push(row(
                    "static_friction_percent_of_range",
                    r.static_percent_of_range,
                ));
            }
            if let Some(r) = &tracking {
                rows.push(row("rms_angle_error_rad", r.rms_angle_error));
                rows.push(row("rms_torque_error_Nm", r.rms_torque_error));
                rows.push(row("peak_angle_error_rad", r.peak_angle_error));
                rows.push(row("peak_torque_error_Nm", r.peak_torque_error));
                rows.push(row("torque_slope", r.torque_slope));
            }
            write_table(
                create(&dir.join("metrics.csv"))?,
                &["metric", "value"],
                &rows,
            )?;
            let _ = write!(text, "\nreport written to {}", dir.display());
        }
        Ok(text)
    }

    fn sweep(&mut self, c: &CliCommand) -> Result<String> {
        let err = anyhow::Error::msg;
        let lo = c.number(0, "min").map_err(err)?.unwrap_or(0.001);
        let hi = c.number(1, "max").map_err(err)?.unwrap_or(1.0);
        let points = c.number(2, "points").map_err(err)?.unwrap_or(31.0);
        if !(lo > 0.0 && hi <= 1.0 && lo < hi) {
            bail!("sweep range must satisfy 0 < min < max <= 1 (percent)");
        }
        if !(points >= 2.0 && points.fract() == 0.0 && points <= 10_000.0) {
            bail!("points must be an integer between 2 and 10000");
        }
        let sweep = sweep_air(&self.config.transmission, lo, hi, points as usize)?;
        let mut text = String::from("air_fraction_pct k_rot_Nm_per_rad");
        for (pct, k) in &sweep {
            let _ = write!(text, "\n{pct:>16.5} {k:>16.3}");
        }
        if let Some(dir) = &self.settings.log_directory {
            let rows: Vec<Vec<String>> = sweep
                .iter()
                .map(|(p, k)| vec![p.to_string(), k.to_string()])
                .collect();
            write_table(
                create(&dir.join("sweep.csv"))?,
                &["air_fraction_pct", "k_rot_Nm_per_rad"],
                &rows,
            )?;
            let plot: Vec<Vec<String>> = sweep
                .iter()
                .map(|(p, k)| vec!["k_rot".to_string(), p.to_string(), k.to_string()])
                .collect();
            write_table(
                create(&dir.join("sweep_plot.csv"))?,
                &["curve", "x", "y"],
                &plot,
            )?;
        }
        Ok(text)
    }

    fn write_log(&self, name: &str, log: &ExperimentLog) -> Result<Option<PathBuf>> {
        let Some(dir) = &self.settings.log_directory else {
            return Ok(None);
        };
        let path = dir.join(name);
        log.write_csv(create(&path)?)?;
        Ok(Some(path))
    }

    fn write_events(&self) -> Result<()> {
        if let Some(dir) = &self.settings.log_directory {
            write_events(create(&dir.join("events.csv"))?, self.controller.events())?;
        }
        Ok(())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn row(name: &str, value: f64) -> Vec<String> {
    vec![name.to_string(), value.to_string()]
}

fn describe_fit(fit: &FitResult) -> String {
    format!(
        "J={:.4e} kg·m² B={:.4e} N·m·s/rad K={:.3} N·m/rad fit={:.2} %",
        fit.model.inertia, fit.model.damping, fit.model.stiffness, fit.fit_percentage
    )
}

fn write_fit(dir: &Path, fit: &FitResult, log: &ExperimentLog) -> Result<()> {
    let rows = vec![
        row("inertia_kg_m2", fit.model.inertia),
        row("damping_Nms_per_rad", fit.model.damping),
        row("stiffness_Nm_per_rad", fit.model.stiffness),
        row("fit_percent", fit.fit_percentage),
        row("residual_rms_rad", fit.residual_rms),
        row("iterations", fit.iterations as f64),
    ];
    write_table(
        create(&dir.join("fit.csv"))?,
        &["parameter", "value"],
        &rows,
    )?;
    let predicted = simulate_model(&fit.model, &log.torque_in(), log.sample_interval())?;
    let mut plot = Vec::with_capacity(2 * log.len());
    for (s, p) in log.samples().iter().zip(&predicted) {
        plot.push(vec![
            "measured".into(),
            s.time.to_string(),
            s.theta_in.to_string(),
        ]);
        plot.push(vec!["predicted".into(), s.time.to_string(), p.to_string()]);
    }
    write_table(
        create(&dir.join("fit_plot.csv"))?,
        &["curve", "x", "y"],
        &plot,
    )?;
    Ok(())
}

/// Rotational stiffness over log-spaced air fractions, both ends included.
/// Fractions are given and returned in percent.
pub fn sweep_air(
    config: &TransmissionConfig,
    min_pct: f64,
    max_pct: f64,
    points: usize,
) -> Result<Vec<(f64, f64)>> {
    let (a, b) = (min_pct.ln(), max_pct.ln());
    let fractions: Vec<f64> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp() / 100.0)
        .collect();
    let r2 = config.radius_capstan * config.radius_capstan;
    Ok(air_fraction_sweep(config, &fractions)?
        .into_iter()
        .map(|(f, k)| (100.0 * f, k * r2))
        .collect())
}

/// Runs every line of `script`, returning the transcript. Stops at `quit`
/// or `shutdown`.
pub fn run_script(session: &mut Session, script: &str) -> String {
    let mut out = String::new();
    for line in script.lines() {
        let reply = session.handle(line);
        if !reply.text().is_empty() {
            let _ = writeln!(out, "> {}\n{}", line.trim(), reply.text());
        }
        if matches!(reply, Reply::Exit(_)) {
            break;
        }
    }
    out
}
