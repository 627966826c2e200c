//! Scenario files: TOML with every field except `nose_world` optional.

use std::fs;
use std::path::Path;

use feeder_core::dynamics::LinkParams;
use feeder_core::motor::{CascadeConfig, StepperLimits, StepperPlan};
use feeder_core::supervisor::Signal;
use feeder_core::vision::{CameraModel, ServoConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid `{field}`: {constraint}")]
    Validation { field: String, constraint: String },
}

fn invalid(field: &str, constraint: &str) -> ScenarioError {
    ScenarioError::Validation {
        field: field.to_string(),
        constraint: constraint.to_string(),
    }
}

/// A signal injected at a fixed simulated time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledSignal {
    pub t: f64,
    pub u: Signal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Nose position in the base frame (m).
    pub nose_world: [f64; 3],
    /// Nose drift velocity (m/s).
    pub nose_drift: [f64; 3],
    /// Food position in the base frame (m).
    pub food_world: [f64; 3],
    /// Joint angles at t = 0 (rad).
    pub initial_q: [f64; 4],
    /// Pose looking down at the table.
    pub food_search_q: [f64; 4],
    /// Pose looking forward at the user.
    pub face_search_q: [f64; 4],
    /// Tool pitch `θ2+θ3+θ4` used when planning the grasp (rad).
    pub grasp_pitch: f64,
    /// Tool pitch used when approaching the face (rad).
    pub feed_pitch: f64,
    pub dt: f64,
    pub seed: u64,
    /// Standard deviation of detector pixel noise.
    pub noise_px: f64,
    /// Weight of the loaded spoon (N).
    pub payload_n: f64,
    pub grasp_success: bool,
    /// Time between vision decisions (s).
    pub servo_period: f64,
    pub grasp_time: f64,
    pub feed_time: f64,
    /// Consecutive empty looks before a search gives up.
    pub max_search_attempts: u32,
    pub signals: Vec<ScheduledSignal>,
    pub servo: ServoConfig<f64>,
    pub stepper: StepperPlan,
    pub stepper_limits: [StepperLimits<f64>; 4],
    pub cascade: CascadeConfig<f64>,
    pub camera: CameraModel<f64>,
    pub links: LinkParams<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "unnamed".into(),
            nose_world: [0.75, 0.0, 0.27],
            nose_drift: [0.0; 3],
            food_world: [0.18, 0.03, 0.0],
            initial_q: [0.0, 0.5, 1.07, 0.0],
            food_search_q: [0.0, 1.2, -1.2, 0.0],
            face_search_q: [0.0, -0.3, 1.87, 0.0],
            grasp_pitch: -std::f64::consts::FRAC_PI_2,
            feed_pitch: 0.0,
            dt: 0.001,
            seed: 0,
            noise_px: 0.0,
            payload_n: 0.2,
            grasp_success: true,
            servo_period: 0.1,
            grasp_time: 1.0,
            feed_time: 2.0,
            max_search_attempts: 10,
            signals: Vec::new(),
            servo: ServoConfig::default(),
            stepper: StepperPlan::default(),
            stepper_limits: StepperLimits::defaults(),
            cascade: CascadeConfig::default(),
            camera: CameraModel::default(),
            links: LinkParams::default(),
        }
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let parse_error = |e: toml::de::Error| {
            let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
            ScenarioError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        };
        let table: toml::Table = toml::from_str(text).map_err(parse_error)?;
        if !table.contains_key("nose_world") {
            return Err(invalid("nose_world", "required"));
        }
        let scenario: Scenario = toml::from_str(text).map_err(parse_error)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are TOML-representable")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.dt > 1e-5 && self.dt <= 0.1) {
            return Err(invalid("dt", "must lie in (1e-5, 0.1]"));
        }
        let vectors: [(&str, &[f64]); 6] = [
            ("nose_world", &self.nose_world),
            ("nose_drift", &self.nose_drift),
            ("food_world", &self.food_world),
            ("initial_q", &self.initial_q),
            ("food_search_q", &self.food_search_q),
            ("face_search_q", &self.face_search_q),
        ];
        for (field, v) in vectors {
            if !v.iter().all(|x| x.is_finite()) {
                return Err(invalid(field, "must be finite"));
            }
        }
        if !(self.noise_px >= 0.0 && self.noise_px.is_finite()) {
            return Err(invalid("noise_px", "must be finite and >= 0"));
        }
        if !(self.payload_n >= 0.0 && self.payload_n.is_finite()) {
            return Err(invalid("payload_n", "must be finite and >= 0"));
        }
        if !(self.servo_period >= self.dt && self.servo_period.is_finite()) {
            return Err(invalid("servo_period", "must be finite and >= dt"));
        }
        for (field, v) in [("grasp_time", self.grasp_time), ("feed_time", self.feed_time)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(field, "must be finite and >= 0"));
            }
        }
        if !(self.grasp_pitch.is_finite() && self.feed_pitch.is_finite()) {
            return Err(invalid("grasp_pitch", "must be finite"));
        }
        if self.signals.iter().any(|s| !(s.t >= 0.0 && s.t.is_finite())) {
            return Err(invalid("signals", "times must be finite and >= 0"));
        }
        if self
            .stepper_limits
            .iter()
            .any(|l| !(l.max_rate > 0.0 && l.accel > 0.0 && l.max_rate.is_finite() && l.accel.is_finite()))
        {
            return Err(invalid("stepper_limits", "rates and accelerations must be finite and > 0"));
        }
        if !(self.camera.fx > 0.0 && self.camera.fy > 0.0 && self.camera.width > 0 && self.camera.height > 0) {
            return Err(invalid("camera", "focal lengths and image size must be > 0"));
        }
        self.stepper
            .validate()
            .map_err(|e| invalid("stepper", &e.to_string()))?;
        self.links.validate().map_err(|e| invalid("links", &e.to_string()))?;
        Ok(())
    }

    /// Schedule sorted by time; ties keep file order.
    pub fn schedule(&self) -> Vec<ScheduledSignal> {
        let mut s = self.signals.clone();
        s.sort_by(|a, b| a.t.total_cmp(&b.t));
        s
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    Scenario::from_toml(&fs::read_to_string(path)?)
}
