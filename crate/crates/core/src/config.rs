//! Scenario configuration: one self-describing TOML file per scenario.
//!
//! Only `id`, `seed`, `road_scene`, `lighting`, `layout` and
//! `trajectory.path` are required; every other table falls back to the
//! defaults below.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::path::PathSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Road-scene vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoadScene {
    MultiLaneRoad,
    SingleLaneRoad,
    CurvedRoad,
    OpenRoad,
    TIntersection,
    Intersection,
}

/// Night lighting vocabulary. Carried as metadata only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightingCondition {
    NoStreetlight,
    VehicleLowBeam,
    BilateralStreetlightVehicleLowBeam,
    UnilateralStreetlightVehicleLowBeam,
    BilateralStreetlight,
    VehicleHighBeam,
    BilateralStreetlightVehicleHighBeam,
    UnilateralStreetlightVehicleHighBeam,
    UnilateralStreetlight,
    VehicleBacklight,
    BilateralStreetlightVehicleBacklight,
    UnilateralStreetlightVehicleBacklight,
}

impl RoadScene {
    pub const ALL: [RoadScene; 6] = [
        RoadScene::MultiLaneRoad,
        RoadScene::SingleLaneRoad,
        RoadScene::CurvedRoad,
        RoadScene::OpenRoad,
        RoadScene::TIntersection,
        RoadScene::Intersection,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RoadScene::MultiLaneRoad => "multi_lane_road",
            RoadScene::SingleLaneRoad => "single_lane_road",
            RoadScene::CurvedRoad => "curved_road",
            RoadScene::OpenRoad => "open_road",
            RoadScene::TIntersection => "t_intersection",
            RoadScene::Intersection => "intersection",
        }
    }
}

impl LightingCondition {
    pub const ALL: [LightingCondition; 12] = [
        LightingCondition::NoStreetlight,
        LightingCondition::VehicleLowBeam,
        LightingCondition::BilateralStreetlightVehicleLowBeam,
        LightingCondition::UnilateralStreetlightVehicleLowBeam,
        LightingCondition::BilateralStreetlight,
        LightingCondition::VehicleHighBeam,
        LightingCondition::BilateralStreetlightVehicleHighBeam,
        LightingCondition::UnilateralStreetlightVehicleHighBeam,
        LightingCondition::UnilateralStreetlight,
        LightingCondition::VehicleBacklight,
        LightingCondition::BilateralStreetlightVehicleBacklight,
        LightingCondition::UnilateralStreetlightVehicleBacklight,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LightingCondition::NoStreetlight => "no_streetlight",
            LightingCondition::VehicleLowBeam => "vehicle_low_beam",
            LightingCondition::BilateralStreetlightVehicleLowBeam => {
                "bilateral_streetlight_vehicle_low_beam"
            }
            LightingCondition::UnilateralStreetlightVehicleLowBeam => {
                "unilateral_streetlight_vehicle_low_beam"
            }
            LightingCondition::BilateralStreetlight => "bilateral_streetlight",
            LightingCondition::VehicleHighBeam => "vehicle_high_beam",
            LightingCondition::BilateralStreetlightVehicleHighBeam => {
                "bilateral_streetlight_vehicle_high_beam"
            }
            LightingCondition::UnilateralStreetlightVehicleHighBeam => {
                "unilateral_streetlight_vehicle_high_beam"
            }
            LightingCondition::UnilateralStreetlight => "unilateral_streetlight",
            LightingCondition::VehicleBacklight => "vehicle_backlight",
            LightingCondition::BilateralStreetlightVehicleBacklight => {
                "bilateral_streetlight_vehicle_backlight"
            }
            LightingCondition::UnilateralStreetlightVehicleBacklight => {
                "unilateral_streetlight_vehicle_backlight"
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadSpec {
    pub path: PathSpec,
    /// Curb-to-curb width in meters.
    pub width: f64,
    /// Emit curb strips along both edges.
    #[serde(default = "yes")]
    pub curbs: bool,
    /// Spacing of poles planted along both edges; 0 disables.
    #[serde(default)]
    pub pole_spacing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default = "default_pole_radius")]
    pub radius: f64,
    #[serde(default = "default_pole_height")]
    pub height: f64,
}

/// Axis-aligned (in its own frame) box resting on the ground at `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub z: f64,
    #[serde(default = "default_box_length")]
    pub length: f64,
    #[serde(default = "default_box_width")]
    pub width: f64,
    #[serde(default = "default_box_height")]
    pub height: f64,
    #[serde(default)]
    pub yaw_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layout {
    #[serde(default)]
    pub roads: Vec<RoadSpec>,
    #[serde(default)]
    pub poles: Vec<PoleSpec>,
    #[serde(default)]
    pub boxes: Vec<BoxSpec>,
}

impl Layout {
    pub fn is_empty(&self) -> bool {
        self.roads.is_empty() && self.poles.is_empty() && self.boxes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSampling {
    /// Ground grid spacing; one jittered point per cell.
    pub ground_spacing: f64,
    /// Points per square meter on poles, boxes and curbs.
    pub surface_density: f64,
    /// Ground extends this far beyond the layout bounds.
    pub ground_margin: f64,
    pub curb_height: f64,
}

impl Default for FieldSampling {
    fn default() -> Self {
        Self {
            ground_spacing: 0.125,
            surface_density: 500.0,
            ground_margin: 5.0,
            curb_height: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub path: PathSpec,
    /// Cruise speed of the desired trajectory (9 mph by default).
    #[serde(default = "default_speed")]
    pub speed: f64,
    /// Arc-length resampling step.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Deceleration used to ramp the recorded speed to zero at the end.
    #[serde(default = "default_end_decel")]
    pub end_decel: f64,
    /// Run length; defaults to the desired trajectory's duration plus 5 s.
    #[serde(default)]
    pub duration_s: Option<f64>,
}

/// Sensor rates in Hz and the shared start time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorRates {
    pub lidar_hz: u32,
    pub day_camera_hz: u32,
    pub night_camera_hz: u32,
    pub start_time_ns: i64,
}

impl Default for SensorRates {
    fn default() -> Self {
        Self {
            lidar_hz: 20,
            day_camera_hz: 10,
            night_camera_hz: 6,
            start_time_ns: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarConfig {
    pub max_range: f64,
    pub min_range: f64,
    pub fov_up_deg: f64,
    pub fov_down_deg: f64,
    /// One-sigma range noise.
    pub range_noise: f64,
    /// Visible points are subsampled to at most this many per scan.
    pub points_per_scan: usize,
    /// Mounting height; trajectories are authored at this z.
    pub height: f64,
    /// Points beyond this range are kept with probability
    /// `(falloff_range / range)^2`, mimicking the angular beam spacing of a
    /// spinning sensor. Zero keeps every visible point equally likely.
    pub falloff_range: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            max_range: 200.0,
            min_range: 1.0,
            fov_up_deg: 15.0,
            fov_down_deg: -25.0,
            range_noise: 0.01,
            points_per_scan: 5000,
            height: 1.8,
            falloff_range: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleConfig {
    pub wheelbase: f64,
    pub max_steer: f64,
    /// Steering slew limit in rad/s.
    pub max_steer_rate: f64,
    pub max_accel: f64,
    pub max_decel: f64,
    /// First-order actuator lag time constants (s).
    pub accel_lag: f64,
    pub steer_lag: f64,
    /// One-sigma actuation noise at noise scale 1.
    pub accel_noise: f64,
    pub steer_noise: f64,
    /// Rolling-resistance deceleration at friction multiplier 1.
    pub rolling_resistance: f64,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        Self {
            wheelbase: 2.7,
            max_steer: 0.55,
            max_steer_rate: 0.8,
            max_accel: 2.0,
            max_decel: 3.0,
            accel_lag: 0.2,
            steer_lag: 0.05,
            accel_noise: 0.02,
            steer_noise: 0.0005,
            rolling_resistance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Anti-windup clamp on the integral state (m/s * s).
    pub integral_limit: f64,
    /// Lookahead = clamp(gain * v, min, max).
    pub lookahead_gain: f64,
    pub lookahead_min: f64,
    pub lookahead_max: f64,
    /// Abort distance from the desired trajectory.
    pub off_trajectory_distance: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            kp: 1.5,
            ki: 0.1,
            kd: 0.05,
            integral_limit: 2.0,
            lookahead_gain: 1.5,
            lookahead_min: 2.0,
            lookahead_max: 8.0,
            off_trajectory_distance: 5.0,
        }
    }
}

/// Multipliers distinguishing the day and night runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionConfig {
    pub noise_scale: f64,
    pub friction: f64,
}

impl ConditionConfig {
    pub fn day() -> Self {
        Self {
            noise_scale: 1.0,
            friction: 1.0,
        }
    }

    pub fn night() -> Self {
        Self {
            noise_scale: 1.2,
            friction: 1.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NdtConfig {
    pub cell_size: f64,
    pub min_points: usize,
    /// Grid origin; the default puts the ground plane mid-layer.
    pub origin: [f64; 3],
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for NdtConfig {
    fn default() -> Self {
        Self {
            cell_size: 2.0,
            min_points: 5,
            origin: [0.0, 0.0, -1.0],
            max_iterations: 50,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingConfig {
    /// Maximum accepted day/night position error (m).
    pub delta: f64,
    /// Looser threshold producing the decimeter-error diagnostic set.
    pub diagnostic_delta: f64,
    pub decimeter_threshold: f64,
    /// Angular error above this is reported as a warning.
    pub angular_warn_deg: f64,
    /// Resolve night frames claimed by several day frames.
    pub unique: bool,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self {
            delta: 0.05,
            diagnostic_delta: 0.30,
            decimeter_threshold: 0.10,
            angular_warn_deg: 1.0,
            unique: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnomalyConfig {
    /// Expected fraction of day/night pairs touched by a transient object.
    /// Each run's frames are tagged independently at `1 - sqrt(1 - rate)`.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub seed: u64,
    pub road_scene: RoadScene,
    pub lighting: LightingCondition,
    pub layout: Layout,
    pub trajectory: TrajectorySpec,
    #[serde(default)]
    pub field: FieldSampling,
    #[serde(default)]
    pub sensors: SensorRates,
    #[serde(default)]
    pub lidar: LidarConfig,
    #[serde(default)]
    pub vehicle: VehicleConfig,
    #[serde(default)]
    pub control: ControlConfig,
    #[serde(default = "ConditionConfig::day")]
    pub day: ConditionConfig,
    #[serde(default = "ConditionConfig::night")]
    pub night: ConditionConfig,
    #[serde(default)]
    pub ndt: NdtConfig,
    #[serde(default)]
    pub matching: MatchingConfig,
    #[serde(default)]
    pub anomalies: AnomalyConfig,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 over the canonical serialization of the effective config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if self.id.trim().is_empty() {
            return fail("id must not be empty".into());
        }
        if self.layout.is_empty() {
            return fail("layout has no roads, poles or boxes".into());
        }
        for (i, road) in self.layout.roads.iter().enumerate() {
            road.path
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("layout.roads[{i}]: {e}")))?;
            if !(road.width > 0.0) || road.pole_spacing < 0.0 {
                return fail(format!("layout.roads[{i}]: width must be > 0, pole_spacing >= 0"));
            }
        }
        for (i, pole) in self.layout.poles.iter().enumerate() {
            if !(pole.radius > 0.0 && pole.height > 0.0) {
                return fail(format!("layout.poles[{i}]: radius and height must be > 0"));
            }
        }
        for (i, b) in self.layout.boxes.iter().enumerate() {
            if !(b.length > 0.0 && b.width > 0.0 && b.height > 0.0) {
                return fail(format!("layout.boxes[{i}]: dimensions must be > 0"));
            }
        }
        let f = &self.field;
        if !(f.ground_spacing > 0.0 && f.ground_spacing <= 1.0 / 50f64.sqrt()) {
            return fail("field.ground_spacing must be in (0, 0.1414] (>= 50 points/m^2)".into());
        }
        if !(f.surface_density > 0.0 && f.ground_margin >= 0.0 && f.curb_height > 0.0) {
            return fail("field sampling parameters must be positive".into());
        }
        self.trajectory
            .path
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("trajectory.path: {e}")))?;
        let t = &self.trajectory;
        if !(t.speed > 0.0 && t.spacing > 0.0 && t.spacing <= 1.0 && t.end_decel > 0.0) {
            return fail("trajectory: speed, end_decel > 0 and spacing in (0, 1] required".into());
        }
        if let Some(d) = t.duration_s {
            if !(d > 0.0 && d.is_finite()) {
                return fail("trajectory.duration_s must be > 0".into());
            }
        }
        let s = &self.sensors;
        for (name, rate) in [
            ("lidar_hz", s.lidar_hz),
            ("day_camera_hz", s.day_camera_hz),
            ("night_camera_hz", s.night_camera_hz),
        ] {
            if rate == 0 {
                return fail(format!("sensors.{name} must be > 0"));
            }
        }
        let l = &self.lidar;
        if !(l.max_range > l.min_range
            && l.min_range >= 0.0
            && l.fov_up_deg > l.fov_down_deg
            && l.range_noise >= 0.0
            && l.points_per_scan > 0)
        {
            return fail("lidar: need max_range > min_range >= 0, fov_up > fov_down, points_per_scan > 0".into());
        }
        let v = &self.vehicle;
        if !(v.wheelbase > 0.0
            && v.max_steer > 0.0
            && v.max_steer < std::f64::consts::FRAC_PI_2
            && v.max_steer_rate > 0.0
            && v.max_accel > 0.0
            && v.max_decel > 0.0
            && v.accel_lag >= 0.0
            && v.steer_lag >= 0.0
            && v.accel_noise >= 0.0
            && v.steer_noise >= 0.0
            && v.rolling_resistance >= 0.0)
        {
            return fail("vehicle parameters out of range".into());
        }
        let c = &self.control;
        if !(c.kp >= 0.0
            && c.ki >= 0.0
            && c.kd >= 0.0
            && c.integral_limit >= 0.0
            && c.lookahead_gain > 0.0
            && c.lookahead_min > 0.0
            && c.lookahead_max >= c.lookahead_min
            && c.off_trajectory_distance > 0.0)
        {
            return fail("control parameters out of range".into());
        }
        for (name, cond) in [("day", &self.day), ("night", &self.night)] {
            if !(cond.noise_scale > 0.0 && cond.friction > 0.0) {
                return fail(format!("{name}: multipliers must be > 0"));
            }
        }
        let n = &self.ndt;
        if !(n.cell_size > 0.0 && n.min_points >= 1 && n.max_iterations >= 1 && n.tolerance > 0.0)
        {
            return fail("ndt parameters out of range".into());
        }
        let m = &self.matching;
        if !(m.delta > 0.0 && m.diagnostic_delta >= m.delta && m.decimeter_threshold > 0.0) {
            return fail("matching: need delta > 0 and diagnostic_delta >= delta".into());
        }
        if !(0.0..=1.0).contains(&self.anomalies.rate) {
            return fail("anomalies.rate must be in [0, 1]".into());
        }
        Ok(())
    }
}

fn yes() -> bool {
    true
}
fn default_pole_radius() -> f64 {
    0.15
}
fn default_pole_height() -> f64 {
    5.0
}
fn default_box_length() -> f64 {
    4.6
}
fn default_box_width() -> f64 {
    1.8
}
fn default_box_height() -> f64 {
    1.5
}
fn default_speed() -> f64 {
    // 9 mph
    4.02336
}
fn default_spacing() -> f64 {
    0.25
}
fn default_end_decel() -> f64 {
    1.0
}
