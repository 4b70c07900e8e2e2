use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{ConditionConfig, ScenarioConfig, VehicleConfig};
use crate::geometry::Pose;
use crate::tracking::ControlCommand;

use super::clock::{seconds, Mode, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub pose: Pose<f64>,
    /// m/s, never negative.
    pub speed: f64,
    /// Realized front-wheel angle (rad).
    pub steering: f64,
    /// Realized longitudinal acceleration (m/s^2), before rolling resistance.
    pub acceleration: f64,
    pub timestamp: Timestamp,
}

impl VehicleState {
    pub fn at_rest(pose: Pose<f64>, timestamp: Timestamp) -> Self {
        Self {
            pose,
            speed: 0.0,
            steering: 0.0,
            acceleration: 0.0,
            timestamp,
        }
    }
}

/// What differs between the day and the night run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunCondition {
    pub mode: Mode,
    pub noise_scale: f64,
    pub friction: f64,
    pub camera_hz: u32,
}

impl RunCondition {
    pub fn new(mode: Mode, cond: &ConditionConfig, camera_hz: u32) -> Self {
        Self {
            mode,
            noise_scale: cond.noise_scale,
            friction: cond.friction,
            camera_hz,
        }
    }

    pub fn from_config(cfg: &ScenarioConfig, mode: Mode) -> Self {
        match mode {
            Mode::Day => Self::new(mode, &cfg.day, cfg.sensors.day_camera_hz),
            Mode::Night => Self::new(mode, &cfg.night, cfg.sensors.night_camera_hz),
        }
    }
}

/// Advances a kinematic bicycle (rear-axle reference) by `dt`.
///
/// Commands pass through first-order lags; zero-mean Gaussian noise scaled
/// by `cond.noise_scale` perturbs the commands whenever the vehicle is moving
/// or being driven. Within the step the path is integrated as an exact arc at
/// the realized steering angle.
pub fn step_kinematics<R: Rng + ?Sized>(
    state: &VehicleState,
    cmd: &ControlCommand,
    dt: Timestamp,
    cond: &RunCondition,
    params: &VehicleConfig,
    rng: &mut R,
) -> VehicleState {
    let h = seconds(dt);
    assert!(h > 0.0, "dt must be positive");
    let engaged = state.speed > 0.0 || cmd.acceleration != 0.0 || cmd.steering != 0.0;
    let (mut accel_in, mut steer_in) = (cmd.acceleration, cmd.steering);
    if engaged && cond.noise_scale > 0.0 {
        accel_in += gaussian(rng, params.accel_noise * cond.noise_scale);
        steer_in += gaussian(rng, params.steer_noise * cond.noise_scale);
    }
    let acceleration = lag(state.acceleration, accel_in, h, params.accel_lag);
    let steering = lag(state.steering, steer_in, h, params.steer_lag)
        .clamp(-params.max_steer, params.max_steer);

    let drag = if state.speed > 0.0 || acceleration > 0.0 {
        params.rolling_resistance * cond.friction
    } else {
        0.0
    };
    let speed = (state.speed + (acceleration - drag) * h).max(0.0);
    let distance = 0.5 * (state.speed + speed) * h;

    let pose = &state.pose;
    let curvature = steering.tan() / params.wheelbase;
    let yaw0 = pose.yaw();
    let dyaw = curvature * distance;
    let (dx, dy) = if dyaw.abs() < 1e-9 {
        let mid = yaw0 + 0.5 * dyaw;
        (distance * mid.cos(), distance * mid.sin())
    } else {
        (
            ((yaw0 + dyaw).sin() - yaw0.sin()) / curvature,
            (yaw0.cos() - (yaw0 + dyaw).cos()) / curvature,
        )
    };
    let pose = Pose::new(
        pose.x() + dx,
        pose.y() + dy,
        pose.z(),
        pose.roll(),
        yaw0 + dyaw,
        pose.pitch(),
    )
    .expect("finite kinematics");
    VehicleState {
        pose,
        speed,
        steering,
        acceleration,
        timestamp: state.timestamp + dt,
    }
}

fn lag(current: f64, target: f64, dt: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return target;
    }
    current + (target - current) * (1.0 - (-dt / tau).exp())
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("valid sigma").sample(rng)
}
