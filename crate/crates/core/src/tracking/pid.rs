use crate::config::{ControlConfig, VehicleConfig};

use super::pursuit::MotionPlan;
use crate::vehicle::VehicleState;

/// Actuator command; both fields are clamped to the vehicle limits.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlCommand {
    pub acceleration: f64,
    pub steering: f64,
}

/// Controller memory carried between steps.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: Option<f64>,
    pub prev_steering: f64,
}

/// Longitudinal PID on the speed error plus pursuit steering.
///
/// The integral enters the output with its value from the previous step and
/// is then advanced, clamped to `integral_limit`, and frozen while the output
/// saturates in the direction of the error. Steering is
/// `atan(wheelbase * curvature)` limited in magnitude and slew rate.
pub fn pid_control(
    plan: &MotionPlan,
    state: &VehicleState,
    pid: &PidState,
    dt: f64,
    control: &ControlConfig,
    vehicle: &VehicleConfig,
) -> (ControlCommand, PidState) {
    assert!(dt > 0.0, "dt must be positive");
    let error = plan.target_velocity - state.speed;
    let derivative = pid.prev_error.map_or(0.0, |prev| (error - prev) / dt);
    let raw = control.kp * error + control.ki * pid.integral + control.kd * derivative;
    let acceleration = raw.clamp(-vehicle.max_decel, vehicle.max_accel);
    let saturated = acceleration != raw && raw.signum() == error.signum();
    let integral = if saturated {
        pid.integral
    } else {
        (pid.integral + error * dt).clamp(-control.integral_limit, control.integral_limit)
    };

    let desired = (vehicle.wheelbase * plan.curvature).atan();
    let max_delta = vehicle.max_steer_rate * dt;
    let steering = desired
        .clamp(pid.prev_steering - max_delta, pid.prev_steering + max_delta)
        .clamp(-vehicle.max_steer, vehicle.max_steer);

    (
        ControlCommand {
            acceleration,
            steering,
        },
        PidState {
            integral,
            prev_error: Some(error),
            prev_steering: steering,
        },
    )
}
