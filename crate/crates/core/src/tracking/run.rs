use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, trace};

use crate::cloud::PointCloud;
use crate::config::{ControlConfig, LidarConfig, VehicleConfig};
use crate::field::NdtGrid;
use crate::geometry::Pose;
use crate::localization::{localize_frame, LocalizationError, RegistrationParams};
use crate::rng;
use crate::vehicle::{
    camera_trigger_times, seconds, step_kinematics, LidarSimulator, Mode, RunCondition, SensorClock,
    Stream, Timestamp, VehicleState,
};

use super::pid::{pid_control, ControlCommand, PidState};
use super::pursuit::{pure_pursuit_plan, PursuitParams};
use super::trajectory::{Trajectory, TrajectoryError, TrajectorySample};

/// Speeds below this count as stopped when deciding that a run is finished.
const STOP_SPEED: f64 = 0.05;

#[derive(Debug, Error)]
pub enum TrackingError {
    #[error("vehicle is {distance:.2} m from the desired trajectory")]
    OffTrajectory { distance: f64 },
    #[error("localization failed at LiDAR frame {frame} (t = {time:.3} s): {source}")]
    Localization {
        frame: u64,
        time: f64,
        source: LocalizationError,
    },
    #[error("off-trajectory abort at LiDAR frame {frame} (t = {time:.3} s): {distance:.2} m from the desired trajectory")]
    Aborted { frame: u64, time: f64, distance: f64 },
    #[error("realized trajectory is invalid: {0}")]
    Trajectory(#[from] TrajectoryError),
}

/// Everything a tracking run reads.
#[derive(Debug, Clone)]
pub struct TrackingSetup<'a> {
    pub field: &'a PointCloud<f64>,
    pub grid: &'a NdtGrid<f64>,
    pub clock: &'a SensorClock,
    pub lidar: &'a LidarConfig,
    pub vehicle: &'a VehicleConfig,
    pub control: &'a ControlConfig,
    pub registration: RegistrationParams<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Scenario seed; the run draws from its mode's named sub-streams.
    pub seed: u64,
    /// Upper bound on the run length.
    pub duration: Timestamp,
    /// Use the true pose instead of NDT (no scans are simulated).
    pub perfect_localization: bool,
}

impl RunOptions {
    /// Run length covering the desired trajectory plus `margin_s`, rounded up
    /// to whole LiDAR periods.
    pub fn covering(trajectory: &Trajectory, clock: &SensorClock, seed: u64, margin_s: f64) -> Self {
        let hz = i64::from(clock.lidar_hz);
        let ticks = ((trajectory.duration() + margin_s) * hz as f64).ceil() as i64;
        Self {
            seed,
            duration: Ratio::new(ticks.max(1), hz),
            perfect_localization: false,
        }
    }
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogRecord {
    pub tick: u64,
    pub timestamp: f64,
    /// `[x, y, z, roll, yaw, pitch]`
    pub true_pose: [f64; 6],
    pub estimated_pose: [f64; 6],
    pub speed: f64,
    pub acceleration_cmd: f64,
    pub steering_cmd: f64,
    pub target_velocity: f64,
    pub curvature: f64,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub mode: Mode,
    /// Estimated poses at every LiDAR tick (T^d or T^n).
    pub realized: Trajectory,
    /// Ground-truth poses at the same ticks.
    pub truth: Trajectory,
    pub lidar_ticks: Vec<(u64, Timestamp)>,
    pub camera_triggers: Vec<(u64, Timestamp)>,
    pub log: Vec<RunLogRecord>,
    /// The vehicle came to rest at the end of the trajectory before the
    /// duration ran out.
    pub completed: bool,
}

/// Closed loop at the LiDAR rate: scan, localize, plan, control, step.
pub fn track_trajectory(
    desired: &Trajectory,
    cond: &RunCondition,
    setup: &TrackingSetup<'_>,
    options: &RunOptions,
) -> Result<RunRecord, TrackingError> {
    let clock = setup.clock;
    let (actuation_name, lidar_name) = match cond.mode {
        Mode::Day => (rng::ACTUATION_DAY, rng::LIDAR_NOISE_DAY),
        Mode::Night => (rng::ACTUATION_NIGHT, rng::LIDAR_NOISE_NIGHT),
    };
    let mut actuation_rng = rng::stream(options.seed, actuation_name);
    let mut lidar_rng = rng::stream(options.seed, lidar_name);
    let mut lidar = LidarSimulator::new(setup.field, setup.lidar.clone());
    let pursuit = PursuitParams::from(setup.control);
    let period = clock.period(Stream::Lidar);
    let dt = seconds(period);

    let start_pose = desired.samples()[0].pose;
    let mut state = VehicleState::at_rest(start_pose, clock.tick(Stream::Lidar, 0));
    let mut pid = PidState::default();
    let mut prediction = start_pose;

    let max_ticks = clock.tick_count(Stream::Lidar, options.duration);
    let mut realized = Vec::new();
    let mut truth = Vec::new();
    let mut ticks = Vec::new();
    let mut log = Vec::new();
    let mut completed = false;

    for k in 0..max_ticks {
        let t = clock.tick(Stream::Lidar, k);
        debug_assert_eq!(state.timestamp, t);
        let estimate = if options.perfect_localization {
            state.pose
        } else {
            let scan = lidar.scan(&state.pose, k, t, &mut lidar_rng);
            localize_frame(&scan, setup.grid, &prediction, &setup.registration).map_err(
                |source| TrackingError::Localization {
                    frame: k,
                    time: seconds(t),
                    source,
                },
            )?
        };
        let plan = pure_pursuit_plan(&estimate, state.speed, desired, &pursuit).map_err(|e| match e {
            TrackingError::OffTrajectory { distance } => TrackingError::Aborted {
                frame: k,
                time: seconds(t),
                distance,
            },
            other => other,
        })?;
        trace!(tick = k, kappa = plan.curvature, v = plan.target_velocity, "plan");

        let ts = seconds(t);
        realized.push(TrajectorySample {
            timestamp: ts,
            pose: estimate,
            velocity: state.speed,
        });
        truth.push(TrajectorySample {
            timestamp: ts,
            pose: state.pose,
            velocity: state.speed,
        });
        ticks.push((k, t));

        let finished = plan.target_velocity < STOP_SPEED && state.speed < STOP_SPEED;
        let (cmd, next_pid) = if finished {
            (ControlCommand::default(), pid)
        } else {
            pid_control(&plan, &state, &pid, dt, setup.control, setup.vehicle)
        };
        log.push(RunLogRecord {
            tick: k,
            timestamp: ts,
            true_pose: state.pose.to_array(),
            estimated_pose: estimate.to_array(),
            speed: state.speed,
            acceleration_cmd: cmd.acceleration,
            steering_cmd: cmd.steering,
            target_velocity: plan.target_velocity,
            curvature: plan.curvature,
        });
        if finished {
            completed = true;
            break;
        }
        pid = next_pid;
        let next = step_kinematics(&state, &cmd, period, cond, setup.vehicle, &mut actuation_rng);
        prediction = predict(&estimate, &state, &next, setup.vehicle.wheelbase, dt);
        state = next;
    }
    debug!(mode = cond.mode.as_str(), frames = ticks.len(), completed, "run finished");

    let run_length = Ratio::new(ticks.len() as i64, i64::from(clock.lidar_hz));
    let camera_triggers = camera_trigger_times(clock, cond.mode, run_length);
    Ok(RunRecord {
        mode: cond.mode,
        realized: Trajectory::new(realized)?,
        truth: Trajectory::new(truth)?,
        lidar_ticks: ticks,
        camera_triggers,
        log,
        completed,
    })
}

/// Dead-reckons the last estimate over one step with odometry speed and
/// steering; this seeds the next registration.
fn predict(estimate: &Pose<f64>, before: &VehicleState, after: &VehicleState, wheelbase: f64, dt: f64) -> Pose<f64> {
    let distance = 0.5 * (before.speed + after.speed) * dt;
    let dyaw = distance * after.steering.tan() / wheelbase;
    let mid = estimate.yaw() + 0.5 * dyaw;
    Pose::new(
        estimate.x() + distance * mid.cos(),
        estimate.y() + distance * mid.sin(),
        estimate.z(),
        estimate.roll(),
        estimate.yaw() + dyaw,
        estimate.pitch(),
    )
    .unwrap_or(*estimate)
}
