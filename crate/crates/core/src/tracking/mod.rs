//! Desired-trajectory authoring, pure pursuit planning, PID control and the
//! closed tracking loop.

mod pid;
mod pursuit;
mod run;
mod trajectory;

pub use pid::{pid_control, ControlCommand, PidState};
pub use pursuit::{pure_pursuit_plan, MotionPlan, PursuitParams};
pub use run::{track_trajectory, RunLogRecord, RunOptions, RunRecord, TrackingError, TrackingSetup};
pub use trajectory::{
    author_trajectory, trajectory_gap, Trajectory, TrajectoryError, TrajectorySample,
    TRAJECTORY_FORMAT_VERSION,
};
