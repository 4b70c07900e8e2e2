//! Simulated vehicle: kinematics, actuation noise, LiDAR scans and the
//! multi-rate sensor clock.

mod clock;
mod kinematics;
mod lidar;

pub use clock::{camera_trigger_times, seconds, Mode, SensorClock, Stream, Timestamp};
pub use kinematics::{step_kinematics, RunCondition, VehicleState};
pub use lidar::{simulate_scan, LidarScan, LidarSimulator};
