use nalgebra::Vector3;

use crate::cloud::PointCloud;
use crate::config::ScenarioConfig;
use crate::field::{synthesize_field, GridParams, NdtGrid};
use crate::localization::RegistrationParams;
use crate::tracking::{author_trajectory, track_trajectory, RunOptions, RunRecord, Trajectory, TrackingError, TrackingSetup};
use crate::vehicle::{Mode, RunCondition, SensorClock};

use super::PipelineError;

/// Margin added to the desired trajectory's duration when no explicit run
/// length is configured.
pub const RUN_MARGIN_S: f64 = 5.0;

/// A scenario's static inputs: map, grid, sensor clock and desired trajectory.
#[derive(Debug, Clone)]
pub struct World {
    pub config: ScenarioConfig,
    pub field: PointCloud<f64>,
    pub grid: NdtGrid<f64>,
    pub clock: SensorClock,
    pub desired: Trajectory,
}

impl World {
    pub fn build(config: ScenarioConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let field = synthesize_field(&config)?;
        let params = GridParams {
            cell_size: config.ndt.cell_size,
            origin: Vector3::from(config.ndt.origin),
            min_points: config.ndt.min_points,
        };
        let grid = NdtGrid::build(&field, &params)?;
        let clock = SensorClock::from_rates(&config.sensors);
        let desired = author_trajectory(&config.trajectory, config.lidar.height)?;
        Ok(Self {
            config,
            field,
            grid,
            clock,
            desired,
        })
    }

    pub fn registration(&self) -> RegistrationParams<f64> {
        RegistrationParams {
            max_iterations: self.config.ndt.max_iterations,
            tolerance: self.config.ndt.tolerance,
            ..RegistrationParams::default()
        }
    }

    pub fn setup(&self) -> TrackingSetup<'_> {
        TrackingSetup {
            field: &self.field,
            grid: &self.grid,
            clock: &self.clock,
            lidar: &self.config.lidar,
            vehicle: &self.config.vehicle,
            control: &self.config.control,
            registration: self.registration(),
        }
    }

    pub fn run_options(&self, seed: u64) -> RunOptions {
        match self.config.trajectory.duration_s {
            Some(d) => {
                let hz = i64::from(self.clock.lidar_hz);
                let ticks = (d * hz as f64).ceil() as i64;
                RunOptions {
                    seed,
                    duration: num_rational::Ratio::new(ticks.max(1), hz),
                    perfect_localization: false,
                }
            }
            None => RunOptions::covering(&self.desired, &self.clock, seed, RUN_MARGIN_S),
        }
    }

    /// One closed-loop run of the desired trajectory.
    pub fn track(&self, mode: Mode, options: &RunOptions) -> Result<RunRecord, TrackingError> {
        let cond = RunCondition::from_config(&self.config, mode);
        track_trajectory(&self.desired, &cond, &self.setup(), options)
    }
}
