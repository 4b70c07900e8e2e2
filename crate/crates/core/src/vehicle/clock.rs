use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::config::SensorRates;

/// Exact timestamp in seconds.
pub type Timestamp = Ratio<i64>;

/// Converts an exact timestamp to floating-point seconds.
pub fn seconds(t: Timestamp) -> f64 {
    t.to_f64().expect("timestamp fits f64")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Day,
    Night,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Day => "day",
            Mode::Night => "night",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Lidar,
    DayCamera,
    NightCamera,
}

/// Sensors sharing one start time but ticking at different rates.
///
/// Tick `k` of a stream at rate `r` is exactly `start + k / r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorClock {
    pub lidar_hz: u32,
    pub day_camera_hz: u32,
    pub night_camera_hz: u32,
    pub start: Timestamp,
}

impl Default for SensorClock {
    fn default() -> Self {
        Self::from_rates(&SensorRates::default())
    }
}

impl SensorClock {
    pub fn from_rates(rates: &SensorRates) -> Self {
        Self {
            lidar_hz: rates.lidar_hz,
            day_camera_hz: rates.day_camera_hz,
            night_camera_hz: rates.night_camera_hz,
            start: Ratio::new(rates.start_time_ns, 1_000_000_000),
        }
    }

    pub fn rate(&self, stream: Stream) -> u32 {
        match stream {
            Stream::Lidar => self.lidar_hz,
            Stream::DayCamera => self.day_camera_hz,
            Stream::NightCamera => self.night_camera_hz,
        }
    }

    pub fn camera_stream(mode: Mode) -> Stream {
        match mode {
            Mode::Day => Stream::DayCamera,
            Mode::Night => Stream::NightCamera,
        }
    }

    pub fn period(&self, stream: Stream) -> Timestamp {
        Ratio::new(1, i64::from(self.rate(stream)))
    }

    pub fn tick(&self, stream: Stream, k: u64) -> Timestamp {
        self.start + Ratio::new(k as i64, i64::from(self.rate(stream)))
    }

    /// Number of ticks in `[start, start + duration)`: `ceil(duration * rate)`.
    pub fn tick_count(&self, stream: Stream, duration: Timestamp) -> u64 {
        if duration <= Ratio::from_integer(0) {
            return 0;
        }
        (duration * i64::from(self.rate(stream))).ceil().to_integer() as u64
    }

    /// All `(k, timestamp)` ticks in `[start, start + duration)`.
    pub fn ticks(&self, stream: Stream, duration: Timestamp) -> Vec<(u64, Timestamp)> {
        (0..self.tick_count(stream, duration))
            .map(|k| (k, self.tick(stream, k)))
            .collect()
    }
}

/// Camera trigger list of one run.
pub fn camera_trigger_times(
    clock: &SensorClock,
    mode: Mode,
    duration: Timestamp,
) -> Vec<(u64, Timestamp)> {
    clock.ticks(SensorClock::camera_stream(mode), duration)
}
