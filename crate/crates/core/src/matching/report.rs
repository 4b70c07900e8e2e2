use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::pairs::MatchedPair;

/// Distribution summary of one error measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    pub mean: f64,
    /// Mean of the two middle values for even counts.
    pub median: f64,
    /// Nearest-rank 95th percentile.
    pub p95: f64,
    pub max: f64,
}

impl ErrorStats {
    /// `None` for an empty sample.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        // summed in input order so the result does not depend on sorting
        let mean = values.iter().sum::<f64>() / n as f64;
        Some(Self {
            count: n,
            mean,
            median,
            p95: sorted[rank - 1],
            max: sorted[n - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagBreakdown {
    pub pairs: usize,
    pub position: Option<ErrorStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub day_frames: usize,
    pub matched: usize,
    /// `matched / day_frames`, zero when there are no day frames.
    pub match_yield: f64,
    /// Meters.
    pub position: Option<ErrorStats>,
    /// Radians.
    pub angular: Option<ErrorStats>,
    pub angular_warn_rad: f64,
    pub angular_warnings: usize,
    /// Keyed by `road_scene/lighting`.
    pub by_tag: BTreeMap<String, TagBreakdown>,
    /// Removal counts by flag reason.
    pub removed: BTreeMap<String, usize>,
}

/// Summarizes a final pair set against the number of day frames queried.
pub fn alignment_report(pairs: &[MatchedPair], day_frames: usize, angular_warn_rad: f64) -> AlignmentReport {
    let pos: Vec<f64> = pairs.iter().map(|p| p.position_error).collect();
    let ang: Vec<f64> = pairs.iter().map(|p| p.angular_error).collect();
    let mut grouped: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for p in pairs {
        grouped.entry(p.tags.key()).or_default().push(p.position_error);
    }
    let by_tag = grouped
        .into_iter()
        .map(|(k, v)| {
            (
                k,
                TagBreakdown {
                    pairs: v.len(),
                    position: ErrorStats::from_values(&v),
                },
            )
        })
        .collect();
    AlignmentReport {
        day_frames,
        matched: pairs.len(),
        match_yield: if day_frames == 0 {
            0.0
        } else {
            pairs.len() as f64 / day_frames as f64
        },
        position: ErrorStats::from_values(&pos),
        angular: ErrorStats::from_values(&ang),
        angular_warn_rad,
        angular_warnings: ang.iter().filter(|&&a| a > angular_warn_rad).count(),
        by_tag,
        removed: BTreeMap::new(),
    }
}

impl AlignmentReport {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "matched {} of {} day frames (yield {:.1}%)",
            self.matched,
            self.day_frames,
            100.0 * self.match_yield
        );
        match &self.position {
            Some(p) => {
                let _ = writeln!(
                    s,
                    "position error [cm]  mean {:.2}  median {:.2}  p95 {:.2}  max {:.2}",
                    100.0 * p.mean,
                    100.0 * p.median,
                    100.0 * p.p95,
                    100.0 * p.max
                );
            }
            None => s.push_str("position error: no pairs\n"),
        }
        if let Some(a) = &self.angular {
            let _ = writeln!(
                s,
                "angular error [deg]  mean {:.3}  median {:.3}  p95 {:.3}  max {:.3}",
                a.mean.to_degrees(),
                a.median.to_degrees(),
                a.p95.to_degrees(),
                a.max.to_degrees()
            );
        }
        if self.angular_warnings > 0 {
            let _ = writeln!(
                s,
                "warning: {} pairs exceed {:.2} deg angular error",
                self.angular_warnings,
                self.angular_warn_rad.to_degrees()
            );
        }
        for (reason, n) in &self.removed {
            let _ = writeln!(s, "removed {n} ({reason})");
        }
        for (tag, b) in &self.by_tag {
            let mean = b.position.map_or(0.0, |p| 100.0 * p.mean);
            let _ = writeln!(s, "  {tag}: {} pairs, mean {:.2} cm", b.pairs, mean);
        }
        s
    }
}
