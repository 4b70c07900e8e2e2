//! Planar path authoring: waypoint polylines or straight/arc segment chains,
//! densified by arc length.

use serde::{Deserialize, Serialize};

/// One primitive of a segment chain. Positive arc angles turn left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Segment {
    Straight { length: f64 },
    Arc { radius: f64, angle_deg: f64 },
}

/// A planar path, given either as `waypoints` or as `start` + `segments`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub waypoints: Vec<[f64; 2]>,
    /// `[x, y, heading_deg]` of the first segment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<Segment>,
}

/// Densified path sample: position, heading and arc length from the start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub s: f64,
}

impl PathSpec {
    pub fn validate(&self) -> Result<(), String> {
        match (self.waypoints.is_empty(), self.segments.is_empty()) {
            (false, false) => Err("path has both waypoints and segments".into()),
            (true, true) => Err("path has neither waypoints nor segments".into()),
            (false, true) => {
                if self.waypoints.iter().flatten().any(|v| !v.is_finite()) {
                    return Err("non-finite waypoint".into());
                }
                Ok(())
            }
            (true, false) => {
                for seg in &self.segments {
                    match *seg {
                        Segment::Straight { length } if !(length > 0.0 && length.is_finite()) => {
                            return Err(format!("straight segment length {length} must be > 0"))
                        }
                        Segment::Arc { radius, angle_deg }
                            if !(radius > 0.0 && angle_deg != 0.0 && angle_deg.is_finite()) =>
                        {
                            return Err(format!(
                                "arc segment needs radius > 0 and nonzero angle (got {radius}, {angle_deg})"
                            ))
                        }
                        _ => {}
                    }
                }
                Ok(())
            }
        }
    }

    /// Samples the path every `spacing` meters of arc length. The final
    /// point is always included, so the last gap may be shorter.
    pub fn densify(&self, spacing: f64) -> Vec<PathSample> {
        assert!(spacing > 0.0, "spacing must be positive");
        if self.segments.is_empty() {
            densify_polyline(&self.waypoints, spacing)
        } else {
            densify_segments(self.start.unwrap_or([0.0, 0.0, 0.0]), &self.segments, spacing)
        }
    }

    /// Axis-aligned bounds `(min_x, min_y, max_x, max_y)` of the densified path.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.densify(0.25).iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), p| (a.min(p.x), b.min(p.y), c.max(p.x), d.max(p.y)),
        )
    }
}

fn densify_polyline(waypoints: &[[f64; 2]], spacing: f64) -> Vec<PathSample> {
    let mut out = Vec::new();
    let Some(first) = waypoints.first() else {
        return out;
    };
    // drop repeated vertices
    let mut pts: Vec<[f64; 2]> = vec![*first];
    for w in &waypoints[1..] {
        let last = pts[pts.len() - 1];
        if (w[0] - last[0]).hypot(w[1] - last[1]) > 1e-12 {
            pts.push(*w);
        }
    }
    if pts.len() == 1 {
        out.push(PathSample {
            x: pts[0][0],
            y: pts[0][1],
            heading: 0.0,
            s: 0.0,
        });
        return out;
    }
    let mut cumulative = vec![0.0];
    for w in pts.windows(2) {
        let len = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        cumulative.push(cumulative[cumulative.len() - 1] + len);
    }
    let total = cumulative[cumulative.len() - 1];
    let n = (total / spacing).ceil() as usize;
    let mut seg = 0;
    for i in 0..=n {
        let s = (i as f64 * spacing).min(total);
        while seg + 2 < cumulative.len() && cumulative[seg + 1] < s {
            seg += 1;
        }
        let (a, b) = (pts[seg], pts[seg + 1]);
        let len = cumulative[seg + 1] - cumulative[seg];
        let u = ((s - cumulative[seg]) / len).clamp(0.0, 1.0);
        out.push(PathSample {
            x: a[0] + u * (b[0] - a[0]),
            y: a[1] + u * (b[1] - a[1]),
            heading: (b[1] - a[1]).atan2(b[0] - a[0]),
            s,
        });
        if s >= total {
            break;
        }
    }
    out
}

fn densify_segments(start: [f64; 3], segments: &[Segment], spacing: f64) -> Vec<PathSample> {
    // segment start states
    let mut starts = Vec::with_capacity(segments.len());
    let (mut x, mut y, mut heading, mut s0) = (start[0], start[1], start[2].to_radians(), 0.0);
    for seg in segments {
        starts.push((x, y, heading, s0));
        let len = segment_length(seg);
        (x, y, heading) = advance(seg, x, y, heading, len);
        s0 += len;
    }
    let total = s0;
    let n = (total / spacing).ceil() as usize;
    let mut out = Vec::with_capacity(n + 1);
    let mut k = 0;
    for i in 0..=n {
        let s = (i as f64 * spacing).min(total);
        while k + 1 < segments.len() && starts[k + 1].3 <= s {
            k += 1;
        }
        let (sx, sy, sh, ss) = starts[k];
        let (px, py, ph) = advance(&segments[k], sx, sy, sh, s - ss);
        out.push(PathSample {
            x: px,
            y: py,
            heading: ph,
            s,
        });
        if s >= total {
            break;
        }
    }
    out
}

fn segment_length(seg: &Segment) -> f64 {
    match *seg {
        Segment::Straight { length } => length,
        Segment::Arc { radius, angle_deg } => radius * angle_deg.to_radians().abs(),
    }
}

fn advance(seg: &Segment, x: f64, y: f64, heading: f64, dist: f64) -> (f64, f64, f64) {
    match *seg {
        Segment::Straight { .. } => (x + dist * heading.cos(), y + dist * heading.sin(), heading),
        Segment::Arc { radius, angle_deg } => {
            let turn = angle_deg.signum();
            let dtheta = turn * dist / radius;
            // center of curvature sits to the left (turn > 0) or right
            let cx = x - turn * radius * heading.sin();
            let cy = y + turn * radius * heading.cos();
            let h = heading + dtheta;
            (cx + turn * radius * h.sin(), cy - turn * radius * h.cos(), h)
        }
    }
}
