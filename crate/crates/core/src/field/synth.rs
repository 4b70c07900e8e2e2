use std::f64::consts::TAU;

use nalgebra::{Rotation3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cloud::{Point, PointCloud};
use crate::config::{BoxSpec, FieldSampling, PoleSpec, RoadSpec, ScenarioConfig};
use crate::path::PathSample;
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("field layout is empty")]
    EmptyLayout,
}

/// Field points grouped by the primitive that produced them.
#[derive(Debug, Clone, Default)]
pub struct FieldParts {
    pub ground: PointCloud<f64>,
    pub curbs: PointCloud<f64>,
    pub poles: PointCloud<f64>,
    pub boxes: PointCloud<f64>,
    /// Ground rectangle `(min_x, min_y, max_x, max_y)`.
    pub ground_bounds: (f64, f64, f64, f64),
}

impl FieldParts {
    pub fn merged(&self) -> PointCloud<f64> {
        let mut cloud = PointCloud::new(Vec::with_capacity(
            self.ground.len() + self.curbs.len() + self.poles.len() + self.boxes.len(),
        ));
        for part in [&self.ground, &self.curbs, &self.poles, &self.boxes] {
            cloud.extend_from(part);
        }
        cloud
    }
}

/// Surface-samples the scenario layout into a map point cloud.
pub fn synthesize_field(cfg: &ScenarioConfig) -> Result<PointCloud<f64>, FieldError> {
    Ok(synthesize_field_parts(cfg)?.merged())
}

pub fn synthesize_field_parts(cfg: &ScenarioConfig) -> Result<FieldParts, FieldError> {
    let layout = &cfg.layout;
    if layout.is_empty() {
        return Err(FieldError::EmptyLayout);
    }
    let sampling = &cfg.field;
    let mut rng = rng::stream(cfg.seed, rng::FIELD);

    let mut poles: Vec<PoleSpec> = layout.poles.clone();
    let mut road_paths = Vec::new();
    for road in &layout.roads {
        let samples = road.path.densify(0.05);
        poles.extend(roadside_poles(road, &samples));
        road_paths.push((road, samples));
    }

    let bounds = layout_bounds(cfg, &road_paths, &poles);
    let ground = sample_ground(bounds, sampling, &mut rng);

    let mut curbs = PointCloud::default();
    for (road, samples) in &road_paths {
        if road.curbs {
            sample_curbs(road, samples, sampling, &mut rng, &mut curbs);
        }
    }
    let mut pole_cloud = PointCloud::default();
    for pole in &poles {
        sample_pole(pole, sampling.surface_density, &mut rng, &mut pole_cloud);
    }
    let mut box_cloud = PointCloud::default();
    for b in &layout.boxes {
        sample_box(b, sampling.surface_density, &mut rng, &mut box_cloud);
    }
    Ok(FieldParts {
        ground,
        curbs,
        poles: pole_cloud,
        boxes: box_cloud,
        ground_bounds: bounds,
    })
}

fn layout_bounds(
    cfg: &ScenarioConfig,
    roads: &[(&RoadSpec, Vec<PathSample>)],
    poles: &[PoleSpec],
) -> (f64, f64, f64, f64) {
    let mut b = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    let mut grow = |x: f64, y: f64, r: f64| {
        b = (b.0.min(x - r), b.1.min(y - r), b.2.max(x + r), b.3.max(y + r));
    };
    for (road, samples) in roads {
        for s in samples {
            for side in [1.0, -1.0] {
                let (x, y) = edge_point(s, side * road.width / 2.0);
                grow(x, y, 0.0);
            }
        }
    }
    for p in poles {
        grow(p.x, p.y, p.radius);
    }
    for bx in &cfg.layout.boxes {
        grow(bx.x, bx.y, 0.5 * bx.length.hypot(bx.width));
    }
    for s in cfg.trajectory.path.densify(0.25) {
        grow(s.x, s.y, 0.0);
    }
    let m = cfg.field.ground_margin;
    (b.0 - m, b.1 - m, b.2 + m, b.3 + m)
}

/// One jittered point per `spacing x spacing` tile, tiles covering the bounds.
fn sample_ground(
    (x0, y0, x1, y1): (f64, f64, f64, f64),
    sampling: &FieldSampling,
    rng: &mut ChaCha8Rng,
) -> PointCloud<f64> {
    let s = sampling.ground_spacing;
    let nx = ((x1 - x0) / s).ceil() as usize;
    let ny = ((y1 - y0) / s).ceil() as usize;
    let mut cloud = PointCloud::new(Vec::with_capacity(nx * ny));
    for j in 0..ny {
        for i in 0..nx {
            let x = x0 + (i as f64 + rng.gen_range(0.0..1.0)) * s;
            let y = y0 + (j as f64 + rng.gen_range(0.0..1.0)) * s;
            cloud.push(Point::new(x, y, 0.0, rng.gen_range(0.05..0.25)));
        }
    }
    cloud
}

fn along(samples: &[PathSample], s: f64) -> PathSample {
    let i = samples.partition_point(|p| p.s <= s).clamp(1, samples.len() - 1);
    let (a, b) = (samples[i - 1], samples[i]);
    let u = if b.s > a.s { ((s - a.s) / (b.s - a.s)).clamp(0.0, 1.0) } else { 0.0 };
    PathSample {
        x: a.x + u * (b.x - a.x),
        y: a.y + u * (b.y - a.y),
        heading: a.heading,
        s,
    }
}

fn edge_point(p: &PathSample, offset: f64) -> (f64, f64) {
    (p.x - offset * p.heading.sin(), p.y + offset * p.heading.cos())
}

fn roadside_poles(road: &RoadSpec, samples: &[PathSample]) -> Vec<PoleSpec> {
    let mut out = Vec::new();
    if road.pole_spacing <= 0.0 || samples.len() < 2 {
        return out;
    }
    let total = samples[samples.len() - 1].s;
    let mut s = road.pole_spacing / 2.0;
    while s <= total {
        let p = along(samples, s);
        for side in [1.0, -1.0] {
            let (x, y) = edge_point(&p, side * (road.width / 2.0 + 0.6));
            out.push(PoleSpec {
                x,
                y,
                radius: 0.15,
                height: 5.0,
            });
        }
        s += road.pole_spacing;
    }
    out
}

fn sample_curbs(
    road: &RoadSpec,
    samples: &[PathSample],
    sampling: &FieldSampling,
    rng: &mut ChaCha8Rng,
    out: &mut PointCloud<f64>,
) {
    if samples.len() < 2 {
        return;
    }
    let length = samples[samples.len() - 1].s;
    let h = sampling.curb_height;
    let count = (sampling.surface_density * h * length).ceil() as usize;
    for side in [1.0, -1.0] {
        for _ in 0..count {
            let p = along(samples, rng.gen_range(0.0..=length));
            let (x, y) = edge_point(&p, side * road.width / 2.0);
            out.push(Point::new(x, y, rng.gen_range(0.0..=h), rng.gen_range(0.4..0.5)));
        }
    }
}

fn sample_pole(pole: &PoleSpec, density: f64, rng: &mut ChaCha8Rng, out: &mut PointCloud<f64>) {
    let side = (density * TAU * pole.radius * pole.height).ceil() as usize;
    for _ in 0..side {
        let theta = rng.gen_range(0.0..TAU);
        out.push(Point::new(
            pole.x + pole.radius * theta.cos(),
            pole.y + pole.radius * theta.sin(),
            rng.gen_range(0.0..=pole.height),
            rng.gen_range(0.6..0.8),
        ));
    }
    let cap = (density * std::f64::consts::PI * pole.radius * pole.radius).ceil() as usize;
    for _ in 0..cap {
        let theta = rng.gen_range(0.0..TAU);
        let r = pole.radius * rng.gen_range(0.0f64..=1.0).sqrt();
        out.push(Point::new(
            pole.x + r * theta.cos(),
            pole.y + r * theta.sin(),
            pole.height,
            rng.gen_range(0.6..0.8),
        ));
    }
}

fn sample_box(b: &BoxSpec, density: f64, rng: &mut ChaCha8Rng, out: &mut PointCloud<f64>) {
    let (hl, hw) = (b.length / 2.0, b.width / 2.0);
    let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), b.yaw_deg.to_radians());
    let base = Vector3::new(b.x, b.y, b.z);
    // (fixed axis, fixed value, free axis u range, free axis v range)
    let faces = [
        (2, 0.0, (0, -hl, hl), (1, -hw, hw)),
        (2, b.height, (0, -hl, hl), (1, -hw, hw)),
        (0, -hl, (1, -hw, hw), (2, 0.0, b.height)),
        (0, hl, (1, -hw, hw), (2, 0.0, b.height)),
        (1, -hw, (0, -hl, hl), (2, 0.0, b.height)),
        (1, hw, (0, -hl, hl), (2, 0.0, b.height)),
    ];
    for (axis, value, (ua, u0, u1), (va, v0, v1)) in faces {
        let count = (density * (u1 - u0) * (v1 - v0)).ceil() as usize;
        for _ in 0..count {
            let mut local = Vector3::zeros();
            local[axis] = value;
            local[ua] = rng.gen_range(u0..=u1);
            local[va] = rng.gen_range(v0..=v1);
            let p = base + rot * local;
            out.push(Point::new(p.x, p.y, p.z, rng.gen_range(0.3..0.9)));
        }
    }
}
