//! Deterministic simulator for day/night trajectory-tracking pose matching.
//!
//! A vehicle follows a recorded trajectory twice, once per lighting
//! condition, localizing against an NDT map built from a synthetic field.
//! Camera frames of the two runs are then paired by pose.

// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod config;
pub mod field;
pub mod geometry;
pub mod localization;
pub mod matching;
pub mod path;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod scenarios;
pub mod tracking;
pub mod vehicle;

pub use scalar::Real;

pub type Pose6D = geometry::Pose<f64>;
pub type HomogeneousTransform = geometry::Transform<f64>;
pub type MapCloud = cloud::PointCloud<f64>;
pub type MapGrid = field::NdtGrid<f64>;
