//! The closed test field: synthetic point-cloud map and its NDT grid.

mod ndt;
mod synth;

pub use ndt::{build_ndt_grid, CellIndex, GridError, GridParams, NdtCell, NdtGrid};
pub use synth::{synthesize_field, synthesize_field_parts, FieldError, FieldParts};
