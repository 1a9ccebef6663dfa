//! Surface meshing and graph-column construction.

pub mod columns;
pub mod elf;
pub mod marching;
pub mod mesh;
pub mod stl;

pub use columns::{build_columns, ColumnMode, ColumnParams, ColumnSet};
pub use elf::{elf_field, DEFAULT_EXCLUSION_MM};
pub use marching::extract_mesh;
pub use mesh::SurfaceMesh;
pub use stl::write_stl;
