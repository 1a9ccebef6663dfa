//! Optimal-surface segmentation of a single lesion from a probability map.
//!
//! The pipeline crops a cubic region around a clicked center, refines the
//! thresholded probability map, meshes the refined mask, traces graph
//! columns along electric lines of force, converts probabilities into node
//! costs and solves for the globally optimal surface with a max-flow
//! computation on the minimum-closed-set graph.

// Negated float comparisons (`!(x > 0.0)`) are used on purpose: they also
// reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod graphcut;
pub mod metaimage;
pub mod metrics;
pub mod phantom;
pub mod pipeline;
pub mod refine;
pub mod surface;
pub mod volume;

pub use error::{Error, Result};
pub use volume::{Geometry, LabelVolume, ProbabilityVolume, RoiSpec, ScalarVolume, Vec3, Volume};
