//! Cost translation, minimum-closed-set flow network, max-flow and optimal
//! surface recovery.

pub mod costs;
pub mod graph;
pub mod maxflow;
pub mod network;
pub mod solve;
pub mod voxelize;

pub use costs::{eq1_column, eq1_costs, gradient_column, gradient_costs};
pub use graph::{ColumnGraph, SurfaceSolution, COST_SCALE};
pub use maxflow::{brute_force_min_cut, max_flow, FlowResult};
pub use network::{build_flow_network, Arc, FlowNetwork};
pub use solve::{brute_force_surface, extract_surface, solve_surface};
pub use voxelize::{cut_mesh, voxelize, voxelize_mesh, winding_number};
