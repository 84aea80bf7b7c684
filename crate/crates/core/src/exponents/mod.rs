//! Capacities, scaling factors and critical exponents.

mod capacity;
mod graph;
mod projection;
mod rho;
mod theta;

pub use capacity::{p_capacity, CapacityOptions, CapacityResult};
pub use graph::{build_graph, build_graph_family, GraphApprox, GraphFamily};
pub use projection::{besov_projection, project_with, BesovKernel, ProjectionOptions, ProjectionResult, DENSE_LIMIT};
pub use rho::{rho_p_estimate, RhoEstimate};
pub use theta::{
    theta_p_estimate, theta_p_star_estimate, DensityRow, EvidenceRow, ThetaEstimate, ThetaStarEstimate,
    ThetaStarOptions, DENSITY_TOL,
};

pub(crate) use graph::cube_graph;
