//! Nonlinear spectral total-variation (TV) transform for signals living on
//! triangle meshes and point clouds.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`], [`pointcloud`] and [`io`] load and validate domains,
//! * [`ops`] assembles the sparse gradient/divergence pairs for vertex,
//!   face and graph signals,
//! * [`solver`] minimises the ROF energy with a primal-dual hybrid gradient
//!   iteration,
//! * [`spectral`] builds forward and inverse-scale-space decompositions and
//!   resynthesises them,
//! * [`filters`] and [`flow`] implement spectral filtering, detail transfer
//!   and the geometric flows built on top.

pub mod container;
pub mod digest;
pub mod error;
pub mod filters;
pub mod flow;
pub mod geom;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod ops;
pub mod pointcloud;
pub mod shapes;
pub mod signal;
pub mod solver;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
pub use filters::{apply_filter, detail_transfer, Band, CorrespondenceMap, FilterSpec};
pub use flow::{
    normal_tv_step, p_laplacian_flow, recover_vertices, stylize_cubic, tv_normal_energy, FlowState,
    ScreenedPoisson, StylizeMode, StylizeParams,
};
pub use mesh::{Edge, TriangleMesh};
pub use ops::{estimate_operator_norm, DiscreteOperators};
pub use pointcloud::{build_point_cloud_graph, estimate_normals, PointCloudGraph};
pub use signal::{Domain, Signal};
pub use solver::{default_config, solve_rof, ProxProblem, RofSolution, SolverConfig, TvKind};
pub use sparse::SparseMatrix;
pub use spectral::{
    decompose, decompose_forward, decompose_inverse, estimate_alpha_max, reconstruct, spectrum, tv_flow, FlowRun,
    ScheduleConfig, Scheme, SpectralDecomposition,
};
