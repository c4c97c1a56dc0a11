//! Inputs shared by the benchmarks.

use tvspec_core::flow::face_normal_signal;
use tvspec_core::shapes::{cap_vertex_indicator, icosphere, perturb};
use tvspec_core::{Domain, Signal, TriangleMesh};

/// Icosphere with a geodesic cap indicator on its vertices.
pub fn cap_signal(subdivisions: u32) -> (TriangleMesh, Signal) {
    let m = icosphere(subdivisions);
    let s = Signal::scalar(Domain::Vertices, cap_vertex_indicator(&m, [0.0, 0.0, 1.0], 0.5)).expect("cap signal");
    (m, s)
}

/// Slightly noisy icosphere and its face normals.
pub fn noisy_normals(subdivisions: u32) -> (TriangleMesh, Signal) {
    let m = perturb(&icosphere(subdivisions), 0.1 / 2f64.powi(subdivisions as i32), 1);
    let n = face_normal_signal(&m);
    (m, n)
}
