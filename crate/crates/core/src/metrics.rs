//! Shape diagnostics used by the CLI reports and the tests.

use rayon::prelude::*;

use crate::geom::{dot, norm, point_triangle_dist2, sub, Vec3};
use crate::mesh::TriangleMesh;
use crate::signal::Signal;

/// Greedy leader clustering: each normal joins the first leader within
/// `radius_deg`, otherwise it starts a new cluster. Returns the cluster count.
pub fn count_normal_clusters(normals: &Signal, radius_deg: f64) -> usize {
    let cos_r = radius_deg.to_radians().cos();
    let mut leaders: Vec<Vec3> = Vec::new();
    for n in normals.rows3() {
        if !leaders.iter().any(|l| dot(*l, n) >= cos_r) {
            leaders.push(n);
        }
    }
    leaders.len()
}

/// Area fraction of faces whose normal is within `angle_deg` of a
/// coordinate axis direction.
pub fn axis_concentration(mesh: &TriangleMesh, normals: &Signal, angle_deg: f64) -> f64 {
    let cos_a = angle_deg.to_radians().cos();
    let total = mesh.total_area();
    normals
        .rows3()
        .iter()
        .zip(mesh.face_area())
        .filter(|(n, _)| n.iter().any(|c| c.abs() >= cos_a))
        .map(|(_, a)| a)
        .sum::<f64>()
        / total
}

fn one_sided(from: &[Vec3], to: &TriangleMesh) -> f64 {
    let v = to.vertices();
    from.par_iter()
        .map(|&p| {
            to.faces()
                .iter()
                .map(|f| point_triangle_dist2(p, v[f[0]], v[f[1]], v[f[2]]))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
        .sqrt()
}

/// Symmetric vertex-to-surface Hausdorff distance (brute force).
pub fn hausdorff(a: &TriangleMesh, b: &TriangleMesh) -> f64 {
    one_sided(a.vertices(), b).max(one_sided(b.vertices(), a))
}

/// Standard deviation over mean of the vertex distances to the centroid.
pub fn radius_variation(points: &[Vec3]) -> f64 {
    let n = points.len() as f64;
    let mut c = [0.0; 3];
    for p in points {
        for k in 0..3 {
            c[k] += p[k] / n;
        }
    }
    let r: Vec<f64> = points.iter().map(|p| norm(sub(*p, c))).collect();
    let mean = r.iter().sum::<f64>() / n;
    let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}
