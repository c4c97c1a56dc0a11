//! Procedural test shapes: icospheres, subdivided cubes, planar grids and
//! geodesic caps.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geom::{dot, normalize, Vec3};
use crate::mesh::TriangleMesh;

/// Unit icosphere after `subdivisions` rounds of 1-to-4 splitting
/// (`10 * 4^s + 2` vertices).
pub fn icosphere(subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriangleMesh::new(vertices, faces).expect("icosphere is a valid mesh")
}

/// Axis-aligned cube of side `side` centred at the origin, each face split
/// into an `n x n` grid of quads (two triangles each).
pub fn cube(n: usize, side: f64) -> TriangleMesh {
    assert!(n >= 1);
    let h = side / 2.0;
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces = Vec::new();
    // integer lattice coordinates in [0, n] keep shared cube edges identical
    let mut vid = |p: [i64; 3], vertices: &mut Vec<Vec3>| -> usize {
        *index.entry(p).or_insert_with(|| {
            vertices.push(p.map(|c| -h + side * c as f64 / n as f64));
            vertices.len() - 1
        })
    };
    let ni = n as i64;
    for axis in 0..3 {
        for side_sign in [0i64, 1] {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            for i in 0..ni {
                for j in 0..ni {
                    let corner = |di: i64, dj: i64| {
                        let mut p = [0i64; 3];
                        p[axis] = side_sign * ni;
                        p[u] = i + di;
                        p[v] = j + dj;
                        p
                    };
                    let q = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)]
                        .map(|p| vid(p, &mut vertices));
                    // (u, v, axis) is right-handed, so CCW in (u, v) faces +axis
                    let (t0, t1) = if side_sign == 1 {
                        ([q[0], q[1], q[2]], [q[0], q[2], q[3]])
                    } else {
                        ([q[0], q[2], q[1]], [q[0], q[3], q[2]])
                    };
                    faces.push(t0);
                    faces.push(t1);
                }
            }
        }
    }
    TriangleMesh::new(vertices, faces).expect("cube is a valid mesh")
}

/// Planar `nx x ny` grid of unit-spaced quads in `z = 0`, triangulated.
pub fn plane_grid(nx: usize, ny: usize, spacing: f64) -> TriangleMesh {
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([i as f64 * spacing, j as f64 * spacing, 0.0]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriangleMesh::new(vertices, faces).expect("grid is a valid mesh")
}

/// Great-circle distance between two points of the unit sphere.
pub fn sphere_distance(a: Vec3, b: Vec3) -> f64 {
    dot(normalize(a), normalize(b)).clamp(-1.0, 1.0).acos()
}

/// Indicator of the faces whose centroid lies in the geodesic cap of
/// radius `r` around `center` on the unit sphere.
pub fn cap_face_indicator(mesh: &TriangleMesh, center: Vec3, r: f64) -> Vec<f64> {
    (0..mesh.face_count())
        .map(|f| if sphere_distance(mesh.face_centroid(f), center) < r { 1.0 } else { 0.0 })
        .collect()
}

/// Indicator of the vertices inside the geodesic cap.
pub fn cap_vertex_indicator(mesh: &TriangleMesh, center: Vec3, r: f64) -> Vec<f64> {
    mesh.vertices()
        .iter()
        .map(|&p| if sphere_distance(p, center) < r { 1.0 } else { 0.0 })
        .collect()
}

/// Perimeter over area of a geodesic cap of radius `r` on the unit sphere.
pub fn cap_eigenvalue(r: f64) -> f64 {
    r.sin() / (1.0 - r.cos())
}

/// Copy of `mesh` with i.i.d. Gaussian vertex displacements.
pub fn perturb(mesh: &TriangleMesh, sigma: f64, seed: u64) -> TriangleMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let v = mesh
        .vertices()
        .iter()
        .map(|p| [p[0] + normal.sample(&mut rng), p[1] + normal.sample(&mut rng), p[2] + normal.sample(&mut rng)])
        .collect();
    mesh.with_vertices(v).expect("perturbation keeps faces non-degenerate")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts_and_area() {
        let m = icosphere(3);
        assert_eq!(m.vertex_count(), 642);
        assert_eq!(m.face_count(), 1280);
        let rel = (m.total_area() - 4.0 * std::f64::consts::PI).abs() / (4.0 * std::f64::consts::PI);
        assert!(rel < 0.01, "relative area error {rel}");
        assert!(m.volume() > 0.0, "outward orientation");
    }

    #[test]
    fn cube_is_closed_and_outward() {
        for n in [1, 3] {
            let m = cube(n, 1.0);
            assert!(m.is_closed());
            assert_eq!(m.euler_characteristic(), 2);
            assert!((m.volume() - 1.0).abs() < 1e-12);
            assert!((m.total_area() - 6.0).abs() < 1e-12);
        }
    }
}
