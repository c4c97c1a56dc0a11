//! Validated manifold triangle meshes and the per-element geometry the
//! discrete operators are built from.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::{cross, norm, scale, sub, Vec3};

/// An undirected mesh edge with one or two incident faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// Vertex indices, smaller first.
    pub vertices: [usize; 2],
    /// First incident face.
    pub left: usize,
    /// Second incident face, `None` on the boundary.
    pub right: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

/// Immutable triangle mesh with derived areas, lengths and normals.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    face_edges: Vec<[usize; 3]>,
    vertex_area: Vec<f64>,
    face_area: Vec<f64>,
    edge_length: Vec<f64>,
    face_normal: Vec<Vec3>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::Parse("mesh has no faces".into()));
        }
        if let Some(p) = vertices.iter().flatten().find(|x| !x.is_finite()) {
            return Err(Error::Parse(format!("non-finite vertex coordinate {p}")));
        }
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&v) = f.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::Parse(format!(
                    "face {fi} references vertex {v} but only {} vertices exist",
                    vertices.len()
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateFace(fi));
            }
        }

        let mut face_area = Vec::with_capacity(faces.len());
        let mut face_normal = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            let [a, b, c] = f.map(|v| vertices[v]);
            let n = cross(sub(b, a), sub(c, a));
            let twice_area = norm(n);
            let longest = [sub(b, a), sub(c, b), sub(a, c)]
                .iter()
                .map(|e| norm(*e))
                .fold(0.0, f64::max);
            if !(twice_area > 1e-14 * longest * longest) {
                return Err(Error::DegenerateFace(fi));
            }
            face_area.push(0.5 * twice_area);
            face_normal.push(scale(n, 1.0 / twice_area));
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3 / 2);
        let mut edges: Vec<Edge> = Vec::new();
        let mut extra_incidence: HashMap<usize, usize> = HashMap::new();
        let mut face_edges = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            let mut fe = [0; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let ei = *lookup.entry(key).or_insert_with(|| {
                    edges.push(Edge { vertices: [key.0, key.1], left: fi, right: None });
                    edges.len() - 1
                });
                if edges[ei].left != fi {
                    match edges[ei].right {
                        None => edges[ei].right = Some(fi),
                        Some(_) => *extra_incidence.entry(ei).or_insert(2) += 1,
                    }
                }
                fe[k] = ei;
            }
            face_edges.push(fe);
        }
        if let Some((&ei, &count)) = extra_incidence.iter().min_by_key(|(&ei, _)| ei) {
            let [a, b] = edges[ei].vertices;
            return Err(Error::NonManifold(a, b, count));
        }

        let edge_length = edges
            .iter()
            .map(|e| norm(sub(vertices[e.vertices[1]], vertices[e.vertices[0]])))
            .collect();

        let mut vertex_area = vec![0.0; vertices.len()];
        for (f, a) in faces.iter().zip(&face_area) {
            for &v in f {
                vertex_area[v] += a / 3.0;
            }
        }

        Ok(Self {
            vertices,
            faces,
            edges,
            face_edges,
            vertex_area,
            face_area,
            edge_length,
            face_normal,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge indices of each face, edge `k` joining corners `k` and `k+1`.
    pub fn face_edges(&self) -> &[[usize; 3]] {
        &self.face_edges
    }

    /// Barycentric lumped area per vertex.
    pub fn vertex_area(&self) -> &[f64] {
        &self.vertex_area
    }

    pub fn face_area(&self) -> &[f64] {
        &self.face_area
    }

    pub fn edge_length(&self) -> &[f64] {
        &self.edge_length
    }

    pub fn face_normal(&self) -> &[Vec3] {
        &self.face_normal
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn total_area(&self) -> f64 {
        self.face_area.iter().sum()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edge_length.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_edge_length(&self) -> f64 {
        self.edge_length.iter().sum::<f64>() / self.edge_length.len() as f64
    }

    pub fn is_closed(&self) -> bool {
        self.edges.iter().all(|e| !e.is_boundary())
    }

    /// `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    pub fn face_centroid(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f].map(|v| self.vertices[v]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0, (a[2] + b[2] + c[2]) / 3.0]
    }

    /// Same connectivity, new positions. Revalidates geometry.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Self::new(vertices, self.faces.clone())
    }

    /// Applies a row-major 3x3 linear map to every vertex.
    pub fn transformed(&self, m: &[[f64; 3]; 3]) -> Result<Self> {
        let v = self.vertices.iter().map(|&p| crate::geom::mat_vec(m, p)).collect();
        self.with_vertices(v)
    }

    /// Signed enclosed volume (divergence theorem; meaningful for closed meshes).
    pub fn volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|v| self.vertices[v]);
                crate::geom::dot(a, cross(b, c)) / 6.0
            })
            .sum()
    }
}
