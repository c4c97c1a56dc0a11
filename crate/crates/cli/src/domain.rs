//! Loading the domain a signal lives on and the signal itself.

use std::path::Path;

use anyhow::{bail, Context, Result};
use tvspec_core::digest::{mesh_digest, points_digest, Digest};
use tvspec_core::flow::face_normal_signal;
use tvspec_core::io::{decode_tvsv, load_mesh, load_points, read_signal, TVSV_MAGIC};
use tvspec_core::{build_point_cloud_graph, estimate_normals, DiscreteOperators, Domain, PointCloudGraph, Signal, TriangleMesh};

/// Mesh or point cloud.
#[derive(Debug, Clone)]
pub enum Shape {
    Mesh(TriangleMesh),
    Cloud(PointCloudGraph),
}

impl Shape {
    pub fn digest(&self) -> Digest {
        match self {
            Shape::Mesh(m) => mesh_digest(m),
            Shape::Cloud(g) => points_digest(g.points()),
        }
    }

    pub fn mesh(&self) -> Option<&TriangleMesh> {
        match self {
            Shape::Mesh(m) => Some(m),
            Shape::Cloud(_) => None,
        }
    }

    /// Number of elements of `domain`, if the shape has that domain.
    pub fn count(&self, domain: Domain) -> Option<usize> {
        match (self, domain) {
            (Shape::Mesh(m), Domain::Vertices) => Some(m.vertex_count()),
            (Shape::Mesh(m), Domain::Faces) => Some(m.face_count()),
            (Shape::Cloud(g), Domain::Points) => Some(g.len()),
            _ => None,
        }
    }

    pub fn operators(&self, domain: Domain) -> Result<DiscreteOperators> {
        Ok(match (self, domain) {
            (Shape::Mesh(m), Domain::Vertices) => DiscreteOperators::vertex(m)?,
            (Shape::Mesh(m), Domain::Faces) => DiscreteOperators::face(m),
            (Shape::Cloud(g), Domain::Points) => DiscreteOperators::graph(g),
            (_, d) => bail!("the input has no {d} domain"),
        })
    }
}

fn is_point_table(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("xyz" | "pts" | "txt" | "csv")
    )
}

pub fn load_shape(path: &Path, points: bool, k: usize) -> Result<Shape> {
    if points || is_point_table(path) {
        let p = load_points(path).with_context(|| format!("loading points from {}", path.display()))?;
        let g = build_point_cloud_graph(p, k, None).context("building the neighbourhood graph")?;
        Ok(Shape::Cloud(g))
    } else {
        let m = load_mesh(path).with_context(|| format!("loading mesh {}", path.display()))?;
        Ok(Shape::Mesh(m))
    }
}

/// Resolves `coordinates`, `normals` or a signal file against `shape`.
pub fn load_signal(shape: &Shape, source: &str, seed: u64) -> Result<Signal> {
    match (source, shape) {
        ("coordinates" | "coords", Shape::Mesh(m)) => Ok(Signal::from_rows(Domain::Vertices, m.vertices())?),
        ("coordinates" | "coords", Shape::Cloud(g)) => Ok(Signal::from_rows(Domain::Points, g.points())?),
        ("normals" | "faceNormals" | "face-normals", Shape::Mesh(m)) => Ok(face_normal_signal(m)),
        ("normals" | "faceNormals" | "face-normals", Shape::Cloud(g)) => {
            let est = estimate_normals(g, seed)?;
            if !est.rank_deficient.is_empty() {
                log::warn!("{} neighbourhoods are rank deficient", est.rank_deficient.len());
            }
            Ok(est.normals)
        }
        (path, _) => {
            let path = Path::new(path);
            let bytes = std::fs::read(path).with_context(|| format!("reading signal {}", path.display()))?;
            if bytes.starts_with(TVSV_MAGIC) {
                let s = decode_tvsv(&bytes)?;
                if shape.count(s.domain()) != Some(s.len()) {
                    bail!("{} does not match the input's {}", path.display(), s.domain());
                }
                return Ok(s);
            }
            let raw = read_signal(path, Domain::Vertices).with_context(|| format!("reading signal {}", path.display()))?;
            let (rows, c) = (raw.len(), raw.channels());
            let domain = match shape {
                Shape::Cloud(_) => Domain::Points,
                Shape::Mesh(_) if shape.count(Domain::Vertices) == Some(rows) => Domain::Vertices,
                Shape::Mesh(_) => Domain::Faces,
            };
            let expected = shape.count(domain).unwrap_or(0);
            if rows != expected {
                bail!("{} has {rows} rows, expected {expected} for {domain}", path.display());
            }
            Ok(Signal::new(domain, c, raw.into_values())?)
        }
    }
}
