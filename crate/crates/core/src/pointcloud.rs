//! k-nearest-neighbour graphs over point clouds and total-least-squares
//! normal estimation.

use std::collections::{BTreeSet, VecDeque};

use kdtree::distance::squared_euclidean;
use kdtree::KdTree;
use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::signal::{Domain, Signal};

/// Symmetrised k-NN graph with Gaussian edge weights.
#[derive(Debug, Clone)]
pub struct PointCloudGraph {
    points: Vec<Vec3>,
    k: usize,
    delta: f64,
    /// Directed edges; `(i, j)` present iff `(j, i)` is. Sorted.
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
    /// `offsets[i]..offsets[i+1]` indexes the edges leaving `i`.
    offsets: Vec<usize>,
}

impl PointCloudGraph {
    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges[self.offsets[i]..self.offsets[i + 1]].iter().map(|e| e.1)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }
}

/// The `k` nearest other points of every point, ties broken by index.
fn knn(points: &[Vec3], k: usize) -> Vec<Vec<(f64, usize)>> {
    let mut tree = KdTree::with_capacity(3, points.len());
    for (i, p) in points.iter().enumerate() {
        tree.add(*p, i).expect("finite point");
    }
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let near = tree.nearest(p, k + 1, &squared_euclidean).expect("finite query");
            let radius = near.last().map(|n| n.0).unwrap_or(0.0);
            let mut all: Vec<(f64, usize)> = tree
                .within(p, radius * (1.0 + 1e-12) + 1e-300, &squared_euclidean)
                .expect("finite query")
                .into_iter()
                .filter(|&(_, &j)| j != i)
                .map(|(d, &j)| (d, j))
                .collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            all.truncate(k);
            all
        })
        .collect()
}

/// Builds the symmetrised k-NN graph. `delta` defaults to the mean squared
/// distance to the k-th neighbour.
pub fn build_point_cloud_graph(points: Vec<Vec3>, k: usize, delta: Option<f64>) -> Result<PointCloudGraph> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if points.len() < k + 1 {
        return Err(Error::TooFewPoints { got: points.len(), need: k + 1 });
    }
    if let Some(d) = delta {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {d}")));
        }
    }
    let near = knn(&points, k);
    let delta = delta.unwrap_or_else(|| {
        near.iter().map(|n| n.last().map_or(0.0, |x| x.0)).sum::<f64>() / points.len() as f64
    });
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("all points coincide; bandwidth is zero".into()));
    }

    let mut pairs = BTreeSet::new();
    for (i, n) in near.iter().enumerate() {
        for &(_, j) in n {
            pairs.insert((i, j));
            pairs.insert((j, i));
        }
    }
    let edges: Vec<(usize, usize)> = pairs.into_iter().collect();
    let weights = edges
        .iter()
        .map(|&(i, j)| {
            let d = crate::geom::sub(points[i], points[j]);
            (-crate::geom::dot(d, d) / delta).exp()
        })
        .collect();
    let mut offsets = vec![0usize; points.len() + 1];
    for &(i, _) in &edges {
        offsets[i + 1] += 1;
    }
    for i in 0..points.len() {
        offsets[i + 1] += offsets[i];
    }
    Ok(PointCloudGraph { points, k, delta, edges, weights, offsets })
}

/// Per-point normals plus the indices of neighbourhoods whose covariance was
/// rank deficient.
#[derive(Debug, Clone)]
pub struct NormalEstimate {
    pub normals: Signal,
    pub rank_deficient: Vec<usize>,
}

fn covariance(points: &[Vec3], ids: impl Iterator<Item = usize> + Clone) -> Matrix3<f64> {
    let n = ids.clone().count() as f64;
    let mean = ids.clone().fold(Vector3::zeros(), |acc, i| acc + Vector3::from(points[i])) / n;
    ids.fold(Matrix3::zeros(), |acc, i| {
        let d = Vector3::from(points[i]) - mean;
        acc + d * d.transpose()
    }) / n
}

/// Eigenvector of the smallest eigenvalue, and whether the two smallest
/// eigenvalues are both negligible.
fn smallest_direction(c: Matrix3<f64>) -> (Vector3<f64>, bool) {
    let eig = SymmetricEigen::new(c);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let largest = eig.eigenvalues[order[2]].abs();
    let degenerate = eig.eigenvalues[order[1]].abs() <= 1e-10 * largest.max(f64::MIN_POSITIVE);
    (eig.eigenvectors.column(order[0]).into_owned(), degenerate)
}

/// Total-least-squares normals with signs made consistent by a breadth-first
/// traversal rooted at a seeded random point; each visited point adopts the
/// sign agreeing with the majority of its already-oriented neighbours.
pub fn estimate_normals(graph: &PointCloudGraph, seed: u64) -> Result<NormalEstimate> {
    let n = graph.len();
    if let Some(i) = (0..n).find(|&i| graph.degree(i) < 3) {
        return Err(Error::InvalidParameter(format!(
            "point {i} has {} neighbours, normal estimation needs at least 3",
            graph.degree(i)
        )));
    }
    let pts = graph.points();
    let (global, _) = smallest_direction(covariance(pts, 0..n));
    let mut rank_deficient = Vec::new();
    let mut normals: Vec<Vector3<f64>> = (0..n)
        .map(|i| {
            let ids: Vec<usize> = std::iter::once(i).chain(graph.neighbors(i)).collect();
            let (v, degenerate) = smallest_direction(covariance(pts, ids.iter().copied()));
            if degenerate {
                rank_deficient.push(i);
                global
            } else {
                v
            }
        })
        .collect();

    let mut oriented = vec![false; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let root = rng.random_range(0..n);
    order.swap(0, root);
    for &start in &order {
        if oriented[start] {
            continue;
        }
        oriented[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in graph.neighbors(i) {
                if oriented[j] {
                    continue;
                }
                let vote: f64 = graph
                    .neighbors(j)
                    .filter(|&m| oriented[m])
                    .map(|m| normals[j].dot(&normals[m]).signum())
                    .sum();
                if vote < 0.0 {
                    normals[j] = -normals[j];
                }
                oriented[j] = true;
                queue.push_back(j);
            }
        }
    }
    let rows: Vec<[f64; 3]> = normals.iter().map(|v| [v.x, v.y, v.z]).collect();
    Ok(NormalEstimate { normals: Signal::from_rows(Domain::Points, &rows)?, rank_deficient })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points() {
        let g = build_point_cloud_graph(vec![[0.0; 3], [0.0, 2.0, 0.0]], 1, Some(4.0)).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 0)]);
        for w in g.weights() {
            assert!((w - (-1f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn collinear_nearest_neighbours() {
        let g = build_point_cloud_graph(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], 1, Some(1.0)).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 0), (1, 2), (2, 1)]);
        assert!(g.weights().iter().all(|w| (w - (-1f64).exp()).abs() < 1e-15));
    }

    #[test]
    fn too_few_points() {
        let r = build_point_cloud_graph(vec![[0.0; 3], [1.0, 0.0, 0.0]], 2, None);
        assert!(matches!(r, Err(Error::TooFewPoints { got: 2, need: 3 })));
    }

    #[test]
    fn default_delta_gives_far_neighbour_e_inverse_on_uniform_lattice() {
        // every point of a closed ring has its k-th neighbour at the same distance
        let pts: Vec<Vec3> = (0..12)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 12.0;
                [a.cos(), a.sin(), 0.0]
            })
            .collect();
        let g = build_point_cloud_graph(pts, 2, None).unwrap();
        let wmin = g.weights().iter().copied().fold(1.0, f64::min);
        assert!((wmin - (-1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn collinear_neighbourhood_is_flagged() {
        let mut pts: Vec<Vec3> = (0..4).map(|i| [i as f64, 0.0, 0.0]).collect();
        pts.extend((0..12).map(|i| [(i % 4) as f64 + 10.0, (i / 4) as f64, 0.3 * ((i * 7) % 5) as f64]));
        let g = build_point_cloud_graph(pts, 3, None).unwrap();
        let est = estimate_normals(&g, 0).unwrap();
        assert!(est.rank_deficient.contains(&0));
    }
}
