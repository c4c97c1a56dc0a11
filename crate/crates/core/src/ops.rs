//! Sparse gradient/divergence pairs on the three signal domains.
//!
//! Every operator set pairs a gradient `K` (dual rows x primal elements) with
//! element measures on both sides. The primal measure `P` is the lumped
//! vertex area, the face area or 1 per graph node; the dual measure `W` is the
//! face area, the edge length, or 1/2 per directed graph edge (each undirected
//! pair appears twice). The divergence is the negative adjoint under those
//! measures, `D = -P^-1 K^T W`, so that `<K f, V>_W = -<f, D V>_P`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{dot, sub};
use crate::mesh::TriangleMesh;
use crate::pointcloud::PointCloudGraph;
use crate::signal::Domain;
use crate::sparse::SparseMatrix;

const NORM_REL_TOL: f64 = 1e-6;
const NORM_MAX_ITER: usize = 200;

#[derive(Debug, Clone)]
pub struct DiscreteOperators {
    domain: Domain,
    grad: SparseMatrix,
    div: SparseMatrix,
    primal_weights: Vec<f64>,
    dual_weights: Vec<f64>,
    dual_block: usize,
    grad_norm: f64,
    weighted_norm: f64,
    min_edge: f64,
}

impl DiscreteOperators {
    /// Linear FEM gradient of vertex functions, three rows per face.
    pub fn vertex(mesh: &TriangleMesh) -> Result<Self> {
        let nf = mesh.face_count();
        let mut t = Vec::with_capacity(9 * nf);
        for (fi, &[i, j, k]) in mesh.faces().iter().enumerate() {
            let p = mesh.vertices();
            let e1 = sub(p[j], p[i]);
            let e2 = sub(p[k], p[i]);
            let (g11, g12, g22) = (dot(e1, e1), dot(e1, e2), dot(e2, e2));
            let det = g11 * g22 - g12 * g12;
            if !(det > 1e-14 * g11 * g22) {
                return Err(Error::SingularMetric(fi));
            }
            // columns of [e1 e2] * Gram^-1
            let cj: [f64; 3] = std::array::from_fn(|d| (g22 * e1[d] - g12 * e2[d]) / det);
            let ck: [f64; 3] = std::array::from_fn(|d| (g11 * e2[d] - g12 * e1[d]) / det);
            for d in 0..3 {
                let row = 3 * fi + d;
                t.push((row, i, -cj[d] - ck[d]));
                t.push((row, j, cj[d]));
                t.push((row, k, ck[d]));
            }
        }
        let grad = SparseMatrix::from_triplets(3 * nf, mesh.vertex_count(), &t);
        Ok(Self::assemble(
            Domain::Vertices,
            grad,
            mesh.vertex_area().to_vec(),
            mesh.face_area().to_vec(),
            3,
            mesh.min_edge_length(),
        ))
    }

    /// Jump operator for face-constant signals, one row per interior edge.
    pub fn face(mesh: &TriangleMesh) -> Self {
        let mut t = Vec::new();
        let mut lengths = Vec::new();
        for (e, &len) in mesh.edges().iter().zip(mesh.edge_length()) {
            if let Some(right) = e.right {
                let row = lengths.len();
                t.push((row, e.left, 1.0));
                t.push((row, right, -1.0));
                lengths.push(len);
            }
        }
        let grad = SparseMatrix::from_triplets(lengths.len(), mesh.face_count(), &t);
        Self::assemble(Domain::Faces, grad, mesh.face_area().to_vec(), lengths, 1, mesh.min_edge_length())
    }

    /// Weighted graph differences `w_ij (f_i - f_j)`, one row per directed edge.
    pub fn graph(graph: &PointCloudGraph) -> Self {
        let mut t = Vec::with_capacity(2 * graph.edges().len());
        for (row, (&(i, j), &w)) in graph.edges().iter().zip(graph.weights()).enumerate() {
            t.push((row, i, w));
            t.push((row, j, -w));
        }
        let grad = SparseMatrix::from_triplets(graph.edges().len(), graph.len(), &t);
        Self::assemble(
            Domain::Points,
            grad,
            vec![1.0; graph.len()],
            vec![0.5; graph.edges().len()],
            1,
            1.0,
        )
    }

    fn assemble(
        domain: Domain,
        grad: SparseMatrix,
        primal_weights: Vec<f64>,
        dual_weights: Vec<f64>,
        dual_block: usize,
        min_edge: f64,
    ) -> Self {
        let row_w: Vec<f64> = dual_weights
            .iter()
            .flat_map(|&w| std::iter::repeat_n(w, dual_block))
            .collect();
        let inv_p: Vec<f64> = primal_weights.iter().map(|p| -1.0 / p).collect();
        let div = grad.transpose().scaled(Some(&inv_p), Some(&row_w));
        let grad_norm = estimate_operator_norm(&grad, 0);
        let sqrt_w: Vec<f64> = row_w.iter().map(|w| w.sqrt()).collect();
        let inv_sqrt_p: Vec<f64> = primal_weights.iter().map(|p| 1.0 / p.sqrt()).collect();
        let weighted_norm = estimate_operator_norm(&grad.scaled(Some(&sqrt_w), Some(&inv_sqrt_p)), 1);
        Self {
            domain,
            grad,
            div,
            primal_weights,
            dual_weights,
            dual_block,
            grad_norm,
            weighted_norm,
            min_edge,
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn grad(&self) -> &SparseMatrix {
        &self.grad
    }

    pub fn div(&self) -> &SparseMatrix {
        &self.div
    }

    /// Element measure of the primal domain (`A`, `T` or 1).
    pub fn primal_weights(&self) -> &[f64] {
        &self.primal_weights
    }

    /// Measure of each dual element (`T`, `A_e` or 1/2).
    pub fn dual_weights(&self) -> &[f64] {
        &self.dual_weights
    }

    /// Gradient rows per dual element: 3 for face gradients, 1 otherwise.
    pub fn dual_block(&self) -> usize {
        self.dual_block
    }

    pub fn primal_len(&self) -> usize {
        self.primal_weights.len()
    }

    pub fn dual_len(&self) -> usize {
        self.dual_weights.len()
    }

    /// Euclidean operator norm of the gradient matrix.
    pub fn grad_norm(&self) -> f64 {
        self.grad_norm
    }

    /// Norm of the gradient between the measured spaces, `||W^1/2 K P^-1/2||`.
    pub fn weighted_norm(&self) -> f64 {
        self.weighted_norm
    }

    /// Smallest mesh edge length (1 for graphs).
    pub fn min_edge(&self) -> f64 {
        self.min_edge
    }

    /// `L = D G`, the (negative semidefinite) Laplacian.
    pub fn laplacian(&self) -> SparseMatrix {
        self.div.matmul(&self.grad)
    }

    /// `P L = -K^T W K`, symmetric negative semidefinite.
    pub fn stiffness(&self) -> SparseMatrix {
        let p = self.primal_weights.clone();
        self.laplacian().scaled(Some(&p), None)
    }

    /// Applies the gradient to a signal with `channels` columns.
    pub fn apply_grad(&self, u: &[f64], channels: usize) -> Vec<f64> {
        self.grad.apply(u, channels)
    }

    pub fn apply_div(&self, q: &[f64], channels: usize) -> Vec<f64> {
        self.div.apply(q, channels)
    }

    /// Writes `G`, `D` and `L` as Matrix Market files into `dir`.
    pub fn export_matrix_market(&self, dir: &std::path::Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let write = |name: &str, m: &SparseMatrix| -> std::io::Result<()> {
            let f = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
            m.write_matrix_market(f)
        };
        write("G.mtx", &self.grad)?;
        write("D.mtx", &self.div)?;
        write("L.mtx", &self.laplacian())
    }
}

/// Spectral norm by power iteration on `A^T A`, seeded start vector.
pub fn estimate_operator_norm(a: &SparseMatrix, seed: u64) -> f64 {
    if a.ncols() == 0 || a.max_abs() == 0.0 {
        return 0.0;
    }
    let at = a.transpose();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..a.ncols()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut lambda = 0.0;
    for _ in 0..NORM_MAX_ITER {
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nx == 0.0 {
            break;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let y = a.apply(&x, 1);
        let next = y.iter().map(|v| v * v).sum::<f64>();
        x = at.apply(&y, 1);
        let done = (next - lambda).abs() <= NORM_REL_TOL * next;
        lambda = next;
        if done {
            break;
        }
    }
    lambda.sqrt()
}
