//! Geometric flows driven by TV of the normal field and of the coordinates.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dot, scale, sub, Vec3};
use crate::mesh::TriangleMesh;
use crate::ops::DiscreteOperators;
use crate::signal::{weighted_norm, Domain, Signal};
use crate::solver::{default_config, solve_rof, ProxProblem, SolverConfig, TvKind};
use crate::sparse::SparseMatrix;

const ZERO_NORMAL: f64 = 1e-12;
const SOLVE_TOL: f64 = 1e-10;
const P_FLOOR: f64 = 1e-8;
const MAX_STEP_CHANGE: f64 = 0.5;

/// A mesh together with a (possibly evolved) unit normal field on its faces.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub mesh: TriangleMesh,
    pub normals: Signal,
    pub time: f64,
    /// Faces whose normal collapsed during the last step and was kept.
    pub flagged: Vec<usize>,
}

impl FlowState {
    pub fn new(mesh: TriangleMesh) -> Self {
        let normals = face_normal_signal(&mesh);
        Self { mesh, normals, time: 0.0, flagged: Vec::new() }
    }
}

pub fn face_normal_signal(mesh: &TriangleMesh) -> Signal {
    Signal::from_rows(Domain::Faces, mesh.face_normal()).expect("face normals are finite")
}

/// Renormalises each row; rows shorter than `1e-12` take the row of
/// `previous`. Returns the indices of such rows.
pub fn project_to_sphere(values: &mut [f64], previous: &[f64], channels: usize) -> Vec<usize> {
    let mut flagged = Vec::new();
    for (i, (row, prev)) in values.chunks_mut(channels).zip(previous.chunks(channels)).enumerate() {
        let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n < ZERO_NORMAL {
            row.copy_from_slice(prev);
            flagged.push(i);
        } else {
            row.iter_mut().for_each(|v| *v /= n);
        }
    }
    flagged
}

/// One implicit step of the normal TV flow: an ROF solve with `alpha = dt`
/// on the face operators followed by projection back onto the unit sphere.
pub fn normal_tv_step(
    state: &FlowState,
    face_ops: &DiscreteOperators,
    dt: f64,
    tv: TvKind,
    config: &SolverConfig,
) -> Result<FlowState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let problem = ProxProblem { ops: face_ops, alpha: dt, tv, data: &state.normals };
    let sol = solve_rof(&problem, config, None)?;
    let mut values = sol.u.into_values();
    let flagged = project_to_sphere(&mut values, state.normals.values(), 3);
    if !flagged.is_empty() {
        log::warn!("{} face normals vanished and were kept from the previous step", flagged.len());
    }
    Ok(FlowState {
        mesh: state.mesh.clone(),
        normals: Signal::new(Domain::Faces, 3, values)?,
        time: state.time + dt,
        flagged,
    })
}

/// `sum_e A_e |n_left - n_right|` over interior edges.
pub fn tv_normal_energy(mesh: &TriangleMesh, normals: &Signal) -> f64 {
    mesh.edges()
        .iter()
        .zip(mesh.edge_length())
        .filter_map(|(e, &len)| {
            let (l, r) = (e.left, e.right?);
            let d: f64 = normals.row(l).iter().zip(normals.row(r)).map(|(a, b)| (a - b) * (a - b)).sum();
            Some(len * d.sqrt())
        })
        .sum()
}

/// Factorised screened Poisson system `eps A + G^T T G` of a fixed mesh.
///
/// The factorisation is immutable once built and can be shared across
/// threads.
pub struct ScreenedPoisson {
    ops: DiscreteOperators,
    grad_t: SparseMatrix,
    system: SparseMatrix,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
    epsilon: f64,
    vertices: Vec<Vec3>,
}

impl std::fmt::Debug for ScreenedPoisson {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScreenedPoisson")
            .field("vertices", &self.vertices.len())
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

impl ScreenedPoisson {
    pub fn new(mesh: &TriangleMesh, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        let ops = DiscreteOperators::vertex(mesh)?;
        let grad_t = ops.grad().transpose();
        let row_t: Vec<f64> = ops.dual_weights().iter().flat_map(|&t| [t; 3]).collect();
        let tg = ops.grad().scaled(Some(&row_t), None);
        let eps_a: Vec<f64> = ops.primal_weights().iter().map(|a| epsilon * a).collect();
        let system = grad_t.matmul(&tg).add(&SparseMatrix::diagonal(&eps_a));
        let llt = system
            .to_faer()
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::SolveFailure(format!("Cholesky factorisation failed: {e:?}")))?;
        Ok(Self {
            ops,
            grad_t,
            system,
            llt,
            epsilon,
            vertices: mesh.vertices().to_vec(),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn system(&self) -> &SparseMatrix {
        &self.system
    }

    pub fn operators(&self) -> &DiscreteOperators {
        &self.ops
    }

    /// Solves the system for a row-major right-hand side with `channels`
    /// columns, refining once if the residual is above `1e-10` relative.
    pub fn solve(&self, rhs: &[f64], channels: usize) -> Result<Vec<f64>> {
        let bn = rhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let mut x = self.solve_raw(rhs, channels);
        let mut rel = f64::INFINITY;
        for pass in 0..3 {
            let r: Vec<f64> =
                rhs.iter().zip(self.system.apply(&x, channels)).map(|(b, ax)| b - ax).collect();
            rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / bn;
            if rel <= SOLVE_TOL || pass == 2 {
                break;
            }
            let dx = self.solve_raw(&r, channels);
            x.iter_mut().zip(dx).for_each(|(a, d)| *a += d);
        }
        if rel <= SOLVE_TOL && x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::SolveFailure(format!("relative residual {rel:.3e} after refinement")))
        }
    }

    fn solve_raw(&self, rhs: &[f64], channels: usize) -> Vec<f64> {
        let n = self.vertices.len();
        let mut b = Mat::from_fn(n, channels, |i, c| rhs[i * channels + c]);
        self.llt.solve_in_place(b.as_mut());
        let mut out = vec![0.0; n * channels];
        for i in 0..n {
            for c in 0..channels {
                out[i * channels + c] = b[(i, c)];
            }
        }
        out
    }

    /// Vertex positions whose per-face differentials best match those of
    /// `vertices` with the component along `normals` removed.
    pub fn recover_from(&self, vertices: &[Vec3], normals: &Signal) -> Result<Vec<Vec3>> {
        normals.check_shape(Domain::Faces, self.ops.dual_len())?;
        if normals.channels() != 3 || vertices.len() != self.vertices.len() {
            return Err(Error::InvalidSignal("recovery needs 3-channel face normals and matching vertices".into()));
        }
        let v0: Vec<f64> = vertices.iter().flatten().copied().collect();
        // rows 3f..3f+3 of G v0 hold the images of the x, y, z directions
        let mut w = self.ops.apply_grad(&v0, 3);
        for (f, block) in w.chunks_mut(9).enumerate() {
            let n = normals.row3(f);
            let t = self.ops.dual_weights()[f];
            for row in block.chunks_mut(3) {
                let r = [row[0], row[1], row[2]];
                let out = sub(r, scale(n, dot(r, n)));
                for k in 0..3 {
                    row[k] = t * out[k];
                }
            }
        }
        let mut rhs = self.grad_t.apply(&w, 3);
        for (i, row) in rhs.chunks_mut(3).enumerate() {
            let ea = self.epsilon * self.ops.primal_weights()[i];
            for k in 0..3 {
                row[k] += ea * v0[3 * i + k];
            }
        }
        let x = self.solve(&rhs, 3)?;
        Ok(x.chunks(3).map(|c| [c[0], c[1], c[2]]).collect())
    }

    /// Recovery anchored at the mesh the system was built from.
    pub fn recover(&self, normals: &Signal) -> Result<Vec<Vec3>> {
        self.recover_from(&self.vertices, normals)
    }

    /// Repeats the recovery, each pass anchored at the previous result
    /// (metric of the original mesh kept fixed).
    pub fn recover_iterated(&self, normals: &Signal, passes: usize) -> Result<Vec<Vec3>> {
        let mut v = self.vertices.clone();
        for _ in 0..passes.max(1) {
            v = self.recover_from(&v, normals)?;
        }
        Ok(v)
    }
}

/// Screened Poisson vertex recovery for a target face normal field.
pub fn recover_vertices(mesh: &TriangleMesh, normals: &Signal, epsilon: f64) -> Result<TriangleMesh> {
    let sp = ScreenedPoisson::new(mesh, epsilon)?;
    mesh.with_vertices(sp.recover(normals)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StylizeMode {
    /// ROF steps on the vertex coordinates (fixed metric).
    Coordinates,
    /// Normal TV flow followed by vertex recovery.
    Normals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StylizeParams {
    pub mode: StylizeMode,
    pub tv: TvKind,
    pub steps: usize,
    pub dt: f64,
    pub epsilon: f64,
    /// Recovery passes after the normal flow.
    pub recovery_passes: usize,
}

impl Default for StylizeParams {
    fn default() -> Self {
        Self {
            mode: StylizeMode::Normals,
            tv: TvKind::Anisotropic,
            steps: 10,
            dt: 0.05,
            epsilon: 1e-4,
            recovery_passes: 10,
        }
    }
}

/// Cubic stylisation by anisotropic TV of the coordinates or of the normals.
pub fn stylize_cubic(mesh: &TriangleMesh, params: &StylizeParams) -> Result<TriangleMesh> {
    if params.steps == 0 || !(params.dt > 0.0) {
        return Err(Error::InvalidParameter("stylisation needs steps >= 1 and dt > 0".into()));
    }
    match params.mode {
        StylizeMode::Coordinates => {
            let ops = DiscreteOperators::vertex(mesh)?;
            let config = default_config(&ops, 3);
            let flat: Vec<f64> = mesh.vertices().iter().flatten().copied().collect();
            let mut u = Signal::new(Domain::Vertices, 3, flat)?;
            for _ in 0..params.steps {
                let problem = ProxProblem { ops: &ops, alpha: params.dt, tv: params.tv, data: &u };
                u = solve_rof(&problem, &config, None)?.u;
            }
            mesh.with_vertices(u.rows3())
        }
        StylizeMode::Normals => {
            let ops = DiscreteOperators::face(mesh);
            let config = default_config(&ops, 3);
            let mut state = FlowState::new(mesh.clone());
            for _ in 0..params.steps {
                state = normal_tv_step(&state, &ops, params.dt, params.tv, &config)?;
            }
            let sp = ScreenedPoisson::new(mesh, params.epsilon)?;
            mesh.with_vertices(sp.recover_iterated(&state.normals, params.recovery_passes)?)
        }
    }
}

/// Explicit Euler steps of `u_t = D(|G u|^(p-2) G u)` on vertex signals.
///
/// The gradient norm is taken per face and channel and floored at `1e-8`.
/// A step that changes the signal by more than half its norm is rejected.
pub fn p_laplacian_flow(
    ops: &DiscreteOperators,
    signal: &Signal,
    p: f64,
    dt: f64,
    steps: usize,
) -> Result<Signal> {
    if !(p >= 1.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("need p >= 1 and dt > 0, got p = {p}, dt = {dt}")));
    }
    signal.check_shape(ops.domain(), ops.primal_len())?;
    let c = signal.channels();
    let b = ops.dual_block();
    let mut u = signal.values().to_vec();
    for step in 0..steps {
        let mut g = ops.apply_grad(&u, c);
        if p != 2.0 {
            for block in g.chunks_mut(b * c) {
                for ch in 0..c {
                    let n2: f64 = (0..b).map(|r| block[r * c + ch].powi(2)).sum();
                    let s = n2.sqrt().max(P_FLOOR).powf(p - 2.0);
                    for r in 0..b {
                        block[r * c + ch] *= s;
                    }
                }
            }
        }
        let du = ops.apply_div(&g, c);
        let change = dt * weighted_norm(&du, c, ops.primal_weights());
        let size = weighted_norm(&u, c, ops.primal_weights());
        if change > MAX_STEP_CHANGE * size {
            return Err(Error::Instability { step, ratio: change / size.max(f64::MIN_POSITIVE) });
        }
        u.iter_mut().zip(&du).for_each(|(x, d)| *x += dt * d);
    }
    Signal::new(signal.domain(), c, u)
}
