//! Spectral TV decomposition, spectrum and synthesis.
//!
//! Both schemes produce components `phi_k` with quadrature weights `w_k` such
//! that
//!
//! ```text
//! u0 = mean + sum_k w_k phi_k + residual
//! ```
//!
//! holds by construction. Components are stored in ascending time order.

use serde::{Deserialize, Serialize};

use crate::digest::Digest;
use crate::error::{Error, Result};
use crate::ops::DiscreteOperators;
use crate::signal::{weighted_norm, Signal};
use crate::solver::{solve_rof, tv_energy, ProxProblem, SolverConfig, TvKind};

/// Relative deviation from the mean below which a signal counts as constant.
const CONSTANT_TOL: f64 = 1e-12;
const ALPHA_MAX_TOL: f64 = 1e-3;
const INVERSE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Implicit TV flow with second differences in time.
    Forward,
    /// Inverse scale space (Bregman) iteration.
    Inverse,
}

impl Scheme {
    pub fn code(self) -> u32 {
        match self {
            Scheme::Forward => 0,
            Scheme::Inverse => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Scheme::Forward),
            1 => Some(Scheme::Inverse),
            _ => None,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Forward => "forward",
            Scheme::Inverse => "inverse",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    /// Largest diffusion time; estimated when `None`.
    pub alpha_max: Option<f64>,
    /// Geometric decay `C` of the step sizes.
    pub decay: f64,
    /// Number of components; chosen automatically when `None`.
    pub steps: Option<usize>,
    pub tv: TvKind,
    /// Renormalise every row to unit length after each forward step
    /// (for normal fields).
    pub project_rows: bool,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { alpha_max: None, decay: 0.7, steps: None, tv: TvKind::Isotropic, project_rows: false }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::InvalidParameter(format!("decay must lie in (0, 1), got {}", self.decay)));
        }
        if let Some(a) = self.alpha_max {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidParameter(format!("alpha max must be positive, got {a}")));
            }
        }
        if self.steps == Some(0) {
            return Err(Error::InvalidParameter("at least one step is required".into()));
        }
        Ok(())
    }

    /// `ceil(ln(1e-3) / ln C)` components span three decades of time.
    pub fn auto_steps(&self) -> usize {
        ((1e-3f64).ln() / self.decay.ln()).ceil().max(1.0) as usize
    }

    fn inverse_cap(&self) -> usize {
        ((1e-6f64).ln() / self.decay.ln()).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub scheme: Scheme,
    pub alpha_max: f64,
    /// Time of each component, strictly increasing.
    pub times: Vec<f64>,
    /// Step length associated with each component.
    pub steps: Vec<f64>,
    /// Quadrature weight of each component in the synthesis sum.
    pub weights: Vec<f64>,
    /// Width of each time bin, used to turn spectrum densities into masses.
    pub widths: Vec<f64>,
    /// Primal element measure used for means, norms and spectra.
    pub element_weights: Vec<f64>,
    pub components: Vec<Signal>,
    /// Per-channel weighted mean of the input.
    pub mean: Vec<f64>,
    pub residual: Signal,
    /// Bin whose gain also scales the residual.
    pub residual_bin: usize,
    pub mesh_digest: Digest,
    pub source_digest: Digest,
    /// Solver iterations per step (not persisted).
    pub iterations: Vec<usize>,
    /// Number of solves that hit the iteration cap (not persisted).
    pub not_converged: usize,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.residual.channels()
    }

    pub fn element_count(&self) -> usize {
        self.residual.len()
    }

    pub fn domain(&self) -> crate::signal::Domain {
        self.residual.domain()
    }

    /// Constant signal equal to the stored mean.
    pub fn mean_signal(&self) -> Signal {
        let values = self.mean.iter().copied().cycle().take(self.residual.values().len()).collect();
        Signal::new(self.domain(), self.channels(), values).expect("mean is finite")
    }

    /// Index of the bin whose time is nearest to `t` (log distance).
    pub fn nearest_bin(&self, t: f64) -> usize {
        let lt = t.max(f64::MIN_POSITIVE).ln();
        (0..self.times.len())
            .min_by(|&a, &b| {
                let da = (self.times[a].ln() - lt).abs();
                let db = (self.times[b].ln() - lt).abs();
                da.total_cmp(&db)
            })
            .unwrap_or(0)
    }

    /// Spectral mass `s_k width_k` of every bin.
    pub fn bin_masses(&self) -> Vec<f64> {
        spectrum(self).iter().zip(&self.widths).map(|(p, w)| p.1 * w).collect()
    }

    /// Bins whose mass is a local maximum of at least `threshold` times the
    /// largest bin mass.
    pub fn peaks(&self, threshold: f64) -> Vec<usize> {
        let m = self.bin_masses();
        let max = m.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return Vec::new();
        }
        let n = m.len();
        (0..n)
            .filter(|&k| {
                m[k] >= threshold * max && (k == 0 || m[k] > m[k - 1]) && (k + 1 == n || m[k] >= m[k + 1])
            })
            .collect()
    }
}

/// `(t_k, s_k)` with `s_k = sum_i P_i |phi_k(i)|`.
pub fn spectrum(dec: &SpectralDecomposition) -> Vec<(f64, f64)> {
    dec.times
        .iter()
        .zip(&dec.components)
        .map(|(&t, phi)| {
            let s = phi
                .values()
                .chunks(phi.channels())
                .zip(&dec.element_weights)
                .map(|(row, p)| p * row.iter().map(|v| v * v).sum::<f64>().sqrt())
                .sum();
            (t, s)
        })
        .collect()
}

/// `mean + sum_k w_k g_k phi_k + g_r residual` for per-bin gains `g`.
pub fn reconstruct(dec: &SpectralDecomposition, gains: &[f64]) -> Result<Signal> {
    if gains.len() != dec.len() {
        return Err(Error::FilterShapeMismatch(format!(
            "{} gains for {} spectral bins",
            gains.len(),
            dec.len()
        )));
    }
    let mut out = synthesis(dec, gains);
    let gr = gains.get(dec.residual_bin).copied().unwrap_or(1.0);
    for (o, r) in out.iter_mut().zip(dec.residual.values()) {
        *o += gr * r;
    }
    Signal::new(dec.domain(), dec.channels(), out)
}

fn synthesis(dec: &SpectralDecomposition, gains: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = dec.mean.iter().copied().cycle().take(dec.residual.values().len()).collect();
    for ((phi, w), g) in dec.components.iter().zip(&dec.weights).zip(gains) {
        let s = w * g;
        if s == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(phi.values()) {
            *o += s * v;
        }
    }
    out
}

fn broadcast_mean(mean: &[f64], rows: usize) -> Vec<f64> {
    mean.iter().copied().cycle().take(rows * mean.len()).collect()
}

fn deviation(u: &[f64], mean: &[f64], channels: usize, weights: &[f64]) -> f64 {
    let centered: Vec<f64> = u.iter().enumerate().map(|(i, v)| v - mean[i % channels]).collect();
    weighted_norm(&centered, channels, weights)
}

fn is_constant(u0: &Signal, ops: &DiscreteOperators) -> bool {
    let mean = u0.weighted_mean(ops.primal_weights());
    let dev = deviation(u0.values(), &mean, u0.channels(), ops.primal_weights());
    let scale = u0.weighted_norm(ops.primal_weights());
    dev <= CONSTANT_TOL * scale.max(f64::MIN_POSITIVE) || dev == 0.0
}

/// Smallest `alpha` (within a factor of 2) whose ROF solution is within
/// `1e-3` (relative) of the mean. Returns 1 for constant signals.
pub fn estimate_alpha_max(
    u0: &Signal,
    ops: &DiscreteOperators,
    tv: TvKind,
    config: &SolverConfig,
) -> Result<f64> {
    u0.check_shape(ops.domain(), ops.primal_len())?;
    if is_constant(u0, ops) {
        return Ok(1.0);
    }
    let c = u0.channels();
    let w = ops.primal_weights();
    let mean = u0.weighted_mean(w);
    let dev0 = deviation(u0.values(), &mean, c, w);
    let tv0 = tv_energy(ops, u0.values(), c, tv);
    let reaches_mean = |alpha: f64| -> Result<bool> {
        let problem = ProxProblem { ops, alpha, tv, data: u0 };
        let sol = solve_rof(&problem, config, None)?;
        Ok(deviation(sol.u.values(), &mean, c, w) < ALPHA_MAX_TOL * dev0)
    };

    // eigenfunctions vanish at ||f||^2 / TV(f); start there
    let mut alpha = if tv0 > 0.0 { dev0 * dev0 / tv0 } else { 1.0 };
    let (mut lo, mut hi);
    if reaches_mean(alpha)? {
        hi = alpha;
        lo = alpha / 2.0;
        let mut found = false;
        for _ in 0..60 {
            if !reaches_mean(lo)? {
                found = true;
                break;
            }
            hi = lo;
            lo /= 2.0;
        }
        if !found {
            return Ok(hi);
        }
    } else {
        lo = alpha;
        let mut found = false;
        hi = alpha;
        for _ in 0..60 {
            alpha *= 2.0;
            if reaches_mean(alpha)? {
                hi = alpha;
                found = true;
                break;
            }
            lo = alpha;
        }
        if !found {
            log::warn!("no alpha up to {hi:.3e} flattens the signal; using it as the maximum");
            return Ok(hi);
        }
    }
    // refine the bracket [lo, hi] geometrically
    for _ in 0..3 {
        let mid = (lo * hi).sqrt();
        if reaches_mean(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

struct Prepared {
    alpha_max: f64,
    mean: Vec<f64>,
}

fn prepare(
    u0: &Signal,
    schedule: &ScheduleConfig,
    ops: &DiscreteOperators,
    config: &SolverConfig,
) -> Result<Prepared> {
    schedule.validate()?;
    u0.check_shape(ops.domain(), ops.primal_len())?;
    let alpha_max = match schedule.alpha_max {
        Some(a) => a,
        None => estimate_alpha_max(u0, ops, schedule.tv, config)?,
    };
    Ok(Prepared { alpha_max, mean: u0.weighted_mean(ops.primal_weights()) })
}

fn normalize_rows(u: &mut [f64], previous: &[f64], channels: usize) {
    for (row, prev) in u.chunks_mut(channels).zip(previous.chunks(channels)) {
        let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n < 1e-12 {
            row.copy_from_slice(prev);
        } else {
            row.iter_mut().for_each(|v| *v /= n);
        }
    }
}

fn finish(
    scheme: Scheme,
    u0: &Signal,
    ops: &DiscreteOperators,
    prep: Prepared,
    parts: Parts,
) -> Result<SpectralDecomposition> {
    let c = u0.channels();
    let mut dec = SpectralDecomposition {
        scheme,
        alpha_max: prep.alpha_max,
        times: parts.times,
        steps: parts.steps,
        weights: parts.weights,
        widths: parts.widths,
        element_weights: ops.primal_weights().to_vec(),
        components: parts.components,
        mean: prep.mean,
        residual: Signal::zeros(u0.domain(), u0.len(), c),
        residual_bin: 0,
        mesh_digest: [0; 32],
        source_digest: [0; 32],
        iterations: parts.iterations,
        not_converged: parts.not_converged,
    };
    let ones = vec![1.0; dec.len()];
    let synth = synthesis(&dec, &ones);
    let residual: Vec<f64> = u0.values().iter().zip(&synth).map(|(a, b)| a - b).collect();
    dec.residual = Signal::new(u0.domain(), c, residual)?;
    Ok(dec)
}

struct Parts {
    times: Vec<f64>,
    steps: Vec<f64>,
    weights: Vec<f64>,
    widths: Vec<f64>,
    components: Vec<Signal>,
    iterations: Vec<usize>,
    not_converged: usize,
}

fn constant_parts(u0: &Signal) -> Parts {
    Parts {
        times: vec![1.0],
        steps: vec![1.0],
        weights: vec![1.0],
        widths: vec![1.0],
        components: vec![Signal::zeros(u0.domain(), u0.len(), u0.channels())],
        iterations: vec![0],
        not_converged: 0,
    }
}

/// States of an implicit TV flow sampled on a time grid.
#[derive(Debug, Clone)]
pub struct FlowRun {
    /// `u(t_k)` for every grid time, excluding the initial state.
    pub states: Vec<Signal>,
    pub iterations: Vec<usize>,
    pub not_converged: usize,
}

/// Implicit Euler TV flow from `u0` through the increasing times `grid`,
/// one ROF solve per interval with the previous dual as warm start.
pub fn tv_flow(
    u0: &Signal,
    grid: &[f64],
    tv: TvKind,
    project_rows: bool,
    ops: &DiscreteOperators,
    config: &SolverConfig,
) -> Result<FlowRun> {
    let c = u0.channels();
    let mut u = u0.clone();
    let mut t_prev = 0.0;
    let mut dual: Option<Vec<f64>> = None;
    let mut run = FlowRun { states: Vec::with_capacity(grid.len()), iterations: Vec::new(), not_converged: 0 };
    for (k, &t) in grid.iter().enumerate() {
        let dt = t - t_prev;
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("flow times must increase, got {t} after {t_prev}")));
        }
        let problem = ProxProblem { ops, alpha: dt, tv, data: &u };
        let sol = solve_rof(&problem, config, dual.as_deref().map(|q| (&u, q)))?;
        run.iterations.push(sol.iterations);
        if !sol.converged {
            run.not_converged += 1;
        }
        let mut next = sol.u.into_values();
        if project_rows {
            normalize_rows(&mut next, u.values(), c);
        }
        u = Signal::new(u0.domain(), c, next)?;
        run.states.push(u.clone());
        dual = Some(sol.dual);
        t_prev = t;
        log::debug!("flow step {k}: t = {t:.4e}, {} iterations", sol.iterations);
    }
    Ok(run)
}

/// Forward decomposition by implicit TV flow on the geometric grid
/// `t_k = alpha_max C^(N-k)`, `k = 1..N`.
///
/// `u(t)` is treated as piecewise linear between checkpoints. Interior
/// components are second differences `(d_k - d_{k-1}) / width_k` with
/// `d_k` the velocity on interval `k` and `width_k` the half-sum of the
/// adjacent steps; the quadrature weight is `t_k width_k`. The last bin holds
/// `u(t_N) - t_N d_N - mean`, which closes the sum exactly.
pub fn decompose_forward(
    u0: &Signal,
    schedule: &ScheduleConfig,
    ops: &DiscreteOperators,
    config: &SolverConfig,
) -> Result<SpectralDecomposition> {
    let prep = prepare(u0, schedule, ops, config)?;
    if is_constant(u0, ops) {
        return finish(Scheme::Forward, u0, ops, prep, constant_parts(u0));
    }
    let n = schedule.steps.unwrap_or_else(|| schedule.auto_steps());
    let c = u0.channels();
    let grid: Vec<f64> = (1..=n).map(|k| prep.alpha_max * schedule.decay.powi((n - k) as i32)).collect();
    let mut t_prev = 0.0;
    let steps: Vec<f64> = grid
        .iter()
        .map(|&t| {
            let dt = t - t_prev;
            t_prev = t;
            dt
        })
        .collect();

    let flow = tv_flow(u0, &grid, schedule.tv, schedule.project_rows, ops, config)?;
    let mut velocities: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut prev = u0.values();
    for (state, &dt) in flow.states.iter().zip(&steps) {
        velocities.push(state.values().iter().zip(prev).map(|(a, b)| (a - b) / dt).collect());
        prev = state.values();
    }
    let u = flow.states.last().expect("at least one step");
    let (iterations, not_converged) = (flow.iterations, flow.not_converged);

    let mut components = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut widths = Vec::with_capacity(n);
    for k in 0..n {
        let (phi, width) = if k + 1 < n {
            let width = 0.5 * (steps[k] + steps[k + 1]);
            let phi: Vec<f64> =
                velocities[k + 1].iter().zip(&velocities[k]).map(|(a, b)| (a - b) / width).collect();
            (phi, width)
        } else {
            let width = 0.5 * steps[k];
            let t = grid[k];
            let phi: Vec<f64> = u
                .values()
                .iter()
                .zip(&velocities[k])
                .enumerate()
                .map(|(i, (uv, d))| (uv - t * d - prep.mean[i % c]) / (t * width))
                .collect();
            (phi, width)
        };
        components.push(Signal::new(u0.domain(), c, phi)?);
        weights.push(grid[k] * width);
        widths.push(width);
    }
    let parts = Parts { times: grid, steps, weights, widths, components, iterations, not_converged };
    finish(Scheme::Forward, u0, ops, prep, parts)
}

/// Inverse scale space decomposition.
///
/// Starting from `u = mean`, `v = 0` and `alpha_0 = alpha_max`, each step
/// solves `u_{k+1} = ROF(u0 + v, alpha_k)` and updates
/// `v <- C (v + u0 - u_{k+1})`, with `alpha_{k+1} = C alpha_k`. The components
/// are the increments `u_{k+1} - u_k` (weight 1) at scale `1 / sum_i 1/alpha_i`.
/// Without a fixed step count the iteration stops once `u` is within `1e-4`
/// (relative) of the input.
pub fn decompose_inverse(
    u0: &Signal,
    schedule: &ScheduleConfig,
    ops: &DiscreteOperators,
    config: &SolverConfig,
) -> Result<SpectralDecomposition> {
    let prep = prepare(u0, schedule, ops, config)?;
    if is_constant(u0, ops) {
        return finish(Scheme::Inverse, u0, ops, prep, constant_parts(u0));
    }
    let c = u0.channels();
    let w = ops.primal_weights();
    let dev0 = deviation(u0.values(), &prep.mean, c, w);
    let cap = schedule.steps.unwrap_or_else(|| schedule.inverse_cap());

    let mut u = broadcast_mean(&prep.mean, u0.len());
    let mut v = vec![0.0; u.len()];
    let mut dual: Option<Vec<f64>> = None;
    let mut alpha = prep.alpha_max;
    let mut inverse_time = 0.0;
    let mut scales = Vec::new();
    let mut alphas = Vec::new();
    let mut increments = Vec::new();
    let mut iterations = Vec::new();
    let mut not_converged = 0;
    for k in 0..cap {
        let target: Vec<f64> = u0.values().iter().zip(&v).map(|(a, b)| a + b).collect();
        let target = Signal::new(u0.domain(), c, target)?;
        let warm = Signal::new(u0.domain(), c, u.clone())?;
        let problem = ProxProblem { ops, alpha, tv: schedule.tv, data: &target };
        let sol = solve_rof(&problem, config, dual.as_deref().map(|q| (&warm, q)))?;
        iterations.push(sol.iterations);
        if !sol.converged {
            not_converged += 1;
        }
        let next = sol.u.into_values();
        increments.push(next.iter().zip(&u).map(|(a, b)| a - b).collect::<Vec<f64>>());
        inverse_time += 1.0 / alpha;
        scales.push(1.0 / inverse_time);
        alphas.push(alpha);
        for ((vi, a), b) in v.iter_mut().zip(u0.values()).zip(&next) {
            *vi = schedule.decay * (*vi + a - b);
        }
        u = next;
        dual = Some(sol.dual);
        alpha *= schedule.decay;

        let err = weighted_norm(
            &u.iter().zip(u0.values()).map(|(a, b)| a - b).collect::<Vec<f64>>(),
            c,
            w,
        );
        log::debug!("inverse step {k}: scale {:.4e}, relative error {:.3e}", scales[k], err / dev0);
        if schedule.steps.is_none() && err < INVERSE_TOL * dev0 {
            break;
        }
    }
    if schedule.steps.is_none() && increments.len() == cap {
        log::warn!("inverse scale space stopped at the step cap ({cap})");
    }

    // ascending time = reverse order of computation
    scales.reverse();
    alphas.reverse();
    increments.reverse();
    iterations.reverse();
    let n = increments.len();
    let components = increments
        .into_iter()
        .map(|phi| Signal::new(u0.domain(), c, phi))
        .collect::<Result<Vec<_>>>()?;
    let parts = Parts {
        times: scales,
        steps: alphas,
        weights: vec![1.0; n],
        widths: vec![1.0; n],
        components,
        iterations,
        not_converged,
    };
    finish(Scheme::Inverse, u0, ops, prep, parts)
}

/// Runs the scheme selected by `scheme`.
pub fn decompose(
    scheme: Scheme,
    u0: &Signal,
    schedule: &ScheduleConfig,
    ops: &DiscreteOperators,
    config: &SolverConfig,
) -> Result<SpectralDecomposition> {
    match scheme {
        Scheme::Forward => decompose_forward(u0, schedule, ops, config),
        Scheme::Inverse => decompose_inverse(u0, schedule, ops, config),
    }
}
