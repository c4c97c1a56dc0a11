//! Primal-dual hybrid gradient solver for the ROF problem
//!
//! ```text
//! min_u  TV(u) + 1/(2 alpha) ||u - u0||^2
//! ```
//!
//! on any domain described by [`DiscreteOperators`]. Norms are taken with the
//! operators' element measures, so the solution does not depend on mesh
//! resolution beyond discretisation error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ops::DiscreteOperators;
use crate::signal::Signal;

const PAR_BLOCKS: usize = 8192;

/// Pointwise norm used inside the TV integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TvKind {
    /// Euclidean norm of the whole per-element gradient block (all channels
    /// together); rotation invariant.
    #[serde(alias = "iso")]
    Isotropic,
    /// Sum of absolute values of every gradient entry; axis dependent.
    #[serde(alias = "aniso")]
    Anisotropic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopRule {
    /// `|E_k - E_{k-1}| < tol * (1 + |E_{k-1}|)`
    Relative,
    /// `|E_k - E_{k-1}| < tol`
    Absolute,
    /// Primal-dual gap below `tol` times the energy decrease `E(u0) - E(u)`
    /// achieved so far (floored at `1e-14 (1 + |E(u)|)`).
    Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub sigma: f64,
    pub tau: f64,
    pub theta: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
    pub stop_rule: StopRule,
    /// Measure the stopping energy with element weights (otherwise plain sums).
    pub weighted_energy: bool,
    /// Iterations between energy checkpoints.
    pub check_every: usize,
    /// Re-split `tau` and `sigma` for each problem according to `alpha`,
    /// keeping their product.
    pub rebalance: bool,
}

/// `sigma = tau = 1 / norm`, the largest equal steps with `tau sigma norm^2 <= 1`.
pub fn step_size(norm: f64) -> f64 {
    1.0 / norm
}

/// Steps actually used for a problem with parameter `alpha`.
///
/// With `rebalance`, `tau` becomes `0.07 alpha` clamped to
/// `[1e-3, 1e3] * sqrt(tau sigma)` and `sigma` takes the rest of the product.
pub fn effective_steps(config: &SolverConfig, alpha: f64) -> (f64, f64) {
    if !config.rebalance {
        return (config.tau, config.sigma);
    }
    let product = config.tau * config.sigma;
    let geo = product.sqrt();
    let tau = (0.07 * alpha).clamp(1e-3 * geo, 1e3 * geo);
    (tau, product / tau)
}

/// Default PDHG parameters for a signal with `channels` columns on `ops`.
pub fn default_config(ops: &DiscreteOperators, channels: usize) -> SolverConfig {
    let step = if ops.weighted_norm() > 0.0 { step_size(ops.weighted_norm()) } else { 1.0 };
    SolverConfig {
        sigma: step,
        tau: step,
        theta: 0.5,
        gap_tol: 1e-4,
        max_iter: if channels == 1 { 1000 } else { 300 },
        stop_rule: StopRule::Gap,
        weighted_energy: true,
        check_every: 10,
        rebalance: true,
    }
}

impl SolverConfig {
    pub fn validate(&self, ops: &DiscreteOperators) -> Result<()> {
        if !(self.sigma > 0.0 && self.tau > 0.0) {
            return Err(Error::InvalidParameter("sigma and tau must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidParameter(format!("theta {} outside [0, 1]", self.theta)));
        }
        let norm = ops.weighted_norm();
        let bound = 1.0 / (norm * norm);
        if self.sigma * self.tau > bound * (1.0 + 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "tau * sigma = {} exceeds the stability bound {bound}",
                self.sigma * self.tau
            )));
        }
        if self.max_iter == 0 || self.check_every == 0 {
            return Err(Error::InvalidParameter("iteration counts must be positive".into()));
        }
        Ok(())
    }
}

/// One ROF instance.
#[derive(Debug, Clone, Copy)]
pub struct ProxProblem<'a> {
    pub ops: &'a DiscreteOperators,
    pub alpha: f64,
    pub tv: TvKind,
    pub data: &'a Signal,
}

#[derive(Debug, Clone)]
pub struct RofSolution {
    pub u: Signal,
    /// Dual variable, one block of `dual_block * channels` values per dual element.
    pub dual: Vec<f64>,
    pub iterations: usize,
    /// Last energy change seen by the stopping rule.
    pub final_gap: f64,
    /// False when the iteration cap was reached with a gap above `10 * gap_tol`.
    pub converged: bool,
    pub energy: f64,
}

/// Projects each dual block onto the unit ball (isotropic) or clamps each
/// entry to `[-1, 1]` (anisotropic).
pub fn prox_dual(q: &mut [f64], block: usize, tv: TvKind) {
    let project = |b: &mut [f64]| match tv {
        TvKind::Isotropic => {
            let n2: f64 = b.iter().map(|v| v * v).sum();
            if n2 > 1.0 {
                let s = 1.0 / n2.sqrt();
                b.iter_mut().for_each(|v| *v *= s);
            }
        }
        TvKind::Anisotropic => b.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0)),
    };
    if q.len() / block >= PAR_BLOCKS {
        q.par_chunks_mut(block).for_each(project);
    } else {
        q.chunks_mut(block).for_each(project);
    }
}

/// Closed-form proximal map of the quadratic data term.
pub fn prox_data(u: &mut [f64], u0: &[f64], tau: f64, alpha: f64) {
    let r = tau / alpha;
    for (x, y) in u.iter_mut().zip(u0) {
        *x = (*x + r * y) / (1.0 + r);
    }
}

/// `TV(u)` with the operators' dual measure.
pub fn tv_energy(ops: &DiscreteOperators, u: &[f64], channels: usize, tv: TvKind) -> f64 {
    tv_of_gradient(ops, &ops.apply_grad(u, channels), channels, tv, true)
}

fn tv_of_gradient(ops: &DiscreteOperators, ku: &[f64], channels: usize, tv: TvKind, weighted: bool) -> f64 {
    let block = ops.dual_block() * channels;
    ku.chunks(block)
        .zip(ops.dual_weights())
        .map(|(b, &w)| {
            let v = match tv {
                TvKind::Isotropic => b.iter().map(|x| x * x).sum::<f64>().sqrt(),
                TvKind::Anisotropic => b.iter().map(|x| x.abs()).sum(),
            };
            if weighted { w * v } else { v }
        })
        .sum()
}

fn fidelity(ops: &DiscreteOperators, u: &[f64], u0: &[f64], channels: usize, weighted: bool) -> f64 {
    u.chunks(channels)
        .zip(u0.chunks(channels))
        .zip(ops.primal_weights())
        .map(|((a, b), &p)| {
            let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            if weighted { p * d } else { d }
        })
        .sum()
}

/// Dual objective `-<u0, D q>_P - alpha/2 |D q|_P^2`, a lower bound on the
/// ROF energy for every feasible `q`.
pub fn rof_dual_energy(problem: &ProxProblem<'_>, q: &[f64]) -> f64 {
    let c = problem.data.channels();
    let dq = problem.ops.apply_div(q, c);
    dq.chunks(c)
        .zip(problem.data.values().chunks(c))
        .zip(problem.ops.primal_weights())
        .map(|((d, u0), &p)| {
            let lin: f64 = d.iter().zip(u0).map(|(x, y)| x * y).sum();
            let sq: f64 = d.iter().map(|x| x * x).sum();
            p * (-lin - 0.5 * problem.alpha * sq)
        })
        .sum()
}

/// ROF energy `TV(u) + 1/(2 alpha) ||u - u0||^2`.
pub fn rof_energy(problem: &ProxProblem<'_>, u: &[f64], weighted: bool) -> f64 {
    let c = problem.data.channels();
    let ku = problem.ops.apply_grad(u, c);
    tv_of_gradient(problem.ops, &ku, c, problem.tv, weighted)
        + fidelity(problem.ops, u, problem.data.values(), c, weighted) / (2.0 * problem.alpha)
}

/// Minimises the ROF energy with the primal-dual hybrid gradient method.
///
/// Starts from `warm_start = (u, dual)` when given, else from `u = u0`,
/// `dual = 0`. Hitting the iteration cap is reported through
/// [`RofSolution::converged`], not as an error.
pub fn solve_rof(
    problem: &ProxProblem<'_>,
    config: &SolverConfig,
    warm_start: Option<(&Signal, &[f64])>,
) -> Result<RofSolution> {
    let ops = problem.ops;
    let data = problem.data;
    data.check_shape(ops.domain(), ops.primal_len())?;
    if !(problem.alpha > 0.0 && problem.alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", problem.alpha)));
    }
    config.validate(ops)?;

    let c = data.channels();
    let block = ops.dual_block() * c;
    let u0 = data.values();
    let (mut u, mut q) = match warm_start {
        Some((u, q)) => {
            u.check_shape(ops.domain(), ops.primal_len())?;
            if u.channels() != c || q.len() != ops.dual_len() * block {
                return Err(Error::InvalidSignal("warm start does not match the problem shape".into()));
            }
            (u.values().to_vec(), q.to_vec())
        }
        None => (u0.to_vec(), vec![0.0; ops.dual_len() * block]),
    };

    let energy = |u: &[f64]| rof_energy(problem, u, config.weighted_energy);
    let (tau, sigma) = effective_steps(config, problem.alpha);
    let theta = config.theta;
    let r = tau / problem.alpha;

    let mut u_prev = vec![0.0; u.len()];
    let mut dq = vec![0.0; u.len()];
    let mut ku = vec![0.0; q.len()];
    let mut ubar = vec![0.0; u.len()];

    let data_energy = rof_energy(problem, u0, true);
    let mut e_prev = energy(&u);
    let mut gap = f64::INFINITY;
    let mut stopped = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        // u <- prox(u - tau K* q), with K* = -D under the element measures
        ops.div().apply_into(&q, c, &mut dq);
        u_prev.copy_from_slice(&u);
        for ((x, d), y) in u.iter_mut().zip(&dq).zip(u0) {
            *x = (*x + tau * d + r * y) / (1.0 + r);
        }
        for ((b, x), p) in ubar.iter_mut().zip(&u).zip(&u_prev) {
            *b = x + theta * (x - p);
        }
        ops.grad().apply_into(&ubar, c, &mut ku);
        for (y, k) in q.iter_mut().zip(&ku) {
            *y += sigma * k;
        }
        prox_dual(&mut q, block, problem.tv);

        if iterations % config.check_every == 0 || iterations == config.max_iter {
            let e = energy(&u);
            let change = (e - e_prev).abs();
            gap = match config.stop_rule {
                StopRule::Relative => change / (1.0 + e_prev.abs()),
                StopRule::Absolute => change,
                StopRule::Gap => {
                    let primal = rof_energy(problem, &u, true);
                    let decrease = (data_energy - primal).max(1e-14 * (1.0 + primal.abs()));
                    (primal - rof_dual_energy(problem, &q)).max(0.0) / decrease
                }
            };
            e_prev = e;
            if gap < config.gap_tol {
                stopped = true;
                break;
            }
        }
    }

    let mut energy_final = energy(&u);
    let start_energy = energy(u0);
    if energy_final > start_energy {
        // never hand back something worse than the data itself
        log::debug!("PDHG ended above the data energy; returning the data");
        u.copy_from_slice(u0);
        energy_final = start_energy;
    }
    let converged = stopped || gap <= 10.0 * config.gap_tol;
    if !converged {
        log::warn!(
            "PDHG hit {} iterations with energy change {gap:.3e} (alpha {:.3e})",
            config.max_iter,
            problem.alpha
        );
    }
    Ok(RofSolution {
        u: Signal::new(data.domain(), c, u)?,
        dual: q,
        iterations,
        final_gap: gap,
        converged,
        energy: energy_final,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_projection() {
        let mut q = vec![0.3, 0.0, 0.0, 3.0, 4.0, 0.0];
        prox_dual(&mut q, 3, TvKind::Isotropic);
        assert_eq!(&q[..3], &[0.3, 0.0, 0.0]);
        assert!((q[3] - 0.6).abs() < 1e-15 && (q[4] - 0.8).abs() < 1e-15 && q[5] == 0.0);
    }

    #[test]
    fn anisotropic_clamp() {
        let mut q = vec![3.0, -0.5];
        prox_dual(&mut q, 2, TvKind::Anisotropic);
        assert_eq!(q, vec![1.0, -0.5]);
    }

    #[test]
    fn data_prox_closed_form() {
        let mut u = vec![2.0, 5.0];
        prox_data(&mut u, &[0.0, 5.0], 1.0, 1.0);
        assert_eq!(u, vec![1.0, 5.0]);
        let mut u = vec![3.0];
        prox_data(&mut u, &[-1.0], 1e9, 1.0);
        assert!((u[0] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn step_size_rule() {
        assert_eq!(step_size(2.0), 0.5);
    }
}
