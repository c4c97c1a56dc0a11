#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvspec_core::{Domain, Signal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

pub fn scalar(domain: Domain, values: Vec<f64>) -> Signal {
    Signal::scalar(domain, values).unwrap()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `sqrt(sum_i w_i (a_i - b_i)^2) / sqrt(sum_i w_i b_i^2)` for scalar rows.
pub fn rel_err(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).zip(w).map(|((x, y), w)| w * (x - y) * (x - y)).sum();
    let den: f64 = b.iter().zip(w).map(|(y, w)| w * y * y).sum();
    (num / den).sqrt()
}

/// Weighted graph ROF energy `sum_{i<j} w_ij |u_i - u_j| + 1/(2 alpha) |u - a|^2`
/// over undirected edges.
pub fn graph_energy(edges: &[(usize, usize, f64)], u: &[f64], a: &[f64], alpha: f64) -> f64 {
    let tv: f64 = edges.iter().map(|&(i, j, w)| w * (u[i] - u[j]).abs()).sum();
    let fid: f64 = u.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum();
    tv + fid / (2.0 * alpha)
}

/// Subgradient descent with diminishing steps `alpha / k` (the energy is
/// `1/alpha` strongly convex); returns the best energy seen.
pub fn subgradient_oracle(edges: &[(usize, usize, f64)], a: &[f64], alpha: f64, iters: usize) -> f64 {
    let mut u = a.to_vec();
    let mut best = graph_energy(edges, &u, a, alpha);
    let mut g = vec![0.0; u.len()];
    for k in 1..=iters {
        g.iter_mut().zip(&u).zip(a).for_each(|((g, x), y)| *g = (x - y) / alpha);
        for &(i, j, w) in edges {
            let s = (u[i] - u[j]).signum() * w;
            g[i] += s;
            g[j] -= s;
        }
        let step = alpha / k as f64;
        u.iter_mut().zip(&g).for_each(|(x, d)| *x -= step * d);
        best = best.min(graph_energy(edges, &u, a, alpha));
    }
    best
}
