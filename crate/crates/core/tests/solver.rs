mod common;

use rand::Rng;
use tvspec_core::shapes::{cap_vertex_indicator, icosphere};
use tvspec_core::solver::{prox_dual, rof_energy, StopRule};
use tvspec_core::*;

fn tight(mut c: SolverConfig) -> SolverConfig {
    c.gap_tol = 1e-13;
    c.max_iter = 200_000;
    c
}

fn undirected(g: &PointCloudGraph) -> Vec<(usize, usize, f64)> {
    g.edges().iter().zip(g.weights()).filter(|((i, j), _)| i < j).map(|(&(i, j), &w)| (i, j, w)).collect()
}

#[test]
fn two_node_problem_is_soft_shrinkage() {
    let g = build_point_cloud_graph(vec![[0.0; 3], [0.0, 2.0, 0.0]], 1, Some(4.0)).unwrap();
    let ops = DiscreteOperators::graph(&g);
    let w = (-1.0f64).exp();
    let mut r = common::rng(1);
    for _ in 0..10 {
        let (a, b) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let alpha: f64 = r.random_range(0.05..1.5);
        let data = common::scalar(Domain::Points, vec![a, b]);
        let sol = solve_rof(&ProxProblem { ops: &ops, alpha, tv: TvKind::Isotropic, data: &data }, &tight(default_config(&ops, 1)), None).unwrap();
        let diff = (a - b).signum() * ((a - b).abs() - 2.0 * alpha * w).max(0.0);
        let mean = 0.5 * (a + b);
        let u = sol.u.values();
        assert!((u[0] - (mean + diff / 2.0)).abs() < 1e-6, "a={a} b={b} alpha={alpha}: {u:?}");
        assert!((u[1] - (mean - diff / 2.0)).abs() < 1e-6);
    }
}

#[test]
fn small_graphs_match_subgradient_oracle() {
    let mut r = common::rng(7);
    for inst in 0..20 {
        let n = r.random_range(2..=6);
        let pts: Vec<_> = (0..n).map(|_| [r.random_range(0.0..1.0), r.random_range(0.0..1.0), r.random_range(0.0..1.0)]).collect();
        let k = r.random_range(1..n);
        let g = build_point_cloud_graph(pts, k, None).unwrap();
        let ops = DiscreteOperators::graph(&g);
        let a: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let alpha = r.random_range(0.05..1.0);
        let data = common::scalar(Domain::Points, a.clone());
        let cfg = SolverConfig { gap_tol: 1e-8, max_iter: 100_000, ..default_config(&ops, 1) };
        let sol = solve_rof(&ProxProblem { ops: &ops, alpha, tv: TvKind::Isotropic, data: &data }, &cfg, None).unwrap();
        let edges = undirected(&g);
        let pdhg = common::graph_energy(&edges, sol.u.values(), &a, alpha);
        let oracle = common::subgradient_oracle(&edges, &a, alpha, 50_000);
        assert!(pdhg <= oracle + 1e-4, "instance {inst}: pdhg {pdhg} oracle {oracle}");
        assert!((pdhg - oracle).abs() < 1e-4, "instance {inst}: pdhg {pdhg} oracle {oracle}");
    }
}

#[test]
fn fidelity_and_regularisation_limits() {
    let mesh = icosphere(3);
    let ops = DiscreteOperators::vertex(&mesh).unwrap();
    let u0 = common::scalar(Domain::Vertices, common::uniform(mesh.vertex_count(), 3));
    let cfg = default_config(&ops, 1);

    let sol = solve_rof(&ProxProblem { ops: &ops, alpha: 1e-9, tv: TvKind::Isotropic, data: &u0 }, &cfg, None).unwrap();
    assert!(common::rel_err(sol.u.values(), u0.values(), mesh.vertex_area()) < 1e-6);

    // almost no fidelity left: the iteration is sublinear and needs more than the default cap
    let long = SolverConfig { max_iter: 20_000, ..cfg.clone() };
    let sol = solve_rof(&ProxProblem { ops: &ops, alpha: 1e9, tv: TvKind::Isotropic, data: &u0 }, &long, None).unwrap();
    assert!(sol.converged);
    let mean = u0.weighted_mean(mesh.vertex_area())[0];
    let worst = sol.u.values().iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-3, "max deviation from the mean {worst:e}");
}

#[test]
fn mean_energy_and_dual_feasibility() {
    let mesh = icosphere(3);
    let ops = DiscreteOperators::vertex(&mesh).unwrap();
    let cfg = default_config(&ops, 1);
    let signals = [
        common::uniform(mesh.vertex_count(), 11),
        cap_vertex_indicator(&mesh, [0.0, 0.6, 0.8], 0.7),
    ];
    for (s, values) in signals.into_iter().enumerate() {
        let u0 = common::scalar(Domain::Vertices, values);
        for tv in [TvKind::Isotropic, TvKind::Anisotropic] {
            for alpha in [0.01, 0.1, 1.0] {
                let problem = ProxProblem { ops: &ops, alpha, tv, data: &u0 };
                let sol = solve_rof(&problem, &cfg, None).unwrap();
                let m0 = u0.weighted_mean(mesh.vertex_area())[0];
                let m1 = sol.u.weighted_mean(mesh.vertex_area())[0];
                assert!((m0 - m1).abs() <= 1e-6 * m0.abs().max(1e-3), "signal {s}: mean {m0} -> {m1}");
                assert!(rof_energy(&problem, sol.u.values(), true) <= rof_energy(&problem, u0.values(), true));
                let mut q = sol.dual.clone();
                prox_dual(&mut q, ops.dual_block(), tv);
                let gap = q.iter().zip(&sol.dual).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(gap <= 1e-12);
            }
        }
    }
}

#[test]
fn face_domain_and_multichannel_solves() {
    let mesh = icosphere(2);
    let ops = DiscreteOperators::face(&mesh);
    let n0 = flow::face_normal_signal(&mesh);
    let cfg = default_config(&ops, 3);
    assert_eq!(cfg.max_iter, 300);
    let problem = ProxProblem { ops: &ops, alpha: 0.05, tv: TvKind::Isotropic, data: &n0 };
    let sol = solve_rof(&problem, &cfg, None).unwrap();
    assert!(sol.converged);
    assert!(sol.energy < rof_energy(&problem, n0.values(), true));
}

#[test]
fn default_parameters() {
    let mesh = icosphere(2);
    let ops = DiscreteOperators::vertex(&mesh).unwrap();
    let one = default_config(&ops, 1);
    let three = default_config(&ops, 3);
    assert_eq!(one.theta, 0.5);
    assert_eq!(one.gap_tol, 1e-4);
    assert_eq!(one.max_iter, 1000);
    assert_eq!(three.max_iter, 300);
    assert_eq!(one.sigma, one.tau);
    assert_eq!(one.stop_rule, StopRule::Gap);
    assert!(one.validate(&ops).is_ok());

    let mut bad = one.clone();
    bad.sigma *= 2.0;
    assert!(bad.validate(&ops).is_err());
    bad = one.clone();
    bad.theta = 1.5;
    assert!(bad.validate(&ops).is_err());
}

#[test]
fn relative_and_absolute_stopping_rules_also_converge() {
    let mesh = icosphere(3);
    let ops = DiscreteOperators::vertex(&mesh).unwrap();
    let u0 = common::scalar(Domain::Vertices, cap_vertex_indicator(&mesh, [1.0, 0.0, 0.0], 0.6));
    let problem = ProxProblem { ops: &ops, alpha: 0.05, tv: TvKind::Isotropic, data: &u0 };
    let reference = solve_rof(&problem, &tight(default_config(&ops, 1)), None).unwrap().energy;
    for rule in [StopRule::Relative, StopRule::Absolute] {
        let mut cfg = default_config(&ops, 1);
        cfg.stop_rule = rule;
        cfg.gap_tol = 1e-7;
        cfg.max_iter = 20_000;
        let e = solve_rof(&problem, &cfg, None).unwrap().energy;
        assert!((e - reference).abs() < 1e-4 * reference, "{rule:?}: {e} vs {reference}");
    }
}

#[test]
fn warm_start_shape_is_checked() {
    let mesh = icosphere(1);
    let ops = DiscreteOperators::vertex(&mesh).unwrap();
    let u0 = common::scalar(Domain::Vertices, common::uniform(mesh.vertex_count(), 1));
    let problem = ProxProblem { ops: &ops, alpha: 0.1, tv: TvKind::Isotropic, data: &u0 };
    let err = solve_rof(&problem, &default_config(&ops, 1), Some((&u0, &[0.0; 3])));
    assert!(matches!(err, Err(Error::InvalidSignal(_))));
}
