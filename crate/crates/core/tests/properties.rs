mod common;

use proptest::prelude::*;
use tvspec_core::geom::rotation;
use tvspec_core::shapes::{icosphere, perturb};
use tvspec_core::solver::{rof_energy, tv_energy};
use tvspec_core::*;

fn cfg() -> ProptestConfig {
    ProptestConfig { cases: 16, ..ProptestConfig::default() }
}

fn small_sphere(seed: u64) -> (TriangleMesh, DiscreteOperators) {
    let m = perturb(&icosphere(1), 0.03, seed);
    let ops = DiscreteOperators::vertex(&m).unwrap();
    (m, ops)
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn gradient_kills_constants(seed in 0u64..1000, c in -1e3f64..1e3) {
        let (m, ops) = small_sphere(seed);
        let g = ops.apply_grad(&vec![c; m.vertex_count()], 1);
        prop_assert!(g.iter().all(|v| v.abs() <= 1e-9 * c.abs().max(1.0)));
    }

    #[test]
    fn tv_is_absolutely_homogeneous_and_shift_invariant(seed in 0u64..1000, c in -5.0f64..5.0, s in -10.0f64..10.0) {
        let (m, ops) = small_sphere(seed);
        let u = common::uniform(m.vertex_count(), seed);
        let tv = tv_energy(&ops, &u, 1, TvKind::Isotropic);
        let scaled: Vec<f64> = u.iter().map(|x| c * x + s).collect();
        let tv2 = tv_energy(&ops, &scaled, 1, TvKind::Isotropic);
        prop_assert!((tv2 - c.abs() * tv).abs() <= 1e-9 * tv.max(1.0));
        prop_assert!(tv_energy(&ops, &u, 1, TvKind::Anisotropic) >= tv - 1e-12);
    }

    #[test]
    fn rof_keeps_the_mean_and_lowers_the_energy(seed in 0u64..1000, alpha in 1e-3f64..1.0) {
        let (m, ops) = small_sphere(seed);
        let data = common::scalar(Domain::Vertices, common::uniform(m.vertex_count(), seed + 1));
        let problem = ProxProblem { ops: &ops, alpha, tv: TvKind::Isotropic, data: &data };
        let sol = solve_rof(&problem, &default_config(&ops, 1), None).unwrap();
        let w = ops.primal_weights();
        let (m0, m1) = (data.weighted_mean(w)[0], sol.u.weighted_mean(w)[0]);
        prop_assert!((m0 - m1).abs() < 1e-9);
        let e = rof_energy(&problem, sol.u.values(), true);
        let e_data = rof_energy(&problem, data.values(), true);
        prop_assert!(e <= e_data + 1e-12);
        // the certified gap bounds the distance to the minimum, which is below E(mean)
        prop_assert!(sol.converged);
        let slack = sol.final_gap * (e_data - e) + 1e-12;
        prop_assert!(e <= rof_energy(&problem, &vec![m0; m.vertex_count()], true) + slack);
    }

    #[test]
    fn synthesis_is_exact(seed in 0u64..1000, decay in 0.3f64..0.9, forward in any::<bool>()) {
        let (m, ops) = small_sphere(seed);
        let u0 = common::scalar(Domain::Vertices, common::uniform(m.vertex_count(), seed));
        let scheme = if forward { Scheme::Forward } else { Scheme::Inverse };
        let sched = ScheduleConfig { decay, steps: Some(6), ..Default::default() };
        let dec = decompose(scheme, &u0, &sched, &ops, &default_config(&ops, 1)).unwrap();
        let out = reconstruct(&dec, &[1.0; 6]).unwrap();
        prop_assert!(common::rel_err(out.values(), u0.values(), ops.primal_weights()) < 1e-12);
    }

    #[test]
    fn masked_filter_is_a_convex_blend(seed in 0u64..1000, gain in 0.0f64..3.0) {
        let (m, ops) = small_sphere(seed);
        let u0 = common::scalar(Domain::Vertices, common::uniform(m.vertex_count(), seed));
        let dec = decompose_inverse(&u0, &ScheduleConfig { steps: Some(5), ..Default::default() }, &ops, &default_config(&ops, 1)).unwrap();
        let mask: Vec<f64> = common::uniform(m.vertex_count(), seed + 7).iter().map(|x| 0.5 * (x + 1.0)).collect();
        let bands = vec![Band { a: 0.0, b: dec.times[2], gain }];
        let plain = apply_filter(&dec, &FilterSpec { bands: bands.clone(), ..Default::default() }).unwrap();
        let masked = apply_filter(&dec, &FilterSpec { bands, mask: Some(mask.clone()), ..Default::default() }).unwrap();
        for i in 0..m.vertex_count() {
            let (lo, hi) = (plain.values()[i].min(u0.values()[i]), plain.values()[i].max(u0.values()[i]));
            prop_assert!(masked.values()[i] >= lo - 1e-12 && masked.values()[i] <= hi + 1e-12);
        }
    }

    #[test]
    fn normal_energy_is_rotation_invariant(seed in 0u64..1000, angle in 0.0f64..6.3, ax in -1.0f64..1.0, ay in -1.0f64..1.0) {
        let m = perturb(&icosphere(2), 0.05, seed);
        let mr = m.transformed(&rotation([ax, ay, 0.7], angle)).unwrap();
        let e = tv_normal_energy(&m, &flow::face_normal_signal(&m));
        let er = tv_normal_energy(&mr, &flow::face_normal_signal(&mr));
        prop_assert!((e - er).abs() < 1e-10);
    }

    #[test]
    fn projected_normals_are_unit(seed in 0u64..1000, dt in 1e-3f64..0.5) {
        let m = perturb(&icosphere(1), 0.05, seed);
        let ops = DiscreteOperators::face(&m);
        let s = normal_tv_step(&FlowState::new(m.clone()), &ops, dt, TvKind::Anisotropic, &default_config(&ops, 3)).unwrap();
        for n in s.normals.rows3() {
            prop_assert!((tvspec_core::geom::norm(n) - 1.0).abs() < 1e-9);
        }
    }
}
