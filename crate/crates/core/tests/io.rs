mod common;

use std::fs;

use tvspec_core::container::{decode_tvsd, load_tvsd, save_tvsd};
use tvspec_core::digest::{mesh_digest, source_digest};
use tvspec_core::io::{load_mesh, load_points, read_index_map, read_signal, save_mesh, write_signal, write_spectrum_csv};
use tvspec_core::shapes::{icosphere, plane_grid};
use tvspec_core::*;

#[test]
fn single_triangle_off() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.off");
    fs::write(&p, "OFF\n# one face\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
    let m = load_mesh(&p).unwrap();
    assert_eq!((m.vertex_count(), m.face_count(), m.edges().len()), (3, 1, 3));
    assert_eq!(m.face_area(), &[0.5]);
    assert!(m.edges().iter().all(|e| e.is_boundary()));
}

#[test]
fn mesh_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = icosphere(2);
    for ext in ["obj", "off", "tvsm"] {
        let p = dir.path().join(format!("m.{ext}"));
        save_mesh(&m, &p).unwrap();
        let back = load_mesh(&p).unwrap();
        assert_eq!(back.faces(), m.faces());
        assert_eq!(back.vertices(), m.vertices(), "{ext}");
        assert_eq!(mesh_digest(&back), mesh_digest(&m));
    }
    let area = icosphere(4).total_area();
    assert!((area - 4.0 * std::f64::consts::PI).abs() / (4.0 * std::f64::consts::PI) < 0.005);
}

#[test]
fn missing_and_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.obj");
    match load_mesh(&missing) {
        Err(Error::Io(e)) => assert!(e.to_string().contains("nope.obj")),
        other => panic!("{other:?}"),
    }
    let bad = dir.path().join("bad.obj");
    fs::write(&bad, "v 0 0 0\nv 1 0 0\nf 1 2 3\n").unwrap();
    assert!(matches!(load_mesh(&bad), Err(Error::Parse(_))));
    let unknown = dir.path().join("x.stl");
    fs::write(&unknown, "solid").unwrap();
    assert!(matches!(load_mesh(&unknown), Err(Error::Parse(_))));
}

#[test]
fn signal_tables_and_maps() {
    let dir = tempfile::tempdir().unwrap();
    let s = Signal::new(Domain::Faces, 2, vec![0.1, -2.0, 1e-300, 3.5, 7.0, 0.0]).unwrap();
    let p = dir.path().join("s.txt");
    write_signal(&s, fs::File::create(&p).unwrap()).unwrap();
    assert_eq!(read_signal(&p, Domain::Faces).unwrap(), s);

    fs::write(&p, "1 2\n3\n").unwrap();
    assert!(read_signal(&p, Domain::Vertices).is_err());

    let mp = dir.path().join("map.txt");
    fs::write(&mp, "0\n2\n\n1\n").unwrap();
    assert_eq!(read_index_map(&mp).unwrap(), vec![0, 2, 1]);
    fs::write(&mp, "0\n-1\n").unwrap();
    assert!(read_index_map(&mp).is_err());

    let mut csv = Vec::new();
    write_spectrum_csv(&[(0.5, 1.25), (1.0, 0.0)], &mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap(), "t,s\n0.5,1.25\n1.0,0.0\n");
}

#[test]
fn decomposition_container_round_trip() {
    let m = icosphere(2);
    let ops = DiscreteOperators::vertex(&m).unwrap();
    let u0 = common::scalar(Domain::Vertices, common::uniform(m.vertex_count(), 2));
    let mut dec = decompose_forward(&u0, &ScheduleConfig { steps: Some(5), ..Default::default() }, &ops, &default_config(&ops, 1)).unwrap();
    dec.mesh_digest = mesh_digest(&m);
    dec.source_digest = source_digest(&dec.mesh_digest, &u0);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.tvsd");
    save_tvsd(&dec, &p).unwrap();
    let back = load_tvsd(&p).unwrap();
    assert_eq!(back.components, dec.components);
    assert_eq!(back.times, dec.times);
    assert_eq!(back.weights, dec.weights);
    assert_eq!(back.residual, dec.residual);
    assert_eq!(back.mesh_digest, dec.mesh_digest);
    assert_eq!(spectrum(&back), spectrum(&dec));
    assert_eq!(reconstruct(&back, &vec![1.0; 5]).unwrap(), reconstruct(&dec, &vec![1.0; 5]).unwrap());

    let bytes = fs::read(&p).unwrap();
    assert!(decode_tvsd(&bytes[..bytes.len() - 1]).is_err());
    let mut wrong = bytes.clone();
    wrong[0] = b'X';
    assert!(decode_tvsd(&wrong).is_err());
}

#[test]
fn grid_graph_connects_lattice_neighbours() {
    let pts: Vec<[f64; 3]> = (0..100).map(|i| [(i % 10) as f64, (i / 10) as f64, 0.0]).collect();
    let g = build_point_cloud_graph(pts, 4, None).unwrap();
    // interior point 55 has its four lattice neighbours
    let mut nb: Vec<usize> = g.neighbors(55).collect();
    nb.sort();
    assert_eq!(nb, vec![45, 54, 56, 65]);
    assert!((0..g.len()).all(|i| g.degree(i) >= 4));
    for (&(i, j), &w) in g.edges().iter().zip(g.weights()) {
        assert!(g.neighbors(j).any(|k| k == i));
        assert!(w > 0.0 && w <= 1.0);
    }
    assert!(build_point_cloud_graph(vec![[0.0; 3]; 3], 4, None).is_err());
}

#[test]
fn estimated_normals_on_sphere_and_plane() {
    let pts = icosphere(3).vertices().to_vec();
    let g = build_point_cloud_graph(pts.clone(), 10, None).unwrap();
    let est = estimate_normals(&g, 0).unwrap();
    let dots: Vec<f64> = pts.iter().zip(est.normals.rows3()).map(|(p, n)| tvspec_core::geom::dot(*p, n)).collect();
    assert!(dots.iter().all(|d| d.abs() > 0.98), "min |n.p| {}", dots.iter().map(|d| d.abs()).fold(1.0, f64::min));
    assert!(dots.iter().all(|d| d.signum() == dots[0].signum()), "orientation is consistent");

    let plane = plane_grid(8, 8, 0.5).vertices().to_vec();
    let g = build_point_cloud_graph(plane, 6, None).unwrap();
    let est = estimate_normals(&g, 3).unwrap();
    let z: Vec<f64> = est.normals.rows3().iter().map(|n| n[2]).collect();
    assert!(z.iter().all(|v| (v.abs() - 1.0).abs() < 1e-9 && v.signum() == z[0].signum()));
    assert!(est.rank_deficient.is_empty());
}

#[test]
fn point_tables_load() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.xyz");
    fs::write(&p, "0 0 0\n1 0 0 0.5\n0 1 0\n").unwrap();
    assert_eq!(load_points(&p).unwrap().len(), 3);
    fs::write(&p, "0 0\n").unwrap();
    assert!(load_points(&p).is_err());
}
