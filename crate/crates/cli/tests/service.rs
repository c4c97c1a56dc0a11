use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use tower::ServiceExt;
use tvspec_cli::commands::decompose_on;
use tvspec_cli::domain::Shape;
use tvspec_cli::service::{router, AppState, DIGEST_HEADER, IDENTITY_HEADER};
use tvspec_cli::session::Session;
use tvspec_core::digest::{sha256, to_hex};
use tvspec_core::flow::face_normal_signal;
use tvspec_core::io::{decode_tvsm, decode_tvsv, write_spectrum_csv};
use tvspec_core::shapes::{cap_vertex_indicator, icosphere, perturb};
use tvspec_core::{default_config, spectrum, Domain, ScheduleConfig, Scheme, Signal};

fn cap_session() -> Session {
    let m = icosphere(3);
    let signal = Signal::scalar(Domain::Vertices, cap_vertex_indicator(&m, [0.0, 0.0, 1.0], 0.5)).unwrap();
    let shape = Shape::Mesh(m);
    let cfg = default_config(&shape.operators(Domain::Vertices).unwrap(), 1);
    let dec = decompose_on(&shape, &signal, Scheme::Inverse, &ScheduleConfig::default(), &cfg).unwrap();
    Session::new(shape, dec, 1e-4, 1).unwrap()
}

fn normal_session() -> Session {
    let m = perturb(&icosphere(2), 0.02, 7);
    let signal = face_normal_signal(&m);
    let shape = Shape::Mesh(m);
    let cfg = default_config(&shape.operators(Domain::Faces).unwrap(), 3);
    let dec = decompose_on(&shape, &signal, Scheme::Inverse, &ScheduleConfig::default(), &cfg).unwrap();
    Session::new(shape, dec, 1e-4, 1).unwrap()
}

async fn send(app: &Router, method: Method, uri: &str, body: &str) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).body(Body::from(body.to_owned())).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let (parts, body) = res.into_parts();
    (parts.status, parts.headers, to_bytes(body, usize::MAX).await.unwrap().to_vec())
}

async fn post(app: &Router, body: &str) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    send(app, Method::POST, "/api/filter", body).await
}

#[tokio::test]
async fn unavailable_before_load() {
    let state = AppState::new(0.1);
    let app = router(state.clone());
    for (m, uri) in [(Method::GET, "/api/meta"), (Method::GET, "/api/mesh"), (Method::POST, "/api/filter")] {
        assert_eq!(send(&app, m, uri, "{}").await.0, StatusCode::SERVICE_UNAVAILABLE, "{uri}");
    }
    assert!(state.load(cap_session()));
    assert_eq!(send(&app, Method::GET, "/api/meta", "").await.0, StatusCode::OK);
}

#[tokio::test]
async fn meta_spectrum_matches_the_csv() {
    let session = cap_session();
    let mut csv = Vec::new();
    write_spectrum_csv(&spectrum(session.decomposition()), &mut csv).unwrap();
    let app = router(AppState::with_session(session, 0.1));
    let (status, _, body) = send(&app, Method::GET, "/api/meta", "").await;
    assert_eq!(status, StatusCode::OK);
    let meta: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(meta["vertexCount"], 642);
    assert_eq!(meta["faceCount"], 1280);
    assert_eq!(meta["domain"], "vertices");
    assert_eq!(meta["channels"], 1);
    let times: Vec<f64> = serde_json::from_value(meta["times"].clone()).unwrap();
    let spec: Vec<f64> = serde_json::from_value(meta["spectrum"].clone()).unwrap();
    assert_eq!(times.len(), spec.len());
    assert_eq!(meta["peaks"].as_array().unwrap().len(), 1);
    let rows: Vec<(f64, f64)> = String::from_utf8(csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (t, s) = l.split_once(',').unwrap();
            (t.parse().unwrap(), s.parse().unwrap())
        })
        .collect();
    assert_eq!(rows, times.into_iter().zip(spec).collect::<Vec<_>>());
}

#[tokio::test]
async fn all_pass_returns_the_original_mesh() {
    let session = normal_session();
    let original = session.original_bytes().to_vec();
    let app = router(AppState::with_session(session, 0.1));
    let (status, headers, mesh) = send(&app, Method::GET, "/api/mesh", "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(mesh, original);
    assert_eq!(headers["content-length"].to_str().unwrap(), mesh.len().to_string());
    assert_eq!(headers[DIGEST_HEADER].to_str().unwrap(), to_hex(&sha256(&mesh)));

    let (status, headers, body) = post(&app, r#"{"bands":[]}"#).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, mesh);
    assert_eq!(headers[IDENTITY_HEADER], "true");
    assert_eq!(headers[DIGEST_HEADER], to_hex(&sha256(&mesh)).as_str());
}

#[tokio::test]
async fn filtered_normals_return_a_new_mesh() {
    let session = normal_session();
    let (v0, f0) = decode_tvsm(session.original_bytes()).unwrap();
    let app = router(AppState::with_session(session, 0.1));
    let body = r#"{"bands":[{"a":0.0,"b":0.02,"gain":0.0}]}"#;
    let (status, headers, bytes) = post(&app, body).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(headers[IDENTITY_HEADER], "false");
    let (v, f) = decode_tvsm(&bytes).unwrap();
    assert_eq!(f, f0);
    assert_eq!(v.len(), v0.len());
    assert!(v.iter().zip(&v0).any(|(a, b)| a != b));
}

#[tokio::test]
async fn identical_requests_are_byte_identical() {
    let app = router(AppState::with_session(normal_session(), 0.1));
    let body = r#"{"bands":[{"a":0.0,"b":0.05,"gain":0.2}]}"#;
    let first = post(&app, body).await;
    let other = post(&app, r#"{"bands":[{"a":0.05,"b":1.0,"gain":1.5}]}"#).await;
    let second = post(&app, body).await;
    assert_eq!(first.0, StatusCode::OK);
    assert_eq!(first.2, second.2);
    assert_eq!(first.1[DIGEST_HEADER], second.1[DIGEST_HEADER]);
    assert_ne!(first.2, other.2);

    let (a, b) = tokio::join!(post(&app, body), post(&app, body));
    assert_eq!(a.2, first.2);
    assert_eq!(b.2, first.2);
}

#[tokio::test]
async fn zero_low_band_flattens_the_cap() {
    let session = cap_session();
    let dec = session.decomposition();
    let peak = dec.times[dec.peaks(0.1)[0]];
    let app = router(AppState::with_session(session, 0.1));
    let body = format!(r#"{{"bands":[{{"a":0.0,"b":{},"gain":0.0}}]}}"#, 2.0 * peak);
    let (status, _, bytes) = post(&app, &body).await;
    assert_eq!(status, StatusCode::OK);
    let s = decode_tvsv(&bytes).unwrap();
    let mean = s.values().iter().sum::<f64>() / s.len() as f64;
    let spread = s.values().iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    assert!(spread < 0.1, "spread {spread}");
}

#[tokio::test]
async fn bad_requests() {
    let app = router(AppState::with_session(cap_session(), 0.1));
    let n = {
        let (_, _, body) = send(&app, Method::GET, "/api/meta", "").await;
        let meta: serde_json::Value = serde_json::from_slice(&body).unwrap();
        meta["times"].as_array().unwrap().len()
    };
    for body in [
        "not json",
        r#"{"bands":[{"a":0.0}]}"#,
        r#"{"bands":[{"a":0.0,"b":0.5,"gain":0},{"a":0.4,"b":1.0,"gain":1}]}"#,
        r#"{"bands":[{"a":1.0,"b":0.5,"gain":0}]}"#,
        r#"{"mask":[2.0]}"#,
        r#"{"maskPath":"mask.txt"}"#,
        r#"{"unknown":1}"#,
    ] {
        let (status, _, msg) = post(&app, body).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        let v: serde_json::Value = serde_json::from_slice(&msg).unwrap();
        assert!(v["error"].is_string());
    }
    let extra_gains = format!(r#"{{"gains":{:?}}}"#, vec![1.0; n + 1]);
    for body in [r#"{"mask":[0.5, 0.5]}"#, extra_gains.as_str()] {
        assert_eq!(post(&app, body).await.0, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    }
    assert_eq!(send(&app, Method::GET, "/api/nothing", "").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn mismatched_mesh_is_refused_at_load() {
    let m = icosphere(3);
    let signal = Signal::scalar(Domain::Vertices, cap_vertex_indicator(&m, [0.0, 0.0, 1.0], 0.5)).unwrap();
    let shape = Shape::Mesh(m);
    let cfg = default_config(&shape.operators(Domain::Vertices).unwrap(), 1);
    let dec = decompose_on(&shape, &signal, Scheme::Inverse, &ScheduleConfig::default(), &cfg).unwrap();
    let other = Shape::Mesh(perturb(&icosphere(3), 0.01, 1));
    assert!(matches!(Session::new(other, dec, 1e-4, 1), Err(tvspec_core::Error::DigestMismatch(_))));
}

#[tokio::test]
async fn served_over_tcp() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let server = tokio::spawn(tvspec_cli::service::run(addr, 0.1, || Ok(cap_session())));
    let mut stream = None;
    for _ in 0..200 {
        if let Ok(s) = tokio::net::TcpStream::connect(addr).await {
            stream = Some(s);
            break;
        }
        tokio::time::sleep(std::time::Duration::from_millis(10)).await;
    }
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let mut s = stream.expect("server accepts connections");
    s.write_all(b"GET /api/nothing HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").await.unwrap();
    let mut buf = Vec::new();
    s.read_to_end(&mut buf).await.unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with("HTTP/1.1 404"));
    server.abort();
}
