//! One function per subcommand.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use tvspec_core::container::{load_tvsd, save_tvsd};
use tvspec_core::digest::{mesh_digest, source_digest, to_hex};
use tvspec_core::flow::{face_normal_signal, project_to_sphere};
use tvspec_core::io::{encode_tvsv, load_mesh, read_index_map, read_signal, save_mesh, write_signal, write_spectrum_csv};
use tvspec_core::metrics::{axis_concentration, count_normal_clusters, hausdorff};
use tvspec_core::{
    decompose, default_config, detail_transfer, estimate_alpha_max, normal_tv_step, reconstruct, spectrum,
    stylize_cubic, tv_normal_energy, CorrespondenceMap, DiscreteOperators, Domain, FilterSpec, FlowState,
    ScheduleConfig, ScreenedPoisson, Signal, SolverConfig, SpectralDecomposition, StylizeParams, TriangleMesh,
};

use crate::args::*;
use crate::domain::{load_shape, load_signal, Shape};
use crate::service;
use crate::session::{payload_digest, Kind, Rendered, Session};

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Clean,
    /// Some solves hit their iteration cap.
    NotConverged,
}

fn status(not_converged: usize) -> Status {
    if not_converged > 0 {
        log::warn!("{not_converged} solves stopped at the iteration cap");
        Status::NotConverged
    } else {
        Status::Clean
    }
}

pub fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Decompose(a) => cmd_decompose(&a),
        Command::Spectrum(a) => cmd_spectrum(&a),
        Command::Filter(a) => cmd_filter(&a, false),
        Command::Reconstruct(a) => cmd_filter(&a, true),
        Command::Transfer(a) => cmd_transfer(&a),
        Command::Flow(a) => cmd_flow(&a),
        Command::Stylize(a) => cmd_stylize(&a),
        Command::Denoise(a) => cmd_denoise(&a),
        Command::Serve(a) => cmd_serve(&a),
    }
}

pub fn solver_config(ops: &DiscreteOperators, channels: usize, args: &SolverArgs) -> Result<SolverConfig> {
    let mut cfg = default_config(ops, channels);
    if let Some(t) = args.gap_tol {
        if !(t > 0.0) {
            bail!("--gap-tol must be positive");
        }
        cfg.gap_tol = t;
    }
    if let Some(n) = args.max_iter {
        cfg.max_iter = n;
    }
    if let Some(t) = args.theta {
        cfg.theta = t;
    }
    cfg.validate(ops)?;
    Ok(cfg)
}

fn schedule(args: &ScheduleArgs) -> ScheduleConfig {
    ScheduleConfig {
        alpha_max: args.alpha_max,
        decay: args.decay,
        steps: args.steps,
        tv: args.tv.into(),
        project_rows: false,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_spectrum(dec: &SpectralDecomposition, path: &Path) -> Result<()> {
    write_spectrum_csv(&spectrum(dec), create(path)?).with_context(|| format!("writing {}", path.display()))
}

fn peak_report(dec: &SpectralDecomposition, threshold: f64) -> String {
    let peaks: Vec<String> = dec.peaks(threshold).iter().map(|&k| format!("{k} (t = {:.4e})", dec.times[k])).collect();
    if peaks.is_empty() {
        "none".into()
    } else {
        peaks.join(", ")
    }
}

/// Decomposes `signal` on `shape` and stamps the shape and source digests.
pub fn decompose_on(
    shape: &Shape,
    signal: &Signal,
    scheme: tvspec_core::Scheme,
    sched: &ScheduleConfig,
    cfg: &SolverConfig,
) -> Result<SpectralDecomposition> {
    let ops = shape.operators(signal.domain())?;
    let mut dec = decompose(scheme, signal, sched, &ops, cfg)?;
    dec.mesh_digest = shape.digest();
    dec.source_digest = source_digest(&dec.mesh_digest, signal);
    Ok(dec)
}

fn cmd_decompose(args: &DecomposeArgs) -> Result<Status> {
    let start = Instant::now();
    let shape = load_shape(&args.input.input, args.input.points, args.input.k)?;
    let signal = load_signal(&shape, &args.signal, args.input.seed)?;
    let cfg = solver_config(&shape.operators(signal.domain())?, signal.channels(), &args.solver)?;
    let dec = decompose_on(&shape, &signal, args.schedule.scheme.into(), &schedule(&args.schedule), &cfg)?;

    let out = args.output.clone().unwrap_or_else(|| args.input.input.with_extension("tvsd"));
    save_tvsd(&dec, &out).with_context(|| format!("writing {}", out.display()))?;
    if let Some(csv) = &args.emit_spectrum {
        write_spectrum(&dec, csv)?;
    }
    println!("scheme      {}", dec.scheme);
    println!("signal      {} x {} on {}", signal.len(), signal.channels(), signal.domain());
    println!("components  {}", dec.len());
    println!("alpha max   {:.6e}", dec.alpha_max);
    println!("iterations  {:?}", dec.iterations);
    println!("peaks       {}", peak_report(&dec, args.peak_threshold));
    println!("wall time   {:.3} s", start.elapsed().as_secs_f64());
    println!("written     {}", out.display());
    let st = status(dec.not_converged);

    if args.serve {
        let (eps, port, thr) = (args.epsilon, args.port, args.peak_threshold);
        serve_blocking(port, thr, move || Ok(Session::new(shape, dec, eps, 1)?))?;
    }
    Ok(st)
}

fn cmd_spectrum(args: &SpectrumArgs) -> Result<Status> {
    let dec = load_tvsd(&args.decomposition).with_context(|| format!("reading {}", args.decomposition.display()))?;
    match &args.output {
        Some(p) => write_spectrum(&dec, p)?,
        None => write_spectrum_csv(&spectrum(&dec), io::stdout().lock())?,
    }
    eprintln!("peaks: {}", peak_report(&dec, args.peak_threshold));
    Ok(Status::Clean)
}

fn load_filter(args: &FilterArgs, dec: &SpectralDecomposition, all_pass: bool) -> Result<FilterSpec> {
    let mut spec = match &args.filter {
        Some(p) => {
            let src = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            FilterSpec::from_json(&src).with_context(|| format!("in {}", p.display()))?
        }
        None if all_pass => FilterSpec::all_pass(),
        None => bail!("--filter is required"),
    };
    let mask_path: Option<PathBuf> = args.mask.clone().or_else(|| {
        let rel = spec.mask_path.as_ref()?;
        let base = args.filter.as_ref().and_then(|f| f.parent()).unwrap_or(Path::new("."));
        Some(base.join(rel))
    });
    if let Some(p) = mask_path {
        let mask = read_signal(&p, dec.domain()).with_context(|| format!("reading mask {}", p.display()))?;
        if mask.channels() != 1 || mask.len() != dec.element_count() {
            bail!("mask {} must have one value per element ({} rows)", p.display(), dec.element_count());
        }
        spec.mask = Some(mask.into_values());
        spec.mask_path = None;
        spec.validate()?;
    }
    Ok(spec)
}

fn write_signal_file(signal: &Signal, path: &Path) -> Result<()> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tvsv")) {
        fs::write(path, encode_tvsv(signal))?;
    } else {
        write_signal(signal, create(path)?)?;
    }
    Ok(())
}

fn save_positions(shape: &Shape, positions: &[[f64; 3]], path: &Path) -> Result<String> {
    match shape {
        Shape::Mesh(m) => {
            let out = m.with_vertices(positions.to_vec())?;
            save_mesh(&out, path)?;
            Ok(to_hex(&mesh_digest(&out)))
        }
        Shape::Cloud(_) => {
            let s = Signal::from_rows(Domain::Points, positions)?;
            write_signal_file(&s, path)?;
            Ok(payload_digest(&tvspec_core::io::encode_tvsm(positions, &[])))
        }
    }
}

fn cmd_filter(args: &FilterArgs, all_pass: bool) -> Result<Status> {
    let dec = load_tvsd(&args.decomposition).with_context(|| format!("reading {}", args.decomposition.display()))?;
    let spec = load_filter(args, &dec, all_pass)?;
    let Some(input) = &args.input else {
        let out = tvspec_core::apply_filter(&dec, &spec)?;
        write_signal_file(&out, &args.output)?;
        println!("written {}", args.output.display());
        return Ok(Status::Clean);
    };
    let shape = load_shape(input, args.points, args.k)?;
    let session = Session::new(shape, dec, args.epsilon, args.passes)?;
    let rendered = session.render(&spec)?;
    let digest = match (&rendered, session.shape()) {
        (Rendered::Original, Shape::Mesh(m)) => {
            save_mesh(m, &args.output)?;
            to_hex(&mesh_digest(m))
        }
        (Rendered::Original, shape @ Shape::Cloud(g)) => save_positions(shape, g.points(), &args.output)?,
        (Rendered::Positions(p), shape) => save_positions(shape, p, &args.output)?,
        (Rendered::Signal(s), _) => {
            write_signal_file(s, &args.output)?;
            payload_digest(&encode_tvsv(s))
        }
    };
    if session.kind() != Kind::Signal {
        println!("input digest   {}", to_hex(&session.decomposition().mesh_digest));
    }
    println!("output digest  {digest}");
    println!("identity       {}", rendered == Rendered::Original);
    println!("written        {}", args.output.display());
    Ok(Status::Clean)
}

fn cmd_transfer(args: &TransferArgs) -> Result<Status> {
    let src = load_tvsd(&args.source).with_context(|| format!("reading {}", args.source.display()))?;
    let tgt = load_tvsd(&args.target).with_context(|| format!("reading {}", args.target.display()))?;
    let map = match &args.map {
        Some(p) => CorrespondenceMap::new(read_index_map(p)?, src.element_count())?,
        None => {
            if src.element_count() != tgt.element_count() {
                bail!("--map is required when source and target sizes differ");
            }
            CorrespondenceMap::identity(tgt.element_count())
        }
    };
    let out = detail_transfer(&src, &tgt, args.band, &map)?;
    let Some(input) = &args.input else {
        write_signal_file(&out, &args.output)?;
        println!("written {}", args.output.display());
        return Ok(Status::Clean);
    };
    let shape = load_shape(input, false, 10)?;
    let session = Session::new(shape, tgt, args.epsilon, 1)?;
    match (session.kind(), session.shape()) {
        (Kind::Normals, Shape::Mesh(m)) => {
            let mut values = out.into_values();
            project_to_sphere(&mut values, face_normal_signal(m).values(), 3);
            let normals = Signal::new(Domain::Faces, 3, values)?;
            let sp = ScreenedPoisson::new(m, args.epsilon)?;
            save_positions(session.shape(), &sp.recover(&normals)?, &args.output)?;
        }
        (Kind::Coordinates, shape) => {
            save_positions(shape, &out.rows3(), &args.output)?;
        }
        _ => write_signal_file(&out, &args.output)?,
    }
    println!("written {}", args.output.display());
    Ok(Status::Clean)
}

fn cmd_flow(args: &FlowArgs) -> Result<Status> {
    let mesh = load_mesh(&args.input).with_context(|| format!("loading mesh {}", args.input.display()))?;
    let ops = DiscreteOperators::face(&mesh);
    let cfg = solver_config(&ops, 3, &args.solver)?;
    let tv = args.tv.into();
    let mut state = FlowState::new(mesh.clone());
    let dt = match args.dt {
        Some(dt) => dt,
        None => estimate_alpha_max(&state.normals, &ops, tv, &cfg)? / 20.0,
    };
    if args.steps == 0 || args.checkpoint_every == 0 {
        bail!("--steps and --checkpoint-every must be positive");
    }
    fs::create_dir_all(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
    let sp = ScreenedPoisson::new(&mesh, args.epsilon)?;
    let mut trace = create(&args.output.join("trace.csv"))?;
    writeln!(trace, "t,energy,volume,clusters")?;
    let mut checkpoint = |state: &FlowState, k: usize| -> Result<()> {
        let out = mesh.with_vertices(sp.recover(&state.normals)?)?;
        save_mesh(&out, &args.output.join(format!("flow_{k:03}.obj")))?;
        let energy = tv_normal_energy(&mesh, &state.normals);
        let clusters = count_normal_clusters(&state.normals, 10.0);
        writeln!(trace, "{:?},{:?},{:?},{clusters}", state.time, energy, out.volume())?;
        println!("step {k:4}  t = {:.4e}  energy = {energy:.6}  clusters = {clusters}", state.time);
        Ok(())
    };
    checkpoint(&state, 0)?;
    for k in 1..=args.steps {
        state = normal_tv_step(&state, &ops, dt, tv, &cfg)?;
        if k % args.checkpoint_every == 0 || k == args.steps {
            checkpoint(&state, k)?;
        }
    }
    trace.flush()?;
    Ok(Status::Clean)
}

fn cmd_stylize(args: &StylizeArgs) -> Result<Status> {
    let mesh = load_mesh(&args.input).with_context(|| format!("loading mesh {}", args.input.display()))?;
    let params = StylizeParams {
        mode: args.mode.into(),
        tv: args.tv.into(),
        steps: args.steps,
        dt: args.dt,
        epsilon: args.epsilon,
        recovery_passes: args.passes,
    };
    let out = stylize_cubic(&mesh, &params)?;
    save_mesh(&out, &args.output)?;
    let before = axis_concentration(&mesh, &face_normal_signal(&mesh), 15.0);
    let after = axis_concentration(&out, &face_normal_signal(&out), 15.0);
    println!("axis concentration  {before:.4} -> {after:.4}");
    println!("volume ratio        {:.4}", out.volume() / mesh.volume());
    println!("written             {}", args.output.display());
    Ok(Status::Clean)
}

/// Decomposes the face normals, removes the bins below `cutoff * alpha max`
/// and recovers vertices from the filtered field.
pub fn denoise(
    mesh: &TriangleMesh,
    sched: &ScheduleConfig,
    scheme: tvspec_core::Scheme,
    cfg: &SolverConfig,
    cutoff: f64,
    epsilon: f64,
    passes: usize,
) -> Result<(TriangleMesh, SpectralDecomposition)> {
    let ops = DiscreteOperators::face(mesh);
    let normals = face_normal_signal(mesh);
    let dec = decompose(scheme, &normals, sched, &ops, cfg)?;
    let gains: Vec<f64> = dec.times.iter().map(|&t| if t < cutoff * dec.alpha_max { 0.0 } else { 1.0 }).collect();
    let mut values = reconstruct(&dec, &gains)?.into_values();
    project_to_sphere(&mut values, normals.values(), 3);
    let filtered = Signal::new(Domain::Faces, 3, values)?;
    let sp = ScreenedPoisson::new(mesh, epsilon)?;
    let out = mesh.with_vertices(sp.recover_iterated(&filtered, passes)?)?;
    Ok((out, dec))
}

fn cmd_denoise(args: &DenoiseArgs) -> Result<Status> {
    let mesh = load_mesh(&args.input).with_context(|| format!("loading mesh {}", args.input.display()))?;
    let ops = DiscreteOperators::face(&mesh);
    let cfg = solver_config(&ops, 3, &args.solver)?;
    let (out, dec) = denoise(
        &mesh,
        &schedule(&args.schedule),
        args.schedule.scheme.into(),
        &cfg,
        args.cutoff,
        args.epsilon,
        args.passes,
    )?;
    save_mesh(&out, &args.output)?;
    let e_in = tv_normal_energy(&mesh, &face_normal_signal(&mesh));
    let e_out = tv_normal_energy(&out, &face_normal_signal(&out));
    println!("components        {}", dec.len());
    println!("normal TV energy  {e_in:.4} -> {e_out:.4}");
    if let Some(r) = &args.reference {
        let clean = load_mesh(r).with_context(|| format!("loading mesh {}", r.display()))?;
        println!("Hausdorff         {:.6} -> {:.6}", hausdorff(&mesh, &clean), hausdorff(&out, &clean));
    }
    println!("written           {}", args.output.display());
    Ok(status(dec.not_converged))
}

fn serve_blocking<F>(port: u16, peak_threshold: f64, load: F) -> Result<()>
where
    F: FnOnce() -> Result<Session> + Send + 'static,
{
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(service::run(addr, peak_threshold, load))
}

fn cmd_serve(args: &ServeArgs) -> Result<Status> {
    let args = args.clone();
    serve_blocking(args.port, args.peak_threshold, move || {
        let dec = load_tvsd(&args.decomposition).with_context(|| format!("reading {}", args.decomposition.display()))?;
        let shape = load_shape(&args.input, args.points, args.k)?;
        Ok(Session::new(shape, dec, args.epsilon, 1)?)
    })?;
    Ok(Status::Clean)
}
