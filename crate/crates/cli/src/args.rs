//! Command line definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tvspec_core::{Scheme, StylizeMode, TvKind};

#[derive(Debug, Parser)]
#[command(name = "tvspec", version, about = "Spectral total-variation processing of meshes and point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose a signal into spectral TV components.
    Decompose(DecomposeArgs),
    /// Print or export the spectrum of a stored decomposition.
    Spectrum(SpectrumArgs),
    /// Filter a decomposition and resynthesise the signal or geometry.
    Filter(FilterArgs),
    /// All-pass resynthesis of a stored decomposition.
    Reconstruct(FilterArgs),
    /// Add a band of source components to a target decomposition.
    Transfer(TransferArgs),
    /// Normal TV flow with checkpoints.
    Flow(FlowArgs),
    /// Cubic stylisation by anisotropic TV.
    Stylize(StylizeArgs),
    /// Low-pass filtering of the face normals followed by vertex recovery.
    Denoise(DenoiseArgs),
    /// Serve a stored decomposition over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Forward,
    Inverse,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Forward => Scheme::Forward,
            SchemeArg::Inverse => Scheme::Inverse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TvArg {
    Iso,
    Aniso,
}

impl From<TvArg> for TvKind {
    fn from(t: TvArg) -> Self {
        match t {
            TvArg::Iso => TvKind::Isotropic,
            TvArg::Aniso => TvKind::Anisotropic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Normals,
    Coordinates,
}

impl From<ModeArg> for StylizeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Normals => StylizeMode::Normals,
            ModeArg::Coordinates => StylizeMode::Coordinates,
        }
    }
}

/// Mesh or point cloud input.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Mesh (OBJ, OFF, PLY, TVSM) or point table.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Treat the input as a point cloud even if it has faces.
    #[arg(long)]
    pub points: bool,
    /// Neighbourhood size of the point cloud graph.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Seed for normal orientation and power iterations.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// PDHG overrides.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub gap_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
}

/// Time schedule.
#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    #[arg(long, value_enum, default_value = "inverse")]
    pub scheme: SchemeArg,
    /// Geometric decay C of the diffusion times.
    #[arg(long, default_value_t = 0.7)]
    pub decay: f64,
    /// Number of components (automatic when omitted).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long, value_enum, default_value = "iso")]
    pub tv: TvArg,
}

#[derive(Debug, Clone, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// `coordinates`, `normals` (alias `faceNormals`) or a signal file (one row per element).
    #[arg(long, default_value = "normals")]
    pub signal: String,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Decomposition file to write (default: input with `.tvsd`).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Spectrum CSV to write.
    #[arg(long)]
    pub emit_spectrum: Option<PathBuf>,
    /// Peaks are local maxima above this fraction of the largest bin mass.
    #[arg(long, default_value_t = 0.1)]
    pub peak_threshold: f64,
    /// Serve the result once written.
    #[arg(long)]
    pub serve: bool,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Screening weight used when serving normal decompositions.
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    /// Decomposition file.
    #[arg(long, short)]
    pub decomposition: PathBuf,
    /// CSV destination (stdout when omitted).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub peak_threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FilterArgs {
    #[arg(long, short)]
    pub decomposition: PathBuf,
    /// Mesh or point cloud the decomposition was computed on.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub points: bool,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Filter specification (JSON).
    #[arg(long, short)]
    pub filter: Option<PathBuf>,
    /// Blend mask, one value in [0, 1] per element.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    /// Recovery passes for normal fields.
    #[arg(long, default_value_t = 1)]
    pub passes: usize,
    /// Output mesh (for geometric signals) or signal table.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TransferArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    /// Time band `a,b` of source components to add.
    #[arg(long, value_parser = parse_band)]
    pub band: (f64, f64),
    /// Target-to-source element map (identity when omitted).
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Target mesh; needed to write geometry for normal fields.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Time step (default alpha max / 20 of the normal field).
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// Steps between checkpoints.
    #[arg(long, default_value_t = 4)]
    pub checkpoint_every: usize,
    #[arg(long, value_enum, default_value = "iso")]
    pub tv: TvArg,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    /// Directory for checkpoint meshes and the energy trace.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct StylizeArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "normals")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "aniso")]
    pub tv: TvArg,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 10)]
    pub passes: usize,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DenoiseArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Components below this fraction of alpha max are removed.
    #[arg(long, default_value_t = 0.03)]
    pub cutoff: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1)]
    pub passes: usize,
    /// Clean mesh to report Hausdorff distances against.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, short)]
    pub decomposition: PathBuf,
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub points: bool,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub peak_threshold: f64,
}

fn parse_band(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `a,b`")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("band start: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("band end: {e}"))?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn band_parsing() {
        assert_eq!(parse_band("0.1, 2").unwrap(), (0.1, 2.0));
        assert!(parse_band("0.1").is_err());
        assert!(parse_band("x,1").is_err());
    }
}
