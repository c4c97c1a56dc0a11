//! Command line front end and HTTP filtering service for `tvspec-core`.

pub mod args;
pub mod commands;
pub mod domain;
pub mod service;
pub mod session;

pub use args::Cli;
pub use commands::{run, Status};

/// Process exit code for a failed command: 3 for I/O failures, 2 for
/// validation errors and missing files.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        let io = match cause.downcast_ref::<tvspec_core::Error>() {
            Some(tvspec_core::Error::Io(e)) => Some(e),
            _ => cause.downcast_ref::<std::io::Error>(),
        };
        if let Some(e) = io {
            return if e.kind() == std::io::ErrorKind::NotFound { 2 } else { 3 };
        }
    }
    2
}

/// Applies `TVSPEC_THREADS` to the global thread pool.
pub fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("TVSPEC_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| anyhow::anyhow!("TVSPEC_THREADS must be a positive integer, got '{v}'"))?;
    if n == 0 {
        anyhow::bail!("TVSPEC_THREADS must be a positive integer");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}
