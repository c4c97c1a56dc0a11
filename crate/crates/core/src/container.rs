//! Binary `TVSD` decomposition container.
//!
//! Layout (little-endian): magic, `u32` version, `u32` scheme, `u64` N,
//! `u32` domain, `u64` channels, `u64` element count, `f64` alpha max, then
//! the `f64` arrays times, steps, weights, widths (N each), element weights,
//! N component blocks, mean, residual, followed by `u64` residual bin and the
//! mesh and source SHA-256 digests.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{put_f64s, ByteReader};
use crate::signal::{Domain, Signal};
use crate::spectral::{Scheme, SpectralDecomposition};

pub const TVSD_MAGIC: &[u8; 4] = b"TVSD";
const VERSION: u32 = 1;

pub fn encode_tvsd(dec: &SpectralDecomposition) -> Vec<u8> {
    let n = dec.len();
    let c = dec.channels();
    let m = dec.element_count();
    let mut out = Vec::with_capacity(128 + 8 * (4 * n + m + (n + 1) * m * c + c));
    out.extend_from_slice(TVSD_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&dec.scheme.code().to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&dec.domain().code().to_le_bytes());
    out.extend_from_slice(&(c as u64).to_le_bytes());
    out.extend_from_slice(&(m as u64).to_le_bytes());
    out.extend_from_slice(&dec.alpha_max.to_le_bytes());
    put_f64s(&mut out, &dec.times);
    put_f64s(&mut out, &dec.steps);
    put_f64s(&mut out, &dec.weights);
    put_f64s(&mut out, &dec.widths);
    put_f64s(&mut out, &dec.element_weights);
    for phi in &dec.components {
        put_f64s(&mut out, phi.values());
    }
    put_f64s(&mut out, &dec.mean);
    put_f64s(&mut out, dec.residual.values());
    out.extend_from_slice(&(dec.residual_bin as u64).to_le_bytes());
    out.extend_from_slice(&dec.mesh_digest);
    out.extend_from_slice(&dec.source_digest);
    out
}

pub fn decode_tvsd(bytes: &[u8]) -> Result<SpectralDecomposition> {
    let mut r = ByteReader::new(bytes, "TVSD");
    r.magic(TVSD_MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Parse(format!("TVSD: unsupported version {version}")));
    }
    let scheme = Scheme::from_code(r.u32()?).ok_or_else(|| Error::Parse("TVSD: bad scheme".into()))?;
    let n = r.len()?;
    let domain = Domain::from_code(r.u32()?).ok_or_else(|| Error::Parse("TVSD: bad domain".into()))?;
    let c = r.len()?;
    let m = r.len()?;
    if c == 0 || n == 0 {
        return Err(Error::Parse("TVSD: empty decomposition".into()));
    }
    let block = m.checked_mul(c).ok_or_else(|| Error::Parse("TVSD: overflow".into()))?;
    let alpha_max = r.f64()?;
    let times = r.f64s(n)?;
    let steps = r.f64s(n)?;
    let weights = r.f64s(n)?;
    let widths = r.f64s(n)?;
    let element_weights = r.f64s(m)?;
    let components = (0..n)
        .map(|_| Signal::new(domain, c, r.f64s(block)?))
        .collect::<Result<Vec<_>>>()?;
    let mean = r.f64s(c)?;
    let residual = Signal::new(domain, c, r.f64s(block)?)?;
    let residual_bin = r.u64()? as usize;
    let mesh_digest = r.take(32)?.try_into().unwrap();
    let source_digest = r.take(32)?.try_into().unwrap();
    r.finish()?;
    if residual_bin >= n {
        return Err(Error::Parse("TVSD: residual bin out of range".into()));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parse("TVSD: times are not strictly increasing".into()));
    }
    Ok(SpectralDecomposition {
        scheme,
        alpha_max,
        times,
        steps,
        weights,
        widths,
        element_weights,
        components,
        mean,
        residual,
        residual_bin,
        mesh_digest,
        source_digest,
        iterations: Vec::new(),
        not_converged: 0,
    })
}

pub fn save_tvsd(dec: &SpectralDecomposition, path: &Path) -> Result<()> {
    std::fs::write(path, encode_tvsd(dec))?;
    Ok(())
}

pub fn load_tvsd(path: &Path) -> Result<SpectralDecomposition> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    decode_tvsd(&bytes)
}
