//! SHA-256 content digests for meshes, signals and payloads.

use sha2::{Digest as _, Sha256};

use crate::io::encode_tvsm;
use crate::mesh::TriangleMesh;
use crate::signal::Signal;

pub type Digest = [u8; 32];

pub fn sha256(bytes: &[u8]) -> Digest {
    Sha256::digest(bytes).into()
}

/// Digest of the binary mesh container of `mesh`.
pub fn mesh_digest(mesh: &TriangleMesh) -> Digest {
    sha256(&encode_tvsm(mesh.vertices(), mesh.faces()))
}

/// Digest of a point set, encoded as a container without faces.
pub fn points_digest(points: &[[f64; 3]]) -> Digest {
    sha256(&encode_tvsm(points, &[]))
}

/// Binds a signal to the domain it was sampled on.
pub fn source_digest(domain_digest: &Digest, signal: &Signal) -> Digest {
    let mut h = Sha256::new();
    h.update(domain_digest);
    h.update(signal.domain().code().to_le_bytes());
    h.update((signal.channels() as u64).to_le_bytes());
    for v in signal.values() {
        h.update(v.to_le_bytes());
    }
    h.finalize().into()
}

pub fn to_hex(d: &Digest) -> String {
    d.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn from_hex(s: &str) -> Option<Digest> {
    let s = s.trim();
    if s.len() != 64 || !s.is_ascii() {
        return None;
    }
    let mut out = [0u8; 32];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
    }
    Some(out)
}
