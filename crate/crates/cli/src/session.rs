//! A loaded decomposition bound to the shape it was computed on.
//!
//! Shared by the `filter` command and the HTTP service. Immutable once
//! built; rendering never mutates it.

use serde::Serialize;
use tvspec_core::digest::{sha256, to_hex};
use tvspec_core::flow::{face_normal_signal, project_to_sphere};
use tvspec_core::geom::Vec3;
use tvspec_core::io::{encode_tvsm, encode_tvsv};
use tvspec_core::{
    apply_filter, reconstruct, spectrum, Domain, Error, FilterSpec, Result, ScreenedPoisson, Signal,
    SpectralDecomposition,
};

use crate::domain::Shape;

/// What a filtered signal turns into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Face normals of a mesh; rendered through vertex recovery.
    Normals,
    /// Vertex or point positions.
    Coordinates,
    /// Anything else; rendered as the signal itself.
    Signal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rendered {
    /// The filter is the identity on a geometric signal.
    Original,
    Positions(Vec<Vec3>),
    Signal(Signal),
}

pub struct Session {
    shape: Shape,
    dec: SpectralDecomposition,
    kind: Kind,
    original: Vec<u8>,
    recovery: Option<ScreenedPoisson>,
    passes: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Meta {
    pub vertex_count: usize,
    pub face_count: usize,
    pub domain: String,
    pub channels: usize,
    pub kind: Kind,
    pub scheme: String,
    pub alpha_max: f64,
    pub times: Vec<f64>,
    pub spectrum: Vec<f64>,
    pub masses: Vec<f64>,
    pub peaks: Vec<usize>,
    pub mesh_digest: String,
    pub source_digest: String,
}

impl Session {
    /// Binds `dec` to `shape`, checking the stored digest and element
    /// count. Normal fields get a factorised recovery system.
    pub fn new(shape: Shape, dec: SpectralDecomposition, epsilon: f64, passes: usize) -> Result<Self> {
        let digest = shape.digest();
        if digest != dec.mesh_digest {
            return Err(Error::DigestMismatch(format!(
                "decomposition was computed on {} but the input is {}",
                to_hex(&dec.mesh_digest),
                to_hex(&digest)
            )));
        }
        if shape.count(dec.domain()) != Some(dec.element_count()) {
            return Err(Error::DigestMismatch(format!(
                "decomposition has {} {} elements that the input lacks",
                dec.element_count(),
                dec.domain()
            )));
        }
        let kind = match (&shape, dec.domain(), dec.channels()) {
            (Shape::Mesh(_), Domain::Faces, 3) => Kind::Normals,
            (_, Domain::Vertices | Domain::Points, 3) => Kind::Coordinates,
            _ => Kind::Signal,
        };
        let recovery = match (kind, shape.mesh()) {
            (Kind::Normals, Some(m)) => Some(ScreenedPoisson::new(m, epsilon)?),
            _ => None,
        };
        let original = match &shape {
            Shape::Mesh(m) => encode_tvsm(m.vertices(), m.faces()),
            Shape::Cloud(g) => encode_tvsm(g.points(), &[]),
        };
        Ok(Self { shape, dec, kind, original, recovery, passes: passes.max(1) })
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.dec
    }

    /// Container bytes of the original shape.
    pub fn original_bytes(&self) -> &[u8] {
        &self.original
    }

    pub fn meta(&self, peak_threshold: f64) -> Meta {
        let (vertex_count, face_count) = match &self.shape {
            Shape::Mesh(m) => (m.vertex_count(), m.face_count()),
            Shape::Cloud(g) => (g.len(), 0),
        };
        Meta {
            vertex_count,
            face_count,
            domain: self.dec.domain().to_string(),
            channels: self.dec.channels(),
            kind: self.kind,
            scheme: self.dec.scheme.to_string(),
            alpha_max: self.dec.alpha_max,
            times: self.dec.times.clone(),
            spectrum: spectrum(&self.dec).into_iter().map(|(_, s)| s).collect(),
            masses: self.dec.bin_masses(),
            peaks: self.dec.peaks(peak_threshold),
            mesh_digest: to_hex(&self.dec.mesh_digest),
            source_digest: to_hex(&self.dec.source_digest),
        }
    }

    pub fn render(&self, spec: &FilterSpec) -> Result<Rendered> {
        spec.validate()?;
        let gains = spec.bin_gains(&self.dec)?;
        if let Some(mask) = &spec.mask {
            if mask.len() != self.dec.element_count() {
                return Err(Error::FilterShapeMismatch(format!(
                    "mask has {} values for {} elements",
                    mask.len(),
                    self.dec.element_count()
                )));
            }
        }
        let identity = gains.iter().all(|&g| g == 1.0);
        if identity && self.kind != Kind::Signal {
            return Ok(Rendered::Original);
        }
        let filtered = apply_filter(&self.dec, spec)?;
        match (self.kind, &self.shape) {
            (Kind::Normals, Shape::Mesh(m)) => {
                let mut values = filtered.into_values();
                let flagged = project_to_sphere(&mut values, face_normal_signal(m).values(), 3);
                if !flagged.is_empty() {
                    log::warn!("{} filtered normals vanished; kept the original ones", flagged.len());
                }
                let normals = Signal::new(Domain::Faces, 3, values)?;
                let sp = self.recovery.as_ref().expect("normal sessions carry a recovery system");
                Ok(Rendered::Positions(sp.recover_iterated(&normals, self.passes)?))
            }
            (Kind::Coordinates, _) => Ok(Rendered::Positions(filtered.rows3())),
            _ => Ok(Rendered::Signal(filtered)),
        }
    }

    /// Binary payload of a rendering: `TVSM` for geometry, `TVSV` otherwise.
    pub fn encode(&self, rendered: &Rendered) -> Vec<u8> {
        match rendered {
            Rendered::Original => self.original.clone(),
            Rendered::Positions(p) => match &self.shape {
                Shape::Mesh(m) => encode_tvsm(p, m.faces()),
                Shape::Cloud(_) => encode_tvsm(p, &[]),
            },
            Rendered::Signal(s) => encode_tvsv(s),
        }
    }

    /// All-pass synthesis of the stored decomposition.
    pub fn all_pass(&self) -> Result<Signal> {
        reconstruct(&self.dec, &vec![1.0; self.dec.len()])
    }
}

pub fn payload_digest(bytes: &[u8]) -> String {
    to_hex(&sha256(bytes))
}
