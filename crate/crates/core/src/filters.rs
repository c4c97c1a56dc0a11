//! Spectral filtering and detail transfer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;
use crate::spectral::{reconstruct, SpectralDecomposition};

/// Gain applied to every bin whose time lies in `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub a: f64,
    pub b: f64,
    pub gain: f64,
}

/// Piecewise-constant gain over time bins plus an optional spatial mask.
///
/// Bins outside every band keep gain 1 (or the matching entry of `gains`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FilterSpec {
    #[serde(default)]
    pub bands: Vec<Band>,
    /// Explicit per-bin base gains, one per component.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<f64>>,
    /// Inline blend mask, one value in `[0, 1]` per element.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<f64>>,
    /// Mask file to load; resolved by the caller into `mask`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_path: Option<String>,
}

impl FilterSpec {
    pub fn all_pass() -> Self {
        Self::default()
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(src).map_err(|e| Error::InvalidFilter(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Checks bands and mask values without reference to a decomposition.
    pub fn validate(&self) -> Result<()> {
        for band in &self.bands {
            if !(band.a.is_finite() && band.b.is_finite() && band.gain.is_finite()) {
                return Err(Error::InvalidFilter("band bounds and gains must be finite".into()));
            }
            if band.a > band.b {
                return Err(Error::InvalidFilter(format!("band [{}, {}] is reversed", band.a, band.b)));
            }
        }
        let mut sorted = self.bands.clone();
        sorted.sort_by(|x, y| x.a.total_cmp(&y.a));
        if let Some(w) = sorted.windows(2).find(|w| w[1].a <= w[0].b) {
            return Err(Error::InvalidFilter(format!(
                "bands [{}, {}] and [{}, {}] overlap",
                w[0].a, w[0].b, w[1].a, w[1].b
            )));
        }
        if let Some(g) = &self.gains {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidFilter("gains must be finite".into()));
            }
        }
        if let Some(m) = &self.mask {
            if m.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidFilter("mask values must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    /// Gain of every bin of `dec`.
    pub fn bin_gains(&self, dec: &SpectralDecomposition) -> Result<Vec<f64>> {
        let mut gains = match &self.gains {
            Some(g) if g.len() != dec.len() => {
                return Err(Error::FilterShapeMismatch(format!("{} gains for {} bins", g.len(), dec.len())))
            }
            Some(g) => g.clone(),
            None => vec![1.0; dec.len()],
        };
        for band in &self.bands {
            for (g, &t) in gains.iter_mut().zip(&dec.times) {
                if band.a <= t && t <= band.b {
                    *g *= band.gain;
                }
            }
        }
        Ok(gains)
    }
}

/// Filtered synthesis, blended with the unfiltered signal through the mask:
/// `rho * filtered + (1 - rho) * u`.
pub fn apply_filter(dec: &SpectralDecomposition, spec: &FilterSpec) -> Result<Signal> {
    spec.validate()?;
    let gains = spec.bin_gains(dec)?;
    let filtered = reconstruct(dec, &gains)?;
    let Some(mask) = &spec.mask else {
        return Ok(filtered);
    };
    if mask.len() != dec.element_count() {
        return Err(Error::FilterShapeMismatch(format!(
            "mask has {} values for {} elements",
            mask.len(),
            dec.element_count()
        )));
    }
    let original = reconstruct(dec, &vec![1.0; dec.len()])?;
    let c = dec.channels();
    let mut out = filtered.into_values();
    for ((row, orig), &rho) in out.chunks_mut(c).zip(original.values().chunks(c)).zip(mask) {
        if rho == 0.0 {
            row.copy_from_slice(orig);
        } else if rho != 1.0 {
            for (x, o) in row.iter_mut().zip(orig) {
                *x = rho * *x + (1.0 - rho) * o;
            }
        }
    }
    Signal::new(dec.domain(), c, out)
}

/// For each target element, the source element it draws detail from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrespondenceMap {
    source_of: Vec<usize>,
}

impl CorrespondenceMap {
    pub fn new(source_of: Vec<usize>, source_len: usize) -> Result<Self> {
        if let Some(&index) = source_of.iter().find(|&&i| i >= source_len) {
            return Err(Error::MapOutOfRange { index, len: source_len });
        }
        Ok(Self { source_of })
    }

    pub fn identity(n: usize) -> Self {
        Self { source_of: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.source_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_of.is_empty()
    }

    pub fn source_of(&self) -> &[usize] {
        &self.source_of
    }
}

/// Adds the source components in the time band `[a, b]` to the target
/// signal, pulled back through `map`.
///
/// A bin is selected when its time lies in `[a, b]`, as for filter bands.
/// The source mean is never transferred.
pub fn detail_transfer(
    source: &SpectralDecomposition,
    target: &SpectralDecomposition,
    band: (f64, f64),
    map: &CorrespondenceMap,
) -> Result<Signal> {
    if source.channels() != target.channels() {
        return Err(Error::ChannelMismatch {
            source_channels: source.channels(),
            target_channels: target.channels(),
        });
    }
    if map.len() != target.element_count() {
        return Err(Error::FilterShapeMismatch(format!(
            "map has {} entries for {} target elements",
            map.len(),
            target.element_count()
        )));
    }
    if let Some(&index) = map.source_of.iter().find(|&&i| i >= source.element_count()) {
        return Err(Error::MapOutOfRange { index, len: source.element_count() });
    }
    let base = reconstruct(target, &vec![1.0; target.len()])?;
    let (a, b) = band;
    let selected: Vec<usize> = (0..source.len()).filter(|&k| a <= source.times[k] && source.times[k] <= b).collect();
    if selected.is_empty() {
        return Ok(base);
    }
    let c = source.channels();
    let mut detail = vec![0.0; source.residual.values().len()];
    for &k in &selected {
        let w = source.weights[k];
        for (d, v) in detail.iter_mut().zip(source.components[k].values()) {
            *d += w * v;
        }
    }
    if selected.contains(&source.residual_bin) {
        for (d, v) in detail.iter_mut().zip(source.residual.values()) {
            *d += v;
        }
    }
    let mut out = base.into_values();
    for (row, &s) in out.chunks_mut(c).zip(&map.source_of) {
        for (x, d) in row.iter_mut().zip(&detail[s * c..(s + 1) * c]) {
            *x += d;
        }
    }
    Signal::new(target.domain(), c, out)
}
