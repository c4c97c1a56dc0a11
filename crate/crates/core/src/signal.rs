use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the samples of a [`Signal`] live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Vertices,
    Faces,
    Points,
}

impl Domain {
    pub fn code(self) -> u32 {
        match self {
            Domain::Vertices => 0,
            Domain::Faces => 1,
            Domain::Points => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Domain::Vertices),
            1 => Some(Domain::Faces),
            2 => Some(Domain::Points),
            _ => None,
        }
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Domain::Vertices => "vertices",
            Domain::Faces => "faces",
            Domain::Points => "points",
        })
    }
}

/// Multi-channel function sampled on the elements of a domain.
///
/// Values are stored row-major: element `i`, channel `c` lives at
/// `values[i * channels + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    domain: Domain,
    channels: usize,
    values: Vec<f64>,
}

impl Signal {
    pub fn new(domain: Domain, channels: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidSignal("signal needs at least one channel".into()));
        }
        if values.len() % channels != 0 {
            return Err(Error::InvalidSignal(format!(
                "{} values do not split into {} channels",
                values.len(),
                channels
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "non-finite value at element {}",
                i / channels
            )));
        }
        Ok(Self { domain, channels, values })
    }

    pub fn zeros(domain: Domain, len: usize, channels: usize) -> Self {
        Self { domain, channels, values: vec![0.0; len * channels] }
    }

    pub fn scalar(domain: Domain, values: Vec<f64>) -> Result<Self> {
        Self::new(domain, 1, values)
    }

    pub fn from_rows(domain: Domain, rows: &[[f64; 3]]) -> Result<Self> {
        Self::new(domain, 3, rows.iter().flatten().copied().collect())
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of elements (rows).
    pub fn len(&self) -> usize {
        self.values.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.channels..(i + 1) * self.channels]
    }

    pub fn row3(&self, i: usize) -> [f64; 3] {
        let r = self.row(i);
        [r[0], r[1], r[2]]
    }

    pub fn rows3(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.row3(i)).collect()
    }

    /// Errors unless the signal has `len` rows on `domain`.
    pub fn check_shape(&self, domain: Domain, len: usize) -> Result<()> {
        if self.domain != domain || self.len() != len {
            return Err(Error::InvalidSignal(format!(
                "expected {len} rows on {domain}, got {} rows on {}",
                self.len(),
                self.domain
            )));
        }
        Ok(())
    }

    /// Weighted mean of each channel.
    pub fn weighted_mean(&self, weights: &[f64]) -> Vec<f64> {
        let total: f64 = weights.iter().sum();
        let mut mean = vec![0.0; self.channels];
        for (row, w) in self.values.chunks(self.channels).zip(weights) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += w * v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= total);
        mean
    }

    /// Weighted L2 norm, `sqrt(sum_i w_i |row_i|^2)`.
    pub fn weighted_norm(&self, weights: &[f64]) -> f64 {
        weighted_norm(&self.values, self.channels, weights)
    }
}

pub fn weighted_norm(values: &[f64], channels: usize, weights: &[f64]) -> f64 {
    values
        .chunks(channels)
        .zip(weights)
        .map(|(row, w)| w * row.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(Signal::scalar(Domain::Vertices, vec![1.0, f64::NAN]).is_err());
        assert!(Signal::new(Domain::Faces, 3, vec![1.0; 4]).is_err());
    }

    #[test]
    fn weighted_statistics() {
        let s = Signal::new(Domain::Points, 2, vec![1.0, 0.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.weighted_mean(&[1.0, 3.0]), vec![2.5, 1.5]);
        assert!((s.weighted_norm(&[1.0, 1.0]) - 14f64.sqrt()).abs() < 1e-15);
    }
}
