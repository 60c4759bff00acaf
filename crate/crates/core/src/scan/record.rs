use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// What the scan axis of a [`ScanRecord`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanAxis {
    /// Piezo-driven cavity length, in arbitrary (usually volt) units.
    CavityLength,
    /// Laser frequency, Hz.
    LaserFrequency,
}

impl ScanAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanAxis::CavityLength => "cavity_length",
            ScanAxis::LaserFrequency => "laser_frequency",
        }
    }
}

impl fmt::Display for ScanAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScanAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cavity_length" => Ok(ScanAxis::CavityLength),
            "laser_frequency" => Ok(ScanAxis::LaserFrequency),
            other => Err(Error::Format(format!(
                "unknown scan axis `{other}` (expected cavity_length or laser_frequency)"
            ))),
        }
    }
}

/// One measured resonance: relative piezo displacement and frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePoint {
    /// Change of the air gap relative to the reference position, m.
    pub length_offset: f64,
    /// Resonance frequency, Hz.
    pub frequency: f64,
}

impl ModePoint {
    pub fn new(length_offset: f64, frequency: f64) -> Result<Self> {
        if !length_offset.is_finite() {
            return Err(Error::param("length offset", "must be finite"));
        }
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(Error::param("frequency", format!("must be > 0, got {frequency}")));
        }
        Ok(Self { length_offset, frequency })
    }
}

/// A single sweep: photodiode signal against a monotone axis, with
/// calibration and provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub axis: ScanAxis,
    axis_values: Vec<f64>,
    signal: Vec<f64>,
    /// Frequency offset of the laser sidebands, Hz.
    pub sideband_offset: Option<f64>,
    /// Delay of the sweep after the last synchronization pulse, s.
    pub sync_offset: Option<f64>,
    /// Free-form `key → value` annotations (seed, generator truth values, ...).
    pub metadata: BTreeMap<String, String>,
}

impl ScanRecord {
    pub fn new(axis: ScanAxis, axis_values: Vec<f64>, signal: Vec<f64>) -> Result<Self> {
        if axis_values.is_empty() {
            return Err(Error::param("scan samples", "must not be empty"));
        }
        if axis_values.len() != signal.len() {
            return Err(Error::param(
                "scan samples",
                format!("{} axis values but {} signal values", axis_values.len(), signal.len()),
            ));
        }
        if axis_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("axis values", "must be finite"));
        }
        let increasing = axis_values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = axis_values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::param("axis values", "must be strictly monotone"));
        }
        if let Some(bad) = signal.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::param("signal", format!("must be finite and >= 0, found {bad}")));
        }
        Ok(Self {
            axis,
            axis_values,
            signal,
            sideband_offset: None,
            sync_offset: None,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_sideband_offset(mut self, offset: f64) -> Result<Self> {
        if !(offset > 0.0 && offset.is_finite()) {
            return Err(Error::param("sideband offset", "must be > 0"));
        }
        self.sideband_offset = Some(offset);
        Ok(self)
    }

    pub fn with_sync_offset(mut self, offset: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::param("sync offset", "must be finite"));
        }
        self.sync_offset = Some(offset);
        Ok(self)
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn axis_values(&self) -> &[f64] {
        &self.axis_values
    }

    pub fn signal(&self) -> &[f64] {
        &self.signal
    }

    pub fn len(&self) -> usize {
        self.signal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.is_empty()
    }

    /// Same samples in the opposite order.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.axis_values.reverse();
        out.signal.reverse();
        out
    }

    /// Samples ordered by increasing axis value.
    pub fn ascending(&self) -> (Vec<f64>, Vec<f64>) {
        if self.axis_values.len() > 1 && self.axis_values[1] < self.axis_values[0] {
            let r = self.reversed();
            (r.axis_values, r.signal)
        } else {
            (self.axis_values.clone(), self.signal.clone())
        }
    }

    /// Truth value `truth.<name>` recorded by a synthetic generator.
    pub fn truth(&self, name: &str) -> Option<f64> {
        self.metadata.get(&format!("truth.{name}")).and_then(|v| v.parse().ok())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ScanRecord::new(ScanAxis::CavityLength, vec![], vec![]).is_err());
        assert!(ScanRecord::new(ScanAxis::CavityLength, vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(ScanRecord::new(ScanAxis::CavityLength, vec![0.0, 1.0, 1.0], vec![1.0; 3]).is_err());
        assert!(ScanRecord::new(ScanAxis::CavityLength, vec![0.0, 1.0], vec![1.0, -0.1]).is_err());
        let desc = ScanRecord::new(ScanAxis::CavityLength, vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(desc.ascending(), (vec![0.0, 1.0, 2.0], vec![3.0, 2.0, 1.0]));
        assert!(ModePoint::new(0.0, 0.0).is_err());
    }

    #[test]
    fn axis_names_round_trip() {
        for axis in [ScanAxis::CavityLength, ScanAxis::LaserFrequency] {
            assert_eq!(axis.as_str().parse::<ScanAxis>().unwrap(), axis);
        }
        assert!("piezo".parse::<ScanAxis>().is_err());
    }
}
