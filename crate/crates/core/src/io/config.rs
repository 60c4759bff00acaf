use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::emitter::{EmitterSpec, VibrationSpec};
use crate::error::{Error, Result};
use crate::loss_budget::{MirrorSpec, SurfaceSpec};
use crate::mode_model::CavityGeometry;

/// Every physical parameter of a run, as a flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub air_gap_m: f64,
    pub membrane_thickness_m: f64,
    pub refractive_index: f64,
    pub radius_of_curvature_m: f64,
    #[serde(default)]
    pub aperture_radius_m: Option<f64>,
    pub fiber_transmission_ppm: f64,
    pub fiber_loss_ppm: f64,
    pub plane_loss_ppm: f64,
    pub rms_roughness_m: f64,
    pub zpl_branching: f64,
    pub free_lifetime_s: f64,
    pub dipole_mismatch_deg: f64,
    pub antinode_offset_m: f64,
    pub sideband_offset_hz: f64,
    pub laser_frequency_hz: f64,
    pub vibration_sigma_m: f64,
}

fn field(name: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::InvalidParameter { reason, .. } => Error::InvalidParameter { name, reason },
        Error::InvalidGeometry(reason) => Error::InvalidParameter { name, reason },
        other => other,
    }
}

impl RunConfig {
    /// Diamond membrane cavity at the NV zero-phonon line.
    pub fn reference() -> Self {
        Self {
            air_gap_m: 14.3e-6,
            membrane_thickness_m: 4e-6,
            refractive_index: 2.417,
            radius_of_curvature_m: 18.4e-6,
            aperture_radius_m: None,
            fiber_transmission_ppm: 50.0,
            fiber_loss_ppm: 70.0,
            plane_loss_ppm: 100.0,
            rms_roughness_m: 0.35e-9,
            zpl_branching: 0.03,
            free_lifetime_s: 12e-9,
            dipole_mismatch_deg: 30.0,
            // a tenth of the in-diamond wavelength at the laser frequency
            antinode_offset_m: crate::constants::SPEED_OF_LIGHT / 471.3e12 / (10.0 * 2.417),
            sideband_offset_hz: 6e9,
            laser_frequency_hz: 471.3e12,
            vibration_sigma_m: 0.8e-9 / 2.354_820_045_030_949,
        }
    }

    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }

    /// Checks every field; the error names the offending JSON key.
    pub fn validate(&self) -> Result<()> {
        let geometry = self.geometry()?;
        self.fiber_mirror()?;
        self.plane_mirror()?;
        self.surface()?;
        self.emitter()?;
        self.vibration()?;
        if !(self.laser_frequency_hz > 0.0 && self.laser_frequency_hz.is_finite()) {
            return Err(Error::param("laser_frequency_hz", "must be > 0"));
        }
        if !(self.sideband_offset_hz > 0.0 && self.sideband_offset_hz.is_finite()) {
            return Err(Error::param("sideband_offset_hz", "must be > 0"));
        }
        self.emitter()?
            .check_offset(self.laser_frequency_hz, geometry.refractive_index)
            .map_err(field("antinode_offset_m"))
    }

    pub fn geometry(&self) -> Result<CavityGeometry<f64>> {
        let checks: [(&'static str, f64, bool); 4] = [
            ("air_gap_m", self.air_gap_m, self.air_gap_m > 0.0),
            ("membrane_thickness_m", self.membrane_thickness_m, self.membrane_thickness_m >= 0.0),
            ("refractive_index", self.refractive_index, self.refractive_index >= 1.0),
            ("radius_of_curvature_m", self.radius_of_curvature_m, self.radius_of_curvature_m > 0.0),
        ];
        for (name, value, ok) in checks {
            if !(ok && value.is_finite()) {
                return Err(Error::param(name, format!("out of range: {value}")));
            }
        }
        let g = CavityGeometry::new(
            self.air_gap_m,
            self.membrane_thickness_m,
            self.refractive_index,
            self.radius_of_curvature_m,
        )?;
        match self.aperture_radius_m {
            Some(a) => g.with_aperture(a).map_err(field("aperture_radius_m")),
            None => Ok(g),
        }
    }

    pub fn fiber_mirror(&self) -> Result<MirrorSpec<f64>> {
        MirrorSpec::new(self.fiber_transmission_ppm, 0.0)
            .map_err(field("fiber_transmission_ppm"))?;
        MirrorSpec::new(self.fiber_transmission_ppm, self.fiber_loss_ppm).map_err(field("fiber_loss_ppm"))
    }

    /// The plane mirror's whole budget (transmission and loss) is carried as
    /// loss.
    pub fn plane_mirror(&self) -> Result<MirrorSpec<f64>> {
        MirrorSpec::new(0.0, self.plane_loss_ppm).map_err(field("plane_loss_ppm"))
    }

    pub fn surface(&self) -> Result<SurfaceSpec<f64>> {
        SurfaceSpec::new(self.rms_roughness_m).map_err(field("rms_roughness_m"))
    }

    pub fn emitter(&self) -> Result<EmitterSpec<f64>> {
        let theta = self.dipole_mismatch_deg.to_radians();
        EmitterSpec::new(self.zpl_branching, 1.0, 0.0, 0.0).map_err(field("zpl_branching"))?;
        EmitterSpec::new(self.zpl_branching, self.free_lifetime_s, 0.0, 0.0).map_err(field("free_lifetime_s"))?;
        EmitterSpec::new(self.zpl_branching, self.free_lifetime_s, theta, 0.0).map_err(field("dipole_mismatch_deg"))?;
        EmitterSpec::new(self.zpl_branching, self.free_lifetime_s, theta, self.antinode_offset_m)
            .map_err(field("antinode_offset_m"))
    }

    pub fn vibration(&self) -> Result<VibrationSpec<f64>> {
        VibrationSpec::new(self.vibration_sigma_m).map_err(field("vibration_sigma_m"))
    }

    /// SHA-256 of the canonical JSON serialization, lowercase hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("plain struct serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_round_trips_through_json() {
        let cfg = RunConfig::reference();
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn unknown_and_missing_fields_are_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&RunConfig::reference().to_json()).unwrap();
        v["finesse"] = 3.0.into();
        let err = RunConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("finesse"), "{err}");
        let mut v: serde_json::Value = serde_json::from_str(&RunConfig::reference().to_json()).unwrap();
        v.as_object_mut().unwrap().remove("air_gap_m");
        assert!(RunConfig::from_json(&v.to_string()).unwrap_err().to_string().contains("air_gap_m"));
    }

    #[test]
    fn invalid_values_name_their_field() {
        type Breaks = fn(&mut RunConfig);
        let cases: [(&str, Breaks); 5] = [
            ("air_gap_m", |c| c.air_gap_m = -1.0),
            ("zpl_branching", |c| c.zpl_branching = 1.5),
            ("fiber_loss_ppm", |c| c.fiber_loss_ppm = -3.0),
            ("dipole_mismatch_deg", |c| c.dipole_mismatch_deg = 120.0),
            ("aperture_radius_m", |c| c.aperture_radius_m = Some(0.0)),
        ];
        for (name, mutate) in cases {
            let mut cfg = RunConfig::reference();
            mutate(&mut cfg);
            let err = cfg.validate().unwrap_err();
            assert!(err.to_string().contains(name), "{name}: {err}");
            assert!(err.is_input_error());
        }
    }

    #[test]
    fn aperture_is_optional() {
        let mut v: serde_json::Value = serde_json::from_str(&RunConfig::reference().to_json()).unwrap();
        v.as_object_mut().unwrap().remove("aperture_radius_m");
        assert_eq!(RunConfig::from_json(&v.to_string()).unwrap().aperture_radius_m, None);
    }
}
