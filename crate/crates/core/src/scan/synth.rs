//! Seeded synthetic data with known truth, used to exercise the fitters.
//!
//! Generators draw from a caller-supplied random number generator, so a
//! fixed seed reproduces the output bit for bit. Truth parameters are written
//! to the record metadata under `truth.*` keys.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::constants::gaussian_fwhm_factor;
use crate::error::{Error, Result};
use crate::mode_model::{fsr, resonance_approx};
use crate::CavityGeometry;
use crate::scan::record::{ModePoint, ScanAxis, ScanRecord};

fn normal(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| Error::param("noise level", e.to_string()))
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be > 0, got {v}")))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be >= 0, got {v}")))
    }
}

/// Closed-form resonances in `band` at each piezo offset, with Gaussian
/// frequency noise of standard deviation `noise` (Hz).
pub fn mode_points<R: Rng>(
    truth: &CavityGeometry,
    offsets: &[f64],
    band: (f64, f64),
    noise: f64,
    rng: &mut R,
) -> Result<Vec<ModePoint>> {
    non_negative("frequency noise", noise)?;
    if !(band.0 > 0.0 && band.1 > band.0) {
        return Err(Error::param("frequency band", "need 0 < low < high"));
    }
    let dist = normal(noise.max(f64::MIN_POSITIVE))?;
    let mut out = Vec::new();
    for &offset in offsets {
        let g = truth.with_air_gap(truth.air_gap + offset)?;
        let first = ((band.0 / fsr(&g)?).floor() as u32).saturating_sub(2).max(1);
        let mut m = first;
        loop {
            let nu = resonance_approx(m, &g)?;
            if nu > band.1 {
                break;
            }
            if nu >= band.0 {
                let jitter = if noise > 0.0 { dist.sample(rng) } else { 0.0 };
                out.push(ModePoint::new(offset, nu + jitter)?);
            }
            m += 1;
        }
    }
    Ok(out)
}

/// Cavity-length scan through a carrier and two phase-modulation sidebands.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleLorentzianSpec {
    /// Cavity linewidth (carrier FWHM), Hz.
    pub linewidth: f64,
    pub sideband_offset: f64,
    /// Frequency change per unit of the scan axis, Hz.
    pub axis_scale: f64,
    /// Axis value of the carrier resonance.
    pub carrier_position: f64,
    /// Total scanned range expressed in frequency, Hz.
    pub span: f64,
    pub points: usize,
    pub carrier_amplitude: f64,
    /// Sideband height relative to the carrier.
    pub sideband_ratio: f64,
    /// Detector offset. Keep it a few noise sigmas above zero: samples are
    /// clipped at zero, which would bias the fitted baseline upward.
    pub baseline: f64,
    /// Gaussian noise standard deviation as a fraction of the carrier height.
    pub noise: f64,
}

impl Default for TripleLorentzianSpec {
    fn default() -> Self {
        Self {
            linewidth: 1e9,
            sideband_offset: 6e9,
            axis_scale: 20e9,
            carrier_position: 1.5,
            span: 30e9,
            points: 1500,
            carrier_amplitude: 1.0,
            sideband_ratio: 0.4,
            baseline: 0.2,
            noise: 0.0,
        }
    }
}

impl TripleLorentzianSpec {
    /// Noise-free signal at axis value `x`.
    pub fn model(&self, x: f64) -> f64 {
        let f = (x - self.carrier_position) * self.axis_scale;
        let l = |d: f64| {
            let q = 2.0 * d / self.linewidth;
            1.0 / (1.0 + q * q)
        };
        self.baseline
            + self.carrier_amplitude
                * (l(f) + self.sideband_ratio * (l(f - self.sideband_offset) + l(f + self.sideband_offset)))
    }

    fn validate(&self) -> Result<()> {
        positive("linewidth", self.linewidth)?;
        positive("sideband offset", self.sideband_offset)?;
        positive("axis scale", self.axis_scale)?;
        positive("span", self.span)?;
        positive("carrier amplitude", self.carrier_amplitude)?;
        non_negative("sideband ratio", self.sideband_ratio)?;
        non_negative("baseline", self.baseline)?;
        non_negative("noise", self.noise)?;
        if self.points < 20 {
            return Err(Error::param("points", "need at least 20"));
        }
        Ok(())
    }
}

pub fn triple_lorentzian_scan<R: Rng>(spec: &TripleLorentzianSpec, rng: &mut R) -> Result<ScanRecord> {
    spec.validate()?;
    let dist = normal(spec.noise.max(f64::MIN_POSITIVE) * spec.carrier_amplitude)?;
    let half = 0.5 * spec.span / spec.axis_scale;
    let n = spec.points;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let xi = spec.carrier_position - half + 2.0 * half * i as f64 / (n - 1) as f64;
        let noise = if spec.noise > 0.0 { dist.sample(rng) } else { 0.0 };
        x.push(xi);
        y.push((spec.model(xi) + noise).max(0.0));
    }
    Ok(ScanRecord::new(ScanAxis::CavityLength, x, y)?
        .with_sideband_offset(spec.sideband_offset)?
        .with_metadata("generator", "triple_lorentzian")
        .with_metadata("truth.linewidth_hz", spec.linewidth)
        .with_metadata("truth.axis_scale_hz_per_unit", spec.axis_scale)
        .with_metadata("truth.carrier_position", spec.carrier_position)
        .with_metadata("truth.noise_fraction", spec.noise))
}

/// Slow laser sweeps across a cavity whose resonance jitters quickly.
#[derive(Debug, Clone, PartialEq)]
pub struct JitterSpec {
    pub sweeps: usize,
    pub points: usize,
    /// Independent jitter draws averaged into each sample.
    pub draws_per_point: usize,
    /// FWHM of the Gaussian resonance jitter, Hz.
    pub jitter_fwhm: f64,
    /// Intrinsic cavity linewidth, Hz.
    pub line_fwhm: f64,
    /// Standard deviation of the slow per-sweep offset, Hz.
    pub drift: f64,
    /// Mean resonance frequency, Hz.
    pub center: f64,
    /// Swept range, Hz.
    pub span: f64,
    /// Additive detector noise (signal units, peak line height is 1).
    pub noise: f64,
    pub baseline: f64,
}

impl Default for JitterSpec {
    fn default() -> Self {
        Self {
            sweeps: 50,
            points: 2000,
            draws_per_point: 64,
            jitter_fwhm: 22.2e9,
            line_fwhm: 0.5e9,
            drift: 5e9,
            center: 471.3e12,
            span: 7.2 * 22.2e9,
            noise: 0.001,
            baseline: 0.0,
        }
    }
}

impl JitterSpec {
    fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.points < 8 || self.draws_per_point == 0 {
            return Err(Error::param("sweep layout", "need sweeps >= 1, points >= 8, draws >= 1"));
        }
        non_negative("jitter fwhm", self.jitter_fwhm)?;
        positive("line fwhm", self.line_fwhm)?;
        non_negative("drift", self.drift)?;
        positive("centre frequency", self.center)?;
        positive("span", self.span)?;
        non_negative("noise", self.noise)?;
        non_negative("baseline", self.baseline)
    }
}

fn one_sweep<R: Rng>(spec: &JitterSpec, jitter_fwhm: f64, rng: &mut R) -> Result<ScanRecord> {
    let jitter = normal((jitter_fwhm / gaussian_fwhm_factor::<f64>()).max(f64::MIN_POSITIVE))?;
    let drift = normal(spec.drift.max(f64::MIN_POSITIVE))?;
    let noise = normal(spec.noise.max(f64::MIN_POSITIVE))?;
    let offset = if spec.drift > 0.0 { drift.sample(rng) } else { 0.0 };
    let n = spec.points;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let nu = spec.center - 0.5 * spec.span + spec.span * i as f64 / (n - 1) as f64;
        let mut acc = 0.0;
        for _ in 0..spec.draws_per_point {
            let shift = if jitter_fwhm > 0.0 { jitter.sample(rng) } else { 0.0 };
            let q = 2.0 * (nu - spec.center - offset - shift) / spec.line_fwhm;
            acc += 1.0 / (1.0 + q * q);
        }
        let e = if spec.noise > 0.0 { noise.sample(rng) } else { 0.0 };
        x.push(nu);
        y.push((spec.baseline + acc / spec.draws_per_point as f64 + e).max(0.0));
    }
    Ok(ScanRecord::new(ScanAxis::LaserFrequency, x, y)?
        .with_metadata("generator", "jittered_sweep")
        .with_metadata("truth.jitter_fwhm_hz", jitter_fwhm)
        .with_metadata("truth.line_fwhm_hz", spec.line_fwhm)
        .with_metadata("truth.drift_offset_hz", offset))
}

pub fn jittered_sweeps<R: Rng>(spec: &JitterSpec, rng: &mut R) -> Result<Vec<ScanRecord>> {
    spec.validate()?;
    (0..spec.sweeps).map(|_| one_sweep(spec, spec.jitter_fwhm, rng)).collect()
}

/// Sweeps spread over a periodic disturbance: jitter is low inside
/// `quiet_window` (s after the sync pulse) and high elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncedJitterSpec {
    pub base: JitterSpec,
    pub quiet_jitter_fwhm: f64,
    pub loud_jitter_fwhm: f64,
    pub quiet_window: (f64, f64),
    pub cycle: f64,
}

impl Default for SyncedJitterSpec {
    fn default() -> Self {
        Self {
            base: JitterSpec {
                sweeps: 200,
                points: 1000,
                draws_per_point: 32,
                span: 7.2 * 30e9,
                ..JitterSpec::default()
            },
            quiet_jitter_fwhm: 14e9,
            loud_jitter_fwhm: 30e9,
            quiet_window: (0.25, 0.30),
            cycle: 1.0,
        }
    }
}

/// Sync offsets are stratified over the cycle so every phase is populated.
pub fn synced_sweeps<R: Rng>(spec: &SyncedJitterSpec, rng: &mut R) -> Result<Vec<ScanRecord>> {
    spec.base.validate()?;
    positive("cycle", spec.cycle)?;
    let (q0, q1) = spec.quiet_window;
    if !(0.0 <= q0 && q0 < q1 && q1 <= spec.cycle) {
        return Err(Error::param("quiet window", "need 0 <= start < end <= cycle"));
    }
    let n = spec.base.sweeps;
    (0..n)
        .map(|i| {
            let t = (i as f64 + rng.random::<f64>()) / n as f64 * spec.cycle;
            let quiet = (q0..q1).contains(&t);
            let fwhm = if quiet { spec.quiet_jitter_fwhm } else { spec.loud_jitter_fwhm };
            Ok(one_sweep(&spec.base, fwhm, rng)?
                .with_sync_offset(t)?
                .with_metadata("truth.quiet_window_s", format!("{q0}:{q1}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seeded_generators_repeat_exactly() {
        let a = jittered_sweeps(&JitterSpec { sweeps: 2, ..JitterSpec::default() }, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = jittered_sweeps(&JitterSpec { sweeps: 2, ..JitterSpec::default() }, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        let c = jittered_sweeps(&JitterSpec { sweeps: 2, ..JitterSpec::default() }, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_triple_lorentzian_is_analytic() {
        let spec = TripleLorentzianSpec::default();
        let scan = triple_lorentzian_scan(&spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for (&x, &y) in scan.axis_values().iter().zip(scan.signal()) {
            assert!((y - spec.model(x)).abs() <= 1e-12);
        }
        assert_eq!(scan.truth("linewidth_hz"), Some(1e9));
    }

    #[test]
    fn mode_points_lie_in_band() {
        let g = CavityGeometry::new(14.3e-6, 4e-6, 2.417, 18.4e-6).unwrap();
        let pts = mode_points(&g, &[0.0, 0.1e-6], (440e12, 500e12), 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(pts.len() >= 6);
        assert!(pts.iter().all(|p| (440e12..=500e12).contains(&p.frequency)));
    }
}
