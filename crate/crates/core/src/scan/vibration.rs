//! Vibration-induced broadening from repeated slow laser sweeps.
//!
//! While the laser sweeps, the cavity length wanders, so each sweep records
//! the distribution of instantaneous resonance frequencies convolved with the
//! cavity line. Sweeps are aligned on their own centres (removing slow drift),
//! averaged on a common grid and fitted with a Gaussian plus baseline.

use nalgebra::DMatrix;

use crate::constants::gaussian_fwhm_factor;
use crate::error::{Error, Result};
use crate::mode_model::{frequency_slope, resonance_approx};
use crate::CavityGeometry;
use crate::numeric::{mad_sigma, median};
use crate::scan::fit::{least_squares, Residuals};
use crate::scan::record::{ScanAxis, ScanRecord};

/// Default period of the disturbance that sync offsets are folded into, s.
pub const DEFAULT_CYCLE: f64 = 1.0;
/// A sweep whose peak rises less than this many robust noise sigmas above
/// its median is treated as containing no peak.
pub const PEAK_THRESHOLD_SIGMAS: f64 = 8.0;

/// How each sweep's centre is located before averaging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Centering {
    /// Signal-weighted centroid of the samples in the top `fraction` of the
    /// (smoothed) peak height, contiguous with the maximum.
    Centroid { fraction: f64 },
    /// Position of the smoothed maximum.
    Maximum,
}

impl Default for Centering {
    fn default() -> Self {
        Centering::Centroid { fraction: 0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BroadeningOptions {
    pub centering: Centering,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BroadeningFit {
    /// FWHM of the averaged transmission, Hz.
    pub fwhm_frequency: f64,
    pub fwhm_uncertainty: f64,
    /// Length-displacement FWHM, m, once converted with a mode slope.
    pub displacement: Option<f64>,
    pub displacement_uncertainty: Option<f64>,
    /// Peak height and baseline of the fitted Gaussian.
    pub amplitude: f64,
    pub baseline: f64,
    pub sweeps_used: usize,
    /// Indices of sweeps dropped because no peak was found.
    pub excluded: Vec<usize>,
}

impl BroadeningFit {
    /// Fills in the displacement using the slope of mode `m` at `g`.
    pub fn with_displacement(mut self, m: u32, g: &CavityGeometry) -> Result<Self> {
        let slope = checked_slope(m, g)?;
        self.displacement = Some(self.fwhm_frequency / slope);
        self.displacement_uncertainty = Some(self.fwhm_uncertainty / slope);
        Ok(self)
    }
}

fn checked_slope(m: u32, g: &CavityGeometry) -> Result<f64> {
    let slope = frequency_slope(m, g)?;
    let nu = resonance_approx(m, g)?;
    if !(slope > 1e-9 * nu / g.optical_length()) {
        return Err(Error::ZeroSlope { mode: m });
    }
    Ok(slope)
}

/// Length displacement FWHM corresponding to a frequency broadening FWHM.
pub fn displacement_from_broadening(fwhm_frequency: f64, m: u32, g: &CavityGeometry) -> Result<f64> {
    if !(fwhm_frequency >= 0.0) {
        return Err(Error::param("broadening", "must be >= 0"));
    }
    Ok(fwhm_frequency / checked_slope(m, g)?)
}

fn smooth(y: &[f64]) -> Vec<f64> {
    let half = (y.len() / 100).max(1);
    let mut prefix = vec![0.0];
    for v in y {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(y.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Centre of the single dominant peak of a sweep, or `None`.
fn sweep_center(x: &[f64], y: &[f64], centering: Centering) -> Option<f64> {
    let base = median(y).unwrap_or(0.0);
    let diffs: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let noise = mad_sigma(&diffs).unwrap_or(0.0) / std::f64::consts::SQRT_2;
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max - base > PEAK_THRESHOLD_SIGMAS * noise) || max <= base {
        return None;
    }
    let s = smooth(y);
    let peak = (0..s.len()).max_by(|&a, &b| s[a].total_cmp(&s[b]))?;
    match centering {
        Centering::Maximum => Some(x[peak]),
        Centering::Centroid { fraction } => {
            let level = s[peak] - fraction * (s[peak] - median(&s).unwrap_or(0.0));
            let mut lo = peak;
            while lo > 0 && s[lo - 1] >= level {
                lo -= 1;
            }
            let mut hi = peak;
            while hi + 1 < s.len() && s[hi + 1] >= level {
                hi += 1;
            }
            let (mut num, mut den) = (0.0, 0.0);
            for i in lo..=hi {
                let w = s[i] - level;
                num += w * x[i];
                den += w;
            }
            if den > 0.0 {
                Some(num / den)
            } else {
                Some(x[peak])
            }
        }
    }
}

fn interpolate(x: &[f64], y: &[f64], at: f64) -> f64 {
    let i = x.partition_point(|&v| v <= at).clamp(1, x.len() - 1);
    let t = (at - x[i - 1]) / (x[i] - x[i - 1]);
    y[i - 1] + t * (y[i] - y[i - 1])
}

struct Gaussian<'a> {
    x: &'a [f64],
    y: &'a [f64],
}

impl Residuals for Gaussian<'_> {
    fn residual_count(&self) -> usize {
        self.x.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) -> bool {
        for ((o, &x), &y) in out.iter_mut().zip(self.x).zip(self.y) {
            let z = (x - p[1]) / p[2];
            *o = p[3] + p[0] * (-0.5 * z * z).exp() - y;
        }
        true
    }

    fn jacobian(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(self.x.len(), 4);
        for (i, &x) in self.x.iter().enumerate() {
            let z = (x - p[1]) / p[2];
            let e = (-0.5 * z * z).exp();
            jac[(i, 0)] = e;
            jac[(i, 1)] = p[0] * e * z / p[2];
            jac[(i, 2)] = p[0] * e * z * z / p[2];
            jac[(i, 3)] = 1.0;
        }
        Some(jac)
    }
}

/// Aligns, averages and fits a set of laser-frequency sweeps.
pub fn fit_vibration_broadening(sweeps: &[ScanRecord], options: &BroadeningOptions) -> Result<BroadeningFit> {
    if sweeps.len() < 2 {
        return Err(Error::param("sweeps", format!("need at least 2, got {}", sweeps.len())));
    }
    let mut aligned = Vec::new();
    let mut excluded = Vec::new();
    for (i, sweep) in sweeps.iter().enumerate() {
        if sweep.axis != ScanAxis::LaserFrequency {
            return Err(Error::param("scan axis", "broadening sweeps must scan the laser frequency"));
        }
        if sweep.len() < 8 {
            return Err(Error::param("sweep samples", "need at least 8 per sweep"));
        }
        let (x, y) = sweep.ascending();
        match sweep_center(&x, &y, options.centering) {
            Some(c) => aligned.push((x.iter().map(|v| v - c).collect::<Vec<_>>(), y)),
            None => excluded.push(i),
        }
    }
    if aligned.is_empty() {
        return Err(Error::AllExcluded(sweeps.len()));
    }
    if aligned.len() < 2 {
        return Err(Error::param("sweeps", "fewer than 2 sweeps contain a peak"));
    }

    let lo = aligned.iter().map(|(x, _)| x[0]).fold(f64::NEG_INFINITY, f64::max);
    let hi = aligned.iter().map(|(x, _)| x[x.len() - 1]).fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(Error::param("sweeps", "aligned sweeps do not overlap"));
    }
    let mut counts: Vec<usize> = aligned.iter().map(|(x, _)| x.len()).collect();
    counts.sort_unstable();
    let points = counts[counts.len() / 2].max(8);
    let grid: Vec<f64> = (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect();
    let mut mean = vec![0.0; points];
    for (x, y) in &aligned {
        for (m, &g) in mean.iter_mut().zip(&grid) {
            *m += interpolate(x, y, g);
        }
    }
    let count = aligned.len() as f64;
    mean.iter_mut().for_each(|m| *m /= count);

    let baseline = median(&mean).unwrap_or(0.0);
    let s = smooth(&mean);
    let peak = (0..points).max_by(|&a, &b| s[a].total_cmp(&s[b])).expect("grid is non-empty");
    let height = s[peak] - baseline;
    let (mut a, mut b) = (peak, peak);
    while a > 0 && s[a - 1] >= baseline + 0.5 * height {
        a -= 1;
    }
    while b + 1 < points && s[b + 1] >= baseline + 0.5 * height {
        b += 1;
    }
    let sigma0 = ((grid[b] - grid[a]) / gaussian_fwhm_factor::<f64>()).max(grid[1] - grid[0]);
    let fit = least_squares(&Gaussian { x: &grid, y: &mean }, &[height, grid[peak], sigma0, baseline])?;
    let factor = gaussian_fwhm_factor::<f64>();
    Ok(BroadeningFit {
        fwhm_frequency: factor * fit.params[2].abs(),
        fwhm_uncertainty: factor * fit.std_error(2),
        displacement: None,
        displacement_uncertainty: None,
        amplitude: fit.params[0],
        baseline: fit.params[3],
        sweeps_used: aligned.len(),
        excluded,
    })
}

/// One sync-phase bin of [`bin_by_sync`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyncBin {
    /// Bin centre, s after the sync pulse.
    pub center: f64,
    pub sweeps: usize,
    /// `None` when the bin holds fewer than two sweeps or its fit failed.
    pub fit: Option<BroadeningFit>,
}

/// Groups sweeps by `sync_offset mod cycle` into bins of `bin_width` and fits
/// each bin with at least two sweeps.
pub fn bin_by_sync(sweeps: &[ScanRecord], bin_width: f64, cycle: f64, options: &BroadeningOptions) -> Result<Vec<SyncBin>> {
    if !(bin_width > 0.0 && cycle > 0.0) {
        return Err(Error::param("bin width", "bin width and cycle must be > 0"));
    }
    let bins = ((cycle / bin_width) - 1e-9).ceil().max(1.0) as usize;
    let mut groups: Vec<Vec<ScanRecord>> = vec![Vec::new(); bins];
    for (i, sweep) in sweeps.iter().enumerate() {
        let offset = sweep.sync_offset.ok_or(Error::MissingSyncOffset(i))?;
        let phase = offset.rem_euclid(cycle);
        let k = ((phase / bin_width) as usize).min(bins - 1);
        groups[k].push(sweep.clone());
    }
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(k, group)| {
            let start = k as f64 * bin_width;
            let end = (start + bin_width).min(cycle);
            let fit = if group.len() >= 2 {
                fit_vibration_broadening(&group, options).ok()
            } else {
                None
            };
            SyncBin {
                center: 0.5 * (start + end),
                sweeps: group.len(),
                fit,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::synth::{jittered_sweeps, JitterSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn recovers_jitter_width() {
        let spec = JitterSpec::default();
        let sweeps = jittered_sweeps(&spec, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let fit = fit_vibration_broadening(&sweeps, &BroadeningOptions::default()).unwrap();
        assert!((fit.fwhm_frequency / spec.jitter_fwhm - 1.0).abs() < 0.03, "{}", fit.fwhm_frequency);
        assert_eq!(fit.sweeps_used, spec.sweeps);
    }

    #[test]
    fn one_sweep_is_not_enough() {
        let spec = JitterSpec { sweeps: 1, ..JitterSpec::default() };
        let sweeps = jittered_sweeps(&spec, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert!(fit_vibration_broadening(&sweeps, &BroadeningOptions::default()).is_err());
    }

    #[test]
    fn flat_sweeps_are_excluded() {
        let x: Vec<f64> = (0..200).map(|i| 470e12 + i as f64 * 1e8).collect();
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let flat: Vec<f64> = (0..200).map(|_| 1.0 + noise.sample(&mut rng)).collect();
        let s = ScanRecord::new(ScanAxis::LaserFrequency, x, flat).unwrap();
        let r = fit_vibration_broadening(&[s.clone(), s], &BroadeningOptions::default());
        assert!(matches!(r, Err(Error::AllExcluded(2))));
    }

    #[test]
    fn missing_sync_is_reported() {
        let spec = JitterSpec { sweeps: 3, ..JitterSpec::default() };
        let sweeps = jittered_sweeps(&spec, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert!(matches!(
            bin_by_sync(&sweeps, 0.1, DEFAULT_CYCLE, &BroadeningOptions::default()),
            Err(Error::MissingSyncOffset(0))
        ));
    }
}
