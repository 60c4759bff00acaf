//! Cavity linewidth from length scans with phase-modulation sidebands.
//!
//! The carrier and the two first-order sidebands appear as three Lorentzians
//! along the length axis. Their known frequency separation `±δf` turns the
//! carrier width into a frequency linewidth without any knowledge of the
//! piezo calibration. The fit runs on the axis mapped onto `[0, 1]`, so the
//! result does not depend on the units or offset of the axis.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mode_model::fsr;
use crate::CavityGeometry;
use crate::numeric::{mad_sigma, quantile};
use crate::scan::fit::{least_squares, Residuals};
use crate::scan::record::{ScanAxis, ScanRecord};

/// A fit is rejected when any peak centre is uncertain by more than this
/// fraction of the carrier–sideband distance.
pub const CENTER_UNCERTAINTY_LIMIT: f64 = 0.2;
/// Sidebands are searched beyond this fraction of the expected spacing.
pub const SIDEBAND_SEARCH_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct LinewidthFit {
    /// Carrier FWHM, Hz.
    pub linewidth: f64,
    /// One-sigma uncertainty of `linewidth`, Hz.
    pub uncertainty: f64,
    /// Hz per unit of the scan axis.
    pub calibration_scale: f64,
    /// Residual sum of squares per degree of freedom.
    pub goodness: f64,
    /// Carrier position, axis units.
    pub carrier_center: f64,
    /// Distance between the two sideband centres, axis units.
    pub sideband_spacing: f64,
}

struct TripleLorentzian<'a> {
    u: &'a [f64],
    y: &'a [f64],
}

/// `A / (1 + (2(u − c)/w)²)` and its partial derivatives in `(A, c, w)`.
fn lorentz(u: f64, a: f64, c: f64, w: f64) -> (f64, [f64; 3]) {
    let q = 2.0 * (u - c) / w;
    let l = 1.0 / (1.0 + q * q);
    let al2 = a * l * l;
    (a * l, [l, 4.0 * q * al2 / w, 2.0 * q * q * al2 / w])
}

impl Residuals for TripleLorentzian<'_> {
    fn residual_count(&self) -> usize {
        self.u.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) -> bool {
        for ((o, &u), &y) in out.iter_mut().zip(self.u).zip(self.y) {
            let mut model = p[9];
            for k in 0..3 {
                model += lorentz(u, p[3 * k], p[3 * k + 1], p[3 * k + 2]).0;
            }
            *o = model - y;
        }
        true
    }

    fn jacobian(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(self.u.len(), 10);
        for (i, &u) in self.u.iter().enumerate() {
            for k in 0..3 {
                let (_, d) = lorentz(u, p[3 * k], p[3 * k + 1], p[3 * k + 2]);
                for (j, dj) in d.into_iter().enumerate() {
                    jac[(i, 3 * k + j)] = dj;
                }
            }
            jac[(i, 9)] = 1.0;
        }
        Some(jac)
    }
}

fn moving_average(y: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut prefix = Vec::with_capacity(y.len() + 1);
    prefix.push(0.0);
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

/// Index range around `peak` where `smooth` stays above `level`.
fn span_above(smooth: &[f64], peak: usize, level: f64) -> (usize, usize) {
    let mut lo = peak;
    while lo > 0 && smooth[lo - 1] >= level {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < smooth.len() && smooth[hi + 1] >= level {
        hi += 1;
    }
    (lo, hi)
}

struct Seed {
    params: [f64; 10],
}

fn seed_peaks(u: &[f64], y: &[f64]) -> Result<Seed> {
    let n = y.len();
    let window = (n / 100).max(3) | 1;
    let smooth = moving_average(y, window);
    let baseline = quantile(&smooth, 0.1).unwrap_or(0.0);
    let diffs: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let noise = mad_sigma(&diffs).unwrap_or(0.0) / std::f64::consts::SQRT_2 / (window as f64).sqrt();

    let argmax = |lo: usize, hi: usize| -> usize {
        (lo..hi).max_by(|&a, &b| smooth[a].total_cmp(&smooth[b])).expect("non-empty range")
    };
    let carrier = argmax(0, n);
    let height = smooth[carrier] - baseline;
    let (lo, hi) = span_above(&smooth, carrier, baseline + 0.5 * height);
    let width = (u[hi] - u[lo]).max(u[1] - u[0]);
    let exclusion = 1.5 * width;

    let left_end = u.partition_point(|&v| v < u[carrier] - exclusion);
    let right_start = u.partition_point(|&v| v <= u[carrier] + exclusion);
    if left_end == 0 || right_start >= n {
        return Err(Error::PeaksUnresolved("no room for a sideband next to the carrier".into()));
    }
    let provisional = [argmax(0, left_end), argmax(right_start, n)];
    let spacing = 0.5 * (u[provisional[1]] - u[provisional[0]]);
    let reach = (SIDEBAND_SEARCH_FRACTION * spacing).max(exclusion);
    let left_end = u.partition_point(|&v| v < u[carrier] - reach);
    let right_start = u.partition_point(|&v| v <= u[carrier] + reach);
    if left_end == 0 || right_start >= n {
        return Err(Error::PeaksUnresolved("sidebands overlap the carrier".into()));
    }
    let sidebands = [argmax(0, left_end), argmax(right_start, n)];

    let mut params = [0.0; 10];
    for (k, &idx) in [sidebands[0], carrier, sidebands[1]].iter().enumerate() {
        let h = smooth[idx] - baseline;
        let interior = idx > 0 && idx + 1 < n && idx + 1 != left_end && idx != right_start;
        if k != 1 && (h < 5.0 * noise.max(f64::MIN_POSITIVE) || !interior) {
            return Err(Error::PeaksUnresolved(format!(
                "no distinct sideband peak on the {} side",
                if k == 0 { "low" } else { "high" }
            )));
        }
        let (a, b) = span_above(&smooth, idx, baseline + 0.5 * h);
        params[3 * k] = h;
        params[3 * k + 1] = u[idx];
        params[3 * k + 2] = (u[b] - u[a]).max(u[1] - u[0]);
    }
    params[9] = baseline;
    Ok(Seed { params })
}

/// Fits carrier and sidebands of a cavity-length scan.
pub fn fit_linewidth_sidebanded(scan: &ScanRecord) -> Result<LinewidthFit> {
    if scan.axis != ScanAxis::CavityLength {
        return Err(Error::param("scan axis", "linewidth scans must sweep the cavity length"));
    }
    let offset = scan
        .sideband_offset
        .ok_or_else(|| Error::param("sideband offset", "missing from the scan record"))?;
    if scan.len() < 20 {
        return Err(Error::param("scan samples", "need at least 20 samples"));
    }
    let (x, y) = scan.ascending();
    let (x0, range) = (x[0], x[x.len() - 1] - x[0]);
    let u: Vec<f64> = x.iter().map(|v| (v - x0) / range).collect();

    let seed = seed_peaks(&u, &y)?;
    let model = TripleLorentzian { u: &u, y: &y };
    let outcome = least_squares(&model, &seed.params).map_err(|e| match e {
        Error::NonConvergence(msg) => Error::FitRejected(format!("three-Lorentzian fit failed: {msg}")),
        other => other,
    })?;
    let p = &outcome.params;
    let (c_lo, c_car, c_hi) = (p[1], p[4], p[7]);
    if !(c_lo < c_car && c_car < c_hi) {
        return Err(Error::FitRejected("fitted peaks are out of order".into()));
    }
    let spacing = c_hi - c_lo;
    let limit = CENTER_UNCERTAINTY_LIMIT * 0.5 * spacing;
    for (k, name) in [(1, "low sideband"), (4, "carrier"), (7, "high sideband")] {
        let s = outcome.std_error(k);
        if !(s <= limit) {
            return Err(Error::FitRejected(format!(
                "{name} centre uncertainty {s:.3e} exceeds {CENTER_UNCERTAINTY_LIMIT} of the sideband distance"
            )));
        }
    }
    let width = p[5].abs();
    let linewidth = width * 2.0 * offset / spacing;
    // gradient of 2δf·w/(c_hi − c_lo) in (c_lo, w, c_hi)
    let grad = DVector::from_vec(vec![linewidth / spacing, linewidth / width, -linewidth / spacing]);
    let idx = [1, 5, 7];
    let sub = DMatrix::from_fn(3, 3, |i, j| outcome.covariance[(idx[i], idx[j])]);
    let variance = (grad.transpose() * sub * &grad)[(0, 0)];
    Ok(LinewidthFit {
        linewidth,
        uncertainty: variance.max(0.0).sqrt(),
        calibration_scale: 2.0 * offset / (spacing * range),
        goodness: outcome.reduced_chi2,
        carrier_center: x0 + c_car * range,
        sideband_spacing: spacing * range,
    })
}

/// `FSR / δν` with its propagated one-sigma uncertainty.
pub fn finesse_from_linewidth(fit: &LinewidthFit, g: &CavityGeometry) -> Result<(f64, f64)> {
    if !(fit.linewidth > 0.0 && fit.uncertainty >= 0.0) {
        return Err(Error::param("linewidth", "must be > 0 with non-negative uncertainty"));
    }
    let finesse = fsr(g)? / fit.linewidth;
    Ok((finesse, finesse * fit.uncertainty / fit.linewidth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::synth::{triple_lorentzian_scan, TripleLorentzianSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn clean() -> ScanRecord {
        let spec = TripleLorentzianSpec::default();
        triple_lorentzian_scan(&spec, &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
    }

    #[test]
    fn noiseless_recovery() {
        let fit = fit_linewidth_sidebanded(&clean()).unwrap();
        assert!((fit.linewidth / 1e9 - 1.0).abs() < 1e-6, "{}", fit.linewidth);
        assert!(fit.goodness < 1e-12);
    }

    #[test]
    fn reversed_axis_gives_the_same_width() {
        let scan = clean();
        let (x, y) = scan.ascending();
        let mirrored: Vec<f64> = y.iter().rev().copied().collect();
        let rev = ScanRecord::new(ScanAxis::CavityLength, x, mirrored)
            .unwrap()
            .with_sideband_offset(6e9)
            .unwrap();
        let a = fit_linewidth_sidebanded(&scan).unwrap();
        let b = fit_linewidth_sidebanded(&rev).unwrap();
        assert!((a.linewidth / b.linewidth - 1.0).abs() < 1e-9);
        let c = fit_linewidth_sidebanded(&scan.reversed()).unwrap();
        assert_eq!(a.linewidth, c.linewidth);
    }

    #[test]
    fn single_peak_is_unresolved() {
        let u: Vec<f64> = (0..400).map(|i| i as f64 / 399.0).collect();
        let y: Vec<f64> = u.iter().map(|u| 1.0 / (1.0 + ((u - 0.5) / 0.01).powi(2))).collect();
        let scan = ScanRecord::new(ScanAxis::CavityLength, u, y).unwrap().with_sideband_offset(6e9).unwrap();
        assert!(matches!(fit_linewidth_sidebanded(&scan), Err(Error::PeaksUnresolved(_))));
    }

    #[test]
    fn finesse_definition() {
        let fit = LinewidthFit {
            linewidth: 625e6,
            uncertainty: 6.25e6,
            calibration_scale: 1.0,
            goodness: 0.0,
            carrier_center: 0.0,
            sideband_spacing: 1.0,
        };
        let la = 299_792_458.0 / (2.0 * 6.25e12);
        let g = CavityGeometry::bare(la, 1e-3).unwrap();
        let (f, s) = finesse_from_linewidth(&fit, &g).unwrap();
        assert!((f - 10_000.0).abs() < 1e-9);
        assert!((s - 100.0).abs() < 1e-9);
    }
}
