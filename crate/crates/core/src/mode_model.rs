//! Longitudinal mode structure of a plano-concave cavity with a dielectric
//! membrane bonded to the plane mirror.
//!
//! Two descriptions of the same one-dimensional lossless two-layer cavity
//! are provided:
//!
//! * [`resonance_approx`], the closed form
//!   `ν ≈ c/(2πL) · {πm − (−1)^m · asin(r · sin(mπ D/L))}` with optical length
//!   `L = L_a + n d`, `D = L_a − n d` and interface reflectance
//!   `r = (n − 1)/(n + 1)`;
//! * [`resonance_exact`], the roots of `n·tan(k L_a) + tan(n k d) = 0` with
//!   field nodes on both mirrors, found by bracketing and bisection.
//!
//! The closed form replaces `k` by `mπ/L` inside the sine, so it carries a
//! first-order error of order `r·asin(r)·|D|/L` radians of round-trip phase.

use crate::constants::speed_of_light;
use crate::error::{Error, Result};
use crate::numeric::{bisect, golden_section_min};
use crate::scalar::Real;

/// Cavity geometry. All lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityGeometry<T> {
    /// Air gap `L_a` between membrane surface and fiber mirror.
    pub air_gap: T,
    /// Membrane thickness `d` (zero for a bare cavity).
    pub membrane_thickness: T,
    /// Membrane refractive index `n_d`.
    pub refractive_index: T,
    /// Radius of curvature of the fiber mirror.
    pub radius_of_curvature: T,
    /// Usable mirror aperture radius, needed only for clipping losses.
    pub aperture_radius: Option<T>,
}

impl<T: Real> CavityGeometry<T> {
    pub fn new(air_gap: T, membrane_thickness: T, refractive_index: T, radius_of_curvature: T) -> Result<Self> {
        let g = Self {
            air_gap,
            membrane_thickness,
            refractive_index,
            radius_of_curvature,
            aperture_radius: None,
        };
        g.validate()?;
        Ok(g)
    }

    /// Empty cavity (no membrane, unit index).
    pub fn bare(air_gap: T, radius_of_curvature: T) -> Result<Self> {
        Self::new(air_gap, T::zero(), T::one(), radius_of_curvature)
    }

    pub fn with_aperture(mut self, aperture_radius: T) -> Result<Self> {
        self.aperture_radius = Some(aperture_radius);
        self.validate()?;
        Ok(self)
    }

    pub fn with_air_gap(&self, air_gap: T) -> Result<Self> {
        let g = Self { air_gap, ..*self };
        g.validate()?;
        Ok(g)
    }

    pub fn with_membrane_thickness(&self, membrane_thickness: T) -> Result<Self> {
        let g = Self {
            membrane_thickness,
            ..*self
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGeometry(msg));
        if !(self.air_gap.is_finite() && self.air_gap > T::zero()) {
            return bad(format!("air gap must be > 0, got {}", self.air_gap));
        }
        if !(self.membrane_thickness.is_finite() && self.membrane_thickness >= T::zero()) {
            return bad(format!(
                "membrane thickness must be >= 0, got {}",
                self.membrane_thickness
            ));
        }
        if !(self.refractive_index.is_finite() && self.refractive_index >= T::one()) {
            return bad(format!(
                "refractive index must be >= 1, got {}",
                self.refractive_index
            ));
        }
        if !(self.radius_of_curvature.is_finite() && self.radius_of_curvature > T::zero()) {
            return bad(format!(
                "radius of curvature must be > 0, got {}",
                self.radius_of_curvature
            ));
        }
        if let Some(a) = self.aperture_radius {
            if !(a > T::zero()) {
                return bad(format!("aperture radius must be > 0, got {a}"));
            }
        }
        Ok(())
    }

    /// Optical length `L_a + n d`.
    pub fn optical_length(&self) -> T {
        self.air_gap + self.refractive_index * self.membrane_thickness
    }

    /// Length used for Gaussian propagation, `L_a + d/n`.
    pub fn geometric_length(&self) -> T {
        self.air_gap + self.membrane_thickness / self.refractive_index
    }

    /// Amplitude reflectance of the membrane/air interface.
    pub fn interface_reflectance(&self) -> T {
        (self.refractive_index - T::one()) / (self.refractive_index + T::one())
    }

    fn is_bare(&self) -> bool {
        self.membrane_thickness == T::zero()
    }
}

/// One longitudinal mode at a given geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonantMode<T> {
    pub index: u32,
    /// Resonance frequency, Hz.
    pub frequency: T,
    /// Tuning rate `|dν/dL_a|`, Hz/m.
    pub slope: T,
    /// 1 for the steepest (air-like) part of the branch, 0 for the flattest.
    pub air_character: T,
}

/// Intermediate quantities of the closed-form resonance.
struct ClosedForm<T> {
    optical: T,
    diff: T,
    reflectance: T,
    phase_arg: T,
    parity: T,
    frequency: T,
}

fn closed_form<T: Real>(m: u32, g: &CavityGeometry<T>) -> ClosedForm<T> {
    let c = speed_of_light::<T>();
    let pi = T::PI();
    let mf = T::lit(f64::from(m));
    let optical = g.optical_length();
    let diff = g.air_gap - g.refractive_index * g.membrane_thickness;
    let reflectance = g.interface_reflectance();
    let parity = if m.is_multiple_of(2) { T::one() } else { -T::one() };
    let phase_arg = mf * pi * diff / optical;
    let asin_term = (reflectance * phase_arg.sin()).asin();
    let frequency = c / (T::lit(2.0) * pi * optical) * (pi * mf - parity * asin_term);
    ClosedForm {
        optical,
        diff,
        reflectance,
        phase_arg,
        parity,
        frequency,
    }
}

fn check_mode(m: u32) -> Result<()> {
    if m == 0 {
        return Err(Error::param("mode index", "must be >= 1"));
    }
    Ok(())
}

/// Closed-form resonance frequency of mode `m`, Hz.
pub fn resonance_approx<T: Real>(m: u32, g: &CavityGeometry<T>) -> Result<T> {
    g.validate()?;
    check_mode(m)?;
    if g.is_bare() {
        let c = speed_of_light::<T>();
        return Ok(c * T::lit(f64::from(m)) / (T::lit(2.0) * g.air_gap));
    }
    Ok(closed_form(m, g).frequency)
}

/// Optical-path free spectral range `c / (2 (L_a + n d))`, Hz.
pub fn fsr<T: Real>(g: &CavityGeometry<T>) -> Result<T> {
    g.validate()?;
    Ok(speed_of_light::<T>() / (T::lit(2.0) * g.optical_length()))
}

/// Exact characteristic function, proportional to
/// `n sin(kL_a) cos(nkd) + cos(kL_a) sin(nkd)`.
fn characteristic<T: Real>(k: T, g: &CavityGeometry<T>) -> T {
    let n = g.refractive_index;
    let optical = g.optical_length();
    let diff = g.air_gap - n * g.membrane_thickness;
    (n + T::one()) * (k * optical).sin() + (n - T::one()) * (k * diff).sin()
}

/// All exact resonances with frequency in `[band.0, band.1]`, as
/// `(mode index, frequency)` pairs in increasing order. Mode indices count
/// roots from the lowest, so that they coincide with `ν = c m / 2L_a` as the
/// membrane vanishes.
pub fn resonance_exact<T: Real>(g: &CavityGeometry<T>, band: (T, T)) -> Result<Vec<(u32, T)>> {
    g.validate()?;
    let (lo, hi) = band;
    if !(lo >= T::zero() && hi > lo && hi.is_finite()) {
        return Err(Error::param("band", format!("need 0 <= lo < hi, got [{lo}, {hi}]")));
    }
    let c = speed_of_light::<T>();
    let two = T::lit(2.0);

    if g.is_bare() {
        let m_lo = (lo * two * g.air_gap / c).ceil().max(T::one());
        let m_hi = (hi * two * g.air_gap / c).floor();
        let mut out = Vec::new();
        let mut m = m_lo;
        while m <= m_hi {
            let idx = m.to_u32().ok_or_else(|| Error::param("band", "mode index overflow"))?;
            out.push((idx, c * m / (two * g.air_gap)));
            m = m + T::one();
        }
        return Ok(out);
    }

    let pi = T::PI();
    let optical = g.optical_length();
    let step = pi / (optical * T::lit(64.0));
    let k_hi = two * pi * hi / c;
    let rel_tol = T::lit(1e-12).max(T::epsilon() * T::lit(8.0));

    let mut out = Vec::new();
    let mut count: u32 = 0;
    // h(k) > 0 just above k = 0
    let mut prev_k = T::zero();
    let mut prev_positive = true;
    let mut j: u64 = 1;
    loop {
        let k = step * T::lit(j as f64);
        if prev_k > k_hi {
            break;
        }
        let h = characteristic(k, g);
        let root = if h == T::zero() {
            Some(k)
        } else if (h > T::zero()) != prev_positive {
            bisect(|x| characteristic(x, g), prev_k, k, rel_tol)
        } else {
            None
        };
        if let Some(root) = root {
            count += 1;
            let nu = c * root / (two * pi);
            if nu >= lo && nu <= hi {
                out.push((count, nu));
            }
        }
        if h != T::zero() {
            prev_positive = h > T::zero();
        } else {
            prev_positive = !prev_positive;
        }
        prev_k = k;
        j += 1;
    }
    Ok(out)
}

/// Tuning rate `−dν/dL_a` of the closed-form resonance, Hz/m. Non-negative
/// for physical indices.
pub fn frequency_slope<T: Real>(m: u32, g: &CavityGeometry<T>) -> Result<T> {
    Ok(-resonance_gradient(m, g)?.0)
}

/// Analytic gradient `(∂ν/∂L_a, ∂ν/∂d)` of the closed-form resonance.
pub fn resonance_gradient<T: Real>(m: u32, g: &CavityGeometry<T>) -> Result<(T, T)> {
    g.validate()?;
    check_mode(m)?;
    let c = speed_of_light::<T>();
    let pi = T::PI();
    let two = T::lit(2.0);
    let n = g.refractive_index;
    let cf = closed_form(m, g);
    let mf = T::lit(f64::from(m));
    let l2 = cf.optical * cf.optical;
    let s = cf.reflectance * cf.phase_arg.sin();
    let dasin_dx = cf.reflectance * cf.phase_arg.cos() / (T::one() - s * s).sqrt();
    let prefactor = c / (two * pi * cf.optical);

    // dL/dLa = 1, dD/dLa = 1; dL/dd = n, dD/dd = -n
    let dx_dla = mf * pi * (cf.optical - cf.diff) / l2;
    let dx_dd = -mf * pi * n * (cf.optical + cf.diff) / l2;

    let dnu_dla = -cf.frequency / cf.optical - prefactor * cf.parity * dasin_dx * dx_dla;
    let dnu_dd = -cf.frequency * n / cf.optical - prefactor * cf.parity * dasin_dx * dx_dd;
    if g.is_bare() {
        let nu = c * T::lit(f64::from(m)) / (two * g.air_gap);
        return Ok((-nu / g.air_gap, dnu_dd));
    }
    Ok((dnu_dla, dnu_dd))
}

/// Frequency-vs-air-gap table for a set of branches.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionTable<T> {
    pub air_gaps: Vec<T>,
    pub modes: Vec<u32>,
    /// `frequencies[i][j]` is mode `modes[j]` at `air_gaps[i]`.
    pub frequencies: Vec<Vec<T>>,
}

impl<T: Real> DispersionTable<T> {
    /// Rows `(L_a, m, ν)` in grid order.
    pub fn rows(&self) -> impl Iterator<Item = (T, u32, T)> + '_ {
        self.air_gaps.iter().enumerate().flat_map(move |(i, &la)| {
            self.modes
                .iter()
                .zip(&self.frequencies[i])
                .map(move |(&m, &nu)| (la, m, nu))
        })
    }

    /// Smallest spacing between adjacent branches anywhere on the grid.
    pub fn min_branch_gap(&self) -> Option<T> {
        self.frequencies
            .iter()
            .flat_map(|row| row.windows(2).map(|w| w[1] - w[0]))
            .fold(None, |acc: Option<T>, gap| Some(acc.map_or(gap, |a| a.min(gap))))
    }
}

/// Inclusive air-gap grid `start, start + step, …, ≤ end`.
pub fn air_gap_grid<T: Real>(start: T, end: T, step: T) -> Result<Vec<T>> {
    if !(start > T::zero() && end >= start && step > T::zero() && end.is_finite()) {
        return Err(Error::param(
            "air gap range",
            format!("need 0 < start <= end and step > 0, got [{start}, {end}] step {step}"),
        ));
    }
    let count = ((end - start) / step + T::lit(1e-9)).floor().to_usize().unwrap_or(0) + 1;
    Ok((0..count).map(|i| start + step * T::lit(i as f64)).collect())
}

/// Closed-form branches `m_min..=m_max` over an air-gap grid.
pub fn dispersion_curves<T: Real>(
    g0: &CavityGeometry<T>,
    air_gap_range: (T, T, T),
    modes: std::ops::RangeInclusive<u32>,
) -> Result<DispersionTable<T>> {
    let (start, end, step) = air_gap_range;
    let air_gaps = air_gap_grid(start, end, step)?;
    if modes.is_empty() || *modes.start() == 0 {
        return Err(Error::param("mode range", "need 1 <= m_min <= m_max"));
    }
    let modes: Vec<u32> = modes.collect();
    let frequencies = air_gaps
        .iter()
        .map(|&la| {
            let g = g0.with_air_gap(la)?;
            modes.iter().map(|&m| resonance_approx(m, &g)).collect()
        })
        .collect::<Result<Vec<Vec<T>>>>()?;
    Ok(DispersionTable {
        air_gaps,
        modes,
        frequencies,
    })
}

/// Slope extrema of one branch bracketing a query point. Character is
/// interpolated linearly in frequency between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacterWindow<T> {
    pub mode: u32,
    pub steep_air_gap: T,
    pub steep_frequency: T,
    pub flat_air_gap: T,
    pub flat_frequency: T,
}

impl<T: Real> CharacterWindow<T> {
    pub fn character(&self, frequency: T) -> T {
        let c = (frequency - self.flat_frequency) / (self.steep_frequency - self.flat_frequency);
        c.max(T::zero()).min(T::one())
    }
}

const CHARACTER_GRID: usize = 401;

/// Locates the steepest and flattest points of branch `m` adjacent to
/// `g.air_gap`.
pub fn character_window<T: Real>(m: u32, g: &CavityGeometry<T>) -> Result<CharacterWindow<T>> {
    g.validate()?;
    check_mode(m)?;
    if g.is_bare() {
        return Err(Error::PeriodNotFound { mode: m });
    }
    let optical = g.optical_length();
    let nd = g.refractive_index * g.membrane_thickness;
    // the sine argument advances by 2π over this change of L_a
    let period = optical * optical / (T::lit(f64::from(m)) * nd);
    let half_window = period * T::lit(1.25);
    let lo = (g.air_gap - half_window).max(g.air_gap * T::lit(1e-3));
    let hi = g.air_gap + half_window;

    let slope_at = |la: T| -> T {
        g.with_air_gap(la)
            .and_then(|gg| frequency_slope(m, &gg))
            .unwrap_or(T::nan())
    };
    let n = CHARACTER_GRID;
    let xs: Vec<T> = (0..n)
        .map(|i| lo + (hi - lo) * T::lit(i as f64 / (n - 1) as f64))
        .collect();
    let ys: Vec<T> = xs.iter().map(|&x| slope_at(x)).collect();

    let tol = period * T::lit(1e-10);
    // (air gap, is_maximum)
    let mut extrema: Vec<(T, bool)> = Vec::new();
    for i in 1..n - 1 {
        let (a, b, c) = (ys[i - 1], ys[i], ys[i + 1]);
        if b >= a && b > c {
            let x = golden_section_min(|x| -slope_at(x), xs[i - 1], xs[i + 1], tol);
            extrema.push((x, true));
        } else if b <= a && b < c {
            let x = golden_section_min(slope_at, xs[i - 1], xs[i + 1], tol);
            extrema.push((x, false));
        }
    }
    let pair = extrema
        .windows(2)
        .find(|w| w[0].0 <= g.air_gap && g.air_gap <= w[1].0)
        .ok_or(Error::PeriodNotFound { mode: m })?;
    if pair[0].1 == pair[1].1 {
        return Err(Error::PeriodNotFound { mode: m });
    }
    let (steep, flat) = if pair[0].1 {
        (pair[0].0, pair[1].0)
    } else {
        (pair[1].0, pair[0].0)
    };
    Ok(CharacterWindow {
        mode: m,
        steep_air_gap: steep,
        steep_frequency: resonance_approx(m, &g.with_air_gap(steep)?)?,
        flat_air_gap: flat,
        flat_frequency: resonance_approx(m, &g.with_air_gap(flat)?)?,
    })
}

/// Air-like character of mode `m` at `g`: 1 at the steepest point of the
/// branch, 0 at the flattest, linear in frequency in between. A bare cavity
/// is fully air-like.
pub fn air_character<T: Real>(m: u32, g: &CavityGeometry<T>) -> Result<T> {
    g.validate()?;
    check_mode(m)?;
    if g.is_bare() {
        return Ok(T::one());
    }
    let window = character_window(m, g)?;
    Ok(window.character(resonance_approx(m, g)?))
}

pub fn resonant_mode<T: Real>(m: u32, g: &CavityGeometry<T>) -> Result<ResonantMode<T>> {
    Ok(ResonantMode {
        index: m,
        frequency: resonance_approx(m, g)?,
        slope: frequency_slope(m, g)?,
        air_character: air_character(m, g)?,
    })
}

/// Index of the closed-form mode closest in frequency to `frequency`.
pub fn nearest_mode<T: Real>(g: &CavityGeometry<T>, frequency: T) -> Result<u32> {
    g.validate()?;
    let guess = (frequency / fsr(g)?).round().max(T::one()).to_u32().unwrap_or(1);
    let mut best = (guess, T::infinity());
    for m in guess.saturating_sub(1).max(1)..=guess + 1 {
        let err = (resonance_approx(m, g)? - frequency).abs();
        if err < best.1 {
            best = (m, err);
        }
    }
    Ok(best.0)
}

/// Returns `template` with the air gap adjusted so that closed-form mode `m`
/// resonates at `frequency`. The solution is searched within a quarter
/// wavelength of the nominal gap `m λ/2 − n d`.
pub fn tune_air_gap<T: Real>(m: u32, frequency: T, template: &CavityGeometry<T>) -> Result<CavityGeometry<T>> {
    check_mode(m)?;
    let c = speed_of_light::<T>();
    let wavelength = c / frequency;
    let nominal = T::lit(f64::from(m)) * wavelength * T::lit(0.5)
        - template.refractive_index * template.membrane_thickness;
    let quarter = wavelength * T::lit(0.25);
    let lo = (nominal - quarter).max(wavelength * T::lit(1e-3));
    let hi = nominal + quarter;
    if !(hi > lo) {
        return Err(Error::param("mode index", "too low for this membrane"));
    }
    let detuning = |la: T| -> T {
        template
            .with_air_gap(la)
            .and_then(|g| resonance_approx(m, &g))
            .map(|nu| nu - frequency)
            .unwrap_or(T::nan())
    };
    let la = bisect(detuning, lo, hi, T::lit(1e-15).max(T::epsilon() * T::lit(4.0)))
        .ok_or_else(|| Error::param("frequency", "mode cannot be tuned to this frequency"))?;
    template.with_air_gap(la)
}

/// Gaussian fundamental mode of the plano-concave cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMode<T> {
    /// Waist radius on the plane mirror, m.
    pub waist: T,
    /// Mode radius on the curved mirror, m.
    pub mirror_radius: T,
    pub rayleigh_range: T,
    /// `π/4 · w0² · (L_a + n d)`, m³.
    pub mode_volume: T,
}

/// Beam waist and mode volume at frequency `ν`.
pub fn beam_waist_and_mode_volume<T: Real>(g: &CavityGeometry<T>, frequency: T) -> Result<GaussianMode<T>> {
    g.validate()?;
    if !(frequency > T::zero()) {
        return Err(Error::param("frequency", "must be > 0"));
    }
    let lg = g.geometric_length();
    let r = g.radius_of_curvature;
    if !(lg > T::zero() && lg < r) {
        return Err(Error::UnstableCavity {
            geometric_length: lg.as_f64(),
            radius: r.as_f64(),
        });
    }
    let wavelength = speed_of_light::<T>() / frequency;
    let rayleigh_range = (lg * (r - lg)).sqrt();
    let waist_sq = wavelength / T::PI() * rayleigh_range;
    let mirror_sq = waist_sq * r / (r - lg);
    Ok(GaussianMode {
        waist: waist_sq.sqrt(),
        mirror_radius: mirror_sq.sqrt(),
        rayleigh_range,
        mode_volume: T::FRAC_PI_4() * waist_sq * g.optical_length(),
    })
}
