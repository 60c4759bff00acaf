//! Weak-coupling emission of a single emitter (an NV center) into one
//! cavity mode.
//!
//! The cavity adds a decay channel of rate `F_eff · β₀ · Γ₀` on top of the
//! unchanged free-space rate `Γ₀`, where `β₀` is the free-space branching
//! ratio into the zero-phonon line. `F_eff` is the Purcell factor reduced by
//! the dipole-orientation and axial-position overlaps and by any detuning of
//! the cavity length from resonance.

use crate::constants::{gaussian_fwhm_factor, speed_of_light};
use crate::error::{Error, Result};
use crate::mode_model::{beam_waist_and_mode_volume, frequency_slope, fsr, resonance_approx, CavityGeometry};
use crate::quadrature::{expectation_adaptive, DEFAULT_REL_TOL};
use crate::scalar::Real;

/// Free-space emitter properties and how it sits in the cavity field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterSpec<T> {
    /// Fraction of free-space emission in the zero-phonon line.
    pub zpl_branching: T,
    /// Excited-state lifetime without cavity, s.
    pub free_lifetime: T,
    /// Angle between dipole and cavity polarization, rad.
    pub dipole_mismatch: T,
    /// Axial distance from the nearest field antinode, measured inside the
    /// membrane, m.
    pub antinode_offset: T,
}

impl<T: Real> EmitterSpec<T> {
    pub fn new(zpl_branching: T, free_lifetime: T, dipole_mismatch: T, antinode_offset: T) -> Result<Self> {
        if !(zpl_branching > T::zero() && zpl_branching < T::one()) {
            return Err(Error::param("zpl branching", format!("need 0 < β₀ < 1, got {zpl_branching}")));
        }
        if !(free_lifetime > T::zero() && free_lifetime.is_finite()) {
            return Err(Error::param("free lifetime", "must be > 0"));
        }
        if !(dipole_mismatch >= T::zero() && dipole_mismatch <= T::FRAC_PI_2()) {
            return Err(Error::param("dipole mismatch", "must lie in [0, π/2]"));
        }
        if !antinode_offset.is_finite() {
            return Err(Error::param("antinode offset", "must be finite"));
        }
        Ok(Self {
            zpl_branching,
            free_lifetime,
            dipole_mismatch,
            antinode_offset,
        })
    }

    /// Perfectly oriented emitter at an antinode.
    pub fn ideal(zpl_branching: T, free_lifetime: T) -> Result<Self> {
        Self::new(zpl_branching, free_lifetime, T::zero(), T::zero())
    }

    /// Checks `|δz| ≤ λ/(4n)` for the wavelength in the membrane.
    pub fn check_offset(&self, frequency: T, refractive_index: T) -> Result<()> {
        let quarter = speed_of_light::<T>() / (frequency * refractive_index * T::lit(4.0));
        if self.antinode_offset.abs() > quarter * (T::one() + T::epsilon() * T::lit(8.0)) {
            return Err(Error::param(
                "antinode offset",
                format!("|δz| = {} exceeds λ/(4n) = {quarter}", self.antinode_offset.abs()),
            ));
        }
        Ok(())
    }

    /// Overlap factor `cos²θ · cos²(2π n δz / λ)`.
    pub fn mismatch_factor(&self, frequency: T, refractive_index: T) -> T {
        let lambda = speed_of_light::<T>() / frequency;
        let phase = T::TAU() * refractive_index * self.antinode_offset / lambda;
        let a = self.dipole_mismatch.cos();
        let b = phase.cos();
        a * a * b * b
    }
}

/// Gaussian cavity-length noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VibrationSpec<T> {
    /// Standard deviation of the length displacement, m.
    pub displacement_sigma: T,
}

impl<T: Real> VibrationSpec<T> {
    pub fn new(displacement_sigma: T) -> Result<Self> {
        if !(displacement_sigma >= T::zero()) {
            return Err(Error::param("displacement sigma", "must be >= 0"));
        }
        Ok(Self { displacement_sigma })
    }

    pub fn from_fwhm(fwhm: T) -> Result<Self> {
        Self::new(fwhm / gaussian_fwhm_factor::<T>())
    }

    pub fn fwhm(&self) -> T {
        self.displacement_sigma * gaussian_fwhm_factor::<T>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionResult<T> {
    /// Purcell factor of an ideal emitter at the given detuning.
    pub purcell_factor: T,
    /// Purcell factor after orientation and position overlaps.
    pub effective_purcell: T,
    /// Excited-state lifetime, s.
    pub lifetime: T,
    /// Probability that a decay emits a ZPL photon into the cavity mode.
    pub p_zpl_cavity: T,
}

/// `Q = F ν / FSR`.
pub fn quality_factor<T: Real>(finesse: T, g: &CavityGeometry<T>, frequency: T) -> Result<T> {
    if !(finesse > T::zero()) {
        return Err(Error::param("finesse", "must be > 0"));
    }
    Ok(finesse * frequency / fsr(g)?)
}

/// `F_p = 3/(4π²) · (λ/n)³ · Q/V`.
pub fn purcell_factor<T: Real>(quality: T, mode_volume: T, frequency: T, refractive_index: T) -> Result<T> {
    for (name, v) in [
        ("quality factor", quality),
        ("mode volume", mode_volume),
        ("frequency", frequency),
        ("refractive index", refractive_index),
    ] {
        if !(v > T::zero()) {
            return Err(Error::param(name, "must be > 0"));
        }
    }
    let lambda_n = speed_of_light::<T>() / (refractive_index * frequency);
    let pi = T::PI();
    Ok(T::lit(3.0) / (T::lit(4.0) * pi * pi) * lambda_n * lambda_n * lambda_n * quality / mode_volume)
}

/// Lifetime and cavity-ZPL probability for Purcell factor `F_p`.
pub fn emission_on_resonance<T: Real>(
    purcell: T,
    emitter: &EmitterSpec<T>,
    frequency: T,
    refractive_index: T,
) -> Result<EmissionResult<T>> {
    if !(purcell >= T::zero()) {
        return Err(Error::param("purcell factor", "must be >= 0"));
    }
    let effective = purcell * emitter.mismatch_factor(frequency, refractive_index);
    Ok(rates(purcell, effective, emitter))
}

fn rates<T: Real>(purcell: T, effective: T, emitter: &EmitterSpec<T>) -> EmissionResult<T> {
    let cavity_rate = effective * emitter.zpl_branching;
    let (lifetime, p) = if cavity_rate.is_infinite() {
        (T::zero(), T::one())
    } else {
        let total = T::one() + cavity_rate;
        (emitter.free_lifetime / total, cavity_rate / total)
    };
    EmissionResult {
        purcell_factor: purcell,
        effective_purcell: effective,
        lifetime,
        p_zpl_cavity: p,
    }
}

/// FWHM of the cavity resonance expressed as a length, `(FSR/F) / |dν/dL_a|`.
pub fn length_linewidth<T: Real>(m: u32, g: &CavityGeometry<T>, finesse: T) -> Result<T> {
    if !(finesse > T::zero()) {
        return Err(Error::param("finesse", "must be > 0"));
    }
    let slope = frequency_slope(m, g)?;
    let nu = resonance_approx(m, g)?;
    if !(slope > nu / g.optical_length() * T::lit(1e-9)) {
        return Err(Error::ZeroSlope { mode: m });
    }
    Ok(fsr(g)? / finesse / slope)
}

/// Purcell factor at length detuning `ΔL`, a Lorentzian of width
/// [`length_linewidth`].
pub fn detuned_purcell<T: Real>(
    purcell_resonant: T,
    detuning: T,
    m: u32,
    g: &CavityGeometry<T>,
    finesse: T,
) -> Result<T> {
    let width = length_linewidth(m, g, finesse)?;
    Ok(lorentzian(purcell_resonant, detuning, width))
}

fn lorentzian<T: Real>(peak: T, detuning: T, fwhm: T) -> T {
    let u = T::lit(2.0) * detuning / fwhm;
    peak / (T::one() + u * u)
}

/// Everything about mode `m` of `g` that the emission model needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSetup<T> {
    pub mode: u32,
    pub frequency: T,
    pub refractive_index: T,
    pub finesse: T,
    pub quality_factor: T,
    pub mode_volume: T,
    pub purcell_resonant: T,
    pub length_fwhm: T,
}

impl<T: Real> CouplingSetup<T> {
    /// Uses the closed-form resonance of mode `m` as the emitter frequency.
    pub fn new(g: &CavityGeometry<T>, m: u32, finesse: T) -> Result<Self> {
        let frequency = resonance_approx(m, g)?;
        let quality = quality_factor(finesse, g, frequency)?;
        let volume = beam_waist_and_mode_volume(g, frequency)?.mode_volume;
        let purcell = purcell_factor(quality, volume, frequency, g.refractive_index)?;
        Ok(Self {
            mode: m,
            frequency,
            refractive_index: g.refractive_index,
            finesse,
            quality_factor: quality,
            mode_volume: volume,
            purcell_resonant: purcell,
            length_fwhm: length_linewidth(m, g, finesse)?,
        })
    }

    pub fn on_resonance(&self, emitter: &EmitterSpec<T>) -> Result<EmissionResult<T>> {
        emission_on_resonance(self.purcell_resonant, emitter, self.frequency, self.refractive_index)
    }

    /// Emission averaged over Gaussian length noise. The lifetime is the
    /// inverse of the averaged total decay rate.
    pub fn vibration_averaged(&self, emitter: &EmitterSpec<T>, vibration: &VibrationSpec<T>) -> Result<AveragedEmission<T>> {
        emitter.check_offset(self.frequency, self.refractive_index)?;
        if vibration.displacement_sigma == T::zero() {
            return Ok(AveragedEmission {
                result: self.on_resonance(emitter)?,
                nodes: 0,
                converged: true,
                rel_change: T::zero(),
            });
        }
        let peak = self.purcell_resonant.as_f64();
        let width = self.length_fwhm.as_f64();
        let overlap = emitter.mismatch_factor(self.frequency, self.refractive_index).as_f64();
        let beta = emitter.zpl_branching.as_f64();
        let avg = expectation_adaptive(vibration.displacement_sigma.as_f64(), DEFAULT_REL_TOL, |dl| {
            let fp = lorentzian(peak, dl, width);
            let rate = fp * overlap * beta;
            [fp, rate / (1.0 + rate)]
        });
        let [mean_purcell, mean_p] = avg.value;
        let effective = T::lit(mean_purcell * overlap);
        let lifetime = emitter.free_lifetime / (T::one() + effective * emitter.zpl_branching);
        Ok(AveragedEmission {
            result: EmissionResult {
                purcell_factor: T::lit(mean_purcell),
                effective_purcell: effective,
                lifetime,
                p_zpl_cavity: T::lit(mean_p),
            },
            nodes: avg.nodes,
            converged: avg.converged,
            rel_change: T::lit(avg.rel_change),
        })
    }
}

/// Vibration-averaged emission plus quadrature diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedEmission<T> {
    pub result: EmissionResult<T>,
    /// Gauss-Hermite nodes of the accepted rule (0 when no averaging was needed).
    pub nodes: usize,
    pub converged: bool,
    pub rel_change: T,
}

/// Shorthand for [`CouplingSetup::vibration_averaged`] on mode `m` of `g`.
pub fn vibration_averaged_emission<T: Real>(
    emitter: &EmitterSpec<T>,
    g: &CavityGeometry<T>,
    m: u32,
    finesse: T,
    vibration: &VibrationSpec<T>,
) -> Result<AveragedEmission<T>> {
    CouplingSetup::new(g, m, finesse)?.vibration_averaged(emitter, vibration)
}

/// Gain in a two-photon heralded entanglement rate, `(zpl · collection)²`.
pub fn entanglement_rate_gain<T: Real>(zpl_gain: T, collection_gain: T) -> Result<T> {
    if !(zpl_gain >= T::zero() && collection_gain >= T::zero()) {
        return Err(Error::param("gain", "must be >= 0"));
    }
    let g = zpl_gain * collection_gain;
    Ok(g * g)
}
