//! Round-trip loss budgets and the finesse they imply.
//!
//! Losses are carried in ppm of circulating power per round trip and add
//! linearly; finesse is `2π / (total · 10⁻⁶)`.

use crate::error::{Error, Result};
use crate::mode_model::{beam_waist_and_mode_volume, CavityGeometry};
use crate::scalar::Real;

const PPM: f64 = 1e6;

/// Transmission and absorption/scatter loss of one mirror, ppm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorSpec<T> {
    pub transmission: T,
    pub loss: T,
}

impl<T: Real> MirrorSpec<T> {
    pub fn new(transmission: T, loss: T) -> Result<Self> {
        let ok = |v: T| v >= T::zero() && v < T::lit(PPM);
        if !ok(transmission) {
            return Err(Error::param("mirror transmission", format!("need 0 <= T < 1e6 ppm, got {transmission}")));
        }
        if !ok(loss) {
            return Err(Error::param("mirror loss", format!("need 0 <= L < 1e6 ppm, got {loss}")));
        }
        Ok(Self { transmission, loss })
    }

    pub fn total(&self) -> T {
        self.transmission + self.loss
    }
}

/// RMS roughness of the membrane surface, m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSpec<T> {
    pub rms_roughness: T,
}

impl<T: Real> SurfaceSpec<T> {
    pub fn new(rms_roughness: T) -> Result<Self> {
        if !(rms_roughness >= T::zero()) {
            return Err(Error::param("rms roughness", "must be >= 0"));
        }
        Ok(Self { rms_roughness })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossItem<T> {
    pub label: String,
    pub ppm: T,
}

/// Itemized round-trip loss and the resulting finesse.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBudget<T> {
    items: Vec<LossItem<T>>,
    total: T,
    finesse: T,
}

impl<T: Real> LossBudget<T> {
    pub fn from_items<I, S>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
    {
        let items: Vec<LossItem<T>> = items
            .into_iter()
            .map(|(label, ppm)| LossItem {
                label: label.into(),
                ppm,
            })
            .collect();
        for item in &items {
            if !(item.ppm >= T::zero() && item.ppm.is_finite()) {
                return Err(Error::param("loss item", format!("`{}` must be >= 0 ppm", item.label)));
            }
        }
        let total = items.iter().fold(T::zero(), |acc, i| acc + i.ppm);
        if total == T::zero() {
            return Err(Error::ZeroTotalLoss);
        }
        Ok(Self {
            items,
            total,
            finesse: finesse_from_loss(total),
        })
    }

    /// Budget with one extra item appended.
    pub fn with_item(&self, label: impl Into<String>, ppm: T) -> Result<Self> {
        let mut items: Vec<(String, T)> = self.items.iter().map(|i| (i.label.clone(), i.ppm)).collect();
        items.push((label.into(), ppm));
        Self::from_items(items)
    }

    pub fn items(&self) -> &[LossItem<T>] {
        &self.items
    }

    /// Total round-trip loss, ppm.
    pub fn total(&self) -> T {
        self.total
    }

    pub fn finesse(&self) -> T {
        self.finesse
    }
}

/// `2π / (loss · 10⁻⁶)` for a loss given in ppm.
pub fn finesse_from_loss<T: Real>(total_ppm: T) -> T {
    T::TAU() * T::lit(PPM) / total_ppm
}

/// Budget of the empty cavity from its two mirrors.
pub fn bare_finesse<T: Real>(fiber: &MirrorSpec<T>, plane: &MirrorSpec<T>) -> Result<LossBudget<T>> {
    LossBudget::from_items([
        ("fiber transmission", fiber.transmission),
        ("fiber loss", fiber.loss),
        ("plane transmission", plane.transmission),
        ("plane loss", plane.loss),
    ])
}

/// Scattering at the rough membrane/air interface per round trip,
/// `((n − 1) · 4πσ/λ)²`, in ppm.
pub fn interface_scattering_loss<T: Real>(surface: &SurfaceSpec<T>, wavelength: T, refractive_index: T) -> Result<T> {
    if !(wavelength > T::zero()) {
        return Err(Error::param("wavelength", "must be > 0"));
    }
    let phase = (refractive_index - T::one()) * T::lit(4.0) * T::PI() * surface.rms_roughness / wavelength;
    Ok(phase * phase * T::lit(PPM))
}

/// Power spilling past the fiber-mirror aperture on one reflection,
/// `exp(−2a²/w_m²)` in ppm, with `w_m` the Gaussian mode radius on the curved
/// mirror.
pub fn clipping_loss<T: Real>(g: &CavityGeometry<T>, frequency: T) -> Result<T> {
    let aperture = g
        .aperture_radius
        .ok_or_else(|| Error::param("aperture radius", "required for clipping loss"))?;
    let mode = beam_waist_and_mode_volume(g, frequency)?;
    let ratio = aperture / mode.mirror_radius;
    Ok((-T::lit(2.0) * ratio * ratio).exp() * T::lit(PPM))
}

/// Aperture radius for which the clipping loss at `g` equals `target_ppm`.
pub fn aperture_for_clipping_loss<T: Real>(g: &CavityGeometry<T>, frequency: T, target_ppm: T) -> Result<T> {
    if !(target_ppm > T::zero() && target_ppm < T::lit(PPM)) {
        return Err(Error::param("target clipping loss", "need 0 < loss < 1e6 ppm"));
    }
    let mode = beam_waist_and_mode_volume(g, frequency)?;
    let fraction = target_ppm / T::lit(PPM);
    Ok(mode.mirror_radius * (-fraction.ln() * T::lit(0.5)).sqrt())
}

/// Plane-mirror coating penalty such that a fully membrane-like mode, which
/// also carries the full interface scattering, has `1/reduction` of the bare
/// finesse.
pub fn plane_mirror_penalty<T: Real>(bare: &LossBudget<T>, scattering_ppm: T, reduction: T) -> Result<T> {
    if !(reduction >= T::one()) {
        return Err(Error::param("finesse reduction", "must be >= 1"));
    }
    let penalty = (reduction - T::one()) * bare.total() - scattering_ppm;
    if penalty < T::zero() {
        return Err(Error::param(
            "finesse reduction",
            "scattering alone already exceeds the requested reduction",
        ));
    }
    Ok(penalty)
}

/// Adds interface scattering and the plane-mirror penalty, both weighted by
/// `1 − C`, to the bare budget.
pub fn effective_finesse<T: Real>(
    bare: &LossBudget<T>,
    scattering_ppm: T,
    air_character: T,
    plane_mirror_penalty_ppm: T,
) -> Result<LossBudget<T>> {
    if !(T::zero()..=T::one()).contains(&air_character) {
        return Err(Error::param("air character", "must lie in [0, 1]"));
    }
    let weight = T::one() - air_character;
    bare.with_item("interface scattering", weight * scattering_ppm)?
        .with_item("plane mirror coating penalty", weight * plane_mirror_penalty_ppm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn reference_mirrors() -> (MirrorSpec<f64>, MirrorSpec<f64>) {
        (MirrorSpec::new(50.0, 70.0).unwrap(), MirrorSpec::new(0.0, 100.0).unwrap())
    }

    #[test]
    fn bare_budget_of_the_fiber_cavity() {
        let (fiber, plane) = reference_mirrors();
        let b = bare_finesse(&fiber, &plane).unwrap();
        assert_eq!(b.total(), 220.0);
        assert_relative_eq!(b.finesse(), TAU / 220e-6, max_relative = 1e-15);
        assert_eq!(b.finesse().round(), 28560.0);
        assert_eq!(b.items().len(), 4);
    }

    #[test]
    fn single_transmission_of_two_pi_ppm_gives_a_million() {
        let b = bare_finesse(
            &MirrorSpec::new(TAU, 0.0).unwrap(),
            &MirrorSpec::new(0.0, 0.0).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(b.finesse(), 1e6, max_relative = 1e-15);
    }

    #[test]
    fn doubling_every_item_halves_finesse() {
        let b1 = LossBudget::from_items([("a", 10.0), ("b", 33.0)]).unwrap();
        let b2 = LossBudget::from_items([("a", 20.0), ("b", 66.0)]).unwrap();
        assert_relative_eq!(b2.finesse(), 0.5 * b1.finesse(), max_relative = 1e-15);
    }

    #[test]
    fn zero_loss_is_an_error() {
        let zero = MirrorSpec::new(0.0, 0.0).unwrap();
        assert!(matches!(bare_finesse(&zero, &zero), Err(Error::ZeroTotalLoss)));
        assert!(MirrorSpec::new(-1.0, 0.0).is_err());
        assert!(MirrorSpec::new(0.0, 1e6).is_err());
    }

    #[test]
    fn scattering_estimate_for_the_membrane() {
        let s = SurfaceSpec::new(0.35e-9).unwrap();
        let loss: f64 = interface_scattering_loss(&s, 636e-9, 2.417).unwrap();
        assert!((loss - 96.0).abs() < 0.5, "{loss}");
        let (fiber, plane) = reference_mirrors();
        let f = bare_finesse(&fiber, &plane).unwrap().with_item("scatter", loss).unwrap().finesse();
        assert!((f - 19_900.0).abs() < 100.0, "{f}");
        assert_eq!(interface_scattering_loss(&SurfaceSpec::new(0.0).unwrap(), 636e-9, 2.417).unwrap(), 0.0);
        let four = interface_scattering_loss(&SurfaceSpec::new(1.4e-9).unwrap(), 636e-9, 2.417).unwrap();
        assert_relative_eq!(four, 16.0 * loss, max_relative = 1e-12);
    }

    #[test]
    fn character_weighting_of_membrane_losses() {
        let (fiber, plane) = reference_mirrors();
        let bare = bare_finesse(&fiber, &plane).unwrap();
        let penalty = plane_mirror_penalty(&bare, 96.0, 3.0).unwrap();
        assert_relative_eq!(penalty, 344.0, max_relative = 1e-12);

        let air = effective_finesse(&bare, 96.0, 1.0, penalty).unwrap();
        assert_relative_eq!(air.finesse(), bare.finesse(), max_relative = 1e-15);
        let membrane = effective_finesse(&bare, 96.0, 0.0, penalty).unwrap();
        assert_relative_eq!(membrane.finesse(), bare.finesse() / 3.0, max_relative = 1e-12);
        assert_eq!(membrane.finesse().round(), 9520.0);

        let mut last = 0.0;
        for i in 0..=100 {
            let f = effective_finesse(&bare, 96.0, i as f64 / 100.0, penalty).unwrap().finesse();
            assert!(f >= last);
            last = f;
        }
        assert!(effective_finesse(&bare, 96.0, 1.5, penalty).is_err());
    }

    #[test]
    fn clipping_grows_with_length_and_vanishes_for_wide_apertures() {
        use crate::mode_model::tune_air_gap;
        let template = CavityGeometry::new(5e-6, 4e-6, 2.417, 18.4e-6).unwrap();
        let nu = 471.3e12;
        let short = tune_air_gap(45, nu, &template).unwrap().with_aperture(4e-6).unwrap();
        let long = tune_air_gap(55, nu, &template).unwrap().with_aperture(4e-6).unwrap();
        assert!(clipping_loss(&long, nu).unwrap() > clipping_loss(&short, nu).unwrap());
        let wide = short.with_aperture(1.0).unwrap();
        assert_eq!(clipping_loss(&wide, nu).unwrap(), 0.0);
        assert!(clipping_loss(&template, nu).is_err());
    }

    #[test]
    fn aperture_calibration_inverts_clipping() {
        let g = CavityGeometry::new(7.86e-6, 4e-6, 2.417, 18.4e-6).unwrap();
        let a = aperture_for_clipping_loss(&g, 471.3e12, 628.0).unwrap();
        let back = clipping_loss(&g.with_aperture(a).unwrap(), 471.3e12).unwrap();
        assert_relative_eq!(back, 628.0, max_relative = 1e-10);
    }

    #[test]
    fn generic_over_f32() {
        let b: LossBudget<f32> = LossBudget::from_items([("x", 220.0f32)]).unwrap();
        assert!((b.finesse() - 28_559.93).abs() < 0.1);
    }
}
