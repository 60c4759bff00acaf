use approx::assert_relative_eq;
use microcavity::emitter::{entanglement_rate_gain, vibration_averaged_emission};
use microcavity::loss_budget::{
    aperture_for_clipping_loss, bare_finesse, clipping_loss, effective_finesse, finesse_from_loss,
    interface_scattering_loss, LossBudget,
};
use microcavity::mode_model::tune_air_gap;
use microcavity::{CavityGeometry, CouplingSetup, EmitterSpec, MirrorSpec, SurfaceSpec, VibrationSpec};
use proptest::prelude::*;
use std::f64::consts::TAU;

const NU: f64 = 471.3e12;

fn tuned_diamond(m: u32) -> CavityGeometry {
    let template = CavityGeometry::new(5e-6, 4e-6, 2.417, 18.4e-6).unwrap();
    tune_air_gap(m, NU, &template).unwrap()
}

fn antinode_tenth() -> f64 {
    299_792_458.0 / NU / (10.0 * 2.417)
}

#[test]
fn reference_budget_and_scattering() {
    let bare = bare_finesse(&MirrorSpec::new(50.0, 70.0).unwrap(), &MirrorSpec::new(0.0, 100.0).unwrap()).unwrap();
    assert_relative_eq!(bare.total(), 220.0);
    assert_relative_eq!(bare.finesse(), TAU / 220e-6, max_relative = 1e-12);
    let s = interface_scattering_loss(&SurfaceSpec::new(0.35e-9).unwrap(), 636e-9, 2.417).unwrap();
    let oracle = ((2.417 - 1.0) * 4.0 * std::f64::consts::PI * 0.35e-9 / 636e-9_f64).powi(2) * 1e6;
    assert_relative_eq!(s, oracle, max_relative = 1e-12);
}

#[test]
fn entanglement_gain_is_squared_product() {
    assert_eq!(entanglement_rate_gain(13.0, 3.0).unwrap(), 1521.0);
    assert!(entanglement_rate_gain(-1.0, 3.0).is_err());
}

#[test]
fn mismatch_strictly_reduces_emission() {
    let setup = CouplingSetup::new(&tuned_diamond(50), 50, 5000.0).unwrap();
    let ideal = EmitterSpec::ideal(0.03, 12e-9).unwrap();
    let off = EmitterSpec::new(0.03, 12e-9, 30f64.to_radians(), antinode_tenth()).unwrap();
    let v = VibrationSpec::from_fwhm(0.8e-9).unwrap();
    assert!(setup.on_resonance(&off).unwrap().p_zpl_cavity < setup.on_resonance(&ideal).unwrap().p_zpl_cavity);
    let a = setup.vibration_averaged(&ideal, &v).unwrap();
    let b = setup.vibration_averaged(&off, &v).unwrap();
    assert!(b.result.p_zpl_cavity < a.result.p_zpl_cavity);
    assert!(b.result.lifetime > a.result.lifetime);
}

#[test]
fn zero_vibration_reproduces_resonant_values_bit_for_bit() {
    let g = tuned_diamond(50);
    let e = EmitterSpec::new(0.03, 12e-9, 0.2, 1e-8).unwrap();
    let setup = CouplingSetup::new(&g, 50, 7000.0).unwrap();
    let avg = vibration_averaged_emission(&e, &g, 50, 7000.0, &VibrationSpec::new(0.0).unwrap()).unwrap();
    assert_eq!(avg.result, setup.on_resonance(&e).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn finesse_times_loss_is_two_pi(total in 1e-3f64..1e5) {
        prop_assert!((finesse_from_loss(total) * total * 1e-6 - TAU).abs() < 1e-12 * TAU);
    }

    #[test]
    fn budget_total_ignores_item_order(items in prop::collection::vec(0.0f64..500.0, 1..8)) {
        prop_assume!(items.iter().sum::<f64>() > 0.0);
        let fwd = LossBudget::from_items(items.iter().enumerate().map(|(i, &v)| (format!("i{i}"), v))).unwrap();
        let rev = LossBudget::from_items(items.iter().enumerate().rev().map(|(i, &v)| (format!("i{i}"), v))).unwrap();
        prop_assert!((fwd.total() - rev.total()).abs() <= 1e-12 * fwd.total());
        prop_assert!((fwd.finesse() - rev.finesse()).abs() <= 1e-12 * fwd.finesse());
    }

    #[test]
    fn effective_finesse_grows_with_air_character(c1 in 0.0f64..1.0, c2 in 0.0f64..1.0) {
        let bare = bare_finesse(&MirrorSpec::new(50.0, 70.0).unwrap(), &MirrorSpec::new(0.0, 100.0).unwrap()).unwrap();
        let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        let f_lo = effective_finesse(&bare, 96.0, lo, 344.0).unwrap().finesse();
        let f_hi = effective_finesse(&bare, 96.0, hi, 344.0).unwrap().finesse();
        prop_assert!(f_lo <= f_hi);
        prop_assert!(f_hi <= bare.finesse() * (1.0 + 1e-12));
    }

    #[test]
    fn clipping_aperture_inverts(m in 42u32..60, target in 0.01f64..1000.0) {
        let g = tuned_diamond(m);
        let a = aperture_for_clipping_loss(&g, NU, target).unwrap();
        let back = clipping_loss(&g.with_aperture(a).unwrap(), NU).unwrap();
        prop_assert!((back - target).abs() <= 1e-9 * target);
    }

    #[test]
    fn cavity_fraction_complements_lifetime(finesse in 100.0f64..50000.0, theta in 0.0f64..1.5) {
        let setup = CouplingSetup::new(&tuned_diamond(50), 50, finesse).unwrap();
        let e = EmitterSpec::new(0.03, 12e-9, theta, 0.0).unwrap();
        let r = setup.on_resonance(&e).unwrap();
        prop_assert!((r.p_zpl_cavity - (1.0 - r.lifetime / 12e-9)).abs() < 1e-12);
    }

    #[test]
    fn emission_rises_and_lifetime_falls_with_finesse(f1 in 1000.0f64..30000.0, f2 in 1000.0f64..30000.0) {
        prop_assume!((f1 - f2).abs() > 1.0);
        let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
        let g = tuned_diamond(50);
        let e = EmitterSpec::ideal(0.03, 12e-9).unwrap();
        let at = |f: f64| CouplingSetup::new(&g, 50, f).unwrap().on_resonance(&e).unwrap();
        prop_assert!(at(lo).p_zpl_cavity < at(hi).p_zpl_cavity);
        prop_assert!(at(lo).lifetime > at(hi).lifetime);
    }
}

#[test]
fn unresolvable_vibration_is_flagged() {
    // σ thirty-odd length linewidths wide: the largest rule cannot resolve the peak
    let setup = CouplingSetup::new(&tuned_diamond(50), 50, 5000.0).unwrap();
    let e = EmitterSpec::ideal(0.03, 12e-9).unwrap();
    let a = setup.vibration_averaged(&e, &VibrationSpec::new(3e-9).unwrap()).unwrap();
    assert!(!a.converged);
    assert_eq!(a.nodes, microcavity::quadrature::MAX_NODES);
    assert!(a.result.p_zpl_cavity < 0.01);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn emission_falls_with_vibration(s1 in 0.01e-9f64..1.0e-9, s2 in 0.01e-9f64..1.0e-9) {
        prop_assume!((s1 - s2).abs() > 1e-12);
        let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
        let setup = CouplingSetup::new(&tuned_diamond(50), 50, 5000.0).unwrap();
        let e = EmitterSpec::ideal(0.03, 12e-9).unwrap();
        let p = |s: f64| {
            let a = setup.vibration_averaged(&e, &VibrationSpec::new(s).unwrap()).unwrap();
            assert!(a.converged);
            a.result.p_zpl_cavity
        };
        prop_assert!(p(lo) > p(hi));
    }
}

#[test]
fn reported_vibration_level_keeps_emission_above_ten_times_branching() {
    // 45 half-wavelengths, finesse 5000, 0.80 nm FWHM displacement spread
    let setup = CouplingSetup::new(&tuned_diamond(45), 45, 5000.0).unwrap();
    let e = EmitterSpec::ideal(0.03, 12e-9).unwrap();
    let a = setup.vibration_averaged(&e, &VibrationSpec::from_fwhm(0.80e-9).unwrap()).unwrap();
    assert!(a.converged);
    assert!(
        a.result.p_zpl_cavity > 10.0 * 0.03,
        "averaged ZPL fraction {:.4} does not exceed 10x the free branching ratio",
        a.result.p_zpl_cavity
    );
}
