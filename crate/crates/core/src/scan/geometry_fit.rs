//! Air gap and membrane thickness from resonance frequencies measured at
//! several piezo displacements.
//!
//! Each point is modelled by the closed-form resonance of mode `mᵢ` at air gap
//! `L_a0 + ΔLᵢ`. Mode indices come from nearest-branch matching against the
//! current estimate and are re-matched after every fit until they settle.
//! Because an absolute length is only known modulo `λ/2`, the fit is also run
//! with every index shifted by ±1 (and `L_a0` by ±λ/2), and all three
//! solutions are returned, best first.

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{Error, Result};
use crate::mode_model::{nearest_mode, resonance_approx, resonance_gradient};
use crate::CavityGeometry;
use crate::scan::fit::{least_squares, FitOutcome, Residuals};
use crate::scan::record::ModePoint;
use nalgebra::DMatrix;

/// Minimum number of points accepted by [`fit_geometry`].
pub const MIN_POINTS: usize = 4;
const MAX_REASSIGNMENTS: usize = 10;
/// `|corr(L_a0, d)|` above which the thickness is flagged as not identifiable.
pub const CORRELATION_LIMIT: f64 = 0.999;

const LENGTH_UNIT: f64 = 1e-6;
const FREQUENCY_UNIT: f64 = 1e9;

/// One fitted solution for a fixed mode-index assignment.
#[derive(Debug, Clone)]
pub struct GeometrySolution {
    /// Fitted geometry with the air gap at zero displacement.
    pub geometry: CavityGeometry,
    /// Mode index assigned to each point.
    pub indices: Vec<u32>,
    /// Global index shift relative to the matching from the initial guess.
    pub index_shift: i32,
    /// `ν_model − ν_measured` per point, Hz.
    pub residuals: Vec<f64>,
    /// Root mean square residual, Hz.
    pub rms: f64,
    pub air_gap_uncertainty: f64,
    /// Zero when the thickness was held fixed.
    pub thickness_uncertainty: f64,
    /// Correlation of air gap and thickness estimates (0 when fixed).
    pub correlation: f64,
    pub thickness_fixed: bool,
    pub thickness_identifiable: bool,
}

/// Best solution plus the neighbouring `λ/2` alternatives.
#[derive(Debug, Clone)]
pub struct GeometryFit {
    /// All converged solutions ordered by increasing RMS residual.
    pub solutions: Vec<GeometrySolution>,
}

impl GeometryFit {
    pub fn best(&self) -> &GeometrySolution {
        &self.solutions[0]
    }
}

type Geometry = CavityGeometry;

struct ModeResiduals<'a> {
    points: &'a [ModePoint],
    indices: &'a [u32],
    template: Geometry,
    fix_thickness: bool,
}

impl ModeResiduals<'_> {
    fn geometry_at(&self, params: &[f64], offset: f64) -> Result<Geometry> {
        let d = if self.fix_thickness {
            self.template.membrane_thickness
        } else {
            params[1] * LENGTH_UNIT
        };
        let g = Geometry {
            air_gap: params[0] * LENGTH_UNIT + offset,
            membrane_thickness: d,
            ..self.template
        };
        g.validate()?;
        Ok(g)
    }
}

impl Residuals for ModeResiduals<'_> {
    fn residual_count(&self) -> usize {
        self.points.len()
    }

    fn residuals(&self, params: &[f64], out: &mut [f64]) -> bool {
        for ((o, p), &m) in out.iter_mut().zip(self.points).zip(self.indices) {
            match self
                .geometry_at(params, p.length_offset)
                .and_then(|g| resonance_approx(m, &g))
            {
                Ok(nu) => *o = (nu - p.frequency) / FREQUENCY_UNIT,
                Err(_) => return false,
            }
        }
        true
    }

    fn jacobian(&self, params: &[f64]) -> Option<DMatrix<f64>> {
        let cols = if self.fix_thickness { 1 } else { 2 };
        let mut jac = DMatrix::zeros(self.points.len(), cols);
        for (i, (p, &m)) in self.points.iter().zip(self.indices).enumerate() {
            let g = self.geometry_at(params, p.length_offset).ok()?;
            let (d_la, d_d) = resonance_gradient(m, &g).ok()?;
            jac[(i, 0)] = d_la * LENGTH_UNIT / FREQUENCY_UNIT;
            if !self.fix_thickness {
                jac[(i, 1)] = d_d * LENGTH_UNIT / FREQUENCY_UNIT;
            }
        }
        Some(jac)
    }
}

fn assign(points: &[ModePoint], g: &Geometry) -> Result<Vec<u32>> {
    points
        .iter()
        .map(|p| nearest_mode(&g.with_air_gap(g.air_gap + p.length_offset)?, p.frequency))
        .collect()
}

fn solve(points: &[ModePoint], start: &Geometry, shift: i32, fix_thickness: bool) -> Result<GeometrySolution> {
    let mut current = *start;
    let mut indices = assign(points, &current)?;
    let mut last: Option<(Vec<u32>, FitOutcome)> = None;
    for _ in 0..MAX_REASSIGNMENTS {
        let model = ModeResiduals {
            points,
            indices: &indices,
            template: current,
            fix_thickness,
        };
        let init: Vec<f64> = if fix_thickness {
            vec![current.air_gap / LENGTH_UNIT]
        } else {
            vec![current.air_gap / LENGTH_UNIT, current.membrane_thickness / LENGTH_UNIT]
        };
        let outcome = least_squares(&model, &init)?;
        current = model.geometry_at(&outcome.params, 0.0)?;
        let next = assign(points, &current)?;
        let settled = next == indices;
        last = Some((indices, outcome));
        if settled {
            break;
        }
        indices = next;
    }
    let (indices, outcome) = last.expect("at least one fit ran");
    let residuals: Vec<f64> = outcome.residuals.iter().map(|r| r * FREQUENCY_UNIT).collect();
    let rms = (outcome.ssr / points.len() as f64).sqrt() * FREQUENCY_UNIT;
    let (thickness_uncertainty, correlation) = if fix_thickness {
        (0.0, 0.0)
    } else {
        (outcome.std_error(1) * LENGTH_UNIT, outcome.correlation(0, 1))
    };
    let thickness_identifiable = !fix_thickness && correlation.abs() < CORRELATION_LIMIT && thickness_uncertainty.is_finite();
    Ok(GeometrySolution {
        geometry: current,
        indices,
        index_shift: shift,
        residuals,
        rms,
        air_gap_uncertainty: outcome.std_error(0) * LENGTH_UNIT,
        thickness_uncertainty,
        correlation,
        thickness_fixed: fix_thickness,
        thickness_identifiable,
    })
}

/// Fits air gap and membrane thickness to `points`, starting from `init`.
///
/// A zero initial thickness keeps the thickness fixed at zero (bare cavity),
/// so only the air gap is fitted.
pub fn fit_geometry(points: &[ModePoint], init: &CavityGeometry) -> Result<GeometryFit> {
    if points.len() < MIN_POINTS {
        return Err(Error::param(
            "mode points",
            format!("need at least {MIN_POINTS}, got {}", points.len()),
        ));
    }
    init.validate()?;
    let fix_thickness = init.membrane_thickness == 0.0;
    let mean_frequency = points.iter().map(|p| p.frequency).sum::<f64>() / points.len() as f64;
    let half_wave = 0.5 * SPEED_OF_LIGHT / mean_frequency;

    let mut solutions = Vec::new();
    let mut first_error = None;
    for shift in [0, -1, 1] {
        let start = init.air_gap + f64::from(shift) * half_wave;
        let outcome = init
            .with_air_gap(start)
            .and_then(|g| solve(points, &g, shift, fix_thickness));
        match outcome {
            Ok(sol) => solutions.push(sol),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if solutions.is_empty() {
        return Err(first_error.unwrap_or_else(|| Error::NonConvergence("no index assignment converged".into())));
    }
    solutions.sort_by(|a, b| a.rms.total_cmp(&b.rms));
    Ok(GeometryFit { solutions })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(truth: &Geometry) -> Vec<ModePoint> {
        let mut out = Vec::new();
        for k in 0..12 {
            let offset = k as f64 * 0.12e-6;
            let g = truth.with_air_gap(truth.air_gap + offset).unwrap();
            for m in 1..200 {
                let nu = resonance_approx(m, &g).unwrap();
                if (440e12..500e12).contains(&nu) {
                    out.push(ModePoint::new(offset, nu).unwrap());
                }
            }
        }
        out
    }

    #[test]
    fn noiseless_round_trip() {
        let truth = Geometry::new(14.3e-6, 4e-6, 2.417, 18.4e-6).unwrap();
        let init = Geometry::new(14.25e-6, 3.98e-6, 2.417, 18.4e-6).unwrap();
        let fit = fit_geometry(&points(&truth), &init).unwrap();
        let best = fit.best();
        assert!((best.geometry.air_gap / truth.air_gap - 1.0).abs() < 1e-9);
        assert!((best.geometry.membrane_thickness / truth.membrane_thickness - 1.0).abs() < 1e-9);
        assert!(best.thickness_identifiable);
        assert_eq!(fit.solutions.len(), 3);
        assert!(fit.solutions[1].rms > 1e3 * best.rms.max(1.0));
    }

    #[test]
    fn bare_cavity_keeps_thickness_at_zero() {
        let truth = Geometry::bare(9.1e-6, 18.4e-6).unwrap();
        let init = Geometry::bare(9.0e-6, 18.4e-6).unwrap();
        let fit = fit_geometry(&points(&truth), &init).unwrap();
        let best = fit.best();
        assert!(best.thickness_fixed);
        assert_eq!(best.geometry.membrane_thickness, 0.0);
        assert!((best.geometry.air_gap / truth.air_gap - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_points() {
        let init = Geometry::bare(9.0e-6, 18.4e-6).unwrap();
        let pts = vec![ModePoint::new(0.0, 450e12).unwrap(); 3];
        assert!(matches!(fit_geometry(&pts, &init), Err(Error::InvalidParameter { .. })));
    }
}
