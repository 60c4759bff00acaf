//! Modeling and measurement analysis for tunable Fabry-Perot microcavities
//! that enclose a thin high-index membrane (diamond on the plane mirror).
//!
//! The physics modules ([`mode_model`], [`loss_budget`], [`emitter`]) are
//! generic over the floating point type through [`Real`]; the aliases at the
//! crate root fix the scalar to `f64` (and `f32` where it is useful). The
//! data-fitting side ([`scan`]) and file formats ([`io`]) work in `f64`.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod emitter;
pub mod error;
pub mod io;
pub mod loss_budget;
pub mod mode_model;
pub mod numeric;
pub mod quadrature;
pub mod scalar;
pub mod scan;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CavityGeometry = mode_model::CavityGeometry<f64>;
pub type CavityGeometry32 = mode_model::CavityGeometry<f32>;
pub type ResonantMode = mode_model::ResonantMode<f64>;
pub type GaussianMode = mode_model::GaussianMode<f64>;
pub type CharacterWindow = mode_model::CharacterWindow<f64>;
pub type DispersionTable = mode_model::DispersionTable<f64>;

pub type MirrorSpec = loss_budget::MirrorSpec<f64>;
pub type SurfaceSpec = loss_budget::SurfaceSpec<f64>;
pub type LossBudget = loss_budget::LossBudget<f64>;
pub type LossBudget32 = loss_budget::LossBudget<f32>;

pub type EmitterSpec = emitter::EmitterSpec<f64>;
pub type VibrationSpec = emitter::VibrationSpec<f64>;
pub type EmissionResult = emitter::EmissionResult<f64>;
pub type AveragedEmission = emitter::AveragedEmission<f64>;
pub type CouplingSetup = emitter::CouplingSetup<f64>;
