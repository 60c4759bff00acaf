pub mod fit_geometry;
pub mod linewidth;
pub mod modes;
pub mod purcell;
pub mod synth;
pub mod vibration;

use microcavity::mode_model::{nearest_mode, tune_air_gap};
use microcavity::CavityGeometry;

use crate::context::Context;
use crate::failure::Failure;

/// The configured cavity with its air gap tuned so that mode `m` (or the
/// mode nearest the laser) resonates at the laser frequency.
pub fn resonant_geometry(ctx: &Context, mode: Option<u32>) -> Result<(u32, CavityGeometry), Failure> {
    let g0 = ctx.config.geometry()?;
    let nu = ctx.config.laser_frequency_hz;
    let m = match mode {
        Some(m) => m,
        None => nearest_mode(&g0, nu)?,
    };
    let g = tune_air_gap(m, nu, &g0)?;
    Ok((m, g))
}

/// `f64` as written in tables and metadata.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
