//! Fitting of measured (or synthetic) scan data.

pub mod fit;
pub mod geometry_fit;
pub mod linewidth;
pub mod record;
pub mod synth;
pub mod vibration;

pub use geometry_fit::{fit_geometry, GeometryFit, GeometrySolution};
pub use linewidth::{finesse_from_linewidth, fit_linewidth_sidebanded, LinewidthFit};
pub use record::{ModePoint, ScanAxis, ScanRecord};
pub use vibration::{
    bin_by_sync, displacement_from_broadening, fit_vibration_broadening, BroadeningFit, BroadeningOptions, Centering,
    SyncBin,
};
