//! Configuration and file formats shared by the command-line tool.
//!
//! All files use SI base units (m, Hz, s); loss items are in ppm.

mod config;
mod table;

pub use config::RunConfig;
pub use table::{
    read_mode_points, read_scan, scan_to_table, table_to_scan, write_mode_points, write_scan, PlotTable,
    MODE_POINT_COLUMNS,
};
