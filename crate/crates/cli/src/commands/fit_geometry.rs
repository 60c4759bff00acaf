use std::path::PathBuf;

use microcavity::io::{read_mode_points, PlotTable};
use microcavity::scan::fit_geometry;

use super::num;
use crate::context::{file_label, Context};
use crate::failure::Failure;
use crate::svg::Series;

const COMMAND: &str = "fit-geometry";

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Mode-point CSV (`length_offset_m,frequency_hz`).
    input: PathBuf,
    /// Initial air gap at zero offset, m (default: configured gap).
    #[arg(long, value_name = "M")]
    air_gap_init: Option<f64>,
    /// Initial membrane thickness, m (default: configured thickness; 0 holds
    /// a bare cavity fixed).
    #[arg(long, value_name = "M")]
    thickness_init: Option<f64>,
}

pub fn run(ctx: &Context, args: &Args) -> Result<(), Failure> {
    let (points, _) = read_mode_points(&args.input)?;
    let mut init = ctx.config.geometry()?;
    if let Some(la) = args.air_gap_init {
        init = init.with_air_gap(la)?;
    }
    if let Some(d) = args.thickness_init {
        init = init.with_membrane_thickness(d)?;
    }
    let fit = fit_geometry(&points, &init)?;

    let mut report = PlotTable::new([
        "rank",
        "index_shift",
        "air_gap_m",
        "air_gap_sigma_m",
        "membrane_thickness_m",
        "membrane_thickness_sigma_m",
        "correlation",
        "rms_residual_hz",
        "thickness_fixed",
        "thickness_identifiable",
    ]);
    for (rank, s) in fit.solutions.iter().enumerate() {
        report.push_row(vec![
            rank as f64,
            f64::from(s.index_shift),
            s.geometry.air_gap,
            s.air_gap_uncertainty,
            s.geometry.membrane_thickness,
            s.thickness_uncertainty,
            s.correlation,
            s.rms,
            f64::from(u8::from(s.thickness_fixed)),
            f64::from(u8::from(s.thickness_identifiable)),
        ])?;
    }
    report.set_meta("input", file_label(&args.input));
    report.set_meta("points", points.len());
    report.set_meta("refractive_index", num(init.refractive_index));

    let best = fit.best();
    let mut residuals = PlotTable::new(["length_offset_m", "frequency_hz", "mode", "residual_hz"]);
    for ((p, &m), &r) in points.iter().zip(&best.indices).zip(&best.residuals) {
        residuals.push_row(vec![p.length_offset, p.frequency, f64::from(m), r])?;
    }
    residuals.set_meta("input", file_label(&args.input));

    ctx.write(&mut report, COMMAND, "geometry_fit.csv")?;
    ctx.write(&mut residuals, COMMAND, "geometry_residuals.csv")?;
    let pts = points.iter().zip(&best.residuals).map(|(p, r)| (p.length_offset, *r)).collect();
    ctx.plot(
        "geometry_residuals.svg",
        "Fit residuals (best assignment)",
        "length offset (m)",
        "model - measured (Hz)",
        &[Series::new("residual", pts)],
    )?;

    println!(
        "air gap {:.6e} ± {:.2e} m, thickness {:.6e} ± {:.2e} m, rms {:.3e} Hz ({} solutions)",
        best.geometry.air_gap,
        best.air_gap_uncertainty,
        best.geometry.membrane_thickness,
        best.thickness_uncertainty,
        best.rms,
        fit.solutions.len()
    );
    if !best.thickness_identifiable && !best.thickness_fixed {
        eprintln!("warning: air gap and thickness are strongly correlated; thickness is not identifiable");
    }
    Ok(())
}
