use std::path::PathBuf;

use clap::ValueEnum;
use microcavity::io::{read_scan, PlotTable};
use microcavity::scan::{bin_by_sync, fit_vibration_broadening, BroadeningFit, BroadeningOptions, Centering};
use microcavity::CavityGeometry;

use super::{num, resonant_geometry};
use crate::context::{collect_csv, Context};
use crate::failure::Failure;
use crate::svg::Series;

const COMMAND: &str = "vibration";

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CenteringArg {
    Centroid,
    Maximum,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Sweep CSV files or directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Width of the sync-phase bins, s.
    #[arg(long, value_name = "S", default_value_t = 0.05)]
    bin_width: f64,
    /// Period the sync offsets are folded into, s.
    #[arg(long, value_name = "S", default_value_t = microcavity::scan::vibration::DEFAULT_CYCLE)]
    cycle: f64,
    /// How each sweep is centred before averaging.
    #[arg(long, value_enum, default_value_t = CenteringArg::Centroid)]
    centering: CenteringArg,
    /// Peak-height fraction used by centroid centring.
    #[arg(long, default_value_t = 0.2)]
    centroid_fraction: f64,
    /// Mode index used for the length conversion (default: nearest the laser).
    #[arg(long)]
    mode: Option<u32>,
}

/// Displacement columns, or NaN when the mode slope vanishes.
fn with_displacement(fit: BroadeningFit, m: u32, g: &CavityGeometry) -> Result<(BroadeningFit, f64, f64), Failure> {
    match fit.clone().with_displacement(m, g) {
        Ok(f) => {
            let d = f.displacement.unwrap_or(f64::NAN);
            let sd = f.displacement_uncertainty.unwrap_or(f64::NAN);
            Ok((f, d, sd))
        }
        Err(e @ microcavity::Error::ZeroSlope { .. }) => {
            eprintln!("warning: {e}");
            Ok((fit, f64::NAN, f64::NAN))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn run(ctx: &Context, args: &Args) -> Result<(), Failure> {
    if !(args.centroid_fraction > 0.0 && args.centroid_fraction <= 1.0) {
        return Err(Failure::Input("--centroid-fraction must lie in (0, 1]".into()));
    }
    let files = collect_csv(&args.inputs)?;
    let sweeps = files.iter().map(read_scan).collect::<Result<Vec<_>, _>>()?;
    let options = BroadeningOptions {
        centering: match args.centering {
            CenteringArg::Centroid => Centering::Centroid {
                fraction: args.centroid_fraction,
            },
            CenteringArg::Maximum => Centering::Maximum,
        },
    };
    let (m, g) = resonant_geometry(ctx, args.mode)?;

    let overall = fit_vibration_broadening(&sweeps, &options)?;
    let (overall, disp, disp_sigma) = with_displacement(overall, m, &g)?;
    let mut summary = PlotTable::new([
        "fwhm_hz",
        "fwhm_sigma_hz",
        "displacement_fwhm_m",
        "displacement_sigma_m",
        "sweeps_used",
        "sweeps_excluded",
    ]);
    summary.push_row(vec![
        overall.fwhm_frequency,
        overall.fwhm_uncertainty,
        disp,
        disp_sigma,
        overall.sweeps_used as f64,
        overall.excluded.len() as f64,
    ])?;
    summary.set_meta("mode", m);
    summary.set_meta("air_gap_m", num(g.air_gap));
    summary.set_meta("centering", format!("{:?}", options.centering));
    ctx.write(&mut summary, COMMAND, "vibration.csv")?;
    println!(
        "broadening {:.4e} Hz FWHM from {} sweeps; displacement {:.4e} m FWHM (mode {m})",
        overall.fwhm_frequency, overall.sweeps_used, disp
    );
    if !overall.excluded.is_empty() {
        eprintln!("warning: {} sweeps without a usable peak were excluded", overall.excluded.len());
    }

    if sweeps.iter().any(|s| s.sync_offset.is_none()) {
        eprintln!("warning: some sweeps carry no sync_offset_s column; sync binning skipped");
        return Ok(());
    }
    let bins = bin_by_sync(&sweeps, args.bin_width, args.cycle, &options)?;
    let mut table = PlotTable::new([
        "bin_center_s",
        "sweeps",
        "fwhm_hz",
        "fwhm_sigma_hz",
        "displacement_fwhm_m",
        "displacement_sigma_m",
    ]);
    for bin in bins {
        let row = match bin.fit {
            Some(fit) => {
                let (fit, d, sd) = with_displacement(fit, m, &g)?;
                vec![bin.center, bin.sweeps as f64, fit.fwhm_frequency, fit.fwhm_uncertainty, d, sd]
            }
            None => vec![bin.center, bin.sweeps as f64, f64::NAN, f64::NAN, f64::NAN, f64::NAN],
        };
        table.push_row(row)?;
    }
    table.set_meta("bin_width_s", num(args.bin_width));
    table.set_meta("cycle_s", num(args.cycle));
    table.set_meta("mode", m);
    ctx.write(&mut table, COMMAND, "vibration_bins.csv")?;
    let pts = table.rows.iter().map(|r| (r[0], r[2])).collect();
    ctx.plot(
        "vibration_bins.svg",
        "Broadening versus sync delay",
        "delay after sync (s)",
        "FWHM (Hz)",
        &[Series::new("fwhm", pts)],
    )?;
    if let Some(best) = table
        .rows
        .iter()
        .filter(|r| r[2].is_finite())
        .min_by(|a, b| a[2].total_cmp(&b[2]))
    {
        println!("narrowest bin at {:.4} s: {:.4e} Hz FWHM", best[0], best[2]);
    }
    Ok(())
}
