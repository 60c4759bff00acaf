use std::path::PathBuf;

use microcavity::io::{read_scan, PlotTable};
use microcavity::numeric::median;
use microcavity::scan::{finesse_from_linewidth, fit_linewidth_sidebanded};

use super::{num, resonant_geometry};
use crate::context::{collect_csv, file_label, Context};
use crate::failure::Failure;
use crate::svg::Series;

const COMMAND: &str = "linewidth";

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Scan CSV files or directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Mode index used for the free spectral range (default: nearest the laser).
    #[arg(long)]
    mode: Option<u32>,
}

pub fn run(ctx: &Context, args: &Args) -> Result<(), Failure> {
    let files = collect_csv(&args.inputs)?;
    let (_, g) = resonant_geometry(ctx, args.mode)?;

    let mut table = PlotTable::new([
        "scan",
        "accepted",
        "linewidth_hz",
        "linewidth_sigma_hz",
        "finesse",
        "finesse_sigma",
        "goodness",
    ]);
    let mut widths = Vec::new();
    let mut finesses = Vec::new();
    let mut rejected = Vec::new();
    for (i, path) in files.iter().enumerate() {
        let mut scan = read_scan(path)?;
        if scan.sideband_offset.is_none() {
            scan = scan.with_sideband_offset(ctx.config.sideband_offset_hz)?;
        }
        table.set_meta(format!("file.{i}"), file_label(path));
        match fit_linewidth_sidebanded(&scan) {
            Ok(fit) => {
                let (f, sf) = finesse_from_linewidth(&fit, &g)?;
                table.push_row(vec![i as f64, 1.0, fit.linewidth, fit.uncertainty, f, sf, fit.goodness])?;
                widths.push(fit.linewidth);
                finesses.push(f);
            }
            Err(e) if !e.is_input_error() => {
                table.push_row(vec![i as f64, 0.0, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN])?;
                table.set_meta(format!("rejected.{i}"), e);
                rejected.push(file_label(path));
            }
            Err(e) => return Err(Failure::Input(format!("{}: {e}", path.display()))),
        }
    }

    table.set_meta("accepted", widths.len());
    table.set_meta("rejected", rejected.len());
    table.set_meta("air_gap_m", num(g.air_gap));
    if !widths.is_empty() {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        table.set_meta("mean_linewidth_hz", num(mean(&widths)));
        table.set_meta("median_linewidth_hz", num(median(&widths).unwrap_or(f64::NAN)));
        table.set_meta("mean_finesse", num(mean(&finesses)));
        table.set_meta("median_finesse", num(median(&finesses).unwrap_or(f64::NAN)));
    }
    ctx.write(&mut table, COMMAND, "linewidth.csv")?;
    let pts = table.rows.iter().map(|r| (r[0], r[4])).collect();
    ctx.plot("linewidth.svg", "Finesse per scan", "scan", "finesse", &[Series::new("finesse", pts)])?;

    for name in &rejected {
        eprintln!("rejected: {name}");
    }
    if widths.is_empty() {
        return Err(Failure::Analysis(format!("all {} scans were rejected", files.len())));
    }
    println!(
        "{} of {} scans accepted; median linewidth {:.4e} Hz, median finesse {:.1}",
        widths.len(),
        files.len(),
        median(&widths).unwrap_or(f64::NAN),
        median(&finesses).unwrap_or(f64::NAN)
    );
    Ok(())
}
