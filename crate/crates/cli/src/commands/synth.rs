use clap::{Subcommand, ValueEnum};
use microcavity::io::{scan_to_table, PlotTable, MODE_POINT_COLUMNS};
use microcavity::mode_model::fsr;
use microcavity::scan::synth::{
    jittered_sweeps, mode_points, synced_sweeps, triple_lorentzian_scan, JitterSpec, SyncedJitterSpec,
    TripleLorentzianSpec,
};
use microcavity::scan::ScanRecord;

use super::{num, resonant_geometry};
use crate::context::Context;
use crate::failure::Failure;

const COMMAND: &str = "synth";

#[derive(Debug, clap::Args)]
pub struct Args {
    #[command(subcommand)]
    kind: Kind,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Flavor {
    /// Sweeps with one jitter level.
    Plain,
    /// Sweeps tagged with sync offsets; jitter is low in one phase window.
    Synced,
}

#[derive(Debug, Subcommand)]
enum Kind {
    /// Mode frequencies versus piezo offset, from the configured geometry.
    ModePoints {
        /// Number of piezo offsets.
        #[arg(long, default_value_t = 21)]
        offsets: usize,
        /// Total offset range, m, centred on zero.
        #[arg(long, value_name = "M", default_value_t = 1e-6)]
        offset_span: f64,
        /// Frequency band kept, as a fraction of the laser frequency either side.
        #[arg(long, default_value_t = 0.05)]
        band_fraction: f64,
        /// Gaussian frequency noise, Hz.
        #[arg(long, value_name = "HZ", default_value_t = 0.0)]
        noise: f64,
    },
    /// Cavity-length scans through a carrier and two sidebands.
    Linewidth {
        #[arg(long, default_value_t = 50)]
        count: usize,
        /// Carrier linewidth, Hz (default: FSR of the resonant mode / finesse).
        #[arg(long, value_name = "HZ")]
        linewidth: Option<f64>,
        /// Finesse implied when no linewidth is given.
        #[arg(long, default_value_t = 10000.0)]
        finesse: f64,
        /// Noise standard deviation as a fraction of the carrier height.
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 1500)]
        points: usize,
    },
    /// Laser sweeps across a jittering resonance.
    Vibration {
        #[arg(long, value_enum, default_value_t = Flavor::Plain)]
        flavor: Flavor,
        /// Number of sweeps (default: 50 plain, 200 synced).
        #[arg(long)]
        count: Option<usize>,
        /// Jitter FWHM, Hz (plain flavor).
        #[arg(long, value_name = "HZ", default_value_t = 22.2e9)]
        jitter_fwhm: f64,
    },
}

fn write_scans(ctx: &Context, dir: &str, stem: &str, scans: &[ScanRecord]) -> Result<(), Failure> {
    for (i, scan) in scans.iter().enumerate() {
        let mut table = scan_to_table(scan);
        ctx.write(&mut table, COMMAND, &format!("{dir}/{stem}_{i:03}.csv"))?;
    }
    println!("{} files written to {dir}/", scans.len());
    Ok(())
}

pub fn run(ctx: &Context, args: &Args) -> Result<(), Failure> {
    let mut rng = ctx.rng();
    let nu = ctx.config.laser_frequency_hz;
    match args.kind {
        Kind::ModePoints {
            offsets,
            offset_span,
            band_fraction,
            noise,
        } => {
            if offsets < 2 || !(offset_span > 0.0) || !(band_fraction > 0.0 && band_fraction < 1.0) {
                return Err(Failure::Input(
                    "need --offsets >= 2, --offset-span > 0 and 0 < --band-fraction < 1".into(),
                ));
            }
            let truth = ctx.config.geometry()?;
            let grid: Vec<f64> = (0..offsets)
                .map(|i| offset_span * (i as f64 / (offsets - 1) as f64 - 0.5))
                .collect();
            let band = (nu * (1.0 - band_fraction), nu * (1.0 + band_fraction));
            let points = mode_points(&truth, &grid, band, noise, &mut rng)?;
            let mut table = PlotTable::new(MODE_POINT_COLUMNS);
            for p in &points {
                table.push_row(vec![p.length_offset, p.frequency])?;
            }
            table.set_meta("generator", "mode_points");
            table.set_meta("truth.air_gap_m", num(truth.air_gap));
            table.set_meta("truth.membrane_thickness_m", num(truth.membrane_thickness));
            table.set_meta("truth.refractive_index", num(truth.refractive_index));
            table.set_meta("truth.noise_hz", num(noise));
            ctx.write(&mut table, COMMAND, "mode_points.csv")?;
            println!("{} mode points written to mode_points.csv", points.len());
            Ok(())
        }
        Kind::Linewidth {
            count,
            linewidth,
            finesse,
            noise,
            points,
        } => {
            if count == 0 {
                return Err(Failure::Input("--count must be >= 1".into()));
            }
            let width = match linewidth {
                Some(w) => w,
                None => {
                    if !(finesse > 0.0) {
                        return Err(Failure::Input("--finesse must be > 0".into()));
                    }
                    let (_, g) = resonant_geometry(ctx, None)?;
                    fsr(&g)? / finesse
                }
            };
            let spec = TripleLorentzianSpec {
                linewidth: width,
                sideband_offset: ctx.config.sideband_offset_hz,
                noise,
                points,
                ..TripleLorentzianSpec::default()
            };
            let scans = (0..count)
                .map(|_| triple_lorentzian_scan(&spec, &mut rng))
                .collect::<Result<Vec<_>, _>>()?;
            write_scans(ctx, "linewidth", "scan", &scans)
        }
        Kind::Vibration {
            flavor,
            count,
            jitter_fwhm,
        } => {
            let scans = match flavor {
                Flavor::Plain => {
                    let spec = JitterSpec {
                        sweeps: count.unwrap_or(50),
                        jitter_fwhm,
                        center: nu,
                        ..JitterSpec::default()
                    };
                    jittered_sweeps(&spec, &mut rng)?
                }
                Flavor::Synced => {
                    let mut spec = SyncedJitterSpec::default();
                    spec.base.center = nu;
                    if let Some(n) = count {
                        spec.base.sweeps = n;
                    }
                    synced_sweeps(&spec, &mut rng)?
                }
            };
            write_scans(ctx, "vibration", "sweep", &scans)
        }
    }
}
