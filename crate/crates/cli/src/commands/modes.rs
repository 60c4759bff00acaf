use microcavity::io::PlotTable;
use microcavity::mode_model::{air_character, dispersion_curves, nearest_mode};

use super::num;
use crate::context::Context;
use crate::failure::Failure;
use crate::svg::Series;

const COMMAND: &str = "modes";

#[derive(Debug, clap::Args)]
pub struct Args {
    /// First air gap of the grid, m (default: configured gap − 1 µm).
    #[arg(long, value_name = "M")]
    start: Option<f64>,
    /// Last air gap of the grid, m (default: configured gap + 1 µm).
    #[arg(long, value_name = "M")]
    end: Option<f64>,
    /// Grid step, m.
    #[arg(long, value_name = "M", default_value_t = 2e-9)]
    step: f64,
    /// Lowest mode index (default: two below the mode nearest the laser).
    #[arg(long)]
    m_min: Option<u32>,
    /// Highest mode index (default: two above the mode nearest the laser).
    #[arg(long)]
    m_max: Option<u32>,
}

pub fn run(ctx: &Context, args: &Args) -> Result<(), Failure> {
    let g0 = ctx.config.geometry()?;
    let start = args.start.unwrap_or(g0.air_gap - 1e-6);
    let end = args.end.unwrap_or(g0.air_gap + 1e-6);
    let centre = nearest_mode(&g0, ctx.config.laser_frequency_hz)?;
    let m_min = args.m_min.unwrap_or(centre.saturating_sub(2).max(1));
    let m_max = args.m_max.unwrap_or(centre + 2);
    if m_min == 0 || m_min > m_max {
        return Err(Failure::Input(format!("mode range {m_min}..={m_max} is empty")));
    }

    let table = dispersion_curves(&g0, (start, end, args.step), m_min..=m_max)?;

    let mut dispersion = PlotTable::new(["air_gap_m", "mode", "frequency_hz"]);
    let mut character = PlotTable::new(["air_gap_m", "mode", "air_character"]);
    let mut missing = 0usize;
    for (la, m, nu) in table.rows() {
        dispersion.push_row(vec![la, f64::from(m), nu])?;
        let c = match air_character(m, &g0.with_air_gap(la)?) {
            Ok(c) => c,
            Err(_) => {
                missing += 1;
                f64::NAN
            }
        };
        character.push_row(vec![la, f64::from(m), c])?;
    }
    for t in [&mut dispersion, &mut character] {
        t.set_meta("membrane_thickness_m", num(g0.membrane_thickness));
        t.set_meta("refractive_index", num(g0.refractive_index));
        t.set_meta("mode_range", format!("{m_min}:{m_max}"));
    }
    character.set_meta("character_unavailable", missing);
    if let Some(gap) = table.min_branch_gap() {
        dispersion.set_meta("min_branch_gap_hz", num(gap));
    }
    ctx.write(&mut dispersion, COMMAND, "dispersion.csv")?;
    ctx.write(&mut character, COMMAND, "character.csv")?;

    let branches = |col: usize| -> Vec<Series> {
        table
            .modes
            .iter()
            .enumerate()
            .map(|(j, m)| {
                let pts = table
                    .air_gaps
                    .iter()
                    .enumerate()
                    .map(|(i, &la)| {
                        let y = if col == 0 { table.frequencies[i][j] } else { character.rows[i * table.modes.len() + j][2] };
                        (la, y)
                    })
                    .collect();
                Series::new(format!("m={m}"), pts)
            })
            .collect()
    };
    ctx.plot("dispersion.svg", "Resonance frequency", "air gap (m)", "frequency (Hz)", &branches(0))?;
    ctx.plot("character.svg", "Air character", "air gap (m)", "air character", &branches(1))?;

    println!(
        "modes {m_min}..={m_max} over {} air gaps written to dispersion.csv and character.csv",
        table.air_gaps.len()
    );
    if missing > 0 {
        eprintln!("warning: air character unavailable at {missing} grid points");
    }
    Ok(())
}
