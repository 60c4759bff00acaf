use microcavity::constants::{gaussian_fwhm_factor, SPEED_OF_LIGHT};
use microcavity::emitter::entanglement_rate_gain;
use microcavity::io::PlotTable;
use microcavity::loss_budget::{bare_finesse, interface_scattering_loss};
use microcavity::{CouplingSetup, EmitterSpec, VibrationSpec};

use super::{num, resonant_geometry};
use crate::context::Context;
use crate::failure::Failure;
use crate::svg::Series;

const COMMAND: &str = "purcell";

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, default_value_t = 4000.0)]
    finesse_min: f64,
    #[arg(long, default_value_t = 15000.0)]
    finesse_max: f64,
    #[arg(long, default_value_t = 23)]
    finesse_steps: usize,
    /// Finesse of the vibration-averaged curves.
    #[arg(long, default_value_t = 5000.0)]
    finesse: f64,
    /// Largest length-noise standard deviation, m.
    #[arg(long, value_name = "M", default_value_t = 1e-9)]
    sigma_max: f64,
    #[arg(long, default_value_t = 41)]
    sigma_steps: usize,
    /// Dipole mismatch of the second emitter curve, degrees (default: config).
    #[arg(long, value_name = "DEG")]
    mismatch_deg: Option<f64>,
    /// Antinode offset of the second emitter curve, m (default: config).
    #[arg(long, value_name = "M")]
    antinode_offset: Option<f64>,
    /// Mode index (default: nearest the laser).
    #[arg(long)]
    mode: Option<u32>,
    /// ZPL emission gain entering the entanglement-rate estimate.
    #[arg(long, default_value_t = 13.0)]
    zpl_gain: f64,
    /// Collection gain entering the entanglement-rate estimate.
    #[arg(long, default_value_t = 3.0)]
    collection_gain: f64,
}

fn grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, Failure> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Failure::Input(format!("range [{lo}, {hi}] is empty")));
    }
    if steps == 1 && lo == hi {
        return Ok(vec![lo]);
    }
    if steps < 2 || lo == hi {
        return Err(Failure::Input(format!(
            "range [{lo}, {hi}] needs at least 2 steps, or 1 step with equal ends"
        )));
    }
    Ok((0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect())
}

pub fn run(ctx: &Context, args: &Args) -> Result<(), Failure> {
    let cfg = &ctx.config;
    let (m, g) = resonant_geometry(ctx, args.mode)?;
    let ideal = EmitterSpec::ideal(cfg.zpl_branching, cfg.free_lifetime_s)?;
    let mismatched = EmitterSpec::new(
        cfg.zpl_branching,
        cfg.free_lifetime_s,
        args.mismatch_deg.unwrap_or(cfg.dipole_mismatch_deg).to_radians(),
        args.antinode_offset.unwrap_or(cfg.antinode_offset_m),
    )?;

    let mut by_finesse = PlotTable::new([
        "finesse",
        "purcell_factor",
        "p_zpl_ideal",
        "lifetime_ideal_s",
        "p_zpl_mismatched",
        "lifetime_mismatched_s",
    ]);
    for f in grid(args.finesse_min, args.finesse_max, args.finesse_steps)? {
        let setup = CouplingSetup::new(&g, m, f)?;
        let a = setup.on_resonance(&ideal)?;
        let b = setup.on_resonance(&mismatched)?;
        by_finesse.push_row(vec![f, setup.purcell_resonant, a.p_zpl_cavity, a.lifetime, b.p_zpl_cavity, b.lifetime])?;
    }

    let setup = CouplingSetup::new(&g, m, args.finesse)?;
    let mut by_sigma = PlotTable::new([
        "sigma_m",
        "displacement_fwhm_m",
        "p_zpl_ideal",
        "lifetime_ideal_s",
        "p_zpl_mismatched",
        "lifetime_mismatched_s",
        "quadrature_nodes",
    ]);
    let mut unconverged = 0usize;
    for sigma in grid(0.0, args.sigma_max, args.sigma_steps)? {
        let v = VibrationSpec::new(sigma)?;
        let a = setup.vibration_averaged(&ideal, &v)?;
        let b = setup.vibration_averaged(&mismatched, &v)?;
        unconverged += usize::from(!a.converged) + usize::from(!b.converged);
        by_sigma.push_row(vec![
            sigma,
            sigma * gaussian_fwhm_factor::<f64>(),
            a.result.p_zpl_cavity,
            a.result.lifetime,
            b.result.p_zpl_cavity,
            b.result.lifetime,
            a.nodes.max(b.nodes) as f64,
        ])?;
    }

    let lambda = SPEED_OF_LIGHT / setup.frequency;
    let bare = bare_finesse(&cfg.fiber_mirror()?, &cfg.plane_mirror()?)?;
    let scattering = interface_scattering_loss(&cfg.surface()?, lambda, g.refractive_index)?;
    let with_scattering = bare.with_item("interface scattering", scattering)?;
    let gain = entanglement_rate_gain(args.zpl_gain, args.collection_gain)?;
    let configured = setup.vibration_averaged(&mismatched, &cfg.vibration()?)?;

    for t in [&mut by_finesse, &mut by_sigma] {
        t.set_meta("mode", m);
        t.set_meta("air_gap_m", num(g.air_gap));
        t.set_meta("frequency_hz", num(setup.frequency));
        t.set_meta("mode_volume_m3", num(setup.mode_volume));
        t.set_meta("mismatch_deg", num(args.mismatch_deg.unwrap_or(cfg.dipole_mismatch_deg)));
        t.set_meta("antinode_offset_m", num(args.antinode_offset.unwrap_or(cfg.antinode_offset_m)));
    }
    by_finesse.set_meta("bare_finesse", num(bare.finesse()));
    by_finesse.set_meta("scattering_ppm", num(scattering));
    by_finesse.set_meta("finesse_with_scattering", num(with_scattering.finesse()));
    by_sigma.set_meta("finesse", num(args.finesse));
    by_sigma.set_meta("quality_factor", num(setup.quality_factor));
    by_sigma.set_meta("purcell_resonant", num(setup.purcell_resonant));
    by_sigma.set_meta("length_fwhm_m", num(setup.length_fwhm));
    by_sigma.set_meta("configured_sigma_m", num(cfg.vibration_sigma_m));
    by_sigma.set_meta("configured_p_zpl", num(configured.result.p_zpl_cavity));
    by_sigma.set_meta("unconverged_points", unconverged);
    by_sigma.set_meta(
        "entanglement_rate_gain",
        format!("({}x{})^2={}", num(args.zpl_gain), num(args.collection_gain), num(gain)),
    );

    ctx.write(&mut by_finesse, COMMAND, "purcell_finesse.csv")?;
    ctx.write(&mut by_sigma, COMMAND, "purcell_vibration.csv")?;
    let curve = |t: &PlotTable, col: usize| -> Vec<(f64, f64)> { t.rows.iter().map(|r| (r[0], r[col])).collect() };
    ctx.plot(
        "purcell_finesse.svg",
        "ZPL fraction into the cavity",
        "finesse",
        "p_zpl",
        &[Series::new("ideal", curve(&by_finesse, 2)), Series::new("mismatched", curve(&by_finesse, 4))],
    )?;
    ctx.plot(
        "purcell_vibration.svg",
        "Vibration-averaged ZPL fraction",
        "length noise sigma (m)",
        "p_zpl",
        &[Series::new("ideal", curve(&by_sigma, 2)), Series::new("mismatched", curve(&by_sigma, 4))],
    )?;

    println!(
        "mode {m}: V = {:.3e} m^3, Fp = {:.3} at finesse {}; bare finesse {:.0}, with scattering {:.0}",
        setup.mode_volume,
        setup.purcell_resonant,
        args.finesse,
        bare.finesse(),
        with_scattering.finesse()
    );
    println!(
        "entanglement rate gain ({} x {})^2 = {}",
        args.zpl_gain, args.collection_gain, gain
    );
    if unconverged > 0 {
        eprintln!("warning: quadrature did not converge at {unconverged} points");
    }
    Ok(())
}
