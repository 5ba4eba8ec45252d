//! Batch front end: one experiment per invocation, selected by a subcommand
//! and configured by a flat `key = value` file. Every run prints a short
//! summary with the headline observable and writes CSV files whose comment
//! header embeds the full resolved configuration, so outputs are
//! reproducible byte for byte from the config alone.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use num_complex::Complex64;

use crate::adiabatic::{adiabatic_variance, optimal_ratio_closed_form, optimal_ratio_transcendental};
use crate::analysis::{bogoliubov_occupancy, squeezing_db, wigner_grid, WignerGrid};
use crate::config::Config;
use crate::covariance::{diffusion, drift_rwa, evolve_cm, steady_cm_for, CmTrajectory, DriftSource};
use crate::meanfield::{
    coupling_gap, effective_coupling, effective_coupling_from_amplitudes, floquet_amplitudes,
    integrate_meanfield, static_detuning_shift, synthesize_drive,
};
use crate::model::{cooperativity, CouplingSidebands, CovarianceMatrix, DriveSidebands, SystemParams};
use crate::optimize::{
    db_crossing, optimize_ratio_numeric, sweep_cooperativity, sweep_g0, sweep_nm, sweep_ratio,
    SweepResult, THREE_DB,
};
use crate::output::{fmt_f64, write_csv, write_wigner_csv};
use crate::par::install_pool;
use crate::spectral::{position_spectrum, steady_variance_spectral};
use crate::{Error, Result};

/// Command-line interface of the batch simulator.
#[derive(Debug, Parser)]
#[command(
    name = "squeezesim",
    version,
    about = "Steady-state mechanical squeezing in a periodically modulated optomechanical cavity"
)]
pub struct Cli {
    /// Experiment to run
    #[arg(value_enum)]
    pub kind: Kind,

    /// Path to the key = value configuration file
    #[arg(long)]
    pub config: PathBuf,

    /// Output path prefix for CSV files (default: the config file stem)
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads for sweeps and grids (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Experiment kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Integrate the covariance matrix in time
    Evolve,
    /// Steady covariance and squeezing at fixed couplings
    Steady,
    /// Position noise spectrum on a frequency grid
    Spectrum,
    /// Steady observables versus the sideband ratio
    SweepRatio,
    /// Optimized observables versus the center tone or the cooperativity
    SweepG0,
    /// Steady observables versus the thermal occupation
    SweepNm,
    /// Numeric optimal ratio next to its analytic estimates
    Optimize,
    /// Wigner-function frames of the mechanical mode
    Wigner,
    /// Mean-field dynamics under a three-tone drive
    Meanfield,
    /// Drive strengths realizing target coupling tones
    Synthesize,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Evolve => "evolve",
            Kind::Steady => "steady",
            Kind::Spectrum => "spectrum",
            Kind::SweepRatio => "sweep-ratio",
            Kind::SweepG0 => "sweep-g0",
            Kind::SweepNm => "sweep-nm",
            Kind::Optimize => "optimize",
            Kind::Wigner => "wigner",
            Kind::Meanfield => "meanfield",
            Kind::Synthesize => "synthesize",
        }
    }
}

/// Execute one experiment and return its summary text.
pub fn run(cli: &Cli) -> Result<String> {
    if let Some(n) = cli.threads {
        install_pool(n)?;
    }
    let mut cfg = Config::from_path(&cli.config)?;
    cfg.note("kind", cli.kind.name());
    let prefix = output_prefix(cli)?;
    match cli.kind {
        Kind::Evolve => run_evolve(&mut cfg, &prefix),
        Kind::Steady => run_steady(&mut cfg, &prefix),
        Kind::Spectrum => run_spectrum(&mut cfg, &prefix),
        Kind::SweepRatio => run_sweep_ratio(&mut cfg, &prefix),
        Kind::SweepG0 => run_sweep_g0(&mut cfg, &prefix),
        Kind::SweepNm => run_sweep_nm(&mut cfg, &prefix),
        Kind::Optimize => run_optimize(&mut cfg, &prefix),
        Kind::Wigner => run_wigner(&mut cfg, &prefix),
        Kind::Meanfield => run_meanfield(&mut cfg, &prefix),
        Kind::Synthesize => run_synthesize(&mut cfg, &prefix),
    }
}

fn output_prefix(cli: &Cli) -> Result<PathBuf> {
    match &cli.out {
        Some(p) => Ok(p.clone()),
        None => {
            let stem = cli.config.file_stem().ok_or_else(|| {
                Error::InvalidInput("config path has no file name".to_string())
            })?;
            Ok(PathBuf::from(stem))
        }
    }
}

fn csv_path(prefix: &Path, suffix: Option<&str>) -> PathBuf {
    match suffix {
        None => PathBuf::from(format!("{}.csv", prefix.display())),
        Some(s) => PathBuf::from(format!("{}_{s}.csv", prefix.display())),
    }
}

fn fmt_c64(z: Complex64) -> String {
    if z.im < 0.0 {
        format!("{}{}i", fmt_f64(z.re), fmt_f64(z.im))
    } else {
        format!("{}+{}i", fmt_f64(z.re), fmt_f64(z.im))
    }
}

fn system_params(cfg: &mut Config) -> Result<SystemParams> {
    let d = SystemParams::default();
    let params = SystemParams {
        omega_m: d.omega_m,
        kappa: cfg.f64_or("system.kappa", d.kappa)?,
        gamma_m: cfg.f64_or("system.gamma_m", d.gamma_m)?,
        g0: cfg.f64_or("system.g0", d.g0)?,
        delta_a: cfg.f64_or("system.delta_a", d.delta_a)?,
        delta_eff: cfg.f64_or("system.delta_eff", d.delta_eff)?,
        n_a: cfg.f64_or("system.n_a", d.n_a)?,
        n_m: cfg.f64_or("system.n_m", d.n_m)?,
        phi: cfg.f64_or("system.phi", d.phi)?,
    };
    params.validate()?;
    Ok(params)
}

fn coupling_inputs(cfg: &mut Config) -> Result<(f64, f64, CouplingSidebands)> {
    let g0c = cfg.require_f64("couplings.g0c")?;
    let ratio = cfg.require_f64("couplings.ratio")?;
    let pi_phase = cfg.bool_or("couplings.pi_phase", false)?;
    let c = CouplingSidebands::from_ratio(g0c, ratio);
    Ok((g0c, ratio, if pi_phase { c.with_pi_phase() } else { c }))
}

fn sweep_points(
    cfg: &mut Config,
    start: f64,
    stop: f64,
    points: usize,
    log: bool,
) -> Result<Vec<f64>> {
    let start = cfg.f64_or("sweep.start", start)?;
    let stop = cfg.f64_or("sweep.stop", stop)?;
    let points = cfg.usize_or("sweep.points", points)?;
    let log = cfg.bool_or("sweep.log", log)?;
    if points < 2 {
        return Err(Error::Config("sweep.points must be at least 2".to_string()));
    }
    if !(start < stop) {
        return Err(Error::Config(
            "sweep.start must lie below sweep.stop".to_string(),
        ));
    }
    if log && start <= 0.0 {
        return Err(Error::Config(
            "logarithmic sweeps need sweep.start > 0".to_string(),
        ));
    }
    let n = (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let f = i as f64 / n;
            if log {
                start * (stop / start).powf(f)
            } else {
                start + (stop - start) * f
            }
        })
        .collect())
}

fn upper_entries(cm: &CovarianceMatrix) -> [f64; 10] {
    let m = &cm.m;
    [
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(0, 3)],
        m[(1, 1)],
        m[(1, 2)],
        m[(1, 3)],
        m[(2, 2)],
        m[(2, 3)],
        m[(3, 3)],
    ]
}

const CM_COLUMNS: [&str; 10] = [
    "v11", "v12", "v13", "v14", "v22", "v23", "v24", "v33", "v34", "v44",
];

fn sample_stride(total_rows: usize, requested: usize) -> usize {
    if requested > 0 {
        requested
    } else {
        (total_rows / 2000).max(1)
    }
}

fn write_sweep(
    path: &Path,
    cfg: &Config,
    sweep: &SweepResult,
    extra: &[(&str, Vec<f64>)],
) -> Result<()> {
    let mut columns = vec![sweep.variable, "variance", "db", "occupancy"];
    if sweep.optimal_ratio.is_some() {
        columns.push("optimal_ratio");
    }
    for (name, _) in extra {
        columns.push(name);
    }
    let rows: Vec<Vec<f64>> = (0..sweep.len())
        .map(|i| {
            let mut row = vec![
                sweep.points[i],
                sweep.variance[i],
                sweep.db[i],
                sweep.occupancy[i],
            ];
            if let Some(r) = &sweep.optimal_ratio {
                row.push(r[i]);
            }
            for (_, values) in extra {
                row.push(values[i]);
            }
            row
        })
        .collect();
    write_csv(path, cfg.resolved(), &columns, &rows)
}

fn best_point(sweep: &SweepResult) -> (f64, f64) {
    let mut k = 0;
    for (i, &db) in sweep.db.iter().enumerate() {
        if db > sweep.db[k] {
            k = i;
        }
    }
    (sweep.points[k], sweep.db[k])
}

fn run_steady(cfg: &mut Config, prefix: &Path) -> Result<String> {
    let params = system_params(cfg)?;
    let (g0c, _, couplings) = coupling_inputs(cfg)?;
    cfg.note("derived.cooperativity", fmt_f64(cooperativity(&params, g0c)));
    cfg.check_unused()?;

    let cm = steady_cm_for(&couplings, &params)?;
    let spectral = steady_variance_spectral(&couplings, &params)?;
    let v33 = cm.v33();
    let db = squeezing_db(v33)?;
    let occupancy = bogoliubov_occupancy(&cm.mech_block(), couplings.squeeze_r()?)?;

    let path = csv_path(prefix, None);
    let mut row: Vec<f64> = upper_entries(&cm).to_vec();
    row.extend([spectral.value, db, occupancy]);
    let mut columns: Vec<&str> = CM_COLUMNS.to_vec();
    columns.extend(["spectral_variance", "db", "occupancy"]);
    write_csv(&path, cfg.resolved(), &columns, &[row])?;

    Ok(format!(
        "V33={v33:.4}, {db:.2} dB\n\
         V33 = {}, V44 = {}, mech det = {}, Bogoliubov occupancy = {}\n\
         spectral route: variance = {}, quadrature agreement = {:.2e}\n\
         wrote {}",
        fmt_f64(v33),
        fmt_f64(cm.v44()),
        fmt_f64(cm.mech_det()),
        fmt_f64(occupancy),
        fmt_f64(spectral.value),
        spectral.cross_check,
        path.display()
    ))
}

fn run_evolve(cfg: &mut Config, prefix: &Path) -> Result<String> {
    let params = system_params(cfg)?;
    let (_, _, couplings) = coupling_inputs(cfg)?;
    let frame = cfg.str_or("evolve.frame", "rwa");
    let sample_every = cfg.usize_or("evolve.sample_every", 0)?;
    let v0 = CovarianceMatrix::initial(&params);
    let d = diffusion(&params);

    let traj = match frame.as_str() {
        "rwa" => {
            let t_end = cfg.f64_or("evolve.t_end", 300.0)?;
            let dt = cfg.f64_or("evolve.dt", 0.05)?;
            cfg.check_unused()?;
            let drift = drift_rwa(&couplings, &params)?;
            evolve_cm(&v0, &DriftSource::Constant(&drift), &d, t_end, dt)?
        }
        "full" => {
            let omega = cfg.f64_or("couplings.omega", 2.0)?;
            let tau = 2.0 * std::f64::consts::PI / omega;
            let periods = cfg.f64_or("evolve.periods", 100.0)?;
            let dt = cfg.f64_or("evolve.dt", tau / 200.0)?;
            cfg.check_unused()?;
            let source = DriftSource::Periodic {
                couplings: &couplings,
                params: &params,
                omega,
            };
            evolve_cm(&v0, &source, &d, periods * tau, dt)?
        }
        other => {
            return Err(Error::Config(format!(
                "evolve.frame must be 'rwa' or 'full', got '{other}'"
            )))
        }
    };

    write_trajectory(cfg, prefix, &traj, sample_every)
}

fn write_trajectory(
    cfg: &Config,
    prefix: &Path,
    traj: &CmTrajectory,
    sample_every: usize,
) -> Result<String> {
    let stride = sample_stride(traj.len(), sample_every);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut i = 0;
    while i < traj.len() {
        let mut row = vec![traj.t[i]];
        row.extend(upper_entries(&traj.v[i]));
        row.push(traj.v[i].mech_det());
        rows.push(row);
        i += stride;
    }
    if (traj.len() - 1) % stride != 0 {
        let last = traj.len() - 1;
        let mut row = vec![traj.t[last]];
        row.extend(upper_entries(&traj.v[last]));
        row.push(traj.v[last].mech_det());
        rows.push(row);
    }
    let mut columns = vec!["t"];
    columns.extend(CM_COLUMNS);
    columns.push("mech_det");
    let path = csv_path(prefix, None);
    write_csv(&path, cfg.resolved(), &columns, &rows)?;
    let last = traj.last();
    Ok(format!(
        "evolved to t = {}: V33 = {}, V44 = {}, mech det = {}\n\
         wrote {} ({} rows)",
        fmt_f64(*traj.t.last().unwrap()),
        fmt_f64(last.v33()),
        fmt_f64(last.v44()),
        fmt_f64(last.mech_det()),
        path.display(),
        rows.len()
    ))
}

fn run_spectrum(cfg: &mut Config, prefix: &Path) -> Result<String> {
    let params = system_params(cfg)?;
    let (_, _, couplings) = coupling_inputs(cfg)?;
    let omega_min = cfg.f64_or("spectrum.omega_min", -0.5)?;
    let omega_max = cfg.f64_or("spectrum.omega_max", 0.5)?;
    let points = cfg.usize_or("spectrum.points", 2001)?;
    cfg.check_unused()?;
    if points < 2 || !(omega_min < omega_max) {
        return Err(Error::Config(
            "spectrum needs omega_min < omega_max and at least 2 points".to_string(),
        ));
    }

    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let w = omega_min + (omega_max - omega_min) * i as f64 / (points - 1) as f64;
        rows.push(vec![w, position_spectrum(w, &couplings, &params)?]);
    }
    let path = csv_path(prefix, None);
    write_csv(&path, cfg.resolved(), &["omega", "s_xx"], &rows)?;

    let variance = steady_variance_spectral(&couplings, &params)?;
    let db = squeezing_db(variance.value)?;
    Ok(format!(
        "integrated spectrum: variance = {} ({db:.2} dB), quadrature agreement = {:.2e}\n\
         wrote {}",
        fmt_f64(variance.value),
        variance.cross_check,
        path.display()
    ))
}

fn run_sweep_ratio(cfg: &mut Config, prefix: &Path) -> Result<String> {
    let params = system_params(cfg)?;
    let g0c = cfg.require_f64("couplings.g0c")?;
    let grid = sweep_points(cfg, 0.0, 0.999, 200, false)?;
    cfg.check_unused()?;
    let sweep = sweep_ratio(&params, g0c, params.n_m, &grid)?;
    // The cavity-eliminated estimate rides along for direct comparison
    // against the exact column.
    let adiabatic: Vec<f64> = grid
        .iter()
        .map(|&r| {
            adiabatic_variance(&CouplingSidebands::from_ratio(g0c, r), &params)
                .map(|a| a.variance)
        })
        .collect::<Result<_>>()?;
    let path = csv_path(prefix, None);
    write_sweep(&path, cfg, &sweep, &[("adiabatic_variance", adiabatic)])?;
    let (at, db) = best_point(&sweep);
    Ok(format!(
        "swept ratio over {} points: best {db:.2} dB at ratio = {at:.6}\n\
         wrote {}",
        sweep.len(),
        path.display()
    ))
}

fn run_sweep_g0(cfg: &mut Config, prefix: &Path) -> Result<String> {
    let params = system_params(cfg)?;
    let variable = cfg.str_or("sweep.variable", "g0c");
    let (sweep, extra) = match variable.as_str() {
        "g0c" => {
            let grid = sweep_points(cfg, 0.02, 0.3, 29, false)?;
            cfg.check_unused()?;
            let sweep = sweep_g0(&params, &grid)?;
            // Both analytic estimates of the optimal ratio ride along next
            // to the numeric one for direct comparison.
            let transcendental: Vec<f64> = grid
                .iter()
                .map(|&g| optimal_ratio_transcendental(&params, g, params.n_m))
                .collect::<Result<_>>()?;
            let closed: Vec<f64> = grid
                .iter()
                .map(|&g| optimal_ratio_closed_form(&params, g, params.n_m))
                .collect::<Result<_>>()?;
            (
                sweep,
                vec![
                    ("ratio_transcendental", transcendental),
                    ("ratio_closed_form", closed),
                ],
            )
        }
        "cooperativity" => {
            let grid = sweep_points(cfg, 1e3, 1e6, 25, true)?;
            cfg.check_unused()?;
            (sweep_cooperativity(&params, &grid)?, Vec::new())
        }
        other => {
            return Err(Error::Config(format!(
                "sweep.variable must be 'g0c' or 'cooperativity', got '{other}'"
            )))
        }
    };
    let path = csv_path(prefix, None);
    write_sweep(&path, cfg, &sweep, &extra)?;
    let (at, db) = best_point(&sweep);
    Ok(format!(
        "swept {} over {} points with per-point ratio optimization: best {db:.2} dB at {at:.6e}\n\
         wrote {}",
        sweep.variable,
        sweep.len(),
        path.display()
    ))
}

fn run_sweep_nm(cfg: &mut Config, prefix: &Path) -> Result<String> {
    let params = system_params(cfg)?;
    let (g0c, ratio, _) = coupling_inputs(cfg)?;
    let grid = sweep_points(cfg, 1.0, 1e5, 26, true)?;
    cfg.check_unused()?;
    let sweep = sweep_nm(&params, g0c, ratio, &grid)?;
    let couplings = CouplingSidebands::from_ratio(g0c, ratio);
    let adiabatic: Vec<f64> = grid
        .iter()
        .map(|&n_m| {
            adiabatic_variance(&couplings, &params.with_n_m(n_m)).map(|a| a.variance)
        })
        .collect::<Result<_>>()?;
    let path = csv_path(prefix, None);
    write_sweep(&path, cfg, &sweep, &[("adiabatic_variance", adiabatic)])?;
    let crossing = match db_crossing(&sweep, THREE_DB) {
        Some(x) => format!("3 dB crossing at n_m = {x:.4e}"),
        None => "squeezing never crosses 3 dB on this grid".to_string(),
    };
    Ok(format!(
        "swept n_m over {} points at ratio {ratio}: {crossing}\n\
         wrote {}",
        sweep.len(),
        path.display()
    ))
}

fn run_optimize(cfg: &mut Config, prefix: &Path) -> Result<String> {
    let params = system_params(cfg)?;
    let g0c = cfg.require_f64("couplings.g0c")?;
    cfg.note("derived.cooperativity", fmt_f64(cooperativity(&params, g0c)));
    cfg.check_unused()?;

    let (ratio, variance) = optimize_ratio_numeric(&params, g0c, params.n_m)?;
    let db = squeezing_db(variance)?;
    let transcendental = optimal_ratio_transcendental(&params, g0c, params.n_m)?;
    let closed = optimal_ratio_closed_form(&params, g0c, params.n_m)?;
    let coop = cooperativity(&params, g0c);

    let path = csv_path(prefix, None);
    write_csv(
        &path,
        cfg.resolved(),
        &[
            "g0c",
            "optimal_ratio",
            "variance",
            "db",
            "ratio_transcendental",
            "ratio_closed_form",
            "cooperativity",
        ],
        &[vec![g0c, ratio, variance, db, transcendental, closed, coop]],
    )?;

    let mut lines = format!(
        "optimal ratio {ratio:.6}: variance = {} ({db:.2} dB)\n\
         transcendental estimate {transcendental:.6}, closed form {closed:.6}",
        fmt_f64(variance),
    );
    if coop < 100.0 {
        lines.push_str(&format!(
            "\nnote: the closed form assumes a large cooperativity; C = {coop:.3e} here"
        ));
    }
    lines.push_str(&format!("\nwrote {}", path.display()));
    Ok(lines)
}

fn auto_half_width(blocks: &[nalgebra::Matrix2<f64>]) -> f64 {
    let mut vmax: f64 = 0.0;
    for b in blocks {
        vmax = vmax.max(b[(0, 0)]).max(b[(1, 1)]);
    }
    6.0 * vmax.sqrt()
}

fn run_wigner(cfg: &mut Config, prefix: &Path) -> Result<String> {
    let params = system_params(cfg)?;
    let (_, _, couplings) = coupling_inputs(cfg)?;
    let frame = cfg.str_or("wigner.frame", "full");
    let points = cfg.usize_or("wigner.points", 121)?;
    let half_width = cfg.f64_or("wigner.half_width", 0.0)?;

    match frame.as_str() {
        "steady" => {
            cfg.check_unused()?;
            let block = steady_cm_for(&couplings, &params)?.mech_block();
            let w = if half_width > 0.0 {
                half_width
            } else {
                auto_half_width(&[block])
            };
            let grid = wigner_grid(&block, (-w, w), (-w, w), points)?;
            let path = csv_path(prefix, None);
            write_wigner_csv(&path, cfg.resolved(), &grid)?;
            Ok(format!(
                "steady Wigner grid {points}x{points} over half width {}: peak = {}, mass = {}\n\
                 wrote {}",
                fmt_f64(w),
                fmt_f64(peak(&grid)),
                fmt_f64(grid.mass()),
                path.display()
            ))
        }
        "full" => {
            let omega = cfg.f64_or("couplings.omega", 2.0)?;
            let frames = cfg.usize_or("wigner.frames", 8)?;
            let settle = cfg.f64_or("wigner.settle_periods", 100.0)?;
            cfg.check_unused()?;
            // 200 integrator steps per period keeps frame times exact
            let steps_per_period = 200usize;
            if frames == 0 || steps_per_period % frames != 0 {
                return Err(Error::Config(format!(
                    "wigner.frames must divide {steps_per_period}, got {frames}"
                )));
            }
            let tau = 2.0 * std::f64::consts::PI / omega;
            let dt = tau / steps_per_period as f64;
            let source = DriftSource::Periodic {
                couplings: &couplings,
                params: &params,
                omega,
            };
            let v0 = CovarianceMatrix::initial(&params);
            let traj = evolve_cm(&v0, &source, &diffusion(&params), settle * tau, dt)?;
            let n = traj.len();
            if n < steps_per_period + 1 {
                return Err(Error::Config(
                    "wigner.settle_periods must cover at least one period".to_string(),
                ));
            }
            let first = n - 1 - steps_per_period;
            let blocks: Vec<nalgebra::Matrix2<f64>> = (0..frames)
                .map(|k| traj.v[first + k * steps_per_period / frames].mech_block())
                .collect();
            let w = if half_width > 0.0 {
                half_width
            } else {
                auto_half_width(&blocks)
            };
            let mut files = Vec::new();
            let mut v33_range = (f64::INFINITY, f64::NEG_INFINITY);
            for (k, block) in blocks.iter().enumerate() {
                let grid = wigner_grid(block, (-w, w), (-w, w), points)?;
                let path = csv_path(prefix, Some(&format!("frame{k:02}")));
                let phase = k as f64 / frames as f64;
                let mut comments: Vec<(String, String)> = cfg
                    .resolved()
                    .map(|(a, b)| (a.to_string(), b.to_string()))
                    .collect();
                comments.push(("frame.phase".to_string(), fmt_f64(phase)));
                write_wigner_csv(
                    &path,
                    comments.iter().map(|(a, b)| (a.as_str(), b.as_str())),
                    &grid,
                )?;
                v33_range.0 = v33_range.0.min(block[(0, 0)]);
                v33_range.1 = v33_range.1.max(block[(0, 0)]);
                files.push(path.display().to_string());
            }
            Ok(format!(
                "wrote {frames} Wigner frames over one period ({points}x{points}, half width {}):\n\
                 V33 range over the period: [{}, {}]\n\
                 {}",
                fmt_f64(w),
                fmt_f64(v33_range.0),
                fmt_f64(v33_range.1),
                files.join("\n")
            ))
        }
        other => Err(Error::Config(format!(
            "wigner.frame must be 'steady' or 'full', got '{other}'"
        ))),
    }
}

fn peak(grid: &WignerGrid) -> f64 {
    let mut p = f64::NEG_INFINITY;
    for row in &grid.values {
        for &v in row {
            p = p.max(v);
        }
    }
    p
}

fn drive_inputs(cfg: &mut Config) -> Result<DriveSidebands> {
    let zero = Complex64::new(0.0, 0.0);
    let em1 = cfg.complex_or("drive.eps_minus1", zero)?;
    let e0 = cfg.complex_or("drive.eps_0", zero)?;
    let ep1 = cfg.complex_or("drive.eps_plus1", zero)?;
    let omega = cfg.f64_or("drive.omega", 2.0)?;
    let drive = DriveSidebands::new(em1, e0, ep1, omega);
    drive.validate()?;
    Ok(drive)
}

fn run_meanfield(cfg: &mut Config, prefix: &Path) -> Result<String> {
    let params = system_params(cfg)?;
    let drive = drive_inputs(cfg)?;
    let periods = cfg.f64_or("meanfield.periods", 200.0)?;
    let spp = cfg.usize_or("meanfield.steps_per_period", 2000)?;
    let j_max = cfg.usize_or("meanfield.j_max", 10)?;
    let n_max = cfg.usize_or("meanfield.n_max", 5)?;
    let requested = cfg.usize_or("meanfield.sample_every", 0)?;
    cfg.check_unused()?;

    let tau = drive.tau();
    let traj = integrate_meanfield(&params, &drive, periods * tau, tau / spp as f64)?;
    let stride = sample_stride(traj.len(), requested);
    let mut rows = Vec::new();
    let mut i = 0;
    while i < traj.len() {
        rows.push(vec![
            traj.t[i],
            traj.a[i].re,
            traj.a[i].im,
            traj.b[i].re,
            traj.b[i].im,
        ]);
        i += stride;
    }
    let path = csv_path(prefix, None);
    write_csv(
        &path,
        cfg.resolved(),
        &["t_periods", "re_a", "im_a", "re_b", "im_b"],
        &rows,
    )?;

    let amps = floquet_amplitudes(&params, &drive, j_max, n_max)?;
    let floq = effective_coupling_from_amplitudes(&params, &amps);
    let shift = static_detuning_shift(&params, &traj);

    let mut lines = String::new();
    match effective_coupling(&params, &traj) {
        Ok(ec) => {
            let (fm1, f0, fp1) = (
                floq.tones.g_minus1,
                floq.tones.g_0c,
                floq.tones.g_plus1,
            );
            let dev = (ec.tones.g_minus1 - fm1)
                .norm()
                .max((ec.tones.g_0c - f0).norm())
                .max((ec.tones.g_plus1 - fp1).norm());
            lines.push_str(&format!(
                "settled tones g0<a>: G_-1 = {}, G_0 = {}, G_1 = {}\n\
                 settling residual {:.3e} (settled: {}), three-tone fit residual {:.3e}\n\
                 sideband expansion (j_max = {j_max}): largest tone gap {:.3e}, converged: {}\n\
                 static detuning shift g0<b + b*> = {:.6e}",
                fmt_c64(ec.tones.g_minus1),
                fmt_c64(ec.tones.g_0c),
                fmt_c64(ec.tones.g_plus1),
                ec.settling_residual,
                ec.settled,
                ec.residual,
                dev,
                amps.converged,
                shift
            ));
        }
        Err(e) => {
            lines.push_str(&format!("tone fit unavailable: {e}"));
        }
    }
    lines.push_str(&format!("\nwrote {} ({} rows)", path.display(), rows.len()));
    Ok(lines)
}

fn run_synthesize(cfg: &mut Config, prefix: &Path) -> Result<String> {
    let params = system_params(cfg)?;
    let g_m1 = cfg.require_f64("target.g_minus1")?;
    let g_0t = cfg.require_f64("target.g_0")?;
    let g_p1 = cfg.require_f64("target.g_plus1")?;
    let omega = cfg.f64_or("target.omega", 2.0)?;
    let periods = cfg.f64_or("synthesize.periods", 100.0)?;
    let spp = cfg.usize_or("synthesize.steps_per_period", 2000)?;
    cfg.check_unused()?;

    let target = CouplingSidebands::real(g_m1, g_0t, g_p1);
    let drive = synthesize_drive(&params, &target, omega)?;
    let tau = drive.tau();
    let traj = integrate_meanfield(&params, &drive, periods * tau, tau / spp as f64)?;
    let ec = effective_coupling(&params, &traj)?;
    let dev = [
        (ec.tones.g_minus1 - target.g_minus1).norm(),
        (ec.tones.g_0c - target.g_0c).norm(),
        (ec.tones.g_plus1 - target.g_plus1).norm(),
    ];
    let gap = coupling_gap(&params, &traj, &target, 5)?;

    let path = csv_path(prefix, None);
    write_csv(
        &path,
        cfg.resolved(),
        &[
            "re_eps_minus1",
            "im_eps_minus1",
            "re_eps_0",
            "im_eps_0",
            "re_eps_plus1",
            "im_eps_plus1",
            "dev_minus1",
            "dev_0",
            "dev_plus1",
            "envelope_gap",
        ],
        &[vec![
            drive.eps_minus1.re,
            drive.eps_minus1.im,
            drive.eps_0.re,
            drive.eps_0.im,
            drive.eps_plus1.re,
            drive.eps_plus1.im,
            dev[0],
            dev[1],
            dev[2],
            gap,
        ]],
    )?;

    Ok(format!(
        "eps_minus1 = {}\neps_0 = {}\neps_plus1 = {}\n\
         round trip over {periods} periods: tone deviations / G_0 = {:.3e}, {:.3e}, {:.3e}\n\
         max envelope gap / G_0 = {:.3e}\n\
         wrote {}",
        fmt_c64(drive.eps_minus1),
        fmt_c64(drive.eps_0),
        fmt_c64(drive.eps_plus1),
        dev[0] / g_0t,
        dev[1] / g_0t,
        dev[2] / g_0t,
        gap / g_0t,
        path.display()
    ))
}
