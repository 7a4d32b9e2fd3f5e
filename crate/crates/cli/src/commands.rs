//! Subcommand implementations. Each resolves the config (flags override the
//! file), evaluates grid points in parallel with index-ordered collection,
//! and writes its files through [`Run`].

use std::f64::consts::PI;

use oetransduce_core::array::{
    array_transfer, bandwidth_analytic, config_bandwidth, default_window, unwrapped_phase,
    BogoliubovCascade, ConversionModel, Spectrum,
};
use oetransduce_core::loss::{
    backscatter_alpha_fit, backscatter_grid, envelope_efficiency, LossParameter, LossSettings,
    LossyArray,
};
use oetransduce_core::noise::{
    added_noise_at, integrated_added_noise, integrated_stokes_noise, sideband_unresolved,
    stokes_density,
};
use oetransduce_core::optimize::{
    fit_tanh_beta, optimize_from_start, reduce_outcomes, starting_points, OptimizationProblem,
};
use oetransduce_core::{materialize_sites, Error as CoreError, FrequencyGrid, LinewidthProfile, C64};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{LossSweep, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{num, Run};
use crate::{ArrayArgs, BackscatterArgs, GridArgs, IoArgs, LossArgs, LossSettingsArgs, OptimizeArgs, ScanArgs};

const DEFAULT_POINTS: usize = 2001;

type Rows = Vec<Vec<String>>;

fn load(io: &IoArgs, array: Option<&ArrayArgs>) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load_or_default(io.config.as_deref())?;
    if let Some(a) = array {
        if let Some(n) = a.n {
            cfg.array.n_sites = n;
        }
        if let Some(g) = a.gamma {
            cfg.array.gamma = g;
        }
        if let Some(n_bar) = a.n_bar {
            cfg.array.n_bar = n_bar;
        }
        cfg.array.validate()?;
    }
    Ok(cfg)
}

/// Grid from the config with flag overrides; `--omega-max` alone on a config
/// without a grid gives a grid symmetric about zero.
fn resolve_grid(cfg: &mut RunConfig, args: &GridArgs, default: FrequencyGrid) -> CliResult<FrequencyGrid> {
    let base = cfg.grid.unwrap_or(default);
    let omega_max = args.omega_max.unwrap_or(base.omega_max);
    let omega_min = match (args.omega_min, args.omega_max, cfg.grid) {
        (Some(w), _, _) => w,
        (None, Some(w), None) => -w,
        _ => base.omega_min,
    };
    let n_points = args.points.unwrap_or(base.n_points);
    let grid = FrequencyGrid::new(omega_min, omega_max, n_points)?;
    cfg.grid = Some(grid);
    Ok(grid)
}

fn apply_loss(settings: &mut LossSettings, args: &LossSettingsArgs) {
    let pairs = [
        (&mut settings.kappa_int, args.kappa_int),
        (&mut settings.backscatter_ratio, args.backscatter_ratio),
        (&mut settings.transmission_loss, args.transmission_loss),
        (&mut settings.link_phase, args.link_phase),
        (&mut settings.link_delay, args.link_delay),
    ];
    for (slot, flag) in pairs {
        if let Some(v) = flag {
            *slot = v;
        }
    }
}

fn over_grid<T, F>(grid: &FrequencyGrid, f: F) -> Result<Vec<T>, CoreError>
where
    T: Send,
    F: Fn(f64) -> Result<T, CoreError> + Sync,
{
    (0..grid.len()).into_par_iter().map(|i| f(grid.point(i))).collect()
}

/// Unwraps by nearest branch without the aliasing guard; zero amplitudes
/// give NaN.
fn lenient_phase(t21: &[C64]) -> Vec<f64> {
    let mut prev: Option<f64> = None;
    t21.iter()
        .map(|t| {
            if t.norm() == 0.0 || !t.is_finite() {
                return f64::NAN;
            }
            let raw = t.arg();
            let next = prev.map_or(raw, |p| {
                let d = raw - p;
                p + d - 2.0 * PI * (d / (2.0 * PI)).round()
            });
            prev = Some(next);
            next
        })
        .collect()
}

pub fn spectrum(io: &IoArgs, array: &ArrayArgs, grid_args: &GridArgs) -> CliResult<()> {
    let mut run = Run::new("spectrum", &io.out_dir)?;
    let mut cfg = load(io, Some(array))?;
    let default = FrequencyGrid::centered(0.0, default_window(&cfg.array)?, DEFAULT_POINTS)?;
    let grid = resolve_grid(&mut cfg, grid_args, default)?;
    let sites = materialize_sites(&cfg.array)?;
    let t21 = over_grid(&grid, |w| Ok(array_transfer(&sites, w)?[(1, 0)]))?;
    let spectrum = Spectrum { grid, t21, full_matrices: None };
    let phase = match unwrapped_phase(&spectrum) {
        Ok(p) => p,
        Err(CoreError::Aliasing { index } | CoreError::UndefinedPhase { index }) => {
            run.warn(format!(
                "phase_unwrapped is unreliable from grid index {index} on; use more points"
            ));
            lenient_phase(&spectrum.t21)
        }
        Err(e) => return Err(e.into()),
    };
    let rows: Vec<Vec<String>> = grid
        .points()
        .zip(&spectrum.t21)
        .zip(&phase)
        .map(|((w, t), p)| vec![num(w), num(t.re), num(t.im), num(t.norm_sqr()), num(*p)])
        .collect();
    run.csv(".csv", &["omega", "re_t21", "im_t21", "abs2_t21", "phase_unwrapped"], &rows)?;
    let bandwidth = config_bandwidth(&cfg.array)?;
    run.json(".bandwidth.json", &bandwidth)?;
    run.finish(&cfg)
}

fn scaled(p: LinewidthProfile, factor: f64) -> LinewidthProfile {
    match p {
        LinewidthProfile::Constant(k) => LinewidthProfile::Constant(factor * k),
        LinewidthProfile::Linear { start, end } => {
            LinewidthProfile::Linear { start: factor * start, end: factor * end }
        }
    }
}

pub fn bandwidth_scan(args: &ScanArgs) -> CliResult<()> {
    let mut run = Run::new("bandwidth-scan", &args.io.out_dir)?;
    let mut cfg = load(&args.io, Some(&args.array))?;
    let mut scan = cfg.scan.clone().unwrap_or_default();
    if let Some(n) = args.n_min {
        scan.n_min = n;
    }
    scan.n_max = args.n_max.or(scan.n_max).or(Some(cfg.array.n_sites));
    scan.asymmetric |= args.asymmetric;
    let n_max = scan.n_max.unwrap_or(cfg.array.n_sites);
    if scan.n_min == 0 || scan.n_min > n_max {
        return Err(CliError::Config(format!("empty size range {}..={n_max}", scan.n_min)));
    }
    cfg.scan = Some(scan.clone());

    let g = cfg.array.profile.peak_couplings().0;
    let kappa = cfg.array.kappa1.max();
    let mut wide = cfg.array.clone();
    wide.kappa2 = scaled(cfg.array.kappa1, 10.0);
    let already_wide = wide.kappa2 == cfg.array.kappa2;
    let rows = (scan.n_min..=n_max)
        .into_par_iter()
        .map(|n| {
            let numeric = config_bandwidth(&cfg.array.with_n_sites(n))?.fwhm;
            let mut row = vec![
                n.to_string(),
                num(numeric),
                num(bandwidth_analytic(g, kappa, n)),
                num(4.0 * g * g * n as f64 / kappa),
            ];
            if scan.asymmetric {
                row.push(num(config_bandwidth(&wide.with_n_sites(n))?.fwhm));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    let mut header = vec!["n", "fwhm_numeric", "fwhm_eq4", "fwhm_linear_fit"];
    if scan.asymmetric {
        header.push("fwhm_kappa2_10x");
        if already_wide {
            run.warn("config already has kappa2 = 10·kappa1; the extra column repeats fwhm_numeric".into());
        }
    }
    run.csv(".csv", &header, &rows)?;
    run.finish(&cfg)
}

#[derive(Serialize)]
struct IntegratedNoise {
    s_add_port1: f64,
    s_add_port2: f64,
}

pub fn noise(io: &IoArgs, array: &ArrayArgs, grid_args: &GridArgs, integrate: bool) -> CliResult<()> {
    let mut run = Run::new("noise", &io.out_dir)?;
    let mut cfg = load(io, Some(array))?;
    let default = FrequencyGrid::centered(0.0, default_window(&cfg.array)?, DEFAULT_POINTS)?;
    let grid = resolve_grid(&mut cfg, grid_args, default)?;
    let sites = materialize_sites(&cfg.array)?;
    let values = over_grid(&grid, |w| added_noise_at(&sites, cfg.array.n_bar, w))?;
    let rows: Vec<Vec<String>> = grid
        .points()
        .zip(&values)
        .map(|(w, [a, b])| vec![num(w), num(*a), num(*b)])
        .collect();
    run.csv(".csv", &["omega", "s_add_port1", "s_add_port2"], &rows)?;
    if integrate {
        let [a, b] = integrated_added_noise(&cfg.array, None)?;
        run.json(".integrated.json", &IntegratedNoise { s_add_port1: a, s_add_port2: b })?;
    }
    run.finish(&cfg)
}

#[derive(Serialize)]
struct IntegratedStokes {
    stokes_photons: f64,
}

pub fn stokes(
    io: &IoArgs,
    array: &ArrayArgs,
    grid_args: &GridArgs,
    omega_m: Option<f64>,
    integrate: bool,
) -> CliResult<()> {
    let mut run = Run::new("stokes", &io.out_dir)?;
    let mut cfg = load(io, Some(array))?;
    let omega_m = omega_m
        .or(cfg.omega_m)
        .ok_or_else(|| CliError::Config("stokes needs omega_m (--omega-m)".into()))?;
    if !(omega_m > 0.0) || !omega_m.is_finite() {
        return Err(CliError::Config("omega_m must be positive".into()));
    }
    cfg.omega_m = Some(omega_m);
    let half = default_window(&cfg.array)?.min(0.5 * omega_m);
    let grid = resolve_grid(&mut cfg, grid_args, FrequencyGrid::centered(omega_m, half, DEFAULT_POINTS)?)?;
    if sideband_unresolved(&cfg.array, omega_m) {
        run.warn(format!("linewidths exceed 0.3·omega_m = {:.3}; outside the resolved-sideband regime", 0.3 * omega_m));
    }
    let cascade = BogoliubovCascade::from_config(&cfg.array, omega_m)?;
    let density = over_grid(&grid, |w| stokes_density(&cascade, w))?;
    let rows: Vec<Vec<String>> = grid.points().zip(&density).map(|(w, d)| vec![num(w), num(*d)]).collect();
    run.csv(".csv", &["omega", "stokes_density"], &rows)?;
    if integrate {
        let total = integrated_stokes_noise(&cfg.array, omega_m)?;
        run.json(".integrated.json", &IntegratedStokes { stokes_photons: total })?;
    }
    run.finish(&cfg)
}

fn parse_parameter(name: &str) -> CliResult<LossParameter> {
    serde_json::from_value(serde_json::Value::String(name.to_string())).map_err(|_| {
        CliError::Config(format!(
            "unknown loss parameter `{name}`; use intrinsic_loss, transmission_loss or backscatter"
        ))
    })
}

/// `param,omega,abs2_t21` rows, parameter-major.
fn sweep_rows(
    cfg: &RunConfig,
    parameter: LossParameter,
    values: &[f64],
    grid: &FrequencyGrid,
) -> CliResult<(Rows, Vec<Vec<f64>>)> {
    let mut rows = Vec::with_capacity(values.len() * grid.len());
    let mut spectra = Vec::with_capacity(values.len());
    for &v in values {
        let array = LossyArray::from_config(&cfg.array, parameter.apply(cfg.loss, v))?;
        let e = over_grid(grid, |w| array.efficiency(w))?;
        rows.extend(grid.points().zip(&e).map(|(w, x)| vec![num(v), num(w), num(*x)]));
        spectra.push(e);
    }
    Ok((rows, spectra))
}

pub fn loss(args: &LossArgs) -> CliResult<()> {
    let mut run = Run::new("loss", &args.io.out_dir)?;
    let mut cfg = load(&args.io, Some(&args.array))?;
    apply_loss(&mut cfg.loss, &args.loss);
    let parameter = match (&args.parameter, &cfg.loss_sweep) {
        (Some(name), _) => parse_parameter(name)?,
        (None, Some(s)) => s.parameter,
        (None, None) => return Err(CliError::Config("loss needs a parameter (--parameter)".into())),
    };
    let values = args
        .values
        .clone()
        .or_else(|| cfg.loss_sweep.as_ref().map(|s| s.values.clone()))
        .filter(|v| !v.is_empty())
        .ok_or_else(|| CliError::Config("loss needs sweep values (--values)".into()))?;
    cfg.loss_sweep = Some(LossSweep { parameter, values: values.clone() });
    // An even point count keeps ω = 0 off the default grid.
    let default = FrequencyGrid::centered(0.0, default_window(&cfg.array)?, DEFAULT_POINTS - 1)?;
    let grid = resolve_grid(&mut cfg, &args.grid, default)?;
    let (rows, _) = sweep_rows(&cfg, parameter, &values, &grid)?;
    run.csv(".csv", &["param", "omega", "abs2_t21"], &rows)?;
    run.finish(&cfg)
}

pub fn backscatter(args: &BackscatterArgs) -> CliResult<()> {
    let mut run = Run::new("backscatter", &args.io.out_dir)?;
    let mut cfg = load(&args.io, Some(&args.array))?;
    apply_loss(&mut cfg.loss, &args.loss);
    let mut section = cfg.backscatter.clone().unwrap_or_default();
    if let Some(r) = &args.ratios {
        section.ratios = r.clone();
    }
    if let Some(h) = args.half_width {
        section.half_width = h;
    }
    if let Some(p) = args.points {
        section.n_points = p;
    }
    section.fit_alpha |= args.fit_alpha;
    if section.ratios.is_empty() {
        return Err(CliError::Config("backscatter needs at least one ratio (--ratios)".into()));
    }
    cfg.backscatter = Some(section.clone());
    let grid = backscatter_grid(section.half_width, section.n_points)?;
    let (rows, spectra) = sweep_rows(&cfg, LossParameter::Backscatter, &section.ratios, &grid)?;
    run.csv(".csv", &["param", "omega", "abs2_t21"], &rows)?;
    if section.fit_alpha {
        let points = section
            .ratios
            .iter()
            .zip(&spectra)
            .map(|(&r, e)| Ok((r, envelope_efficiency(&grid, e)?)))
            .collect::<Result<Vec<_>, CoreError>>()?;
        let fit = backscatter_alpha_fit(&points)?;
        run.json(".alpha.json", &fit)?;
        println!("{}", serde_json::to_string(&fit).expect("fit serializes"));
    }
    run.finish(&cfg)
}

#[derive(Serialize)]
struct OptimizeOutput {
    n: usize,
    gamma_total: f64,
    min_efficiency: f64,
    gamma1: Vec<f64>,
    bandwidth: f64,
    passband_min: f64,
    beta_fit: Option<f64>,
    peak_value: f64,
    converged: bool,
    evaluations: usize,
}

pub fn optimize(args: &OptimizeArgs) -> CliResult<()> {
    let mut run = Run::new("optimize", &args.io.out_dir)?;
    let mut cfg = load(&args.io, None)?;
    let mut section = cfg.optimize.clone().unwrap_or_default();
    section.n_sites = args.n.or(section.n_sites);
    section.gamma_total = args.gamma_total.or(section.gamma_total);
    section.min_efficiency = args.min_eff.or(section.min_efficiency);
    section.symmetric &= !args.asymmetric;
    if let Some(seed) = args.seed {
        section.settings.seed = seed;
    }
    if let Some(starts) = args.starts {
        section.settings.starts = starts;
    }
    let missing = |what: &str| CliError::Config(format!("optimize needs {what}"));
    let problem = OptimizationProblem {
        n_sites: section.n_sites.ok_or_else(|| missing("n_sites (--n)"))?,
        gamma_total: section.gamma_total.ok_or_else(|| missing("gamma_total (--gamma-total)"))?,
        min_efficiency: section.min_efficiency.ok_or_else(|| missing("min_efficiency (--min-eff)"))?,
        symmetric: section.symmetric,
    };
    problem.validate()?;
    let settings = section.settings;
    cfg.optimize = Some(section);
    run.seed = Some(settings.seed);

    let outcomes: Vec<_> = starting_points(&problem, &settings)
        .par_iter()
        .map(|start| optimize_from_start(&problem, &settings, start))
        .collect();
    let result = reduce_outcomes(&outcomes).expect("at least one start");
    let output = OptimizeOutput {
        n: problem.n_sites,
        gamma_total: problem.gamma_total,
        min_efficiency: problem.min_efficiency,
        beta_fit: fit_tanh_beta(&result.gamma1_per_site, problem.gamma_total).ok(),
        gamma1: result.gamma1_per_site,
        bandwidth: result.bandwidth,
        passband_min: result.passband_min,
        peak_value: result.peak_value,
        converged: result.converged,
        evaluations: result.evaluations,
    };
    run.json(".json", &output)?;
    println!("{}", serde_json::to_string(&output).expect("result serializes"));
    if !output.converged {
        run.warn("no start satisfied the efficiency constraint".into());
        run.finish(&cfg)?;
        return Err(CliError::Infeasible);
    }
    run.finish(&cfg)
}
