//! Cascaded arrays: transfer matrices, conversion spectra, bandwidth
//! extraction, analytic bandwidth formulas, phase winding and dispersion.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use crate::math::{atan2, cbrt, sqrt};
use crate::search::{bisect, golden_max, golden_min};
use crate::transducer::{
    offres_coefficients, scattering_bogoliubov, scattering_eliminated, scattering_full,
    BogoliubovSite, EliminatedSite,
};
use crate::{materialize_sites, ArrayConfig, Error, FrequencyGrid, Mat2, Result, SiteParams, C64};

/// Anything that yields a conversion amplitude `T₂₁(ω)`.
///
/// The bandwidth extractor refines crossings by querying the model directly.
pub trait ConversionModel {
    fn t21(&self, omega: f64) -> Result<C64>;

    fn efficiency(&self, omega: f64) -> Result<f64> {
        self.t21(omega).map(|t| t.norm_sqr())
    }
}

/// Ordered product `S_N · … · S_1`.
pub fn array_transfer(sites: &[SiteParams], omega: f64) -> Result<Mat2> {
    if sites.is_empty() {
        return Err(Error::InvalidParameter("array must have at least one site"));
    }
    let mut t = scattering_full(&sites[0], omega)?;
    for s in &sites[1..] {
        t = scattering_full(s, omega)? * t;
    }
    Ok(t)
}

/// Cascade of exact single-site matrices.
#[derive(Debug, Clone)]
pub struct FullCascade {
    pub sites: Vec<SiteParams>,
}

impl FullCascade {
    pub fn new(sites: Vec<SiteParams>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidParameter("array must have at least one site"));
        }
        Ok(Self { sites })
    }

    pub fn from_config(config: &ArrayConfig) -> Result<Self> {
        Self::new(materialize_sites(config)?)
    }

    pub fn transfer(&self, omega: f64) -> Result<Mat2> {
        array_transfer(&self.sites, omega)
    }
}

impl ConversionModel for FullCascade {
    fn t21(&self, omega: f64) -> Result<C64> {
        Ok(self.transfer(omega)?[(1, 0)])
    }
}

/// Cascade of adiabatically eliminated sites.
#[derive(Debug, Clone)]
pub struct EliminatedCascade {
    pub sites: Vec<EliminatedSite>,
}

impl EliminatedCascade {
    pub fn new(sites: Vec<EliminatedSite>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidParameter("array must have at least one site"));
        }
        Ok(Self { sites })
    }

    /// Sites with `Γ₁ʲ = gamma1[j]` and `Γ₂ʲ = Γ − Γ₁ʲ`.
    pub fn from_split(gamma1: &[f64], gamma_total: f64) -> Result<Self> {
        let sites = gamma1
            .iter()
            .map(|&a| EliminatedSite::new(a, gamma_total - a))
            .collect::<Result<Vec<_>>>()?;
        Self::new(sites)
    }

    pub fn transfer(&self, omega: f64) -> Result<Mat2> {
        let mut t = scattering_eliminated(&self.sites[0], omega)?;
        for s in &self.sites[1..] {
            t = scattering_eliminated(s, omega)? * t;
        }
        Ok(t)
    }
}

impl ConversionModel for EliminatedCascade {
    fn t21(&self, omega: f64) -> Result<C64> {
        Ok(self.transfer(omega)?[(1, 0)])
    }
}

/// Lab-frame cascade with counter-rotating terms.
#[derive(Debug, Clone)]
pub struct BogoliubovCascade {
    pub sites: Vec<BogoliubovSite>,
}

impl BogoliubovCascade {
    pub fn from_config(config: &ArrayConfig, omega_m: f64) -> Result<Self> {
        let sites = materialize_sites(config)?
            .into_iter()
            .map(|s| BogoliubovSite::new(s, omega_m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sites })
    }

    pub fn transfer(&self, omega: f64) -> Result<crate::Mat4> {
        let mut t = scattering_bogoliubov(&self.sites[0], omega)?;
        for s in &self.sites[1..] {
            t = scattering_bogoliubov(s, omega)? * t;
        }
        Ok(t)
    }
}

impl ConversionModel for BogoliubovCascade {
    fn t21(&self, omega: f64) -> Result<C64> {
        Ok(self.transfer(omega)?[(1, 0)])
    }
}

/// Conversion amplitudes on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: FrequencyGrid,
    pub t21: Vec<C64>,
    pub full_matrices: Option<Vec<Mat2>>,
}

impl Spectrum {
    pub fn efficiency(&self) -> Vec<f64> {
        self.t21.iter().map(|t| t.norm_sqr()).collect()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.grid.points().collect()
    }
}

/// Samples `model` on `grid`.
pub fn spectrum_of<M: ConversionModel + ?Sized>(model: &M, grid: FrequencyGrid) -> Result<Spectrum> {
    let t21 = grid.points().map(|w| model.t21(w)).collect::<Result<Vec<_>>>()?;
    Ok(Spectrum { grid, t21, full_matrices: None })
}

/// `T₂₁` of the exact cascade built from `config`, with the full matrices kept.
pub fn conversion_spectrum(config: &ArrayConfig, grid: FrequencyGrid) -> Result<Spectrum> {
    let sites = materialize_sites(config)?;
    let mats = grid
        .points()
        .map(|w| array_transfer(&sites, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum {
        grid,
        t21: mats.iter().map(|m| m[(1, 0)]).collect(),
        full_matrices: Some(mats),
    })
}

/// Width and ripple of a conversion band.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthResult {
    pub fwhm: f64,
    pub omega_lo: f64,
    pub omega_hi: f64,
    /// Largest `|T₂₁|²`.
    pub peak_value: f64,
    pub omega_peak: f64,
    /// Smallest `|T₂₁|²` between the outermost maxima above half maximum.
    pub passband_min: f64,
}

/// Crossings are refined to this width in `ω`.
pub const CROSSING_TOL: f64 = 1e-9;

fn local_maxima(e: &[f64]) -> Vec<usize> {
    let n = e.len();
    (0..n)
        .filter(|&i| {
            let left = i == 0 || e[i] >= e[i - 1];
            let right = i + 1 == n || e[i] > e[i + 1];
            left && right && !(i == 0 && n > 1 && e[0] == e[1])
        })
        .collect()
}

fn local_minima(e: &[f64], lo: usize, hi: usize) -> Vec<usize> {
    (lo.max(1)..hi.min(e.len() - 1))
        .filter(|&i| e[i] <= e[i - 1] && e[i] < e[i + 1])
        .collect()
}

/// Full width at half maximum of `|T₂₁|²`.
///
/// Candidate maxima and the half-maximum crossings found on the spectrum grid
/// are refined against `model`, so the result does not depend on the grid
/// spacing beyond its ability to resolve the band features.
pub fn extract_bandwidth<M: ConversionModel + ?Sized>(
    spectrum: &Spectrum,
    model: &M,
) -> Result<BandwidthResult> {
    let e = spectrum.efficiency();
    let w = spectrum.omegas();
    let n = e.len();
    let grid_max = e.iter().cloned().fold(f64::NAN, f64::max);
    if !(grid_max > 0.0) {
        return Err(Error::NoPositiveMaximum);
    }
    let eff = |x: f64| model.efficiency(x);

    // Refine every grid maximum that could be the global one.
    let maxima = local_maxima(&e);
    let mut peak_value = grid_max;
    let mut omega_peak = w[maxima.iter().cloned().find(|&i| e[i] == grid_max).unwrap_or(0)];
    for &i in maxima.iter().filter(|&&i| e[i] >= 0.9 * grid_max) {
        let (a, b) = (w[i.saturating_sub(1)], w[(i + 1).min(n - 1)]);
        let (x, v) = golden_max(eff, a, b, CROSSING_TOL)?;
        if v > peak_value {
            peak_value = v;
            omega_peak = x;
        }
    }
    let half = 0.5 * peak_value;

    let first = e.iter().position(|&v| v >= half);
    let last = e.iter().rposition(|&v| v >= half);
    let (first, last) = match (first, last) {
        (Some(f), Some(l)) if f > 0 && l + 1 < n => (f, l),
        _ => return Err(Error::NoHalfMaxCrossing),
    };
    let excess = |x: f64| eff(x).map(|v| v - half);
    let omega_lo = bisect(excess, w[first - 1], w[first], CROSSING_TOL)?;
    let omega_hi = bisect(excess, w[last], w[last + 1], CROSSING_TOL)?;

    let above: Vec<usize> = maxima.into_iter().filter(|&i| e[i] >= half).collect();
    let mut passband_min = peak_value;
    if let (Some(&lo), Some(&hi)) = (above.first(), above.last()) {
        for i in local_minima(&e, lo, hi) {
            let (_, v) = golden_min(eff, w[i - 1], w[i + 1], CROSSING_TOL)?;
            passband_min = passband_min.min(v.min(e[i]));
        }
    }

    Ok(BandwidthResult {
        fwhm: omega_hi - omega_lo,
        omega_lo,
        omega_hi,
        peak_value,
        omega_peak,
        passband_min,
    })
}

/// Samples `model` on `[center − W, center + W]` and extracts its bandwidth,
/// doubling `W` (up to 12 times) while the band is not contained in the window.
pub fn bandwidth_auto<M: ConversionModel + ?Sized>(
    model: &M,
    center: f64,
    half_width: f64,
    n_points: usize,
) -> Result<(BandwidthResult, Spectrum)> {
    let mut w = half_width;
    for _ in 0..12 {
        let grid = FrequencyGrid::centered(center, w, n_points)?;
        let spectrum = spectrum_of(model, grid)?;
        match extract_bandwidth(&spectrum, model) {
            Err(Error::NoHalfMaxCrossing) => w *= 2.0,
            other => return other.map(|b| (b, spectrum)),
        }
    }
    Err(Error::NoHalfMaxCrossing)
}

/// Half-width of a window that comfortably contains the band of `config`.
pub fn default_window(config: &ArrayConfig) -> Result<f64> {
    let sites = materialize_sites(config)?;
    let kappa = sites.iter().map(|s| s.kappa1.max(s.kappa2)).fold(0.0, f64::max);
    let rate: f64 = sites
        .iter()
        .map(|s| {
            let (a, b) = s.effective_rates();
            a + b
        })
        .fold(0.0, f64::max);
    Ok((4.0 * rate * sites.len() as f64).min(2.0 * kappa).max(4.0 * rate).max(1e-6))
}

/// Numeric FWHM of the exact cascade described by `config`.
pub fn config_bandwidth(config: &ArrayConfig) -> Result<BandwidthResult> {
    let model = FullCascade::from_config(config)?;
    bandwidth_auto(&model, 0.0, default_window(config)?, 2001).map(|(b, _)| b)
}

/// Adiabatic-regime bandwidth `(4√2/3 · g²κN)^{1/3}` of a symmetric array.
pub fn bandwidth_analytic(g: f64, kappa: f64, n_sites: usize) -> f64 {
    cbrt(4.0 * SQRT_2 / 3.0 * g * g * kappa * n_sites as f64)
}

/// Half-maximum frequencies `(ω₋, ω₊)` of the linear-profile transfer matrix.
///
/// Solves the cubic in `ω²` in a rearranged form that is exactly zero at
/// `N = 1`.
pub fn halfmax_roots_analytic(g: f64, kappa: f64, n_sites: usize) -> (f64, f64) {
    let n = n_sites as f64;
    let u = g * g * (n * n - 1.0) / (n * kappa * kappa);
    let s3 = sqrt(3.0);
    let r = (6.0 * SQRT_2 * u + sqrt(72.0 * u * u + 3.0)) / s3;
    let cr = cbrt(r);
    let x = kappa * kappa * kappa * s3 * r;
    let plus = cbrt(9.0) * kappa * kappa * (cr * cr - 1.0) / (6.0 * cbrt(x));
    (-plus, plus)
}

/// First-order (off-resonant) conversion amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbativeT21 {
    pub value: C64,
    /// `false` when some site has `|c_j| > 0.1`, outside the expansion's
    /// validity.
    pub weak_coupling: bool,
}

/// `T₂₁ ≈ t^{N−1} Σⱼ c_j` for arrays with equal linewidths.
pub fn perturbative_t21(config: &ArrayConfig, omega: f64) -> Result<PerturbativeT21> {
    let sites = materialize_sites(config)?;
    let mut sum = C64::new(0.0, 0.0);
    let mut t = C64::new(1.0, 0.0);
    let mut worst: f64 = 0.0;
    for s in &sites {
        let (ts, c) = offres_coefficients(s, omega)?;
        sum += c;
        t = ts;
        worst = worst.max(c.norm());
    }
    Ok(PerturbativeT21 {
        value: t.powi(sites.len() as i32 - 1) * sum,
        weak_coupling: worst <= 0.1,
    })
}

/// Largest admissible wrapped phase step between neighbouring samples.
pub const MAX_PHASE_STEP: f64 = PI / 2.0;

/// Continuously unwrapped phase of `T₂₁` along the grid.
pub fn unwrapped_phase(spectrum: &Spectrum) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(spectrum.t21.len());
    let mut prev: Option<f64> = None;
    for (i, t) in spectrum.t21.iter().enumerate() {
        if t.norm() == 0.0 || !t.is_finite() {
            return Err(Error::UndefinedPhase { index: i });
        }
        let raw = atan2(t.im, t.re);
        let next = match prev {
            None => raw,
            Some(p) => {
                let mut d = raw - p;
                d -= 2.0 * PI * libm::round(d / (2.0 * PI));
                if d.abs() >= MAX_PHASE_STEP {
                    return Err(Error::Aliasing { index: i });
                }
                p + d
            }
        };
        out.push(next);
        prev = Some(next);
    }
    Ok(out)
}

/// Total unwrapped phase change of `T₂₁` across the spectrum.
pub fn phase_winding(spectrum: &Spectrum) -> Result<f64> {
    let phase = unwrapped_phase(spectrum)?;
    Ok(phase.last().copied().unwrap_or(0.0) - phase.first().copied().unwrap_or(0.0))
}

/// Symmetric grid for measuring the phase winding of an `n`-site array of
/// linewidth `kappa`: half-width `2Nκ/π` and 40 samples per expected turn.
pub fn winding_grid(n_sites: usize, kappa: f64) -> Result<FrequencyGrid> {
    let half = 2.0 * n_sites as f64 * kappa / PI;
    FrequencyGrid::centered(0.0, half, 4000 * n_sites.max(1) + 1)
}

/// Waveguide dispersion `k = ω/v − κ²/(vω)`.
pub fn waveguide_dispersion(omega: f64, v: f64, kappa_eff: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::InvalidParameter("dispersion relation has a pole at omega = 0"));
    }
    if !(v > 0.0) {
        return Err(Error::InvalidParameter("group velocity must be > 0"));
    }
    Ok(omega / v - kappa_eff * kappa_eff / (v * omega))
}
