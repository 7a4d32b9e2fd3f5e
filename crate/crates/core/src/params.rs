//! Domain types shared by every model: per-site rates, coupling and linewidth
//! profiles, array configurations and frequency grids.

use alloc::vec::Vec;

use crate::math::{sqrt, tanh};
use crate::{Error, Result};

/// Steepness used for the tanh coupling profile when none is given.
pub const DEFAULT_BETA: f64 = 4.5;

/// Physical rates of one transducer, in units of `κ_ref`.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteParams {
    /// Electromechanical (microwave) coupling rate.
    pub g1: f64,
    /// Optomechanical (optical) coupling rate.
    pub g2: f64,
    /// Microwave cavity linewidth.
    pub kappa1: f64,
    /// Optical cavity linewidth.
    pub kappa2: f64,
    /// Mechanical linewidth; zero is the lossless-mechanics limit.
    pub gamma: f64,
}

impl SiteParams {
    pub fn new(g1: f64, g2: f64, kappa1: f64, kappa2: f64, gamma: f64) -> Result<Self> {
        let site = Self { g1, g2, kappa1, kappa2, gamma };
        site.validate()?;
        Ok(site)
    }

    /// Symmetric site with equal linewidths `kappa` in both cavities.
    pub fn symmetric(g1: f64, g2: f64, kappa: f64, gamma: f64) -> Result<Self> {
        Self::new(g1, g2, kappa, kappa, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.g1, self.g2, self.kappa1, self.kappa2, self.gamma];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("site rates must be finite"));
        }
        if self.g1 < 0.0 || self.g2 < 0.0 {
            return Err(Error::InvalidParameter("coupling rates must be >= 0"));
        }
        if !(self.kappa1 > 0.0 && self.kappa2 > 0.0) {
            return Err(Error::InvalidParameter("cavity linewidths must be > 0"));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParameter("mechanical linewidth must be >= 0"));
        }
        Ok(())
    }

    /// Effective rates `Γᵢ = gᵢ²/κᵢ` after eliminating the cavities.
    pub fn effective_rates(&self) -> (f64, f64) {
        (self.g1 * self.g1 / self.kappa1, self.g2 * self.g2 / self.kappa2)
    }
}

/// Rule that assigns coupling rates to each site of an array.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingProfile {
    /// `g1 = j·ḡ1/N`, `g2 = ḡ2·(1 − j/N)` for `j = 1..=N`.
    #[cfg_attr(feature = "serde", serde(alias = "Linear"))]
    Linear { g_bar1: f64, g_bar2: f64 },
    /// Effective-rate split `Γ1/Γ = (tanh[β(d − ½)] + 1)/2` at `d = j/(N+1)`,
    /// i.e. `g1 = ḡ1·√s(d)` and `g2 = ḡ2·√(1 − s(d))`.
    #[cfg_attr(feature = "serde", serde(alias = "Tanh"))]
    Tanh {
        g_bar1: f64,
        g_bar2: f64,
        #[cfg_attr(feature = "serde", serde(default = "default_beta"))]
        beta: f64,
    },
    /// Per-site `(g1, g2)` pairs.
    #[cfg_attr(feature = "serde", serde(alias = "Explicit"))]
    Explicit {
        #[cfg_attr(feature = "serde", serde(alias = "explicit_values"))]
        values: Vec<(f64, f64)>,
    },
}

#[cfg(feature = "serde")]
fn default_beta() -> f64 {
    DEFAULT_BETA
}

impl CouplingProfile {
    pub fn tanh(g_bar1: f64, g_bar2: f64) -> Self {
        CouplingProfile::Tanh { g_bar1, g_bar2, beta: DEFAULT_BETA }
    }

    /// Peak couplings `(ḡ1, ḡ2)`; for explicit profiles the per-field maxima.
    pub fn peak_couplings(&self) -> (f64, f64) {
        match self {
            CouplingProfile::Linear { g_bar1, g_bar2 }
            | CouplingProfile::Tanh { g_bar1, g_bar2, .. } => (*g_bar1, *g_bar2),
            CouplingProfile::Explicit { values } => values
                .iter()
                .fold((0.0, 0.0), |(a, b), &(g1, g2)| (f64::max(a, g1), f64::max(b, g2))),
        }
    }

    /// Couplings `(g1, g2)` of site `j` (1-based) in an array of `n` sites.
    fn couplings(&self, j: usize, n: usize) -> (f64, f64) {
        match self {
            CouplingProfile::Linear { g_bar1, g_bar2 } => {
                let x = j as f64 / n as f64;
                (g_bar1 * x, g_bar2 * (1.0 - x))
            }
            CouplingProfile::Tanh { g_bar1, g_bar2, beta } => {
                let d = padded_position(j, n);
                let (s1, s2) = tanh_split(d, *beta);
                (g_bar1 * sqrt(s1), g_bar2 * sqrt(s2))
            }
            CouplingProfile::Explicit { values } => values[j - 1],
        }
    }
}

/// Normalized position `d = j/(N+1)`; sites 0 and N+1 are virtual endpoints.
pub fn padded_position(j: usize, n: usize) -> f64 {
    j as f64 / (n as f64 + 1.0)
}

/// Fractions `(s, 1 − s)` with `s = (tanh[β(d − ½)] + 1)/2`.
///
/// The complement is evaluated as `s(1 − d)` so the pair is exactly
/// mirror-symmetric.
pub fn tanh_split(d: f64, beta: f64) -> (f64, f64) {
    let s1 = 0.5 * (tanh(beta * (d - 0.5)) + 1.0);
    let s2 = 0.5 * (tanh(beta * (0.5 - d)) + 1.0);
    (s1, s2)
}

/// Per-site cavity linewidth rule.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinewidthProfile {
    Constant(f64),
    /// Linear interpolation from the first site (`start`) to the last (`end`).
    Linear { start: f64, end: f64 },
}

impl Default for LinewidthProfile {
    fn default() -> Self {
        LinewidthProfile::Constant(1.0)
    }
}

impl LinewidthProfile {
    pub fn at(&self, j: usize, n: usize) -> f64 {
        match *self {
            LinewidthProfile::Constant(k) => k,
            LinewidthProfile::Linear { start, end } => {
                if n <= 1 {
                    start
                } else {
                    start + (end - start) * (j - 1) as f64 / (n - 1) as f64
                }
            }
        }
    }

    pub fn max(&self) -> f64 {
        match *self {
            LinewidthProfile::Constant(k) => k,
            LinewidthProfile::Linear { start, end } => start.max(end),
        }
    }
}

/// Full description of a transducer array.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    pub n_sites: usize,
    pub profile: CouplingProfile,
    #[cfg_attr(feature = "serde", serde(default, alias = "kappa1_profile"))]
    pub kappa1: LinewidthProfile,
    #[cfg_attr(feature = "serde", serde(default, alias = "kappa2_profile"))]
    pub kappa2: LinewidthProfile,
    #[cfg_attr(feature = "serde", serde(default))]
    pub gamma: f64,
    /// Thermal phonon occupation of every mechanical bath.
    #[cfg_attr(feature = "serde", serde(default))]
    pub n_bar: f64,
}

impl ArrayConfig {
    /// Symmetric array with a tanh profile of peak coupling `g` and `κ1 = κ2 = 1`.
    pub fn symmetric_tanh(n_sites: usize, g: f64) -> Self {
        Self {
            n_sites,
            profile: CouplingProfile::tanh(g, g),
            kappa1: LinewidthProfile::Constant(1.0),
            kappa2: LinewidthProfile::Constant(1.0),
            gamma: 0.0,
            n_bar: 0.0,
        }
    }

    /// Symmetric array with a linear profile of peak coupling `g` and `κ1 = κ2 = 1`.
    pub fn symmetric_linear(n_sites: usize, g: f64) -> Self {
        Self {
            profile: CouplingProfile::Linear { g_bar1: g, g_bar2: g },
            ..Self::symmetric_tanh(n_sites, g)
        }
    }

    pub fn with_n_sites(&self, n_sites: usize) -> Self {
        Self { n_sites, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        materialize_sites(self).map(|_| ())
    }
}

/// Builds the per-site parameters of `config`.
pub fn materialize_sites(config: &ArrayConfig) -> Result<Vec<SiteParams>> {
    let n = config.n_sites;
    if n == 0 {
        return Err(Error::InvalidParameter("array must have at least one site"));
    }
    if !(config.n_bar >= 0.0) || !config.n_bar.is_finite() {
        return Err(Error::InvalidParameter("thermal occupation must be >= 0"));
    }
    match &config.profile {
        CouplingProfile::Explicit { values } if values.len() != n => {
            return Err(Error::ProfileLength { expected: n, found: values.len() });
        }
        CouplingProfile::Tanh { beta, .. } if !beta.is_finite() => {
            return Err(Error::InvalidParameter("tanh steepness must be finite"));
        }
        _ => {}
    }
    (1..=n)
        .map(|j| {
            let (g1, g2) = config.profile.couplings(j, n);
            SiteParams::new(
                g1,
                g2,
                config.kappa1.at(j, n),
                config.kappa2.at(j, n),
                config.gamma,
            )
        })
        .collect()
}

/// `min_i ḡᵢ√N / κᵢ`; above one the array is in the adiabatic regime.
///
/// Uses the largest linewidth of each field when linewidths vary.
pub fn adiabaticity_margin(config: &ArrayConfig) -> f64 {
    let (g1, g2) = config.profile.peak_couplings();
    let root_n = sqrt(config.n_sites as f64);
    let m1 = g1 * root_n / config.kappa1.max();
    let m2 = g2 * root_n / config.kappa2.max();
    m1.min(m2)
}

/// Classical cooperativity `4g²/(κγ)`.
pub fn classical_cooperativity(g: f64, kappa: f64, gamma: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter("cooperativity needs kappa > 0"));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter("cooperativity needs gamma > 0"));
    }
    Ok(4.0 * g * g / (kappa * gamma))
}

/// Uniform grid of Fourier frequencies.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_points: usize,
}

impl FrequencyGrid {
    pub fn new(omega_min: f64, omega_max: f64, n_points: usize) -> Result<Self> {
        if !(omega_min < omega_max) || !omega_min.is_finite() || !omega_max.is_finite() {
            return Err(Error::InvalidParameter("grid needs omega_min < omega_max"));
        }
        if n_points < 2 {
            return Err(Error::InvalidParameter("grid needs at least two points"));
        }
        Ok(Self { omega_min, omega_max, n_points })
    }

    /// Grid on `[center − half_width, center + half_width]`.
    pub fn centered(center: f64, half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(center - half_width, center + half_width, n_points)
    }

    pub fn step(&self) -> f64 {
        (self.omega_max - self.omega_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.omega_max
        } else {
            self.omega_min + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
