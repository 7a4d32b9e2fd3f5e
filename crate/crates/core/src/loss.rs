//! Two-sided cavities: backscattering, intrinsic and propagation loss,
//! scattering↔transfer conversion and efficiency fits.

use alloc::vec::Vec;

use crate::array::ConversionModel;
use crate::linalg::Mat3;
use crate::math::{cos, exp, ln, sin, sqrt};
use crate::transducer::drift_matrix;
use crate::{materialize_sites, ArrayConfig, Error, FrequencyGrid, Mat2, Mat4, Result, SiteParams, C64};

/// Largest acceptable condition number of the left-going block `S_L`.
pub const MAX_CONDITION: f64 = 1e12;

/// Transducer whose cavities leak into both propagation directions.
///
/// `site.kappa1`/`site.kappa2` are the right-going (signal) couplings `κ_R`.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossySite {
    pub site: SiteParams,
    /// Left-going (backscatter) couplings `κ_L` per field.
    pub kappa_l: [f64; 2],
    /// Intrinsic loss rates per field.
    pub kappa_int: [f64; 2],
}

impl LossySite {
    pub fn new(site: SiteParams, kappa_l: [f64; 2], kappa_int: [f64; 2]) -> Result<Self> {
        site.validate()?;
        if kappa_l.iter().chain(&kappa_int).any(|k| !(*k >= 0.0) || !k.is_finite()) {
            return Err(Error::InvalidParameter("loss rates must be finite and >= 0"));
        }
        Ok(Self { site, kappa_l, kappa_int })
    }

    /// One-sided, lossless site.
    pub fn lossless(site: SiteParams) -> Self {
        Self { site, kappa_l: [0.0; 2], kappa_int: [0.0; 2] }
    }

    pub fn kappa_r(&self) -> [f64; 2] {
        [self.site.kappa1, self.site.kappa2]
    }

    pub fn kappa_total(&self) -> [f64; 2] {
        let r = self.kappa_r();
        core::array::from_fn(|i| r[i] + self.kappa_l[i] + self.kappa_int[i])
    }
}

/// Propagation between neighbouring sites.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CellLink {
    /// Amplitude-loss exponent `ζd`.
    pub zeta_d: f64,
    /// Propagation phases `kᵢd` in radians.
    pub k1_d: f64,
    pub k2_d: f64,
}

impl CellLink {
    pub fn new(zeta_d: f64, k1_d: f64, k2_d: f64) -> Result<Self> {
        if !(zeta_d >= 0.0) || !zeta_d.is_finite() || !k1_d.is_finite() || !k2_d.is_finite() {
            return Err(Error::InvalidParameter("link needs finite zeta_d >= 0 and finite phases"));
        }
        Ok(Self { zeta_d, k1_d, k2_d })
    }

    /// Link losing the fraction `eps = 1 − e^{−ζd}` of the amplitude, with a
    /// common phase.
    pub fn from_transmission_loss(eps: f64, phase: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::InvalidParameter("transmission loss must lie in [0, 1)"));
        }
        Self::new(-ln(1.0 - eps), phase, phase)
    }
}

/// 4×4 scattering matrix in the basis `(a1ᴿ, a2ᴿ, a1ᴸ, a2ᴸ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiScatter(pub Mat4);

impl BiScatter {
    pub fn s_r(&self) -> Mat2 {
        self.0.block(0, 0)
    }

    pub fn s_rl(&self) -> Mat2 {
        self.0.block(0, 1)
    }

    pub fn s_lr(&self) -> Mat2 {
        self.0.block(1, 0)
    }

    pub fn s_l(&self) -> Mat2 {
        self.0.block(1, 1)
    }

    /// Forward conversion amplitude (right-going microwave in, right-going
    /// optical out).
    pub fn forward_t21(&self) -> C64 {
        self.0[(1, 0)]
    }
}

/// Signal scattering of a two-sided site. Intrinsic-loss and bath channels
/// are not part of the matrix and show up as sub-unitarity.
pub fn scattering_two_sided(site: &LossySite, omega: f64) -> Result<BiScatter> {
    let mut m: Mat3 = drift_matrix(&site.site, site.kappa_total());
    for k in 0..3 {
        m.0[k][k] += C64::new(0.0, omega);
    }
    let z = C64::new(0.0, 0.0);
    let r = site.kappa_r().map(sqrt);
    let l = site.kappa_l.map(sqrt);
    // Input weights: column j drives cavity j % 2.
    let w = [r[0], r[1], l[0], l[1]];
    let mut b = [[z; 4]; 3];
    for j in 0..4 {
        b[j % 2][j] = C64::new(w[j], 0.0);
    }
    let x = m.solve_multi(&b)?;
    let mut s = Mat4::identity().scale(C64::new(-1.0, 0.0));
    for i in 0..4 {
        for j in 0..4 {
            s.0[i][j] -= x[i % 2][j] * w[i];
        }
    }
    Ok(BiScatter(s))
}

fn checked_inverse(m: &Mat2) -> Result<Mat2> {
    let condition = m.condition_number();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::NearSingular { condition });
    }
    m.inverse_2x2().ok_or(Error::NearSingular { condition: f64::INFINITY })
}

/// Transfer matrix relating fields on the right of a site to fields on its
/// left, in the basis `(a1ᴿ, a2ᴿ, a1ᴸ, a2ᴸ)`.
pub fn scatter_to_transfer(s: &BiScatter) -> Result<Mat4> {
    let inv_l = checked_inverse(&s.s_l())?;
    let (sr, srl, slr) = (s.s_r(), s.s_rl(), s.s_lr());
    Ok(Mat4::from_blocks(
        &(sr - srl * inv_l * slr),
        &(srl * inv_l),
        &-(inv_l * slr),
        &inv_l,
    ))
}

/// Inverse of [`scatter_to_transfer`].
pub fn transfer_to_scatter(t: &Mat4) -> Result<BiScatter> {
    let inv22 = checked_inverse(&t.block(1, 1))?;
    let (t11, t12, t21) = (t.block(0, 0), t.block(0, 1), t.block(1, 0));
    Ok(BiScatter(Mat4::from_blocks(
        &(t11 - t12 * inv22 * t21),
        &(t12 * inv22),
        &-(inv22 * t21),
        &inv22,
    )))
}

fn phasor(re_exp: f64, phase: f64) -> C64 {
    let a = exp(re_exp);
    C64::new(a * cos(phase), a * sin(phase))
}

/// Free-propagation transfer matrix of one link.
///
/// Right-going fields pick up `e^{−ζd + ikd}`. Left-going fields travel from
/// right to left, so expressing them on the right in terms of the left gives
/// the inverse factor `e^{ζd − ikd}`.
pub fn free_propagation(link: &CellLink) -> Mat4 {
    Mat4::from_diag([
        phasor(-link.zeta_d, link.k1_d),
        phasor(-link.zeta_d, link.k2_d),
        phasor(link.zeta_d, -link.k1_d),
        phasor(link.zeta_d, -link.k2_d),
    ])
}

/// Scattering form of a link: transmission `e^{−ζd + ikd}` in both
/// directions, no reflection.
pub fn link_scattering(link: &CellLink) -> BiScatter {
    let t = Mat2::from_diag([phasor(-link.zeta_d, link.k1_d), phasor(-link.zeta_d, link.k2_d)]);
    let z = Mat2::zero();
    BiScatter(Mat4::from_blocks(&t, &z, &z, &t))
}

/// Redheffer star product: `left` followed by `right`.
pub fn star_product(left: &BiScatter, right: &BiScatter) -> Result<BiScatter> {
    let (ta, ra_b, ra_f, ta_b) = (left.s_r(), left.s_rl(), left.s_lr(), left.s_l());
    let (tb, rb_b, rb_f, tb_b) = (right.s_r(), right.s_rl(), right.s_lr(), right.s_l());
    let id = Mat2::identity();
    let fwd = checked_inverse(&(id - ra_b * rb_f))?;
    let bwd = checked_inverse(&(id - rb_f * ra_b))?;
    Ok(BiScatter(Mat4::from_blocks(
        &(tb * fwd * ta),
        &(rb_b + tb * fwd * ra_b * tb_b),
        &(ra_f + ta_b * rb_f * fwd * ta),
        &(ta_b * bwd * tb_b),
    )))
}

fn check_links(sites: &[LossySite], links: &[CellLink]) -> Result<()> {
    if sites.is_empty() {
        return Err(Error::InvalidParameter("array must have at least one site"));
    }
    if links.len() != sites.len() && links.len() + 1 != sites.len() {
        return Err(Error::InvalidParameter("need one link per site, or one fewer"));
    }
    Ok(())
}

/// Total transfer matrix `Π (T_free · T_site)` of an array of two-sided sites.
///
/// `links` has one entry per site (the last link acts as an output lead) or
/// one fewer (no output lead).
pub fn lossy_array_transfer(sites: &[LossySite], links: &[CellLink], omega: f64) -> Result<Mat4> {
    check_links(sites, links)?;
    let mut t = Mat4::identity();
    for (j, site) in sites.iter().enumerate() {
        t = scatter_to_transfer(&scattering_two_sided(site, omega)?)? * t;
        if let Some(link) = links.get(j) {
            t = free_propagation(link) * t;
        }
    }
    Ok(t)
}

/// Scattering matrix of an array of two-sided sites.
///
/// Equal to `transfer_to_scatter(lossy_array_transfer(..))`, but cells are
/// joined with [`star_product`] so strongly reflecting arrays stay accurate.
pub fn lossy_array_scattering(
    sites: &[LossySite],
    links: &[CellLink],
    omega: f64,
) -> Result<BiScatter> {
    check_links(sites, links)?;
    let mut total: Option<BiScatter> = None;
    for (j, site) in sites.iter().enumerate() {
        let mut cell = scattering_two_sided(site, omega)?;
        if let Some(link) = links.get(j) {
            cell = star_product(&cell, &link_scattering(link))?;
        }
        total = Some(match total {
            None => cell,
            Some(t) => star_product(&t, &cell)?,
        });
    }
    total.ok_or(Error::InvalidParameter("array must have at least one site"))
}

/// Loss and backscatter settings applied uniformly to an [`ArrayConfig`].
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossSettings {
    /// Intrinsic loss rate of both cavities.
    pub kappa_int: f64,
    /// Backscatter ratio `κ_L/κ_R`; `κ_L` adds to the cavity linewidth.
    pub backscatter_ratio: f64,
    /// Amplitude loss per link, `ε = 1 − e^{−ζd}`.
    pub transmission_loss: f64,
    /// Common propagation phase per link, in radians.
    pub link_phase: f64,
    /// Propagation delay per link; adds `ω·delay` to the phase.
    pub link_delay: f64,
}

/// Two-sided array built from an [`ArrayConfig`] and [`LossSettings`].
#[derive(Debug, Clone)]
pub struct LossyArray {
    pub sites: Vec<LossySite>,
    pub settings: LossSettings,
}

impl LossyArray {
    pub fn from_config(config: &ArrayConfig, settings: LossSettings) -> Result<Self> {
        if !(settings.link_delay.is_finite() && settings.link_phase.is_finite()) {
            return Err(Error::InvalidParameter("link phase and delay must be finite"));
        }
        CellLink::from_transmission_loss(settings.transmission_loss, 0.0)?;
        let r = settings.backscatter_ratio;
        let sites = materialize_sites(config)?
            .into_iter()
            .map(|s| {
                LossySite::new(
                    s,
                    [r * s.kappa1, r * s.kappa2],
                    [settings.kappa_int, settings.kappa_int],
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sites, settings })
    }

    pub fn scattering(&self, omega: f64) -> Result<BiScatter> {
        let phase = self.settings.link_phase + omega * self.settings.link_delay;
        let link = CellLink::from_transmission_loss(self.settings.transmission_loss, phase)?;
        let links = alloc::vec![link; self.sites.len()];
        lossy_array_scattering(&self.sites, &links, omega)
    }
}

impl ConversionModel for LossyArray {
    fn t21(&self, omega: f64) -> Result<C64> {
        Ok(self.scattering(omega)?.forward_t21())
    }
}

/// Which loss parameter a sweep varies.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossParameter {
    IntrinsicLoss,
    TransmissionLoss,
    Backscatter,
}

impl LossParameter {
    pub fn apply(self, base: LossSettings, value: f64) -> LossSettings {
        match self {
            LossParameter::IntrinsicLoss => LossSettings { kappa_int: value, ..base },
            LossParameter::TransmissionLoss => LossSettings { transmission_loss: value, ..base },
            LossParameter::Backscatter => LossSettings { backscatter_ratio: value, ..base },
        }
    }
}

/// Resonant efficiency `|T₂₁(0)|²` for each value of `parameter`.
pub fn efficiency_vs_loss(
    config: &ArrayConfig,
    base: LossSettings,
    parameter: LossParameter,
    values: &[f64],
) -> Result<Vec<(f64, f64)>> {
    values
        .iter()
        .map(|&v| {
            let array = LossyArray::from_config(config, parameter.apply(base, v))?;
            Ok((v, array.efficiency(0.0)?))
        })
        .collect()
}

/// `|T₂₁|²` of the two-sided array on a grid.
pub fn lossy_spectrum(array: &LossyArray, grid: &FrequencyGrid) -> Result<Vec<f64>> {
    grid.points().map(|w| array.efficiency(w)).collect()
}

/// Envelope efficiency near resonance: the largest `|T₂₁|²` between the
/// local maxima closest to `ω = 0` on either side.
///
/// Needs a grid that brackets zero with at least one ripple on each side.
pub fn envelope_efficiency(grid: &FrequencyGrid, efficiency: &[f64]) -> Result<f64> {
    let w: Vec<f64> = grid.points().collect();
    let n = efficiency.len();
    if n != w.len() || n < 3 {
        return Err(Error::InvalidParameter("efficiency samples must match the grid"));
    }
    let is_max = |k: usize| efficiency[k] >= efficiency[k - 1] && efficiency[k] >= efficiency[k + 1];
    let left = (1..n - 1).rev().find(|&k| w[k] < 0.0 && is_max(k));
    let right = (1..n - 1).find(|&k| w[k] > 0.0 && is_max(k));
    match (left, right) {
        (Some(a), Some(b)) => Ok(efficiency[a..=b].iter().cloned().fold(0.0, f64::max)),
        _ => Err(Error::InvalidParameter("no ripple maximum on both sides of resonance")),
    }
}

/// Grid used for backscatter envelopes: an even number of points, so that
/// `ω = 0` (where `κ_L = κ_R` makes `S_L` singular) is never sampled.
pub fn backscatter_grid(half_width: f64, n_points: usize) -> Result<FrequencyGrid> {
    FrequencyGrid::centered(0.0, half_width, n_points + n_points % 2)
}

/// Envelope efficiency for each backscatter ratio.
pub fn backscatter_efficiencies(
    config: &ArrayConfig,
    base: LossSettings,
    ratios: &[f64],
    grid: &FrequencyGrid,
) -> Result<Vec<(f64, f64)>> {
    ratios
        .iter()
        .map(|&r| {
            let array = LossyArray::from_config(config, LossParameter::Backscatter.apply(base, r))?;
            let e = lossy_spectrum(&array, grid)?;
            Ok((r, envelope_efficiency(grid, &e)?))
        })
        .collect()
}

/// Least-squares slope of `1 − η` against `κ_L/κ_R`.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaFit {
    pub alpha: f64,
    pub stderr: f64,
    pub points_used: usize,
}

/// Largest ratio treated as the linear regime.
pub const MAX_LINEAR_RATIO: f64 = 0.2;

/// Fits `η ≈ 1 − α·κ_L/κ_R` through the origin.
pub fn backscatter_alpha_fit(points: &[(f64, f64)]) -> Result<AlphaFit> {
    if points.len() < 4 {
        return Err(Error::DegenerateFit("need at least four (ratio, efficiency) points"));
    }
    if points.iter().any(|&(r, e)| !(r > 0.0 && r <= MAX_LINEAR_RATIO) || !e.is_finite()) {
        return Err(Error::DegenerateFit("ratios must lie in (0, 0.2]"));
    }
    let sxx: f64 = points.iter().map(|&(r, _)| r * r).sum();
    let sxy: f64 = points.iter().map(|&(r, e)| r * (1.0 - e)).sum();
    let alpha = sxy / sxx;
    let rss: f64 = points
        .iter()
        .map(|&(r, e)| {
            let d = (1.0 - e) - alpha * r;
            d * d
        })
        .sum();
    let stderr = sqrt(rss / (points.len() - 1) as f64 / sxx);
    Ok(AlphaFit { alpha, stderr, points_used: points.len() })
}
