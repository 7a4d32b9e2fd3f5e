//! Thermal mechanical noise added to the converted fields, and Stokes noise
//! of the counter-rotating model.

use alloc::vec::Vec;

use crate::array::{bandwidth_auto, default_window, BogoliubovCascade, FullCascade};
use crate::integrate::{adaptive_trapezoid, Quadrature};
use crate::math::sqrt;
use crate::transducer::{drift_matrix, scattering_full};
use crate::{materialize_sites, ArrayConfig, Error, FrequencyGrid, Mat2, Result, SiteParams, C64};

/// Coupling `V_j(ω) = −C(A + iω)⁻¹E` of the mechanical bath of site `j`
/// (1-based) into the two fields leaving that site.
pub fn noise_coupling_vector(sites: &[SiteParams], j: usize, omega: f64) -> Result<[C64; 2]> {
    if j == 0 || j > sites.len() {
        return Err(Error::IndexOutOfRange { index: j, len: sites.len() });
    }
    site_noise_vector(&sites[j - 1], omega)
}

fn site_noise_vector(site: &SiteParams, omega: f64) -> Result<[C64; 2]> {
    let z = C64::new(0.0, 0.0);
    if site.gamma == 0.0 {
        return Ok([z, z]);
    }
    let mut m = drift_matrix(site, [site.kappa1, site.kappa2]);
    for k in 0..3 {
        m.0[k][k] += C64::new(0.0, omega);
    }
    let x = m.solve(&[z, z, C64::new(sqrt(site.gamma), 0.0)])?;
    Ok([-x[0] * sqrt(site.kappa1), -x[1] * sqrt(site.kappa2)])
}

/// Added-noise densities `(port 1, port 2)` of the array at one frequency.
///
/// Bath contributions `χ_j = (Π_{k>j} S_k) V_j` are summed incoherently with
/// force-noise weight `2n̄ + 1`.
pub fn added_noise_at(sites: &[SiteParams], n_bar: f64, omega: f64) -> Result<[f64; 2]> {
    let weight = 2.0 * n_bar + 1.0;
    let mut downstream = Mat2::identity();
    let mut acc = [0.0; 2];
    for site in sites.iter().rev() {
        let chi = downstream.mul_vec(&site_noise_vector(site, omega)?);
        acc[0] += chi[0].norm_sqr();
        acc[1] += chi[1].norm_sqr();
        downstream = downstream * scattering_full(site, omega)?;
    }
    Ok([acc[0] * weight, acc[1] * weight])
}

/// Added-noise densities on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectrum {
    pub grid: FrequencyGrid,
    pub s_add_1: Vec<f64>,
    pub s_add_2: Vec<f64>,
}

pub fn added_noise_spectrum(config: &ArrayConfig, grid: FrequencyGrid) -> Result<NoiseSpectrum> {
    let sites = materialize_sites(config)?;
    let mut s_add_1 = Vec::with_capacity(grid.len());
    let mut s_add_2 = Vec::with_capacity(grid.len());
    for w in grid.points() {
        let [a, b] = added_noise_at(&sites, config.n_bar, w)?;
        s_add_1.push(a);
        s_add_2.push(b);
    }
    Ok(NoiseSpectrum { grid, s_add_1, s_add_2 })
}

/// Large-array on-resonance estimate `4C̃(2n̄+1)/(C̃+1)² · (N, 1/(2N))` for a
/// symmetric linear array.
pub fn added_noise_resonant_analytic(c_tilde: f64, n_bar: f64, n_sites: usize) -> [f64; 2] {
    let n = n_sites as f64;
    let base = 4.0 * c_tilde * (2.0 * n_bar + 1.0) / ((c_tilde + 1.0) * (c_tilde + 1.0));
    [base * n, base / (2.0 * n)]
}

/// Added noise integrated over a frequency window.
///
/// Without `window`, integrates over `[−Δω/2, Δω/2]` with `Δω` the FWHM of
/// the matching conversion spectrum.
pub fn integrated_added_noise(config: &ArrayConfig, window: Option<(f64, f64)>) -> Result<[f64; 2]> {
    let sites = materialize_sites(config)?;
    let (lo, hi) = match window {
        Some(w) => w,
        None => {
            let model = FullCascade::new(sites.clone())?;
            let (bw, _) = bandwidth_auto(&model, 0.0, default_window(config)?, 2001)?;
            (-0.5 * bw.fwhm, 0.5 * bw.fwhm)
        }
    };
    adaptive_trapezoid(
        |w| added_noise_at(&sites, config.n_bar, w),
        lo,
        hi,
        Quadrature::default(),
    )
}

/// Sideband ratio above which the counter-rotating model leaves the
/// resolved-sideband regime.
pub const SIDEBAND_WARNING_RATIO: f64 = 0.3;

/// Stokes-noise density `|T₂₃|² + |T₂₄|²` on a lab-frame grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesSpectrum {
    pub grid: FrequencyGrid,
    pub density: Vec<f64>,
    /// Set when some linewidth exceeds `0.3·ω_m`.
    pub unresolved_sideband: bool,
}

/// Whether some linewidth of `config` exceeds `0.3·ω_m`.
pub fn sideband_unresolved(config: &ArrayConfig, omega_m: f64) -> bool {
    config.kappa1.max().max(config.kappa2.max()) > SIDEBAND_WARNING_RATIO * omega_m
}

/// `|T₂₃|² + |T₂₄|²` at lab-frame frequency `omega`.
pub fn stokes_density(cascade: &BogoliubovCascade, omega: f64) -> Result<f64> {
    let t = cascade.transfer(omega)?;
    Ok(t[(1, 2)].norm_sqr() + t[(1, 3)].norm_sqr())
}

pub fn stokes_noise_spectrum(
    config: &ArrayConfig,
    omega_m: f64,
    grid: FrequencyGrid,
) -> Result<StokesSpectrum> {
    let cascade = BogoliubovCascade::from_config(config, omega_m)?;
    let density = grid
        .points()
        .map(|w| stokes_density(&cascade, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(StokesSpectrum { grid, density, unresolved_sideband: sideband_unresolved(config, omega_m) })
}

/// Stokes photons integrated over `ω_m ± Δω/2`, with `Δω` the FWHM of the
/// lab-frame conversion spectrum.
pub fn integrated_stokes_noise(config: &ArrayConfig, omega_m: f64) -> Result<f64> {
    let cascade = BogoliubovCascade::from_config(config, omega_m)?;
    let half = default_window(config)?.min(0.5 * omega_m);
    let (bw, _) = bandwidth_auto(&cascade, omega_m, half, 2001)?;
    let [v] = adaptive_trapezoid(
        |w| stokes_density(&cascade, w).map(|d| [d]),
        omega_m - 0.5 * bw.fwhm,
        omega_m + 0.5 * bw.fwhm,
        Quadrature::default(),
    )?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lossless_mechanics_adds_no_noise() {
        let cfg = ArrayConfig::symmetric_linear(5, 0.1);
        let sites = materialize_sites(&cfg).unwrap();
        for j in 1..=5 {
            assert_eq!(noise_coupling_vector(&sites, j, 0.2).unwrap(), [C64::new(0.0, 0.0); 2]);
        }
        let grid = FrequencyGrid::new(-0.5, 0.5, 21).unwrap();
        let s = added_noise_spectrum(&cfg, grid).unwrap();
        assert!(s.s_add_1.iter().chain(&s.s_add_2).all(|&v| v == 0.0));
    }

    #[test]
    fn index_is_checked() {
        let sites = materialize_sites(&ArrayConfig::symmetric_linear(3, 0.1)).unwrap();
        assert!(noise_coupling_vector(&sites, 0, 0.0).is_err());
        assert!(noise_coupling_vector(&sites, 4, 0.0).is_err());
    }

    #[test]
    fn state_space_matches_linear_closed_form() {
        let (g, n, gamma) = (0.1, 8usize, 5e-5);
        let cfg = ArrayConfig { gamma, ..ArrayConfig::symmetric_linear(n, g) };
        let sites = materialize_sites(&cfg).unwrap();
        for w in [0.0, 0.03] {
            for j in 1..=n {
                let v = noise_coupling_vector(&sites, j, w).unwrap();
                let x = j as f64 / n as f64;
                let g1 = g * x;
                let g2 = g * (1.0 - x);
                let den = C64::new(4.0 * (g1 * g1 + g2 * g2), 0.0)
                    + C64::new(1.0, -2.0 * w) * C64::new(gamma, -2.0 * w);
                let pre = C64::new(0.0, -4.0 * g * sqrt(gamma)) / den;
                let expected = [pre * x, pre * (1.0 - x)];
                for k in 0..2 {
                    assert!((v[k] - expected[k]).norm() <= 1e-10 * pre.norm());
                }
            }
        }
    }

    #[test]
    fn uncoupled_field_gets_no_direct_noise() {
        let sites = [SiteParams::symmetric(0.0, 0.1, 1.0, 1e-3).unwrap()];
        let v = noise_coupling_vector(&sites, 1, 0.1).unwrap();
        assert_eq!(v[0], C64::new(0.0, 0.0));
        assert!(v[1].norm() > 0.0);
    }

    #[test]
    fn single_site_resonant_anchor() {
        // |V_i(0)|² = 4C̃ᵢ/(1 + C̃₁ + C̃₂)² for one site.
        let (g1, g2, gamma) = (0.1, 0.07, 5e-5);
        let site = SiteParams::symmetric(g1, g2, 1.0, gamma).unwrap();
        let c1 = 4.0 * g1 * g1 / gamma;
        let c2 = 4.0 * g2 * g2 / gamma;
        let s = added_noise_at(&[site], 0.0, 0.0).unwrap();
        let den = (1.0 + c1 + c2) * (1.0 + c1 + c2);
        assert!((s[0] - 4.0 * c1 / den).abs() <= 1e-10 * s[0]);
        assert!((s[1] - 4.0 * c2 / den).abs() <= 1e-10 * s[1]);
    }

    #[test]
    fn analytic_examples() {
        let [a, b] = added_noise_resonant_analytic(800.0, 100.0, 10);
        assert!((b - 4.0 * 800.0 * 201.0 / (801.0 * 801.0) / 20.0).abs() < 1e-15);
        assert!((b - 0.0501).abs() < 1e-4);
        assert!((a / b - 200.0).abs() < 1e-12);
        let [a, b] = added_noise_resonant_analytic(1e12, 0.0, 10);
        assert!(a < 1e-10 && b < 1e-10);
    }

    #[test]
    fn noise_scales_with_bath_weight() {
        let cfg = ArrayConfig { gamma: 1e-3, n_bar: 3.0, ..ArrayConfig::symmetric_tanh(4, 0.1) };
        let doubled = ArrayConfig { n_bar: 2.0 * 3.5 - 0.5, ..cfg.clone() };
        let w = Some((-0.1, 0.1));
        let a = integrated_added_noise(&cfg, w).unwrap();
        let b = integrated_added_noise(&doubled, w).unwrap();
        for k in 0..2 {
            assert!((b[k] / a[k] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn integrated_noise_vanishes_without_bath() {
        let cfg = ArrayConfig::symmetric_tanh(3, 0.1);
        assert_eq!(integrated_added_noise(&cfg, None).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn stokes_vanishes_without_coupling() {
        let cfg = ArrayConfig { gamma: 1e-4, ..ArrayConfig::symmetric_tanh(3, 0.0) };
        let grid = FrequencyGrid::centered(10.0, 0.5, 11).unwrap();
        let s = stokes_noise_spectrum(&cfg, 10.0, grid).unwrap();
        assert!(s.density.iter().all(|&d| d == 0.0));
        assert!(!s.unresolved_sideband);
        let s = stokes_noise_spectrum(&cfg, 2.0, grid).unwrap();
        assert!(s.unresolved_sideband);
    }

    #[test]
    fn mirror_symmetric_array_is_relabeling_invariant() {
        let cfg = ArrayConfig { gamma: 1e-3, n_bar: 10.0, ..ArrayConfig::symmetric_tanh(6, 0.1) };
        let sites = materialize_sites(&cfg).unwrap();
        let mirrored: Vec<SiteParams> = sites
            .iter()
            .rev()
            .map(|s| SiteParams { g1: s.g2, g2: s.g1, ..*s })
            .collect();
        for w in [-0.2, 0.0, 0.05] {
            let a = added_noise_at(&sites, 10.0, w).unwrap();
            let b = added_noise_at(&mirrored, 10.0, w).unwrap();
            for k in 0..2 {
                assert!((a[k] - b[k]).abs() <= 1e-10 * a[k]);
            }
        }
    }

    proptest! {
        #[test]
        fn densities_are_nonnegative(
            n in 1usize..8, g in 0.0f64..0.3, gamma in 0.0f64..0.01,
            n_bar in 0.0f64..100.0, w in -1.0f64..1.0,
        ) {
            let cfg = ArrayConfig { gamma, n_bar, ..ArrayConfig::symmetric_tanh(n, g) };
            let sites = materialize_sites(&cfg).unwrap();
            let s = added_noise_at(&sites, n_bar, w).unwrap();
            prop_assert!(s[0] >= 0.0 && s[1] >= 0.0);
        }
    }
}
