//! Single-transducer scattering matrices: exact, on-resonance, adiabatically
//! eliminated, off-resonant coefficients and the counter-rotating
//! (Bogoliubov) lab-frame model.
//!
//! Rotating-frame functions take `ω` relative to the cavity resonance.
//! [`scattering_bogoliubov`] takes the lab-frame frequency; its upper-left
//! block at `ω_m + δ` approximates [`scattering_full`] at `δ`.

use crate::linalg::{Mat3, Mat6};
use crate::math::sqrt;
use crate::{Error, Mat2, Mat4, Result, SiteParams, C64};

const I: C64 = C64::new(0.0, 1.0);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `κ − 2iω`.
fn lorentz(kappa: f64, omega: f64) -> C64 {
    C64::new(kappa, -2.0 * omega)
}

/// Exact beam-splitter scattering matrix of one site.
pub fn scattering_full(site: &SiteParams, omega: f64) -> Result<Mat2> {
    let SiteParams { g1, g2, kappa1, kappa2, gamma } = *site;
    let l1 = lorentz(kappa1, omega);
    let l2 = lorentz(kappa2, omega);
    if g1 == 0.0 && g2 == 0.0 {
        // Mechanics decoupled; its factor cancels even when γ = ω = 0.
        let r1 = C64::new(kappa1, 2.0 * omega) / l1;
        let r2 = C64::new(kappa2, 2.0 * omega) / l2;
        let z = C64::new(0.0, 0.0);
        return Ok(Mat2::new(r1, z, z, r2));
    }
    let lm = lorentz(gamma, omega);
    let d = l2 * (4.0 * g1 * g1) + l1 * (4.0 * g2 * g2) + l1 * l2 * lm;
    if d.norm() == 0.0 || !d.is_finite() {
        return Err(Error::Singular("single-site scattering denominator"));
    }
    let s11 = (re(8.0 * g2 * g2 * kappa1) + l2 * lm * (2.0 * kappa1)) / d - 1.0;
    let s22 = (re(8.0 * g1 * g1 * kappa2) + l1 * lm * (2.0 * kappa2)) / d - 1.0;
    let s12 = re(-8.0 * g1 * g2 * sqrt(kappa1 * kappa2)) / d;
    Ok(Mat2::new(s11, s12, s12, s22))
}

/// Drift matrix of the rotating-frame model in the basis `(c1, c2, b)`.
pub(crate) fn drift_matrix(site: &SiteParams, kappa_total: [f64; 2]) -> Mat3 {
    let (g1, g2) = (site.g1, site.g2);
    let z = C64::new(0.0, 0.0);
    Mat3::from_rows([
        [re(-0.5 * kappa_total[0]), z, -I * g1],
        [z, re(-0.5 * kappa_total[1]), -I * g2],
        [-I * g1, -I * g2, re(-0.5 * decoupled_gamma(site))],
    ])
}

/// Mechanical linewidth used in solves. A decoupled lossless oscillator
/// would make the system singular at resonance without affecting any field,
/// so it is given a unit linewidth instead.
fn decoupled_gamma(site: &SiteParams) -> f64 {
    if site.g1 == 0.0 && site.g2 == 0.0 && site.gamma == 0.0 {
        1.0
    } else {
        site.gamma
    }
}

/// [`scattering_full`] evaluated through `S = −I − C(A + iω)⁻¹B` with a dense
/// solve instead of the closed form.
pub fn scattering_state_space(site: &SiteParams, omega: f64) -> Result<Mat2> {
    let mut m = drift_matrix(site, [site.kappa1, site.kappa2]);
    for k in 0..3 {
        m.0[k][k] += I * omega;
    }
    let (r1, r2) = (sqrt(site.kappa1), sqrt(site.kappa2));
    let z = C64::new(0.0, 0.0);
    let b = [[re(r1), z], [z, re(r2)], [z, z]];
    let x = m.solve_multi(&b)?;
    let mut s = Mat2::identity().scale(re(-1.0));
    for j in 0..2 {
        s.0[0][j] -= x[0][j] * r1;
        s.0[1][j] -= x[1][j] * r2;
    }
    Ok(s)
}

/// On-resonance scattering matrix from the classical cooperativities
/// `C̃ᵢ = 4gᵢ²/(κᵢγ)`.
pub fn scattering_resonant(c1_tilde: f64, c2_tilde: f64) -> Mat2 {
    debug_assert!(c1_tilde >= 0.0 && c2_tilde >= 0.0);
    let n = 1.0 / (c1_tilde + c2_tilde + 1.0);
    let off = -2.0 * sqrt(c1_tilde * c2_tilde) * n;
    Mat2::new(
        re((c2_tilde - c1_tilde + 1.0) * n),
        re(off),
        re(off),
        re((c1_tilde - c2_tilde + 1.0) * n),
    )
}

/// Site after adiabatic elimination of both cavities.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EliminatedSite {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl EliminatedSite {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma1 >= 0.0 && gamma2 >= 0.0) || !gamma1.is_finite() || !gamma2.is_finite() {
            return Err(Error::InvalidParameter("effective rates must be finite and >= 0"));
        }
        Ok(Self { gamma1, gamma2 })
    }

    pub fn from_site(site: &SiteParams) -> Self {
        let (gamma1, gamma2) = site.effective_rates();
        Self { gamma1, gamma2 }
    }
}

/// Scattering matrix of an eliminated site; unitary for real `ω`.
pub fn scattering_eliminated(site: &EliminatedSite, omega: f64) -> Result<Mat2> {
    let (a, b) = (site.gamma1, site.gamma2);
    let den = C64::new(2.0 * (a + b), -omega);
    if den.norm() == 0.0 {
        return Err(Error::Singular("uncoupled eliminated site at zero frequency"));
    }
    let n = 1.0 / den;
    let off = n * (-4.0 * sqrt(a * b));
    Ok(Mat2::new(
        C64::new(-2.0 * (a - b), -omega) * n,
        off,
        off,
        C64::new(2.0 * (a - b), -omega) * n,
    ))
}

/// Off-resonant transmission `t` and conversion `c` coefficients of a site
/// with equal linewidths.
///
/// Only meaningful away from resonance, where `|c| ≪ 1`.
pub fn offres_coefficients(site: &SiteParams, omega: f64) -> Result<(C64, C64)> {
    let kappa = site.kappa1;
    if (site.kappa1 - site.kappa2).abs() > 1e-12 * kappa {
        return Err(Error::InvalidParameter("off-resonant coefficients need kappa1 == kappa2"));
    }
    let l = lorentz(kappa, omega);
    let lm = lorentz(site.gamma, omega);
    let den = l * l * lm;
    if den.norm() == 0.0 {
        return Err(Error::Singular("off-resonant conversion coefficient at resonance"));
    }
    let t = C64::new(kappa, 2.0 * omega) / l;
    let c = re(-8.0 * site.g1 * site.g2 * kappa) / den;
    Ok((t, c))
}

/// Site with counter-rotating terms kept, described in the lab frame.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogoliubovSite {
    pub site: SiteParams,
    pub omega_m: f64,
}

impl BogoliubovSite {
    pub fn new(site: SiteParams, omega_m: f64) -> Result<Self> {
        site.validate()?;
        if !(omega_m > 0.0) || !omega_m.is_finite() {
            return Err(Error::InvalidParameter("mechanical frequency must be > 0"));
        }
        Ok(Self { site, omega_m })
    }
}

/// 4×4 scattering matrix in the basis `(a1, a2, a1†, a2†)` at lab-frame `ω`.
///
/// Entries `(0,2)`, `(0,3)`, `(1,2)`, `(1,3)` and their mirrors are Stokes
/// (amplification) processes.
pub fn scattering_bogoliubov(site: &BogoliubovSite, omega: f64) -> Result<Mat4> {
    let SiteParams { g1, g2, kappa1, kappa2, .. } = site.site;
    let gamma = decoupled_gamma(&site.site);
    let wm = site.omega_m;
    let z = C64::new(0.0, 0.0);
    let (a, b) = (-I * g1, -I * g2);
    let (ac, bc) = (I * g1, I * g2);
    let mut m = Mat6::from_rows([
        [C64::new(-0.5 * kappa1, -wm), z, a, z, z, a],
        [z, C64::new(-0.5 * kappa2, -wm), b, z, z, b],
        [a, b, C64::new(-0.5 * gamma, -wm), a, b, z],
        [z, z, ac, C64::new(-0.5 * kappa1, wm), z, ac],
        [z, z, bc, z, C64::new(-0.5 * kappa2, wm), bc],
        [ac, bc, z, ac, bc, C64::new(-0.5 * gamma, wm)],
    ]);
    for k in 0..6 {
        m.0[k][k] += I * omega;
    }
    let (r1, r2) = (sqrt(kappa1), sqrt(kappa2));
    // Input column j drives state row `rows[j]` with weight `w[j]`.
    let rows = [0usize, 1, 3, 4];
    let w = [r1, r2, r1, r2];
    let mut rhs = [[z; 4]; 6];
    for j in 0..4 {
        rhs[rows[j]][j] = re(w[j]);
    }
    let x = m.solve_multi(&rhs)?;
    let mut s = Mat4::identity().scale(re(-1.0));
    for i in 0..4 {
        for j in 0..4 {
            s.0[i][j] -= x[rows[i]][j] * w[i];
        }
    }
    Ok(s)
}
