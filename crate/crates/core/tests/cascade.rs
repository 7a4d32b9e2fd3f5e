//! Cascades checked against an independent whole-array state-space solve and
//! against closed forms.

use oetransduce_core::array::{
    array_transfer, bandwidth_analytic, bandwidth_auto, config_bandwidth, halfmax_roots_analytic,
    perturbative_t21, ConversionModel, EliminatedCascade, FullCascade,
};
use oetransduce_core::loss::{
    lossy_array_scattering, lossy_array_transfer, transfer_to_scatter, CellLink, LossySite,
};
use oetransduce_core::transducer::{scattering_eliminated, EliminatedSite};
use oetransduce_core::{materialize_sites, ArrayConfig, SiteParams, C64};

const I: C64 = C64::new(0.0, 1.0);

fn solve(mut a: Vec<Vec<C64>>, mut b: Vec<Vec<C64>>) -> Vec<Vec<C64>> {
    let n = a.len();
    for col in 0..n {
        let p = (col..n).max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm())).unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            for c in 0..b[r].len() {
                let v = b[col][c];
                b[r][c] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        for c in 0..b[col].len() {
            let mut v = b[col][c];
            for k in col + 1..n {
                v -= a[col][k] * b[k][c];
            }
            b[col][c] = v / a[col][col];
        }
    }
    b
}

/// Whole array as one cascaded linear system: `u₁` drives site 1, the output
/// of site `j` drives site `j+1`, and all 3N mode amplitudes are solved at once.
fn cascade_oracle(sites: &[SiteParams], omega: f64) -> [[C64; 2]; 2] {
    let n = sites.len();
    let dim = 3 * n;
    let zero = C64::new(0.0, 0.0);
    let mut a = vec![vec![zero; dim]; dim];
    let mut rhs = vec![vec![zero; 2]; dim];
    let root = |s: &SiteParams| [s.kappa1.sqrt(), s.kappa2.sqrt()];
    for (j, s) in sites.iter().enumerate() {
        let o = 3 * j;
        let drift = [
            [C64::from(-0.5 * s.kappa1), zero, -I * s.g1],
            [zero, C64::from(-0.5 * s.kappa2), -I * s.g2],
            [-I * s.g1, -I * s.g2, C64::from(-0.5 * s.gamma)],
        ];
        for r in 0..3 {
            for c in 0..3 {
                a[o + r][o + c] = drift[r][c];
            }
            a[o + r][o + r] += I * omega;
        }
        let bj = root(s);
        for (k, sk) in sites.iter().enumerate().take(j) {
            let sign = if (j - 1 - k) % 2 == 0 { 1.0 } else { -1.0 };
            let ck = root(sk);
            for port in 0..2 {
                a[o + port][3 * k + port] += C64::from(sign * bj[port] * ck[port]);
            }
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        for port in 0..2 {
            rhs[o + port][port] = C64::from(sign * bj[port]);
        }
    }
    let x = solve(a, rhs);
    let last = n - 1;
    let cn = root(&sites[last]);
    let mut out = [[zero; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            // u_N = (−1)^{N−1}u₁ − Σ_{k<N} (−1)^{N−1−k} C_k x_k
            let mut u = if r == c {
                C64::from(if last.is_multiple_of(2) { 1.0 } else { -1.0 })
            } else {
                zero
            };
            for (k, sk) in sites.iter().enumerate().take(last) {
                let sign = if (last - 1 - k).is_multiple_of(2) { 1.0 } else { -1.0 };
                u -= C64::from(sign * root(sk)[r]) * x[3 * k + r][c];
            }
            out[r][c] = -u - C64::from(cn[r]) * x[3 * last + r][c];
        }
    }
    out
}

#[test]
fn cascade_matches_whole_array_solve() {
    let configs = [
        ArrayConfig { gamma: 1e-4, ..ArrayConfig::symmetric_tanh(7, 0.08) },
        ArrayConfig { gamma: 2e-3, ..ArrayConfig::symmetric_linear(5, 0.15) },
        ArrayConfig { gamma: 0.0, ..ArrayConfig::symmetric_tanh(10, 0.1) },
    ];
    for cfg in &configs {
        let sites = materialize_sites(cfg).unwrap();
        for w in [-0.7, -0.05, 0.0, 0.013, 0.3] {
            let t = array_transfer(&sites, w).unwrap();
            let oracle = cascade_oracle(&sites, w);
            for r in 0..2 {
                for c in 0..2 {
                    assert!((t[(r, c)] - oracle[r][c]).norm() < 1e-10, "{r}{c} at ω={w}");
                }
            }
        }
    }
}

#[test]
fn unequal_linewidths_match_whole_array_solve() {
    let sites = vec![
        SiteParams::new(0.05, 0.12, 0.8, 1.3, 1e-3).unwrap(),
        SiteParams::new(0.1, 0.07, 1.1, 0.6, 0.0).unwrap(),
        SiteParams::new(0.2, 0.02, 1.0, 0.9, 5e-4).unwrap(),
    ];
    for w in [-0.4, 0.0, 0.25] {
        let t = array_transfer(&sites, w).unwrap();
        let oracle = cascade_oracle(&sites, w);
        assert!((t[(1, 0)] - oracle[1][0]).norm() < 1e-10);
        assert!((t[(0, 1)] - oracle[0][1]).norm() < 1e-10);
    }
}

#[test]
fn two_sided_star_product_matches_transfer_product() {
    let cfg = ArrayConfig { gamma: 1e-4, ..ArrayConfig::symmetric_tanh(9, 0.08) };
    let sites: Vec<LossySite> = materialize_sites(&cfg)
        .unwrap()
        .into_iter()
        .map(|s| LossySite::new(s, [0.2 * s.kappa1, 0.2 * s.kappa2], [0.005, 0.005]).unwrap())
        .collect();
    let links = vec![CellLink::new(0.002, 0.4, 0.45).unwrap(); 9];
    for w in [-0.3, -0.01, 0.02, 0.2] {
        let star = lossy_array_scattering(&sites, &links, w).unwrap();
        let via_t = transfer_to_scatter(&lossy_array_transfer(&sites, &links, w).unwrap()).unwrap();
        assert!(star.0.max_abs_diff(&via_t.0) < 1e-9);
    }
}

#[test]
fn eliminated_model_tracks_full_model_for_weak_coupling() {
    let g = 0.02;
    let cfg = ArrayConfig::symmetric_tanh(6, g);
    let full = FullCascade::from_config(&cfg).unwrap();
    let sites = materialize_sites(&cfg).unwrap();
    let elim = EliminatedCascade::new(sites.iter().map(EliminatedSite::from_site).collect()).unwrap();
    for w in [-0.01, 0.0, 0.004, 0.01] {
        let a = full.efficiency(w).unwrap();
        let b = elim.efficiency(w).unwrap();
        assert!((a - b).abs() < 5e-3, "{a} {b} at {w}");
    }
}

#[test]
fn eliminated_single_site_bandwidth() {
    let site = EliminatedSite::new(0.025, 0.025).unwrap();
    let s = scattering_eliminated(&site, 0.0).unwrap();
    assert!((s[(1, 0)].norm() - 1.0).abs() < 1e-14);
    let model = EliminatedCascade::new(vec![site]).unwrap();
    let (b, _) = bandwidth_auto(&model, 0.0, 0.5, 2001).unwrap();
    assert!((b.fwhm - 0.2).abs() < 1e-8);
}

#[test]
fn large_array_resonant_efficiency() {
    let cfg = ArrayConfig::symmetric_tanh(50, 0.08);
    let e = FullCascade::from_config(&cfg).unwrap().efficiency(0.0).unwrap();
    assert!(e >= 0.95, "{e}");
}

#[test]
fn analytic_roots_track_numeric_bandwidth() {
    let g = 0.08;
    let (_, plus) = halfmax_roots_analytic(g, 1.0, 200);
    // The roots come from the first-order linear-profile expansion; the exact
    // linear cascade is 6.7% narrower at N=200.
    let linear = config_bandwidth(&ArrayConfig::symmetric_linear(200, g)).unwrap().fwhm;
    let gap = 2.0 * plus / linear - 1.0;
    assert!((gap - 0.067).abs() < 1e-3, "{gap}");
    let tanh = config_bandwidth(&ArrayConfig::symmetric_tanh(200, g)).unwrap().fwhm;
    assert!(tanh > 1.0);
    assert!((bandwidth_analytic(g, 1.0, 200) - 1.341388).abs() < 1e-6);
}

#[test]
fn perturbative_amplitude_far_off_resonance() {
    let cfg = ArrayConfig { gamma: 1e-4, ..ArrayConfig::symmetric_tanh(50, 0.08) };
    let p = perturbative_t21(&cfg, 2.0).unwrap();
    let exact = FullCascade::from_config(&cfg).unwrap().t21(2.0).unwrap();
    assert!(p.weak_coupling);
    assert!((p.value - exact).norm() / exact.norm() < 0.1);
}
