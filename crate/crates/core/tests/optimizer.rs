use oetransduce_core::optimize::{
    bandwidth_of_profile, fit_tanh_beta, grid_oracle, optimize_couplings, OptimizationProblem,
    OptimizerSettings, ORACLE_STEPS,
};

fn problem(n: usize, gamma: f64, min_eff: f64) -> OptimizationProblem {
    OptimizationProblem::new(n, gamma, min_eff).unwrap()
}

fn settings() -> OptimizerSettings {
    OptimizerSettings::default()
}

#[test]
fn small_arrays_agree_with_brute_force() {
    for (n, gamma) in [(2, 0.05), (3, 0.05), (3, 0.02)] {
        let p = problem(n, gamma, 0.99);
        let opt = optimize_couplings(&p, &settings()).unwrap();
        let oracle = grid_oracle(&p, settings().grid_points).unwrap();
        assert!(opt.converged && oracle.converged);
        let resolution = gamma / ORACLE_STEPS as f64;
        assert!(opt.bandwidth >= oracle.bandwidth - 1e-6, "N={n}: {} vs {}", opt.bandwidth, oracle.bandwidth);
        assert!((opt.gamma1_per_site[0] - oracle.gamma1_per_site[0]).abs() <= resolution);
    }
}

#[test]
fn two_site_reference_point() {
    let r = optimize_couplings(&problem(2, 0.05, 0.99), &settings()).unwrap();
    assert!((r.gamma1_per_site[0] - 0.008).abs() < 0.001);
    assert!((r.bandwidth - 0.33).abs() < 0.01);
    assert!(r.passband_min >= 0.99 * r.peak_value);
}

#[test]
fn optimum_is_mirror_symmetric_active_and_reproducible() {
    for n in 2..=5 {
        let p = problem(n, 0.02, 0.95);
        let r = optimize_couplings(&p, &settings()).unwrap();
        assert!(r.converged);
        for j in 0..n {
            assert!((r.gamma1_per_site[j] + r.gamma1_per_site[n - 1 - j] - 0.02).abs() < 1e-8);
        }
        assert!(r.passband_min >= 0.95 - 1e-6);
        assert!((r.passband_min - 0.95).abs() < 1e-3, "N={n}: {}", r.passband_min);
        let again = bandwidth_of_profile(&p, &r.gamma1_per_site, 4001).unwrap();
        assert!((again.fwhm - r.bandwidth).abs() < 1e-6);
    }
}

#[test]
fn optimized_bandwidth_is_close_to_linear_fit() {
    for n in 1..=6 {
        let r = optimize_couplings(&problem(n, 0.02, 0.9), &settings()).unwrap();
        let fit = 4.0 * 0.02 * n as f64;
        assert!((r.bandwidth / fit - 1.0).abs() < 0.1, "N={n}: {}", r.bandwidth);
    }
}

#[test]
fn steepness_rises_with_required_efficiency() {
    let betas: Vec<f64> = [0.5, 0.7, 0.9, 0.99]
        .iter()
        .map(|&m| {
            let r = optimize_couplings(&problem(6, 0.02, m), &settings()).unwrap();
            fit_tanh_beta(&r.gamma1_per_site, 0.02).unwrap()
        })
        .collect();
    for w in betas.windows(2) {
        assert!(w[1] > w[0], "{betas:?}");
    }
}

#[test]
fn unconstrained_pair_prefers_a_central_dip() {
    let loose = grid_oracle(&problem(2, 0.05, 1e-9), settings().grid_points).unwrap();
    let tight = grid_oracle(&problem(2, 0.05, 0.99), settings().grid_points).unwrap();
    assert!(loose.bandwidth > tight.bandwidth);
    assert!(loose.passband_min < 0.5 * loose.peak_value);
}

#[test]
fn same_seed_same_result() {
    let p = problem(4, 0.02, 0.95);
    let s = OptimizerSettings { starts: 10, seed: 17, ..settings() };
    assert_eq!(optimize_couplings(&p, &s).unwrap(), optimize_couplings(&p, &s).unwrap());
}

#[test]
fn impossible_constraint_is_reported() {
    let r = optimize_couplings(&problem(2, 0.05, 1.0), &settings()).unwrap();
    assert!(!r.converged);
}
