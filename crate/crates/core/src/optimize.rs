//! Constrained bandwidth maximization of small arrays in the adiabatically
//! eliminated model, a brute-force oracle, and tanh-profile fitting.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::Cell;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::array::{bandwidth_auto, BandwidthResult, EliminatedCascade};
use crate::params::{padded_position, tanh_split};
use crate::search::{bisect, golden_max, golden_min};
use crate::{Error, Result};

/// Bandwidth maximization problem with `Γ₁ʲ + Γ₂ʲ = Γ` at every site.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationProblem {
    pub n_sites: usize,
    pub gamma_total: f64,
    /// Lower bound on the passband minimum of `|T₂₁|²`.
    pub min_efficiency: f64,
    /// Enforce `Γ₁^{N+1−j} = Γ − Γ₁ʲ`.
    pub symmetric: bool,
}

impl OptimizationProblem {
    pub fn new(n_sites: usize, gamma_total: f64, min_efficiency: f64) -> Result<Self> {
        let p = Self { n_sites, gamma_total, min_efficiency, symmetric: true };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::InvalidParameter("array must have at least one site"));
        }
        if !(self.gamma_total > 0.0) || !self.gamma_total.is_finite() {
            return Err(Error::InvalidParameter("gamma_total must be > 0"));
        }
        if !(self.min_efficiency > 0.0 && self.min_efficiency <= 1.0) {
            return Err(Error::InvalidParameter("min_efficiency must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Number of free parameters.
    pub fn dimension(&self) -> usize {
        if self.symmetric {
            self.n_sites / 2
        } else {
            self.n_sites
        }
    }

    /// Expands free parameters into the full per-site `Γ₁` profile.
    pub fn profile(&self, x: &[f64]) -> Vec<f64> {
        if !self.symmetric {
            return x.to_vec();
        }
        let n = self.n_sites;
        let mut out = vec![0.5 * self.gamma_total; n];
        for (j, &v) in x.iter().enumerate() {
            out[j] = v;
            out[n - 1 - j] = self.gamma_total - v;
        }
        out
    }

    /// Free parameters of a full profile (its first half when symmetric).
    pub fn parameters(&self, profile: &[f64]) -> Vec<f64> {
        profile[..self.dimension()].to_vec()
    }
}

/// Tuning knobs for [`optimize_couplings`].
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    /// Total number of starts; at least the five deterministic ones are used
    /// and the rest are random.
    pub starts: usize,
    pub seed: u64,
    /// Points of the spectrum grid used by each bandwidth evaluation.
    pub grid_points: usize,
    /// Nelder–Mead evaluations per penalty stage.
    pub max_evaluations: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { starts: 8, seed: 0x5eed, grid_points: 801, max_evaluations: 400 }
    }
}

/// Penalty weights, applied in order, for the squared constraint violation.
pub const PENALTY_WEIGHTS: [f64; 3] = [1e2, 1e4, 1e6];

/// Bandwidth and ripple of one candidate profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub gamma1: Vec<f64>,
    pub bandwidth: f64,
    pub passband_min: f64,
    pub peak_value: f64,
    pub feasible: bool,
}

/// Outcome of [`optimize_couplings`] or [`grid_oracle`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub gamma1_per_site: Vec<f64>,
    pub bandwidth: f64,
    pub passband_min: f64,
    pub peak_value: f64,
    /// A feasible point was found.
    pub converged: bool,
    pub evaluations: usize,
}

/// Half-width of the first spectrum window tried for a problem.
pub fn search_window(problem: &OptimizationProblem) -> f64 {
    let g = problem.gamma_total;
    6.0 * g * problem.n_sites as f64 + 4.0 * g
}

/// Eliminated-model bandwidth of the full profile `gamma1`.
pub fn bandwidth_of_profile(
    problem: &OptimizationProblem,
    gamma1: &[f64],
    grid_points: usize,
) -> Result<BandwidthResult> {
    let model = EliminatedCascade::from_split(gamma1, problem.gamma_total)?;
    bandwidth_auto(&model, 0.0, search_window(problem), grid_points).map(|(b, _)| b)
}

struct Objective<'a> {
    problem: &'a OptimizationProblem,
    grid_points: usize,
    evaluations: Cell<usize>,
}

impl Objective<'_> {
    fn evaluate(&self, x: &[f64]) -> Evaluation {
        self.evaluations.set(self.evaluations.get() + 1);
        let gamma1 = self.problem.profile(x);
        match bandwidth_of_profile(self.problem, &gamma1, self.grid_points) {
            Ok(b) => Evaluation {
                feasible: b.passband_min >= self.problem.min_efficiency,
                gamma1,
                bandwidth: b.fwhm,
                passband_min: b.passband_min,
                peak_value: b.peak_value,
            },
            Err(_) => Evaluation {
                gamma1,
                bandwidth: 0.0,
                passband_min: 0.0,
                peak_value: 0.0,
                feasible: false,
            },
        }
    }

    /// Reversing a mirror-completed array leaves `|T₂₁|` unchanged; report
    /// the orientation with a rising `Γ₁` profile.
    fn canonical(&self, e: Evaluation) -> Evaluation {
        let (first, last) = match (e.gamma1.first(), e.gamma1.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return e,
        };
        if !self.problem.symmetric || first <= last {
            return e;
        }
        let g = self.problem.gamma_total;
        let flipped: Vec<f64> = self.problem.parameters(&e.gamma1).iter().map(|v| g - v).collect();
        let r = self.evaluate(&flipped);
        if r.feasible == e.feasible {
            r
        } else {
            e
        }
    }

    fn penalized(&self, e: &Evaluation, weight: f64) -> f64 {
        let v = (self.problem.min_efficiency - e.passband_min).max(0.0);
        -e.bandwidth + weight * v * v
    }
}

/// Orders feasible candidates: wider band first, then higher passband
/// minimum, then lexicographically smaller profile.
fn better(a: &Evaluation, b: &Evaluation) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => return true,
        (false, true) => return false,
        _ => {}
    }
    let key = |e: &Evaluation| (e.bandwidth, e.passband_min);
    match key(a).0.total_cmp(&key(b).0).then(key(a).1.total_cmp(&key(b).1)) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => a.gamma1.iter().zip(&b.gamma1).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y),
    }
}

fn clamp_into(x: &mut [f64], hi: f64) {
    x.iter_mut().for_each(|v| *v = v.clamp(0.0, hi));
}

/// Bound-projected Nelder–Mead minimization of `f` from `x0`.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    upper: f64,
    max_evaluations: usize,
) -> Vec<f64> {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i] + step <= upper { step } else { -step };
        clamp_into(&mut v, upper);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut used = n + 1;
    while used < max_evaluations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let size = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread.abs() <= 1e-13 && size <= 1e-9 * upper {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamp_into(&mut p, upper);
            p
        };

        let xr = along(1.0);
        let fr = f(&xr);
        used += 1;
        if fr < values[0] {
            let xe = along(2.0);
            let fe = f(&xe);
            used += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            used += 1;
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    let p: Vec<f64> =
                        simplex[0].iter().zip(&simplex[i]).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    values[i] = f(&p);
                    simplex[i] = p;
                }
                used += n;
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    simplex.swap_remove(best)
}

/// Deterministic starts (uniform, linear, tanh with β ∈ {2, 4.5, 8}) followed
/// by seeded random monotone profiles, as free-parameter vectors.
pub fn starting_points(problem: &OptimizationProblem, settings: &OptimizerSettings) -> Vec<Vec<f64>> {
    let n = problem.n_sites;
    let g = problem.gamma_total;
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let full = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (1..=n).map(f).collect() };
    starts.push(full(&|_| 0.5 * g));
    starts.push(full(&|j| g * padded_position(j, n)));
    for beta in [2.0, 4.5, 8.0] {
        starts.push(full(&|j| g * tanh_split(padded_position(j, n), beta).0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    while starts.len() < settings.starts.max(8) {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..g)).collect();
        v.sort_by(f64::total_cmp);
        starts.push(v);
    }
    starts.into_iter().map(|p| problem.parameters(&p)).collect()
}

/// Result of a single local search.
#[derive(Debug, Clone, PartialEq)]
pub struct StartOutcome {
    pub best: Evaluation,
    pub evaluations: usize,
}

/// Runs the penalty schedule from one start and polishes the best feasible
/// point toward the constraint boundary.
pub fn optimize_from_start(
    problem: &OptimizationProblem,
    settings: &OptimizerSettings,
    start: &[f64],
) -> StartOutcome {
    let obj = Objective {
        problem,
        grid_points: settings.grid_points,
        evaluations: Cell::new(0),
    };
    let g = problem.gamma_total;
    let mut best = obj.evaluate(start);
    if start.is_empty() {
        return StartOutcome { best, evaluations: obj.evaluations.get() };
    }
    let mut x = start.to_vec();
    let mut last = best.clone();
    for weight in PENALTY_WEIGHTS {
        x = nelder_mead(
            |p| {
                let e = obj.evaluate(p);
                let v = obj.penalized(&e, weight);
                if better(&e, &best) {
                    best = e;
                }
                v
            },
            &x,
            0.05 * g,
            g,
            settings.max_evaluations,
        );
        last = obj.evaluate(&x);
        if better(&last, &best) {
            best = last.clone();
        }
    }
    // Walk from the best feasible point toward the final penalized optimum,
    // which usually sits just outside the feasible set.
    if best.feasible && !last.feasible {
        let xf = problem.parameters(&best.gamma1);
        let at = |t: f64| -> Vec<f64> { xf.iter().zip(&x).map(|(a, b)| a + t * (b - a)).collect() };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..40 {
            let t = 0.5 * (lo + hi);
            let e = obj.evaluate(&at(t));
            if e.feasible {
                lo = t;
                if better(&e, &best) {
                    best = e;
                }
            } else {
                hi = t;
            }
        }
    }
    let best = obj.canonical(best);
    StartOutcome { best, evaluations: obj.evaluations.get() }
}

/// Picks the best feasible outcome; ties go to the higher passband minimum
/// and then to the lexicographically smaller profile.
pub fn reduce_outcomes(outcomes: &[StartOutcome]) -> Option<OptimizationResult> {
    let evaluations = outcomes.iter().map(|o| o.evaluations).sum();
    let best = outcomes
        .iter()
        .map(|o| &o.best)
        .fold(None::<&Evaluation>, |acc, e| match acc {
            Some(a) if !better(e, a) => Some(a),
            _ => Some(e),
        })?;
    Some(OptimizationResult {
        gamma1_per_site: best.gamma1.clone(),
        bandwidth: best.bandwidth,
        passband_min: best.passband_min,
        peak_value: best.peak_value,
        converged: best.feasible,
        evaluations,
    })
}

/// Multi-start penalty optimization of the coupling profile.
///
/// `converged` is `false` when no start found a feasible profile.
pub fn optimize_couplings(
    problem: &OptimizationProblem,
    settings: &OptimizerSettings,
) -> Result<OptimizationResult> {
    problem.validate()?;
    let outcomes: Vec<StartOutcome> = starting_points(problem, settings)
        .iter()
        .map(|s| optimize_from_start(problem, settings, s))
        .collect();
    reduce_outcomes(&outcomes).ok_or(Error::NotConverged("no optimizer starts"))
}

/// Steps of the brute-force grid per unit of `Γ`.
pub const ORACLE_STEPS: usize = 400;

/// Exhaustive search over the single free parameter of a symmetric array with
/// `N ≤ 3`, at resolution `Γ/400`, polished by bisection onto the constraint
/// boundary and by golden section around the best interior grid point.
pub fn grid_oracle(problem: &OptimizationProblem, grid_points: usize) -> Result<OptimizationResult> {
    problem.validate()?;
    if problem.n_sites > 3 {
        return Err(Error::InvalidParameter("grid oracle supports at most three sites"));
    }
    if !problem.symmetric {
        return Err(Error::InvalidParameter("grid oracle needs the symmetric parametrization"));
    }
    let obj = Objective { problem, grid_points, evaluations: Cell::new(0) };
    let g = problem.gamma_total;
    if problem.dimension() == 0 {
        let e = obj.evaluate(&[]);
        return Ok(result_from(e, obj.evaluations.get()));
    }
    let xs: Vec<f64> = (0..=ORACLE_STEPS).map(|i| g * i as f64 / ORACLE_STEPS as f64).collect();
    let evals: Vec<Evaluation> = xs.iter().map(|&x| obj.evaluate(&[x])).collect();
    let mut best = evals[0].clone();
    for e in &evals[1..] {
        if better(e, &best) {
            best = e.clone();
        }
    }
    let tol = 1e-9 * g;
    for i in 0..ORACLE_STEPS {
        let (a, b) = (&evals[i], &evals[i + 1]);
        if a.feasible != b.feasible {
            let margin = |x: f64| {
                let e = obj.evaluate(&[x]);
                Ok(e.passband_min - problem.min_efficiency)
            };
            if let Ok(x) = bisect(margin, xs[i], xs[i + 1], tol) {
                // Take the feasible side of the final bracket.
                for cand in [x - tol, x, x + tol] {
                    let e = obj.evaluate(&[cand.clamp(0.0, g)]);
                    if better(&e, &best) {
                        best = e;
                    }
                }
            }
        }
    }
    if let Some(k) = evals.iter().position(|e| *e == best) {
        let (lo, hi) = (xs[k.saturating_sub(1)], xs[(k + 1).min(ORACLE_STEPS)]);
        let polished = golden_max(
            |x| {
                let e = obj.evaluate(&[x]);
                Ok(if e.feasible { e.bandwidth } else { -1.0 })
            },
            lo,
            hi,
            tol,
        );
        if let Ok((x, _)) = polished {
            let e = obj.evaluate(&[x]);
            if better(&e, &best) {
                best = e;
            }
        }
    }
    let best = obj.canonical(best);
    Ok(result_from(best, obj.evaluations.get()))
}

fn result_from(e: Evaluation, evaluations: usize) -> OptimizationResult {
    OptimizationResult {
        gamma1_per_site: e.gamma1,
        bandwidth: e.bandwidth,
        passband_min: e.passband_min,
        peak_value: e.peak_value,
        converged: e.feasible,
        evaluations,
    }
}

/// Least-squares steepness `β` of `Γ₁(d) = Γ/2·(tanh[β(d − ½)] + 1)` at
/// `d = j/(N+1)`, including the virtual sites `Γ₁ = 0` at `j = 0` and
/// `Γ₁ = Γ` at `j = N+1`.
pub fn fit_tanh_beta(gamma1: &[f64], gamma_total: f64) -> Result<f64> {
    fit_beta(gamma1, gamma_total, true)
}

/// Same as [`fit_tanh_beta`] over the physical sites only, so an exact tanh
/// profile is recovered exactly.
pub fn fit_tanh_beta_interior(gamma1: &[f64], gamma_total: f64) -> Result<f64> {
    fit_beta(gamma1, gamma_total, false)
}

fn fit_beta(gamma1: &[f64], gamma_total: f64, with_endpoints: bool) -> Result<f64> {
    let n = gamma1.len();
    if n < 3 {
        return Err(Error::DegenerateFit("tanh fit needs at least three sites"));
    }
    if !(gamma_total > 0.0) {
        return Err(Error::InvalidParameter("gamma_total must be > 0"));
    }
    if gamma1.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::DegenerateFit("profile is not monotone"));
    }
    let mut points: Vec<(f64, f64)> =
        gamma1.iter().enumerate().map(|(k, &v)| (padded_position(k + 1, n), v)).collect();
    if with_endpoints {
        points.push((0.0, 0.0));
        points.push((1.0, gamma_total));
    }
    let sse = |beta: f64| -> f64 {
        points
            .iter()
            .map(|&(d, v)| {
                let r = v - gamma_total * tanh_split(d, beta).0;
                r * r
            })
            .sum()
    };
    // Coarse log scan, then golden section around the best sample.
    let samples: Vec<f64> = (0..=240).map(|i| libm::pow(10.0, -1.0 + 3.0 * i as f64 / 240.0)).collect();
    let k = (0..samples.len())
        .min_by(|&a, &b| sse(samples[a]).total_cmp(&sse(samples[b])))
        .unwrap_or(0);
    let lo = samples[k.saturating_sub(1)];
    let hi = samples[(k + 1).min(samples.len() - 1)];
    let (beta, _) = golden_min(|b| Ok(sse(b)), lo, hi, 1e-12)?;
    Ok(beta)
}
