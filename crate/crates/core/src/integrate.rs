//! Adaptive trapezoid quadrature for small vector-valued integrands.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Settings for [`adaptive_trapezoid`].
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    /// Relative tolerance on each component of the integral.
    pub rel_tol: f64,
    /// Uniform panels evaluated before adaptive refinement starts.
    pub initial_panels: usize,
    /// Hard cap on integrand evaluations.
    pub max_evaluations: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { rel_tol: 1e-4, initial_panels: 64, max_evaluations: 200_000 }
    }
}

struct Panel<const K: usize> {
    a: f64,
    b: f64,
    fa: [f64; K],
    fb: [f64; K],
}

/// Integrates `f` over `[a, b]` by locally refined trapezoids.
///
/// A panel is accepted once halving it changes its contribution by less than
/// its share (by width) of `rel_tol` times the running estimate of the
/// integral, which is updated as panels are refined.
pub fn adaptive_trapezoid<const K: usize, F>(
    mut f: F,
    a: f64,
    b: f64,
    settings: Quadrature,
) -> Result<[f64; K]>
where
    F: FnMut(f64) -> Result<[f64; K]>,
{
    if !(a < b) {
        return if a == b {
            Ok([0.0; K])
        } else {
            Err(Error::InvalidParameter("integration bounds must satisfy a <= b"))
        };
    }
    let n0 = settings.initial_panels.max(1);
    let h = (b - a) / n0 as f64;
    let xs: Vec<f64> = (0..=n0)
        .map(|i| if i == n0 { b } else { a + i as f64 * h })
        .collect();
    let mut fs = Vec::with_capacity(xs.len());
    for &x in &xs {
        fs.push(f(x)?);
    }
    let mut evaluations = fs.len();

    let mut estimate = [0.0; K];
    for i in 0..n0 {
        let w = xs[i + 1] - xs[i];
        for k in 0..K {
            estimate[k] += 0.5 * w * (fs[i][k] + fs[i + 1][k]);
        }
    }

    let mut stack: Vec<Panel<K>> = (0..n0)
        .rev()
        .map(|i| Panel { a: xs[i], b: xs[i + 1], fa: fs[i], fb: fs[i + 1] })
        .collect();
    let mut total = [0.0; K];
    let width = b - a;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let fm = f(m)?;
        evaluations += 1;
        let w = p.b - p.a;
        let mut accept = true;
        let mut fine = [0.0; K];
        for k in 0..K {
            let coarse = 0.5 * w * (p.fa[k] + p.fb[k]);
            fine[k] = 0.25 * w * (p.fa[k] + 2.0 * fm[k] + p.fb[k]);
            estimate[k] += fine[k] - coarse;
            let allowed = settings.rel_tol * estimate[k].abs() * (w / width);
            if (fine[k] - coarse).abs() > allowed {
                accept = false;
            }
        }
        if accept || m <= p.a || m >= p.b {
            for k in 0..K {
                total[k] += fine[k];
            }
            continue;
        }
        if evaluations >= settings.max_evaluations {
            return Err(Error::NotConverged("adaptive trapezoid evaluation budget exhausted"));
        }
        stack.push(Panel { a: m, b: p.b, fa: fm, fb: p.fb });
        stack.push(Panel { a: p.a, b: m, fa: p.fa, fb: fm });
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_lorentzian() {
        let gamma = 0.05;
        let [v] = adaptive_trapezoid(
            |x| Ok([gamma * gamma / (gamma * gamma + x * x)]),
            -1.0,
            1.0,
            Quadrature::default(),
        )
        .unwrap();
        let exact = 2.0 * gamma * libm::atan(1.0 / gamma);
        assert!(((v - exact) / exact).abs() < 1e-4, "{v} vs {exact}");
    }

    #[test]
    fn zero_integrand_is_zero() {
        let v = adaptive_trapezoid(|_| Ok([0.0, 0.0]), 0.0, 3.0, Quadrature::default()).unwrap();
        assert_eq!(v, [0.0, 0.0]);
    }

    #[test]
    fn vector_components_are_independent() {
        let v = adaptive_trapezoid(|x| Ok([x * x, 2.0]), 0.0, 1.0, Quadrature::default()).unwrap();
        assert!((v[0] - 1.0 / 3.0).abs() < 1e-4 / 3.0);
        assert!((v[1] - 2.0).abs() < 1e-12);
    }
}
