//! Exact expectations for `N ≤ 3` by deterministic quadrature.
//!
//! The ensemble density is integrated over the ordered simplex
//! `-T < λ_1 < … < λ_N < T`, where the Vandermonde factor is a product of
//! positive differences, with nested composite Gauss–Legendre rules:
//! `λ_1` on `[-T, T]`, `λ_2` on `[λ_1, T]`, and so on. Observables are
//! averaged over all relabelings of each node, so the result is the
//! expectation under the exchangeable (unordered) law.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quadrature::{gauss_legendre, QuadValue};

/// Nodes per Gauss–Legendre panel.
const PANEL_ORDER: usize = 8;
/// `V(±T) - V_min` must reach this multiple of `1/(βN)`.
const TRUNCATION_GAP: f64 = 160.0;
const BOUNDARY_RATIO: f64 = 1e-14;
const REFINEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub beta: f64,
    pub n: usize,
    pub potential: Potential,
    /// Half-width `T` of the integration box.
    pub truncation: f64,
    /// Gauss–Legendre panels per axis (each with 8 nodes).
    pub grid: usize,
}

/// An oracle value with its grid-refinement error `|I(2·grid) - I(grid)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue<T> {
    pub value: T,
    pub error: f64,
}

impl OracleSpec {
    /// Spec with the default truncation and a grid sized for `n`.
    pub fn new(beta: f64, n: usize, potential: Potential) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "beta must be positive, got {beta}"
            )));
        }
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidConfig(format!(
                "oracle supports N in 1..=3, got {n}"
            )));
        }
        let truncation = default_truncation(&potential, beta, n);
        let grid = match n {
            1 => 64,
            2 => 32,
            _ => 16,
        };
        let spec = OracleSpec {
            beta,
            n,
            potential,
            truncation,
            grid,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if !(1..=3).contains(&self.n) {
            return Err(Error::InvalidConfig(format!(
                "oracle supports N in 1..=3, got {}",
                self.n
            )));
        }
        if self.grid == 0 {
            return Err(Error::InvalidConfig("oracle grid must be positive".into()));
        }
        if !(self.truncation > 0.0) || !self.truncation.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "bad truncation {}",
                self.truncation
            )));
        }
        let ratio = self.boundary_ratio();
        if !(ratio < BOUNDARY_RATIO) {
            return Err(Error::Truncation(ratio));
        }
        Ok(())
    }

    /// One-particle density at `±T` relative to its peak.
    pub fn boundary_ratio(&self) -> f64 {
        let vmin = self.potential.minimum();
        let t = self.truncation;
        let gap = (self.potential.v(t) - vmin).min(self.potential.v(-t) - vmin);
        (-0.5 * self.beta * self.n as f64 * gap).exp()
    }

    fn log_weight_factor(&self) -> f64 {
        0.5 * self.beta * self.n as f64
    }
}

/// Smallest `T` (up to bisection accuracy) with `V(±T) - V_min ≥ 160/(βN)`.
pub fn default_truncation(p: &Potential, beta: f64, n: usize) -> f64 {
    let vmin = p.minimum();
    let need = TRUNCATION_GAP / (beta * n as f64);
    let ok = |t: f64| p.v(t) - vmin >= need && p.v(-t) - vmin >= need;
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn permutations(n: usize) -> &'static [&'static [usize]] {
    match n {
        1 => &[&[0]],
        2 => &[&[0, 1], &[1, 0]],
        _ => &[
            &[0, 1, 2],
            &[0, 2, 1],
            &[1, 0, 2],
            &[1, 2, 0],
            &[2, 0, 1],
            &[2, 1, 0],
        ],
    }
}

/// Composite Gauss–Legendre nodes and weights on `[lo, hi]`.
fn panel_rule(lo: f64, hi: f64, panels: usize, gl: &(Vec<f64>, Vec<f64>)) -> Vec<(f64, f64)> {
    let h = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * gl.0.len());
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        for (x, w) in gl.0.iter().zip(&gl.1) {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

struct Sums<T> {
    num: T,
    den: f64,
    abs: f64,
}

fn integrate_grid<T, G>(spec: &OracleSpec, g: &G, panels: usize) -> Sums<T>
where
    T: QuadValue + Send,
    G: Fn(&[f64]) -> T + Sync,
{
    let gl = gauss_legendre(PANEL_ORDER);
    let t = spec.truncation;
    let vmin = spec.potential.minimum();
    let c = spec.log_weight_factor();
    let perms = permutations(spec.n);
    let inv_perms = 1.0 / perms.len() as f64;

    // Weight of one ordered node, times the label-averaged observable.
    let point = |lam: &[f64]| -> (T, f64, f64) {
        let mut logw = 0.0;
        for (i, &x) in lam.iter().enumerate() {
            logw -= c * (spec.potential.v(x) - vmin);
            for &y in &lam[i + 1..] {
                logw += spec.beta * (y - x).ln();
            }
        }
        let w = logw.exp();
        if w == 0.0 {
            return (T::zero(), 0.0, 0.0);
        }
        let mut buf = [0.0; 3];
        let mut acc = T::zero();
        let mut abs = 0.0;
        for perm in perms {
            for (slot, &k) in perm.iter().enumerate() {
                buf[slot] = lam[k];
            }
            let v = g(&buf[..lam.len()]);
            abs += v.magnitude();
            acc = acc + v;
        }
        (acc * (w * inv_perms), w, abs * w * inv_perms)
    };

    let outer = panel_rule(-t, t, panels, &gl);
    // Fixed evaluation order per outer node, then an ordered sum, keeps the
    // result independent of the thread count.
    let parts: Vec<Sums<T>> = outer
        .par_iter()
        .map(|&(x1, w1)| {
            let mut s = Sums {
                num: T::zero(),
                den: 0.0,
                abs: 0.0,
            };
            let mut add = |lam: &[f64], w: f64| {
                let (v, d, a) = point(lam);
                s.num = s.num + v * w;
                s.den += d * w;
                s.abs += a * w;
            };
            match spec.n {
                1 => add(&[x1], w1),
                2 => {
                    for (x2, w2) in panel_rule(x1, t, panels, &gl) {
                        add(&[x1, x2], w1 * w2);
                    }
                }
                _ => {
                    for (x2, w2) in panel_rule(x1, t, panels, &gl) {
                        for (x3, w3) in panel_rule(x2, t, panels, &gl) {
                            add(&[x1, x2, x3], w1 * w2 * w3);
                        }
                    }
                }
            }
            s
        })
        .collect();
    parts.into_iter().fold(
        Sums {
            num: T::zero(),
            den: 0.0,
            abs: 0.0,
        },
        |a, b| Sums {
            num: a.num + b.num,
            den: a.den + b.den,
            abs: a.abs + b.abs,
        },
    )
}

/// `E[g(λ)]` under the exchangeable law, computed at `grid` and `2·grid`
/// panels. The finer value is returned; the error is their difference.
///
/// Fails with [`Error::Refinement`] when the two disagree by more than
/// `1e-6` relative to `E|g|`.
pub fn exact_expectation<T, G>(spec: &OracleSpec, g: G) -> Result<OracleValue<T>>
where
    T: QuadValue + Send + std::fmt::Debug,
    G: Fn(&[f64]) -> T + Sync,
{
    spec.validate()?;
    let coarse = integrate_grid(spec, &g, spec.grid);
    let fine = integrate_grid(spec, &g, 2 * spec.grid);
    if !(coarse.den > 0.0) || !(fine.den > 0.0) {
        return Err(Error::Quadrature("oracle normalization vanished".into()));
    }
    let vc = coarse.num * (1.0 / coarse.den);
    let vf = fine.num * (1.0 / fine.den);
    let err = (vf - vc).magnitude();
    let scale = (fine.abs / fine.den).max(vf.magnitude());
    if !err.is_finite() || err > REFINEMENT_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Refinement {
            coarse: format!("{vc:?}"),
            fine: format!("{vf:?}"),
        });
    }
    Ok(OracleValue {
        value: vf,
        error: err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn gaussian_one_particle() {
        let s = OracleSpec::new(2.0, 1, Potential::quadratic()).unwrap();
        let m2 = exact_expectation(&s, |l: &[f64]| l[0] * l[0]).unwrap();
        assert_relative_eq!(m2.value, 1.0, epsilon = 1e-10);
        let m1 = exact_expectation(&s, |l: &[f64]| l[0]).unwrap();
        assert!(m1.value.abs() < 1e-12);
    }

    #[test]
    fn two_particle_refinement() {
        let s = OracleSpec::new(1.0, 2, Potential::quadratic()).unwrap();
        let v = exact_expectation(&s, |l: &[f64]| (l[0] - l[1]).powi(2)).unwrap();
        assert!(v.error < 1e-8 * v.value, "{v:?}");
        // Independent check: for N=2, the gap d = λ_1-λ_2 and sum are
        // independent, with d density ∝ |d|^β e^{-βN d²/8}. At β=1, N=2 the
        // gap is ∝ |d| e^{-d²/4}, so E[d²] = 4.
        assert_relative_eq!(v.value, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn three_particles_gaussian_trace() {
        // Integrating Σ ∂_k(λ_k w) = 0 by parts gives
        // (βN/2) E[Σλ²] = N + βN(N-1)/2; Σλ is Gaussian with variance 2/β.
        for beta in [1.0, 2.0, 4.0] {
            let n = 3;
            let s = OracleSpec::new(beta, n, Potential::quadratic()).unwrap();
            let v =
                exact_expectation(&s, |l: &[f64]| l.iter().map(|x| x * x).sum::<f64>()).unwrap();
            let nf = n as f64;
            let expect = 2.0 / (beta * nf) * (nf + beta * nf * (nf - 1.0) / 2.0);
            assert_relative_eq!(v.value, expect, epsilon = 1e-9);
            let t = exact_expectation(&s, |l: &[f64]| l.iter().sum::<f64>().powi(2)).unwrap();
            assert_relative_eq!(t.value, 2.0 / beta, epsilon = 1e-9);
        }
    }

    #[test]
    fn symmetry_and_exchangeability() {
        let s = OracleSpec::new(1.0, 2, Potential::quartic(0.0)).unwrap();
        let odd = exact_expectation(&s, |l: &[f64]| l[0].powi(3) + l[1]).unwrap();
        assert!(odd.value.abs() < 1e-10);
        let raw = exact_expectation(&s, |l: &[f64]| l[0] * l[0] + 2.0 * l[1].powi(4)).unwrap();
        let sym = exact_expectation(&s, |l: &[f64]| {
            0.5 * (l[0] * l[0] + l[1] * l[1]) + (l[0].powi(4) + l[1].powi(4))
        })
        .unwrap();
        assert_relative_eq!(raw.value, sym.value, epsilon = 1e-12);
    }

    #[test]
    fn complex_observables() {
        let s = OracleSpec::new(2.0, 2, Potential::quadratic()).unwrap();
        let z = Complex64::new(0.0, 1.0);
        let v = exact_expectation(&s, |l: &[f64]| {
            l.iter()
                .map(|&x| 1.0 / (Complex64::new(x, 0.0) - z))
                .sum::<Complex64>()
                * 0.5
        })
        .unwrap();
        // s_N(i) of a symmetric law is purely imaginary with positive part.
        assert!(v.value.re.abs() < 1e-12);
        assert!(v.value.im > 0.0);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(OracleSpec::new(1.0, 4, Potential::quadratic()).is_err());
        assert!(OracleSpec::new(0.0, 2, Potential::quadratic()).is_err());
        let mut s = OracleSpec::new(2.0, 2, Potential::quadratic()).unwrap();
        s.truncation = 1.0;
        assert!(matches!(s.validate(), Err(Error::Truncation(_))));
        let mut s = OracleSpec::new(2.0, 2, Potential::quadratic()).unwrap();
        s.grid = 1;
        assert!(matches!(
            exact_expectation(&s, |l: &[f64]| l[0].powi(8)),
            Err(Error::Refinement { .. })
        ));
    }

    #[test]
    fn default_truncation_meets_gap() {
        let p = Potential::quartic(-1.0);
        let t = default_truncation(&p, 2.0, 3);
        assert!(p.v(t) - p.minimum() >= 160.0 / 6.0 - 1e-9);
    }
}
