//! Spectral statistics of a single configuration.
//!
//! All functions take the eigenvalues as a sorted slice. Complex logarithms
//! use the principal branch; a real evaluation point is taken from above,
//! so `log(E - λ) = log|E - λ| + iπ` for `λ > E`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{from_above, EquilibriumMeasure};
use crate::error::{Error, Result};

const COLLISION: f64 = 1e-300;
const INTEGRAL_TOL: f64 = 1e-13;

/// Value of the log-characteristic field at `at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldValue {
    pub re: f64,
    pub im: f64,
    pub at: Complex64,
}

impl FieldValue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

fn check_collision(lambdas: &[f64], z: Complex64) -> Result<()> {
    // The closest eigenvalue to Re z is one of the two around it.
    let i = lambdas.partition_point(|&x| x < z.re);
    for &x in lambdas[i.saturating_sub(1)..(i + 1).min(lambdas.len())].iter() {
        if (Complex64::new(x, 0.0) - z).norm() < COLLISION {
            return Err(Error::Collision { z: format!("{z}") });
        }
    }
    Ok(())
}

/// `s_N(z) = (1/N) Σ 1/(λ_k - z)` (order 0) or its first or second
/// derivative in `z`.
pub fn stieltjes_emp(lambdas: &[f64], z: Complex64, order: u32) -> Result<Complex64> {
    if order > 2 {
        return Err(Error::UnsupportedOrder(order));
    }
    check_collision(lambdas, z)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for &x in lambdas {
        let g = 1.0 / (x - z);
        acc += match order {
            0 => g,
            1 => g * g,
            _ => 2.0 * g * g * g,
        };
    }
    Ok(acc / lambdas.len() as f64)
}

/// `#{k : λ_k ∈ [lo, hi]}`; an empty interval gives zero.
pub fn count_interval(lambdas: &[f64], lo: f64, hi: f64) -> usize {
    if !(lo <= hi) {
        return 0;
    }
    let first = lambdas.partition_point(|&x| x < lo);
    let last = lambdas.partition_point(|&x| x <= hi);
    last.saturating_sub(first)
}

/// `∫ log(z - x) dμ_V(x)`, with `z` taken from above when real.
pub fn log_integral(m: &EquilibriumMeasure, z: Complex64) -> Result<Complex64> {
    let z = from_above(z);
    m.integrate(|x| (z - x).ln(), &[z.re], INTEGRAL_TOL)
}

/// `Σ log(z - λ_k)` with the principal branch.
pub fn log_sum(lambdas: &[f64], z: Complex64) -> Result<Complex64> {
    check_collision(lambdas, z)?;
    let z = from_above(z);
    Ok(lambdas.iter().map(|&x| (z - x).ln()).sum())
}

/// `L_N(z) = Σ log(z - λ_k) - N ∫ log(z - x) dμ_V`.
pub fn log_char(lambdas: &[f64], m: &EquilibriumMeasure, z: Complex64) -> Result<FieldValue> {
    let integral = log_integral(m, z)?;
    log_char_with(lambdas, z, integral)
}

/// As [`log_char`] with the deterministic integral supplied, for reuse
/// across samples.
pub fn log_char_with(lambdas: &[f64], z: Complex64, integral: Complex64) -> Result<FieldValue> {
    let v = log_sum(lambdas, z)? - integral * lambdas.len() as f64;
    Ok(FieldValue {
        re: v.re,
        im: v.im,
        at: z,
    })
}

/// `∫ f dμ_V` by adaptive quadrature; `breaks` lists points where `f` is
/// not smooth.
pub fn equilibrium_mean<F: Fn(f64) -> f64>(
    m: &EquilibriumMeasure,
    f: F,
    breaks: &[f64],
) -> Result<f64> {
    m.integrate(f, breaks, INTEGRAL_TOL)
}

/// Centered linear statistic `S_N(f) = Σ f(λ_k) - N ∫ f dμ_V`.
pub fn linear_stat<F: Fn(f64) -> f64>(
    lambdas: &[f64],
    m: &EquilibriumMeasure,
    f: F,
    breaks: &[f64],
) -> Result<f64> {
    let mean = equilibrium_mean(m, &f, breaks)?;
    Ok(linear_stat_with(lambdas, &f, mean))
}

pub fn linear_stat_with<F: Fn(f64) -> f64>(lambdas: &[f64], f: F, mean: f64) -> f64 {
    lambdas.iter().map(|&x| f(x)).sum::<f64>() - lambdas.len() as f64 * mean
}

/// `Y_N(n) = πN √(β/log N) ρ_V(γ_n) (λ_n - γ_n)`, with `n` one-based.
pub fn displacement(lambdas: &[f64], m: &EquilibriumMeasure, beta: f64, n: usize) -> Result<f64> {
    let big_n = lambdas.len();
    let gamma = m.quantile(n, big_n)?;
    Ok(displacement_scale(big_n, beta, m.density(gamma)) * (lambdas[n - 1] - gamma))
}

/// Prefactor `πN √(β/log N) ρ` of the normalized displacement.
pub fn displacement_scale(n: usize, beta: f64, rho: f64) -> f64 {
    let nf = n as f64;
    PI * nf * (beta / nf.ln()).sqrt() * rho
}

/// Coefficients in `λ` of `(V'(λ) - V'(z))/(λ - z)`.
fn divided_difference(m: &EquilibriumMeasure, z: Complex64) -> Vec<Complex64> {
    let dv = m.potential().derivative_coefficients(1);
    let d = dv.len() - 1;
    let mut q = vec![Complex64::new(0.0, 0.0); d.max(1)];
    let mut acc = Complex64::new(0.0, 0.0);
    for j in (0..d).rev() {
        acc = acc * z + dv[j + 1];
        q[j] = acc;
    }
    q
}

/// `(1/N) Σ (V'(λ_k) - V'(z))/(λ_k - z)`.
pub fn potential_kernel(lambdas: &[f64], m: &EquilibriumMeasure, z: Complex64) -> Complex64 {
    let q = divided_difference(m, z);
    let sum: Complex64 = lambdas
        .iter()
        .map(|&x| {
            q.iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
        })
        .sum();
    sum / lambdas.len() as f64
}

/// Loop-equation diagnostics at `(z, w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopObservables {
    /// `P(z) = s(z)² + V'(z)s(z) + h(z)`.
    pub p: Complex64,
    /// `Δ(z) = (1/N) Σ (V'(λ_k) - V'(z))/(λ_k - z) - h(z)`.
    pub delta: Complex64,
    /// `f(z, w) = ∂_w[(s(z) - s(w))/(z - w)]`, equal to `s''(z)/2` on the
    /// diagonal.
    pub f: Complex64,
}

pub fn loop_observables(
    lambdas: &[f64],
    m: &EquilibriumMeasure,
    z: Complex64,
    w: Complex64,
) -> Result<LoopObservables> {
    let s = stieltjes_emp(lambdas, z, 0)?;
    let h = m.h_of(z);
    let dv = m.potential().dv_complex(from_above(z));
    let p = s * s + dv * s + h;
    let delta = potential_kernel(lambdas, m, z) - h;
    let f = f_kernel(lambdas, z, w)?;
    Ok(LoopObservables { p, delta, f })
}

/// `f(z, w) = (1/N) Σ 1/((λ_k - z)(λ_k - w)²)`.
pub fn f_kernel(lambdas: &[f64], z: Complex64, w: Complex64) -> Result<Complex64> {
    if (z - w).norm() < 1e-12 {
        return Ok(0.5 * stieltjes_emp(lambdas, z, 2)?);
    }
    check_collision(lambdas, z)?;
    check_collision(lambdas, w)?;
    let sum: Complex64 = lambdas
        .iter()
        .map(|&x| {
            let gw = 1.0 / (x - w);
            gw * gw / (x - z)
        })
        .sum();
    Ok(sum / lambdas.len() as f64)
}
