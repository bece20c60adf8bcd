//! Equilibrium measure of a one-cut polynomial potential.
//!
//! The support `[A, B]` is found from the two moment conditions that make
//! `m_V = -V'/2 + r·b` decay like `-1/z`:
//!
//! ```text
//! (1/2π) ∫ V'(t)   dt/τ(t) = 0
//! (1/2π) ∫ t·V'(t) dt/τ(t) = 1,        τ(t) = √((t-A)(B-t))
//! ```
//!
//! Every integral against `1/τ` of a polynomial is evaluated exactly by
//! Gauss–Chebyshev quadrature of the first kind.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{horner, horner_complex, Potential};
use crate::quadrature::{chebyshev_nodes, gauss_legendre};

/// Moves a point on the real axis to the upper side of the cut: `-0.0`
/// imaginary parts become `+0.0`, so principal branches take their limit
/// from above.
#[inline]
pub fn from_above(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        Complex64::new(z.re, 0.0)
    } else {
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportInterval {
    pub a: f64,
    pub b: f64,
}

impl SupportInterval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInput(format!(
                "support needs A < B, got [{a}, {b}]"
            )));
        }
        Ok(SupportInterval { a, b })
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }

    /// `τ(t) = √((t-A)(B-t))` on the support, zero outside.
    pub fn tau(&self, t: f64) -> f64 {
        if self.contains(t) {
            ((t - self.a) * (self.b - t)).sqrt()
        } else {
            0.0
        }
    }

    /// Distance from `E` to the nearest edge.
    pub fn kappa(&self, e: f64) -> f64 {
        (self.a - e).abs().min((self.b - e).abs())
    }
}

/// `b(z) = √(z-A)·√(z-B)` with principal square roots, real points taken
/// from above.
pub fn b_of(s: &SupportInterval, z: Complex64) -> Complex64 {
    let z = from_above(z);
    (z - s.a).sqrt() * (z - s.b).sqrt()
}

/// Outcome of the endpoint Newton iteration.
#[derive(Debug, Clone, Copy)]
pub struct SupportSolution {
    pub support: SupportInterval,
    pub iterations: usize,
    pub residual: f64,
}

/// Residuals of the two endpoint equations and their Jacobian with respect
/// to the center `c` and half-width `R` of the support.
fn endpoint_system(p: &Potential, nodes: &[f64], c: f64, r: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let n = nodes.len() as f64;
    let (mut f1, mut f2) = (0.0, 0.0);
    let (mut j11, mut j12, mut j21, mut j22) = (0.0, 0.0, 0.0, 0.0);
    for &x in nodes {
        let y = c + r * x;
        let d1 = p.dv(y);
        let d2 = p.d2v(y);
        f1 += d1;
        f2 += y * d1;
        j11 += d2;
        j12 += x * d2;
        let g = d1 + y * d2;
        j21 += g;
        j22 += x * g;
    }
    let s = 1.0 / (2.0 * n);
    (
        [f1 * s, f2 * s - 1.0],
        [[j11 * s, j12 * s], [j21 * s, j22 * s]],
    )
}

pub fn default_quad_order(p: &Potential) -> usize {
    64.max(4 * p.degree())
}

/// Solves the endpoint equations by a damped 2-d Newton iteration.
pub fn solve_support(p: &Potential, guess: SupportInterval, tol: f64) -> Result<SupportInterval> {
    solve_support_detailed(p, guess, tol).map(|s| s.support)
}

pub fn solve_support_detailed(
    p: &Potential,
    guess: SupportInterval,
    tol: f64,
) -> Result<SupportSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    const MAX_ITER: usize = 100;
    let nodes = chebyshev_nodes(default_quad_order(p));
    let (mut c, mut r) = (guess.center(), guess.half_width());
    let norm = |f: [f64; 2]| f[0].hypot(f[1]);
    let (mut f, mut jac) = endpoint_system(p, &nodes, c, r);
    for it in 1..=MAX_ITER {
        let res = norm(f);
        if res < tol {
            return Ok(SupportSolution {
                support: SupportInterval::new(c - r, c + r)?,
                iterations: it,
                residual: res,
            });
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::SingularJacobian { a: c - r, b: c + r });
        }
        let dc = (f[0] * jac[1][1] - f[1] * jac[0][1]) / det;
        let dr = (jac[0][0] * f[1] - jac[1][0] * f[0]) / det;
        let mut step = 1.0;
        loop {
            let (nc, nr) = (c - step * dc, r - step * dr);
            if nr > 0.0 {
                let (nf, nj) = endpoint_system(p, &nodes, nc, nr);
                if norm(nf) < res || step < 1e-10 {
                    c = nc;
                    r = nr;
                    f = nf;
                    jac = nj;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-12 {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual: res,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
        residual: norm(f),
    })
}

/// Which root of `u² + V'(z)u + h(z) = 0` to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `m_V = -V'/2 + r·b`, the Stieltjes transform of `μ_V`.
    Principal,
    /// `m̃_V = -V'/2 - r·b`.
    Second,
}

/// Microscopic scales at an energy `E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub kappa: f64,
    pub ell: f64,
    pub eta: f64,
}

const CDF_CELLS: usize = 1024;
const CDF_GL: usize = 12;

/// The solved equilibrium measure `μ_V(dt) = ρ_V(t) dt` with its auxiliary
/// functions `r`, `b`, `h`, `m_V`, `m̃_V`.
///
/// The CDF is tabulated in the angle `φ`, with `t = c - R cos φ`, where the
/// density becomes the smooth trigonometric polynomial
/// `(R²/π) r(c - R cos φ) sin²φ`.
#[derive(Debug, Clone)]
pub struct EquilibriumMeasure {
    potential: Potential,
    support: SupportInterval,
    r_coeffs: Vec<f64>,
    quad_order: usize,
    /// `∫ t^k ρ_V(t) dt` for `k = 0..=deg V`.
    moments: Vec<f64>,
    /// CDF at the cell boundaries `φ_j = jπ/CDF_CELLS`.
    cdf_table: Vec<f64>,
    gl: (Vec<f64>, Vec<f64>),
    iterations: usize,
}

impl EquilibriumMeasure {
    /// Solves for the support starting from `[-1, 1]` and builds all tables.
    pub fn solve(p: &Potential) -> Result<Self> {
        // Newton from [-1, 1] can stall for double wells; widen the guess.
        let mut last = None;
        for half in [1.0, 2.0, 4.0, 8.0, 16.0] {
            match Self::solve_from(p, SupportInterval { a: -half, b: half }, 1e-13) {
                Ok(m) => return Ok(m),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap())
    }

    pub fn solve_from(p: &Potential, guess: SupportInterval, tol: f64) -> Result<Self> {
        let sol = solve_support_detailed(p, guess, tol)?;
        let mut m = Self::with_support(p, sol.support);
        m.iterations = sol.iterations;
        Ok(m)
    }

    /// Builds the measure for a given support without solving for it.
    pub fn with_support(p: &Potential, support: SupportInterval) -> Self {
        let quad_order = default_quad_order(p);
        let nodes = chebyshev_nodes(quad_order);
        let (c, half) = (support.center(), support.half_width());
        let deg = p.degree();
        let dv = p.derivative_coefficients(1);

        // Chebyshev moments M_k = ∫ t^k dt/τ(t).
        let cheb_moment = |k: usize| -> f64 {
            nodes
                .iter()
                .map(|x| (c + half * x).powi(k as i32))
                .sum::<f64>()
                * PI
                / quad_order as f64
        };
        let cm: Vec<f64> = (0..dv.len()).map(cheb_moment).collect();

        // (V'(z) - V'(t))/(z - t) = Σ_k a_k Σ_{j<k} z^j t^{k-1-j}.
        let mut r_coeffs = vec![0.0; dv.len().saturating_sub(1).max(1)];
        for (k, &a) in dv.iter().enumerate().skip(1) {
            for (j, rc) in r_coeffs.iter_mut().enumerate().take(k) {
                *rc += a * cm[k - 1 - j] / (2.0 * PI);
            }
        }

        // ∫ t^k ρ_V = (1/π) ∫ t^k r(t) τ(t)² dt/τ(t).
        let moments: Vec<f64> = (0..=deg)
            .map(|k| {
                nodes
                    .iter()
                    .map(|x| {
                        let t = c + half * x;
                        t.powi(k as i32) * horner(&r_coeffs, t) * half * half * (1.0 - x * x)
                    })
                    .sum::<f64>()
                    / quad_order as f64
            })
            .collect();

        let mut m = EquilibriumMeasure {
            potential: p.clone(),
            support,
            r_coeffs,
            quad_order,
            moments,
            cdf_table: Vec::new(),
            gl: gauss_legendre(CDF_GL),
            iterations: 0,
        };
        let mut table = Vec::with_capacity(CDF_CELLS + 1);
        let mut acc = 0.0;
        table.push(0.0);
        let h = PI / CDF_CELLS as f64;
        for j in 0..CDF_CELLS {
            acc += m.cdf_partial(j as f64 * h, (j + 1) as f64 * h);
            table.push(acc);
        }
        m.cdf_table = table;
        m
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn support(&self) -> SupportInterval {
        self.support
    }

    pub fn r_coeffs(&self) -> &[f64] {
        &self.r_coeffs
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn newton_iterations(&self) -> usize {
        self.iterations
    }

    /// Total mass from the tabulated CDF; equals one up to rounding.
    pub fn total_mass(&self) -> f64 {
        *self.cdf_table.last().unwrap()
    }

    /// `∫ t^k dμ_V` for `k ≤ deg V`.
    pub fn moment(&self, k: usize) -> f64 {
        self.moments[k]
    }

    pub fn r_of(&self, z: Complex64) -> Complex64 {
        horner_complex(&self.r_coeffs, z)
    }

    pub fn r_real(&self, t: f64) -> f64 {
        horner(&self.r_coeffs, t)
    }

    /// `r'(t)` on the real line.
    pub fn r_prime(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for k in (1..self.r_coeffs.len()).rev() {
            acc = acc * t + k as f64 * self.r_coeffs[k];
        }
        acc
    }

    pub fn b_of(&self, z: Complex64) -> Complex64 {
        b_of(&self.support, z)
    }

    /// `ρ_V(t) = r(t) τ(t) / π`, zero off the support.
    pub fn density(&self, t: f64) -> f64 {
        if !self.support.contains(t) {
            return 0.0;
        }
        self.r_real(t) * self.support.tau(t) / PI
    }

    fn density_angle(&self, phi: f64) -> f64 {
        let (c, half) = (self.support.center(), self.support.half_width());
        let s = phi.sin();
        half * half / PI * self.r_real(c - half * phi.cos()) * s * s
    }

    fn cdf_partial(&self, lo: f64, hi: f64) -> f64 {
        let (x, w) = &self.gl;
        let (mid, rad) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        x.iter()
            .zip(w)
            .map(|(x, w)| w * self.density_angle(mid + rad * x))
            .sum::<f64>()
            * rad
    }

    fn angle_of(&self, t: f64) -> f64 {
        let (c, half) = (self.support.center(), self.support.half_width());
        ((c - t) / half).clamp(-1.0, 1.0).acos()
    }

    fn cdf_angle(&self, phi: f64) -> f64 {
        let h = PI / CDF_CELLS as f64;
        let j = ((phi / h).floor() as usize).min(CDF_CELLS - 1);
        self.cdf_table[j] + self.cdf_partial(j as f64 * h, phi)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t <= self.support.a {
            0.0
        } else if t >= self.support.b {
            1.0
        } else {
            self.cdf_angle(self.angle_of(t))
        }
    }

    /// Classical location `γ_k` with `μ_V((-∞, γ_k]) = k/N`.
    pub fn quantile(&self, k: usize, n: usize) -> Result<f64> {
        if k < 1 || k > n {
            return Err(Error::IndexOutOfRange { k, n });
        }
        if k == n {
            return Ok(self.support.b);
        }
        Ok(self.quantile_level(k as f64 / n as f64))
    }

    /// Inverse CDF at a level `q ∈ [0, 1]`.
    pub fn quantile_level(&self, q: f64) -> f64 {
        let (c, half) = (self.support.center(), self.support.half_width());
        if q <= 0.0 {
            return self.support.a;
        }
        if q >= 1.0 {
            return self.support.b;
        }
        let h = PI / CDF_CELLS as f64;
        let j = self
            .cdf_table
            .partition_point(|&v| v < q)
            .clamp(1, CDF_CELLS)
            - 1;
        let (mut lo, mut hi) = (j as f64 * h, (j + 1) as f64 * h);
        let mut phi = 0.5 * (lo + hi);
        for _ in 0..100 {
            let f = self.cdf_angle(phi) - q;
            if f.abs() < 1e-15 {
                break;
            }
            if f > 0.0 {
                hi = phi;
            } else {
                lo = phi;
            }
            let d = self.density_angle(phi);
            let mut next = phi - f / d;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - phi).abs() < 1e-16 {
                phi = next;
                break;
            }
            phi = next;
        }
        c - half * phi.cos()
    }

    /// `m_V(z)` or `m̃_V(z)`; real `z` inside the support is taken from above.
    pub fn stieltjes(&self, z: Complex64, which: Branch) -> Complex64 {
        let z = from_above(z);
        let rb = self.r_of(z) * self.b_of(z);
        let half_dv = self.potential.dv_complex(z) * 0.5;
        let (plus, minus) = (-half_dv + rb, -half_dv - rb);
        // The smaller root is recovered from the product of roots, h(z),
        // to avoid cancellation far from the support.
        match which {
            Branch::Principal if plus.norm() < minus.norm() => self.h_of(z) / minus,
            Branch::Principal => plus,
            Branch::Second if minus.norm() < plus.norm() => self.h_of(z) / plus,
            Branch::Second => minus,
        }
    }

    pub fn m_v(&self, z: Complex64) -> Complex64 {
        self.stieltjes(z, Branch::Principal)
    }

    /// `h(z) = ∫ (V'(λ)-V'(z))/(λ-z) ρ_V(λ) dλ`, from the density moments.
    pub fn h_of(&self, z: Complex64) -> Complex64 {
        // Synthetic division of V'(λ) - V'(z) by (λ - z).
        let dv = self.potential.derivative_coefficients(1);
        let d = dv.len() - 1;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut q = Complex64::new(0.0, 0.0);
        for j in (0..d).rev() {
            q = q * z + dv[j + 1];
            acc += q * self.moments[j];
        }
        acc
    }

    /// `|m² + V'm + h|` at `z`.
    pub fn fixed_point_residual(&self, z: Complex64) -> f64 {
        let m = self.m_v(z);
        let dv = self.potential.dv_complex(from_above(z));
        (m * m + dv * m + self.h_of(z)).norm()
    }

    /// `∫ f dμ_V` for a function supplied on the angle grid, by adaptive
    /// Gauss–Kronrod in `φ` with optional break points given in `t`.
    pub fn integrate<T, F>(&self, mut f: F, breaks: &[f64], abs_tol: f64) -> Result<T>
    where
        T: crate::quadrature::QuadValue,
        F: FnMut(f64) -> T,
    {
        let (c, half) = (self.support.center(), self.support.half_width());
        let angle_breaks: Vec<f64> = breaks
            .iter()
            .filter(|&&t| t > self.support.a && t < self.support.b)
            .map(|&t| self.angle_of(t))
            .collect();
        crate::quadrature::integrate_adaptive(
            |phi: f64| f(c - half * phi.cos()) * self.density_angle(phi),
            0.0,
            PI,
            &angle_breaks,
            abs_tol,
            0.0,
            4000,
        )
        .map(|(v, _)| v)
    }

    /// `(κ, ℓ, η)` at energy `E` for `N` particles.
    pub fn scales(&self, e: f64, n: usize) -> Scales {
        scales(&self.support, e, n)
    }
}

pub fn scales(s: &SupportInterval, e: f64, n: usize) -> Scales {
    let nf = n as f64;
    let kappa = s.kappa(e);
    let edge = nf.powf(-2.0 / 3.0);
    let ell = if e >= s.a + edge && e <= s.b - edge {
        1.0 / (nf * kappa.sqrt())
    } else {
        edge
    };
    let eta = nf.ln().powf(0.25).exp() * ell;
    Scales { kappa, ell, eta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{builtin_quadratic, builtin_quartic, check_one_cut};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quartic_edge() -> f64 {
        (16.0f64 / 3.0).powf(0.25)
    }

    /// Closed-form semicircle CDF on [-2, 2].
    fn semicircle_cdf(x: f64) -> f64 {
        0.5 + (x * (4.0 - x * x).sqrt() / 4.0 + (x / 2.0).asin()) / PI
    }

    #[test]
    fn support_closed_forms() {
        let g = SupportInterval { a: -1.0, b: 1.0 };
        let s = solve_support(&builtin_quadratic(), g, 1e-13).unwrap();
        assert_relative_eq!(s.a, -2.0, epsilon = 1e-10);
        assert_relative_eq!(s.b, 2.0, epsilon = 1e-10);
        let s4 = solve_support(&builtin_quartic(0.0), g, 1e-13).unwrap();
        assert_relative_eq!(s4.b, quartic_edge(), epsilon = 1e-10);
        assert_relative_eq!(s4.a, -quartic_edge(), epsilon = 1e-10);
        let exact = SupportInterval { a: -2.0, b: 2.0 };
        let sol = solve_support_detailed(&builtin_quadratic(), exact, 1e-12).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(solve_support(&builtin_quadratic(), g, 0.0).is_err());
    }

    #[test]
    fn shifted_potential_moves_support() {
        // V(x) = (x-1)²/2 has the semicircle on [-1, 3].
        let p = Potential::new(crate::potential::PotentialKind::Polynomial {
            coefficients: vec![0.5, -1.0, 0.5],
        })
        .unwrap();
        let m = EquilibriumMeasure::solve(&p).unwrap();
        assert_relative_eq!(m.support().a, -1.0, epsilon = 1e-10);
        assert_relative_eq!(m.support().b, 3.0, epsilon = 1e-10);
    }

    #[test]
    fn r_and_b_examples() {
        let q = EquilibriumMeasure::solve(&builtin_quadratic()).unwrap();
        assert_relative_eq!(q.r_of(c(0.0, 0.0)).re, 0.5, epsilon = 1e-14);
        let r = q.r_of(c(7.0, 3.0));
        assert_relative_eq!(r.re, 0.5, epsilon = 1e-13);
        assert!(r.im.abs() < 1e-13);
        let q4 = EquilibriumMeasure::solve(&builtin_quartic(0.0)).unwrap();
        let a = quartic_edge();
        assert_relative_eq!(q4.r_of(c(0.0, 0.0)).re, a * a / 4.0, epsilon = 1e-12);
        // r(z) = (z² + a²/2)/2 at a complex point.
        let z = c(0.3, -1.1);
        assert!((q4.r_of(z) - (z * z + a * a / 2.0) / 2.0).norm() < 1e-12);

        let s = SupportInterval { a: -2.0, b: 2.0 };
        assert_relative_eq!(b_of(&s, c(3.0, 0.0)).re, 5f64.sqrt(), epsilon = 1e-14);
        assert_eq!(b_of(&s, c(2.0, 0.0)).norm(), 0.0);
        let b0 = b_of(&s, c(0.0, 0.0));
        assert!(b0.re.abs() < 1e-15);
        assert_relative_eq!(b0.im, 2.0, epsilon = 1e-14);
        let b0m = b_of(&s, c(0.0, -0.0));
        assert_relative_eq!(b0m.im, 2.0, epsilon = 1e-14);
        // Left of the support b is negative, b(z) ~ z.
        assert!(b_of(&s, c(-3.0, 0.0)).re < 0.0);
    }

    #[test]
    fn one_cut_checks() {
        let q = builtin_quadratic();
        let mq = EquilibriumMeasure::solve(&q).unwrap();
        let chk = check_one_cut(&q, &mq, 64).unwrap();
        assert!(chk.one_cut);
        assert_relative_eq!(chk.min_r, 0.5, epsilon = 1e-13);

        let q4 = builtin_quartic(0.0);
        let m4 = EquilibriumMeasure::solve(&q4).unwrap();
        let chk = check_one_cut(&q4, &m4, 65).unwrap();
        assert!(chk.one_cut);
        let a = quartic_edge();
        assert_relative_eq!(chk.min_r, a * a / 4.0, epsilon = 1e-12);
        assert!(chk.argmin.abs() < 1e-12);

        let bad = builtin_quartic(-5.0);
        let mb = EquilibriumMeasure::solve(&bad).unwrap();
        assert!(!check_one_cut(&bad, &mb, 64).unwrap().one_cut);
        assert!(check_one_cut(&q, &m4, 64).is_err());
    }

    #[test]
    fn density_and_cdf() {
        let q = EquilibriumMeasure::solve(&builtin_quadratic()).unwrap();
        assert_relative_eq!(q.density(0.0), 1.0 / PI, epsilon = 1e-14);
        assert_eq!(q.density(q.support().b), 0.0);
        assert!(q.density(2.0) < 1e-7);
        assert_eq!(q.density(5.0), 0.0);
        assert_relative_eq!(
            q.cdf(1.0),
            2.0 / 3.0 + 3f64.sqrt() / (4.0 * PI),
            epsilon = 1e-13
        );
        assert_relative_eq!(q.total_mass(), 1.0, epsilon = 1e-12);
        for i in 0..=400 {
            let x = -2.0 + 4.0 * i as f64 / 400.0;
            assert_relative_eq!(q.cdf(x), semicircle_cdf(x), epsilon = 1e-13);
        }
        let q4 = EquilibriumMeasure::solve(&builtin_quartic(1.0)).unwrap();
        assert_relative_eq!(q4.total_mass(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(q4.cdf(q4.support().b), 1.0);
        assert_eq!(q4.cdf(q4.support().a), 0.0);
    }

    #[test]
    fn density_is_nonnegative_and_cdf_monotone() {
        for p in [
            builtin_quadratic(),
            builtin_quartic(0.0),
            builtin_quartic(1.0),
            builtin_quartic(-1.5),
        ] {
            let m = EquilibriumMeasure::solve(&p).unwrap();
            let s = m.support();
            let mut prev = 0.0;
            for i in 0..512 {
                let t = s.a + (s.b - s.a) * i as f64 / 511.0;
                assert!(m.density(t) >= 0.0);
                let f = m.cdf(t);
                assert!(f >= prev - 1e-15);
                prev = f;
            }
            assert_relative_eq!(m.moment(0), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn quantiles() {
        let q = EquilibriumMeasure::solve(&builtin_quadratic()).unwrap();
        assert!(q.quantile(500, 1000).unwrap().abs() < 1e-12);
        assert_eq!(q.quantile(7, 7).unwrap(), q.support().b);
        assert_relative_eq!(q.quantile(7, 7).unwrap(), 2.0, epsilon = 1e-12);
        // Numeric inversion of the closed-form CDF by bisection.
        let (mut lo, mut hi) = (-2.0, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if semicircle_cdf(mid) < 0.25 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let g = q.quantile(1, 4).unwrap();
        assert_relative_eq!(g, lo, epsilon = 1e-12);
        assert!((g + 0.8079).abs() < 1e-4);
        assert!(q.quantile(0, 4).is_err());
        assert!(q.quantile(5, 4).is_err());
        let q4 = EquilibriumMeasure::solve(&builtin_quartic(0.5)).unwrap();
        for k in 1..100 {
            let g = q4.quantile(k, 100).unwrap();
            assert!((q4.cdf(g) - k as f64 / 100.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn stieltjes_examples() {
        let q = EquilibriumMeasure::solve(&builtin_quadratic()).unwrap();
        let m = q.stieltjes(c(0.0, 1.0), Branch::Principal);
        assert!(m.re.abs() < 1e-14);
        assert_relative_eq!(m.im, (5f64.sqrt() - 1.0) / 2.0, epsilon = 1e-14);
        let m10 = q.stieltjes(c(10.0, 0.0), Branch::Principal);
        assert_relative_eq!(m10.re, (-10.0 + 96f64.sqrt()) / 2.0, epsilon = 1e-14);
        assert_relative_eq!(m10.re, -0.1010205, epsilon = 1e-7);
        let s = q.stieltjes(c(0.0, 1.0), Branch::Second);
        assert_relative_eq!(s.im, -(5f64.sqrt() + 1.0) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn h_and_fixed_point() {
        let q = EquilibriumMeasure::solve(&builtin_quadratic()).unwrap();
        for z in [c(0.0, 1.0), c(3.0, -2.0), c(0.1, 0.0)] {
            assert!((q.h_of(z) - 1.0).norm() < 1e-13);
        }
        assert!(q.fixed_point_residual(c(0.0, 1.0)) < 1e-12);
        let q4 = EquilibriumMeasure::solve(&builtin_quartic(0.0)).unwrap();
        assert!(q4.fixed_point_residual(c(0.0, 2.0)) < 1e-10);
    }

    #[test]
    fn boundary_value_matches_density() {
        for p in [builtin_quadratic(), builtin_quartic(1.0)] {
            let m = EquilibriumMeasure::solve(&p).unwrap();
            let s = m.support();
            for i in 1..20 {
                let e = s.a + (s.b - s.a) * i as f64 / 20.0;
                let im = m.m_v(c(e, 1e-8)).im;
                assert!((im - PI * m.density(e)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn decay_at_infinity() {
        for p in [
            builtin_quadratic(),
            builtin_quartic(0.0),
            builtin_quartic(1.0),
        ] {
            let m = EquilibriumMeasure::solve(&p).unwrap();
            for y in [1e2, 1e3, 1e4] {
                let z = c(0.0, y);
                assert!((m.m_v(z) + 1.0 / z).norm() <= 10.0 / (y * y));
            }
        }
    }

    #[test]
    fn scale_examples() {
        let s = SupportInterval { a: -2.0, b: 2.0 };
        let sc = scales(&s, 0.0, 10_000);
        assert_eq!(sc.kappa, 2.0);
        assert_relative_eq!(sc.ell, 1.0 / (1e4 * 2f64.sqrt()), epsilon = 1e-18);
        let sc = scales(&s, 2.0, 1_000_000);
        assert_eq!(sc.kappa, 0.0);
        assert_relative_eq!(sc.ell, 1e-4, epsilon = 1e-16);
        let n = 16f64.exp().round() as usize;
        let sc = scales(&s, 0.0, n);
        let log_n = (n as f64).ln();
        assert_relative_eq!(sc.eta, log_n.powf(0.25).exp() * sc.ell, epsilon = 1e-20);
        assert_relative_eq!(log_n.powf(0.25), 2.0, epsilon = 1e-8);
    }

    proptest! {
        #[test]
        fn factorization_identity(
            zr in -4.0f64..4.0, zi in 0.01f64..4.0, ur in -3.0f64..3.0, ui in -3.0f64..3.0,
            which in 0usize..2, flip in proptest::bool::ANY,
        ) {
            let p = [builtin_quadratic(), builtin_quartic(0.0)][which].clone();
            let m = EquilibriumMeasure::solve(&p).unwrap();
            let z = c(zr, if flip { -zi } else { zi });
            let u = c(ur, ui);
            let lhs = u * u + p.dv_complex(z) * u + m.h_of(z);
            let rhs = (u - m.stieltjes(z, Branch::Principal)) * (u - m.stieltjes(z, Branch::Second));
            prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + u.norm_sqr()));
        }

        #[test]
        fn herglotz(zr in -5.0f64..5.0, zi in 1e-6f64..5.0) {
            let m = EquilibriumMeasure::solve(&builtin_quartic(1.0)).unwrap();
            prop_assert!(m.m_v(c(zr, zi)).im > 0.0);
        }
    }
}
