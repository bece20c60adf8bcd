//! External potentials `V` restricted to confining polynomials.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::quadrature::chebyshev_nodes;

/// Serialized form of a potential, as it appears in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialKind {
    /// `V(x) = x²/2`.
    Quadratic,
    /// `V(x) = x⁴/4 + t·x²/2`.
    Quartic { t: f64 },
    /// `V(x) = Σ c_k x^k`, coefficients listed from the constant term up.
    Polynomial { coefficients: Vec<f64> },
}

/// A confining polynomial potential together with its monomial coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialKind", into = "PotentialKind")]
pub struct Potential {
    kind: PotentialKind,
    coeffs: Vec<f64>,
}

impl TryFrom<PotentialKind> for Potential {
    type Error = Error;

    fn try_from(kind: PotentialKind) -> Result<Self> {
        Potential::new(kind)
    }
}

impl From<Potential> for PotentialKind {
    fn from(p: Potential) -> Self {
        p.kind
    }
}

impl Potential {
    pub fn new(kind: PotentialKind) -> Result<Self> {
        let coeffs = match &kind {
            PotentialKind::Quadratic => vec![0.0, 0.0, 0.5],
            PotentialKind::Quartic { t } => {
                if !t.is_finite() {
                    return Err(Error::InvalidPotential(
                        "quartic coupling must be finite".into(),
                    ));
                }
                vec![0.0, 0.0, 0.5 * t, 0.0, 0.25]
            }
            PotentialKind::Polynomial { coefficients } => {
                let mut c = coefficients.clone();
                while c.len() > 1 && *c.last().unwrap() == 0.0 {
                    c.pop();
                }
                if c.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidPotential("non-finite coefficient".into()));
                }
                let degree = c.len().saturating_sub(1);
                if degree < 2 || degree % 2 != 0 {
                    return Err(Error::InvalidPotential(format!(
                        "degree must be even and at least 2, got {degree}"
                    )));
                }
                if c[degree] <= 0.0 {
                    return Err(Error::InvalidPotential(
                        "leading coefficient must be positive".into(),
                    ));
                }
                log::warn!("user polynomial potential: global minimality of the effective potential is not verified");
                c
            }
        };
        Ok(Potential { kind, coeffs })
    }

    pub fn quadratic() -> Self {
        Potential::new(PotentialKind::Quadratic).expect("quadratic potential is valid")
    }

    pub fn quartic(t: f64) -> Self {
        Potential::new(PotentialKind::Quartic { t }).expect("finite quartic coupling")
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.kind, PotentialKind::Quadratic)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Monomial coefficients of `V`, constant term first.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Monomial coefficients of the `order`-th derivative.
    pub fn derivative_coefficients(&self, order: u32) -> Vec<f64> {
        let mut c = self.coeffs.clone();
        for _ in 0..order {
            if c.len() <= 1 {
                return vec![0.0];
            }
            c = c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, a)| k as f64 * a)
                .collect();
        }
        c
    }

    /// `V`, `V'` or `V''` at a real point.
    pub fn evaluate(&self, x: f64, order: u32) -> Result<f64> {
        match order {
            0 => Ok(self.v(x)),
            1 => Ok(self.dv(x)),
            2 => Ok(self.d2v(x)),
            _ => Err(Error::UnsupportedOrder(order)),
        }
    }

    /// Analytic continuation of `V`, `V'` or `V''` to a complex point.
    pub fn evaluate_complex(&self, z: Complex64, order: u32) -> Result<Complex64> {
        if order > 2 {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(horner_complex(&self.derivative_coefficients(order), z))
    }

    pub fn v(&self, x: f64) -> f64 {
        horner(&self.coeffs, x)
    }

    pub fn dv(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for k in (1..self.coeffs.len()).rev() {
            acc = acc * x + k as f64 * self.coeffs[k];
        }
        acc
    }

    pub fn d2v(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for k in (2..self.coeffs.len()).rev() {
            acc = acc * x + (k * (k - 1)) as f64 * self.coeffs[k];
        }
        acc
    }

    pub fn dv_complex(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (1..self.coeffs.len()).rev() {
            acc = acc * z + k as f64 * self.coeffs[k];
        }
        acc
    }

    /// Global minimum of `V` on the real line, from the real critical points.
    pub fn minimum(&self) -> f64 {
        // Critical points are bracketed on a fine grid wide enough to contain
        // every real root of V' (Cauchy bound).
        let d = self.derivative_coefficients(1);
        let lead = *d.last().unwrap();
        let bound = 1.0
            + d[..d.len() - 1]
                .iter()
                .map(|c| (c / lead).abs())
                .fold(0.0, f64::max);
        let steps = 20_000;
        let mut best = self.v(0.0);
        let mut prev_x = -bound;
        let mut prev_d = self.dv(prev_x);
        for i in 1..=steps {
            let x = -bound + 2.0 * bound * i as f64 / steps as f64;
            let dx = self.dv(x);
            if prev_d <= 0.0 && dx >= 0.0 {
                let (mut lo, mut hi) = (prev_x, x);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if self.dv(mid) <= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                best = best.min(self.v(0.5 * (lo + hi)));
            }
            prev_x = x;
            prev_d = dx;
        }
        best
    }
}

pub fn builtin_quadratic() -> Potential {
    Potential::quadratic()
}

pub fn builtin_quartic(t: f64) -> Potential {
    Potential::quartic(t)
}

pub(crate) fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

pub(crate) fn horner_complex(c: &[f64], z: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

/// Result of scanning `r` over the support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneCutCheck {
    pub one_cut: bool,
    pub min_r: f64,
    pub argmin: f64,
}

/// Checks that `r` has no zero on `[A, B]` by sampling it at `grid_size`
/// Chebyshev points of the support.
pub fn check_one_cut(
    p: &Potential,
    m: &EquilibriumMeasure,
    grid_size: usize,
) -> Result<OneCutCheck> {
    if m.potential() != p {
        return Err(Error::InvalidInput(
            "equilibrium measure was solved for a different potential".into(),
        ));
    }
    if grid_size == 0 {
        return Err(Error::InvalidInput("grid_size must be positive".into()));
    }
    let s = m.support();
    let (c, half) = (s.center(), s.half_width());
    // Include the exact center so symmetric minima are hit.
    let mut best = (m.r_real(c), c);
    for x in chebyshev_nodes(grid_size) {
        let t = c + half * x;
        let r = m.r_real(t);
        if r < best.0 {
            best = (r, t);
        }
    }
    Ok(OneCutCheck {
        one_cut: best.0 > 0.0,
        min_r: best.0,
        argmin: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn evaluate_examples() {
        let q = builtin_quadratic();
        assert_eq!(q.evaluate(2.0, 1).unwrap(), 2.0);
        assert_eq!(q.evaluate(0.0, 0).unwrap(), 0.0);
        assert_eq!(q.evaluate(1.0, 0).unwrap(), 0.5);
        let q4 = builtin_quartic(0.0);
        assert_eq!(q4.evaluate(2.0, 1).unwrap(), 8.0);
        assert_eq!(q4.evaluate(1.0, 0).unwrap(), 0.25);
        assert_eq!(builtin_quartic(1.0).evaluate(1.0, 1).unwrap(), 2.0);
        assert!(matches!(
            q.evaluate(1.0, 3),
            Err(Error::UnsupportedOrder(3))
        ));
        assert!(q.evaluate_complex(Complex64::new(1.0, 1.0), 5).is_err());
    }

    #[test]
    fn polynomial_validation() {
        let bad_odd = PotentialKind::Polynomial {
            coefficients: vec![0.0, 1.0, 0.0, 1.0],
        };
        assert!(Potential::new(bad_odd).is_err());
        let bad_sign = PotentialKind::Polynomial {
            coefficients: vec![0.0, 0.0, -1.0],
        };
        assert!(Potential::new(bad_sign).is_err());
        let ok = PotentialKind::Polynomial {
            coefficients: vec![1.0, 0.0, 0.5, 0.0, 0.0],
        };
        let p = Potential::new(ok).unwrap();
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn config_round_trip() {
        let p: Potential = serde_json::from_str(r#"{"kind": "quartic", "t": 1.0}"#).unwrap();
        assert_eq!(p, builtin_quartic(1.0));
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<Potential>(&s).unwrap(), p);
        assert!(
            serde_json::from_str::<Potential>(r#"{"kind": "quartic", "t": 1.0, "u": 2}"#).is_err()
        );
    }

    #[test]
    fn minimum_of_double_well() {
        // x^4/4 - x^2 has minima at ±√2 with value -1.
        assert_relative_eq!(builtin_quartic(-2.0).minimum(), -1.0, epsilon = 1e-12);
        assert_eq!(builtin_quadratic().minimum(), 0.0);
    }

    proptest! {
        #[test]
        fn derivative_matches_central_difference(x in -3.0f64..3.0, which in 0usize..3) {
            let p = [builtin_quadratic(), builtin_quartic(0.0), builtin_quartic(1.0)][which].clone();
            let h = 1e-5;
            let fd = (p.v(x + h) - p.v(x - h)) / (2.0 * h);
            let d1 = p.evaluate(x, 1).unwrap();
            prop_assert!((d1 - fd).abs() <= 1e-6 * (1.0 + d1.abs()));
            let fd2 = (p.dv(x + h) - p.dv(x - h)) / (2.0 * h);
            prop_assert!((p.evaluate(x, 2).unwrap() - fd2).abs() <= 1e-6 * (1.0 + fd2.abs()));
        }

        #[test]
        fn complex_evaluation_is_horner(re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let p = builtin_quartic(0.7);
            let z = Complex64::new(re, im);
            let direct = z.powi(4) * 0.25 + z * z * 0.35;
            let v = p.evaluate_complex(z, 0).unwrap();
            prop_assert!((v - direct).norm() <= 1e-12 * (1.0 + direct.norm()));
            let dv = p.evaluate_complex(z, 1).unwrap();
            prop_assert!((dv - p.dv_complex(z)).norm() <= 1e-12 * (1.0 + dv.norm()));
        }
    }
}
