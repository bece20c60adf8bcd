//! Eigenvalues of real symmetric tridiagonal matrices.
//!
//! Root-free implicit QL iteration (Pal–Walker–Kahan variant) working on
//! squared off-diagonal entries, with Wilkinson-style shifts and deflation
//! on negligible off-diagonals.

use crate::error::{Error, Result};

/// Maximum QL sweeps per eigenvalue before giving up.
const MAX_ITER_PER_EIGENVALUE: usize = 30;

/// Eigenvalues of the 2×2 symmetric matrix `[[a, b], [b, c]]`, larger first.
fn eig2(a: f64, b: f64, c: f64) -> (f64, f64) {
    let sm = a + c;
    let df = a - c;
    let adf = df.abs();
    let tb = b + b;
    let ab = tb.abs();
    let (acmx, acmn) = if a.abs() > c.abs() { (a, c) } else { (c, a) };
    let rt = if adf > ab {
        adf * (1.0 + (ab / adf).powi(2)).sqrt()
    } else if adf < ab {
        ab * (1.0 + (adf / ab).powi(2)).sqrt()
    } else {
        ab * std::f64::consts::SQRT_2
    };
    if sm < 0.0 {
        let rt1 = 0.5 * (sm - rt);
        (rt1, (acmx / rt1) * acmn - (b / rt1) * b)
    } else if sm > 0.0 {
        let rt1 = 0.5 * (sm + rt);
        (rt1, (acmx / rt1) * acmn - (b / rt1) * b)
    } else {
        (0.5 * rt, -0.5 * rt)
    }
}

/// Sorted eigenvalues of the symmetric tridiagonal matrix with diagonal
/// `diag` (length n) and off-diagonal `off` (length n-1).
pub fn eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(
        n == 0 || off.len() + 1 == n,
        "off-diagonal must have length n-1"
    );
    let mut d = diag.to_vec();
    let mut e2: Vec<f64> = off.iter().map(|x| x * x).collect();
    e2.push(0.0);
    ql_squared(&mut d, &mut e2, n)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// In-place root-free QL on `d` with squared off-diagonals `e2`
/// (`e2[i]` couples `d[i]` and `d[i+1]`; `e2[n-1]` is scratch).
fn ql_squared(d: &mut [f64], e2: &mut [f64], n: usize) -> Result<()> {
    if n <= 1 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let eps2 = eps * eps;
    let max_iter = MAX_ITER_PER_EIGENVALUE * n;
    let mut total = 0usize;
    let mut l = 0usize;
    while l < n {
        // Find a negligible off-diagonal at or after l.
        let mut m = l;
        while m + 1 < n {
            let dd = d[m].abs() + d[m + 1].abs();
            if e2[m] <= eps2 * dd * dd {
                e2[m] = 0.0;
                break;
            }
            m += 1;
        }
        if m == l {
            l += 1;
            continue;
        }
        if m == l + 1 {
            let (r1, r2) = eig2(d[l], e2[l].sqrt(), d[l + 1]);
            d[l] = r1;
            d[l + 1] = r2;
            e2[l] = 0.0;
            l += 2;
            continue;
        }
        if total >= max_iter {
            return Err(Error::EigenNoConvergence(max_iter));
        }
        total += 1;

        // Shift from the leading 2×2 block.
        let p0 = d[l];
        let rte = e2[l].sqrt();
        let mut sigma = (d[l + 1] - p0) / (2.0 * rte);
        let r = sigma.hypot(1.0);
        sigma = p0 - rte / (sigma + r.copysign(sigma));

        let mut c = 1.0;
        let mut s = 0.0;
        let mut gamma = d[m] - sigma;
        let mut p = gamma * gamma;
        for i in (l..m).rev() {
            let bb = e2[i];
            let r = p + bb;
            if i + 1 != m {
                e2[i + 1] = s * r;
            }
            let oldc = c;
            c = p / r;
            s = bb / r;
            let oldgam = gamma;
            let alpha = d[i];
            gamma = c * (alpha - sigma) - s * oldgam;
            d[i + 1] = oldgam + (alpha - gamma);
            p = if c != 0.0 {
                gamma * gamma / c
            } else {
                oldc * bb
            };
        }
        e2[l] = s * p;
        d[l] = sigma + gamma;
    }
    Ok(())
}

/// Number of eigenvalues strictly below `x` (Sturm sequence count).
pub fn count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let e2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { e2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}
