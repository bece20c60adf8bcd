//! Statistical experiments: each compares an empirical estimate over a
//! [`SampleSet`] (or an exact oracle value) with a prediction, and gates
//! the comparison by a tolerance policy.
//!
//! Exact identities gate at `|z| ≤ 4`. Limit theorems gate at fixed
//! windows, since finite-`N` corrections in `log N` are not small.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::observables::{self, f_kernel, log_integral, stieltjes_emp};
use crate::oracle::{exact_expectation, OracleSpec};
use crate::potential::Potential;
use crate::quadrature::{chebyshev_nodes, integrate_adaptive};
use crate::sampler::SampleSet;
use crate::stats::{self, Estimate};

pub const MAX_Z: f64 = 4.0;
const ORACLE_TOL_RANK1: f64 = 1e-8;
const ORACLE_TOL_RANKN: f64 = 1e-7;
const MIN_CLT_SAMPLES: usize = 500;
const REFINEMENT_TOL: f64 = 1e-6;

/// One line of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub predicted: Option<f64>,
    pub estimated: f64,
    pub stderr: Option<f64>,
    pub z_score: Option<f64>,
    /// Acceptance window, or a confidence interval for ungated rows.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub gated: bool,
    pub pass: bool,
}

impl Row {
    /// Reported but not gated.
    pub fn info(
        label: impl Into<String>,
        predicted: Option<f64>,
        estimated: f64,
        stderr: Option<f64>,
    ) -> Self {
        let z_score = match (predicted, stderr) {
            (Some(p), Some(s)) if s > 0.0 => Some((estimated - p) / s),
            _ => None,
        };
        Row {
            label: label.into(),
            predicted,
            estimated,
            stderr,
            z_score,
            lower: None,
            upper: None,
            gated: false,
            pass: true,
        }
    }

    /// Gated on `|estimated - predicted| ≤ max_z · stderr`.
    pub fn z_test(label: impl Into<String>, predicted: f64, est: Estimate, max_z: f64) -> Self {
        let z = if est.stderr > 0.0 {
            (est.mean - predicted) / est.stderr
        } else if est.mean == predicted {
            0.0
        } else {
            f64::INFINITY
        };
        Row {
            label: label.into(),
            predicted: Some(predicted),
            estimated: est.mean,
            stderr: Some(est.stderr),
            z_score: Some(z),
            lower: None,
            upper: None,
            gated: true,
            pass: z.abs() <= max_z,
        }
    }

    /// Gated on `lower ≤ estimated ≤ upper`; either bound may be open.
    pub fn window(
        label: impl Into<String>,
        predicted: Option<f64>,
        estimated: f64,
        stderr: Option<f64>,
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> Self {
        let pass = estimated.is_finite()
            && lower.is_none_or(|l| estimated >= l)
            && upper.is_none_or(|u| estimated <= u);
        let mut row = Row::info(label, predicted, estimated, stderr);
        row.lower = lower;
        row.upper = upper;
        row.gated = true;
        row.pass = pass;
        row
    }

    /// Gated on `|estimated - predicted| ≤ tol`.
    pub fn tolerance(label: impl Into<String>, predicted: f64, estimated: f64, tol: f64) -> Self {
        Row::window(
            label,
            Some(predicted),
            estimated,
            None,
            Some(predicted - tol),
            Some(predicted + tol),
        )
    }

    /// A gated yes/no property; `estimated` is 1 when it holds.
    pub fn check(label: impl Into<String>, holds: bool) -> Self {
        let mut row = Row::info(label, Some(1.0), if holds { 1.0 } else { 0.0 }, None);
        row.gated = true;
        row.pass = holds;
        row
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    /// The statement under test.
    pub claim: String,
    pub config: Value,
    pub rows: Vec<Row>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    fn new(name: &str, claim: &str, config: Value) -> Self {
        ExperimentReport {
            name: name.into(),
            claim: claim.into(),
            config,
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Whether every gated row passes.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| !r.gated || r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.gated && !r.pass)
    }

    pub fn row(&self, label: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Mean of a per-sample statistic with an i.i.d. or batch-means error.
pub fn mean_estimate(set: &SampleSet, values: &[f64]) -> Estimate {
    if set.is_iid() {
        return stats::iid_estimate(values);
    }
    let chains: Vec<Vec<f64>> = set
        .chains()
        .iter()
        .map(|idx| idx.iter().map(|&i| values[i]).collect())
        .collect();
    stats::batch_means_estimate(&chains)
}

/// Covariance of two per-sample statistics, with the error of the mean of
/// centered products.
pub fn covariance_estimate(set: &SampleSet, x: &[f64], y: &[f64]) -> Estimate {
    let n = x.len() as f64;
    let (mx, my) = (stats::mean(x), stats::mean(y));
    let prod: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let e = mean_estimate(set, &prod);
    let k = n / (n - 1.0);
    Estimate {
        mean: e.mean * k,
        stderr: e.stderr * k,
    }
}

fn per_sample<T, F>(set: &SampleSet, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[f64]) -> Result<T> + Sync,
{
    set.samples.par_iter().map(|s| f(&s.lambdas)).collect()
}

fn fmt_z(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

fn config_echo(set: &SampleSet) -> Value {
    json!({
        "ensemble": set.config,
        "samples": set.len(),
        "chains": set.chains().len(),
    })
}

/// Where loop-equation expectations come from.
#[derive(Debug, Clone, Copy)]
pub enum LoopSource<'a> {
    Samples(&'a SampleSet),
    Oracle(&'a OracleSpec),
}

impl LoopSource<'_> {
    fn parts(&self) -> (f64, &Potential, Value) {
        match self {
            LoopSource::Samples(s) => (s.config.beta, &s.config.potential, config_echo(s)),
            LoopSource::Oracle(o) => (o.beta, &o.potential, json!({ "oracle": o })),
        }
    }
}

/// `s(z)² + (1/N)(2/β - 1)s'(z) + (1/N) Σ V'(λ_k)/(λ_k - z)`, whose
/// expectation vanishes.
pub fn loop_rank1_term(
    lambdas: &[f64],
    potential: &Potential,
    beta: f64,
    z: Complex64,
) -> Result<Complex64> {
    let n = lambdas.len() as f64;
    let s = stieltjes_emp(lambdas, z, 0)?;
    let ds = stieltjes_emp(lambdas, z, 1)?;
    let kv: Complex64 = lambdas
        .iter()
        .map(|&x| potential.dv(x) / (x - z))
        .sum::<Complex64>()
        / n;
    Ok(s * s + (2.0 / beta - 1.0) / n * ds + kv)
}

/// Rank-`n` loop-equation integrand at `z` and `zs = (z_1, …, z_{n-1})`:
/// the rank-1 term times `Π s(z_i)`, plus
/// `(2/(βN²)) Σ_j f(z, z_j) Π_{i≠j} s(z_i)`.
pub fn loop_rankn_term(
    lambdas: &[f64],
    potential: &Potential,
    beta: f64,
    z: Complex64,
    zs: &[Complex64],
) -> Result<Complex64> {
    let n = lambdas.len() as f64;
    let base = loop_rank1_term(lambdas, potential, beta, z)?;
    let s: Vec<Complex64> = zs
        .iter()
        .map(|&w| stieltjes_emp(lambdas, w, 0))
        .collect::<Result<_>>()?;
    let prod_except = |skip: Option<usize>| -> Complex64 {
        s.iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .fold(Complex64::new(1.0, 0.0), |acc, (_, v)| acc * v)
    };
    let mut total = base * prod_except(None);
    for (j, &w) in zs.iter().enumerate() {
        total += 2.0 / (beta * n * n) * f_kernel(lambdas, z, w)? * prod_except(Some(j));
    }
    Ok(total)
}

fn check_off_axis(points: &[Complex64]) -> Result<()> {
    if let Some(z) = points.iter().find(|z| z.im == 0.0 || !z.im.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "evaluation point {z} must be off the real axis"
        )));
    }
    Ok(())
}

fn loop_rows<F>(
    report: &mut ExperimentReport,
    source: LoopSource,
    label: &str,
    tol: f64,
    term: F,
) -> Result<()>
where
    F: Fn(&[f64]) -> Result<Complex64> + Sync,
{
    match source {
        LoopSource::Samples(set) => {
            let v = per_sample(set, &term)?;
            let re: Vec<f64> = v.iter().map(|c| c.re).collect();
            let im: Vec<f64> = v.iter().map(|c| c.im).collect();
            report.rows.push(Row::z_test(
                format!("{label} re"),
                0.0,
                mean_estimate(set, &re),
                MAX_Z,
            ));
            report.rows.push(Row::z_test(
                format!("{label} im"),
                0.0,
                mean_estimate(set, &im),
                MAX_Z,
            ));
        }
        LoopSource::Oracle(spec) => {
            // The oracle evaluates at unordered labels; sort first.
            let v = exact_expectation(spec, |l: &[f64]| {
                let mut s = l.to_vec();
                s.sort_by(f64::total_cmp);
                term(&s).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            })?;
            if !v.value.re.is_finite() || !v.value.im.is_finite() {
                return Err(Error::Quadrature(
                    "loop integrand not finite on the oracle grid".into(),
                ));
            }
            let mut re = Row::tolerance(format!("{label} re"), 0.0, v.value.re, tol);
            re.stderr = Some(v.error);
            let mut im = Row::tolerance(format!("{label} im"), 0.0, v.value.im, tol);
            im.stderr = Some(v.error);
            report.rows.push(re);
            report.rows.push(im);
        }
    }
    Ok(())
}

/// Rank-1 loop equation at each `z`; the prediction is exactly zero.
pub fn verify_loop_rank1(source: LoopSource, z_points: &[Complex64]) -> Result<ExperimentReport> {
    check_off_axis(z_points)?;
    let (beta, potential, config) = source.parts();
    let potential = potential.clone();
    let mut report = ExperimentReport::new(
        "loop-rank1",
        "rank-1 loop equation E[s² + (1/N)(2/β-1)s' + (1/N)ΣV'(λ)/(λ-z)] = 0",
        json!({ "source": config, "z": z_points.iter().map(|&z| fmt_z(z)).collect::<Vec<_>>() }),
    );
    for &z in z_points {
        let label = format!("z={}", fmt_z(z));
        loop_rows(&mut report, source, &label, ORACLE_TOL_RANK1, |l| {
            loop_rank1_term(l, &potential, beta, z)
        })?;
    }
    Ok(report)
}

/// Rank-`n` loop equation with `n - 1 = zs.len()` extra points.
pub fn verify_loop_rankn(
    source: LoopSource,
    z: Complex64,
    zs: &[Complex64],
) -> Result<ExperimentReport> {
    if zs.is_empty() || zs.len() > 4 {
        return Err(Error::InvalidInput(format!(
            "rank-n loop equation needs 1 to 4 extra points, got {}",
            zs.len()
        )));
    }
    check_off_axis(&[z])?;
    check_off_axis(zs)?;
    let (beta, potential, config) = source.parts();
    let potential = potential.clone();
    let mut report = ExperimentReport::new(
        "loop-rankn",
        "rank-n loop equation: E[(rank-1 term)Πs(z_i) + (2/(βN²))Σ_j f(z,z_j)Π_{i≠j}s(z_i)] = 0",
        json!({
            "source": config,
            "z": fmt_z(z),
            "zs": zs.iter().map(|&w| fmt_z(w)).collect::<Vec<_>>(),
        }),
    );
    let label = format!("rank {} z={}", zs.len() + 1, fmt_z(z));
    loop_rows(&mut report, source, &label, ORACLE_TOL_RANKN, |l| {
        loop_rankn_term(l, &potential, beta, z, zs)
    })?;
    Ok(report)
}

/// `E|s_N(E+iη) - m_V(E+iη)|^{2q}` over `η`, with the log-log slope gated
/// at `-2q ± 0.1·2q`.
pub fn local_law_scan(
    set: &SampleSet,
    m: &EquilibriumMeasure,
    e: f64,
    etas: &[f64],
    q: u32,
) -> Result<ExperimentReport> {
    if etas.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "local law scan needs at least 4 η values, got {}",
            etas.len()
        )));
    }
    if q == 0 || etas.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
        return Err(Error::InvalidInput("η must be positive and q ≥ 1".into()));
    }
    let s = m.support();
    let eta_max = etas.iter().copied().fold(0.0, f64::max);
    if e < s.a - eta_max || e > s.b + eta_max {
        return Err(Error::InvalidInput(format!(
            "energy {e} outside [A-η, B+η]"
        )));
    }
    let mut report = ExperimentReport::new(
        "local-law",
        "local law: E|s_N - m_V|^{2q} scales like (Nη)^{-2q}",
        json!({ "samples": config_echo(set), "E": e, "etas": etas, "q": q }),
    );
    let mut logs = Vec::new();
    let mut means = Vec::new();
    for &eta in etas {
        let z = Complex64::new(e, eta);
        let mv = m.m_v(z);
        let v = per_sample(set, |l| {
            Ok((stieltjes_emp(l, z, 0)? - mv).norm().powi(2 * q as i32))
        })?;
        let est = mean_estimate(set, &v);
        report.rows.push(Row::info(
            format!("eta={eta:e}"),
            None,
            est.mean,
            Some(est.stderr),
        ));
        logs.push(eta.ln());
        means.push(est.mean.ln());
    }
    let (slope, _) = stats::linear_fit(&logs, &means);
    let target = -2.0 * q as f64;
    report
        .rows
        .push(Row::tolerance("slope", target, slope, 0.1 * 2.0 * q as f64));
    Ok(report)
}

/// Rescaled bulk deviation `max_k N^{2/3} k̂^{1/3} |λ_k - γ_k| / log N` of one
/// sample, over `k̂ = min(k, N+1-k) ≥ a`.
pub fn rigidity_statistic(lambdas: &[f64], gammas: &[f64], a: usize) -> f64 {
    let n = lambdas.len();
    let nf = n as f64;
    let mut best: f64 = 0.0;
    for k in 1..=n {
        let khat = k.min(n + 1 - k);
        if khat < a {
            continue;
        }
        let d = (lambdas[k - 1] - gammas[k - 1]).abs();
        best = best.max(nf.powf(2.0 / 3.0) * (khat as f64).powf(1.0 / 3.0) * d / nf.ln());
    }
    best
}

/// Per-`N` 0.99-quantile of [`rigidity_statistic`]; gated on the largest
/// and smallest differing by less than a factor 2.
pub fn rigidity_profile(sets: &[SampleSet], bulk_fraction: f64) -> Result<ExperimentReport> {
    if !(bulk_fraction > 0.0 && bulk_fraction < 0.5) {
        return Err(Error::InvalidInput(format!(
            "bulk fraction must lie in (0, 0.5), got {bulk_fraction}"
        )));
    }
    if sets.windows(2).any(|w| w[0].config.n >= w[1].config.n) {
        return Err(Error::InvalidInput("N list must be increasing".into()));
    }
    let mut report = ExperimentReport::new(
        "rigidity",
        "rigidity: max_k N^{2/3} k̂^{1/3} |λ_k - γ_k| / log N stays bounded in N",
        json!({
            "sets": sets.iter().map(config_echo).collect::<Vec<_>>(),
            "bulk_fraction": bulk_fraction,
        }),
    );
    let mut qs = Vec::new();
    for set in sets {
        let n = set.config.n;
        let m = EquilibriumMeasure::solve(&set.config.potential)?;
        let gammas: Vec<f64> = (1..=n).map(|k| m.quantile(k, n)).collect::<Result<_>>()?;
        let a = ((bulk_fraction * n as f64).ceil() as usize).max(1);
        let v = per_sample(set, |l| Ok(rigidity_statistic(l, &gammas, a)))?;
        let q = stats::quantile(&v, 0.99);
        report
            .rows
            .push(Row::info(format!("N={n} q99"), None, q, None));
        qs.push(q);
    }
    let hi = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = qs.iter().copied().fold(f64::INFINITY, f64::min);
    report.rows.push(Row::window(
        "max/min ratio",
        None,
        hi / lo,
        None,
        None,
        Some(2.0),
    ));
    Ok(report)
}

/// Least-squares fit of `-log S(x) = a + c·x^p`, scanning `p` on a grid of
/// step 0.005 in `[0.1, 4]`. Returns `(p, a, c)`, or `None` if a survival
/// value is not in `(0, 1]`.
pub fn fit_stretch_exponent(xs: &[f64], survival: &[f64]) -> Option<(f64, f64, f64)> {
    if xs.len() < 3 || survival.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
        return None;
    }
    let y: Vec<f64> = survival.iter().map(|s| -s.ln()).collect();
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for i in 0..=780 {
        let p = 0.1 + 0.005 * i as f64;
        let xp: Vec<f64> = xs.iter().map(|x| x.powf(p)).collect();
        let (c, a) = stats::linear_fit(&xp, &y);
        let sse: f64 = xp
            .iter()
            .zip(&y)
            .map(|(u, v)| (a + c * u - v).powi(2))
            .sum();
        if best.is_none_or(|b| sse < b.0) {
            best = Some((sse, p, a, c));
        }
    }
    best.map(|(_, p, a, c)| (p, a, c))
}

/// Survival `P(λ_1 < A - xN^{-2/3} or λ_N > B + xN^{-2/3})` per `x`, with
/// 95% Wilson intervals. Gated on strict decrease and on the fitted
/// stretch exponent lying in `[0.7, 1.7]`.
pub fn edge_tail(set: &SampleSet, m: &EquilibriumMeasure, xs: &[f64]) -> Result<ExperimentReport> {
    let n = set.config.n;
    let scale = (n as f64).powf(-2.0 / 3.0);
    if xs
        .iter()
        .any(|&x| !(0.0..=(n as f64).powf(2.0 / 3.0)).contains(&x))
    {
        return Err(Error::InvalidInput(
            "x values must lie in [0, N^{2/3}]".into(),
        ));
    }
    let s = m.support();
    let mut report = ExperimentReport::new(
        "edge-tail",
        "no eigenvalue beyond the edges by more than xN^{-2/3}, with stretched-exponential tails",
        json!({ "samples": config_echo(set), "xs": xs }),
    );
    let total = set.len();
    let mut surv = Vec::new();
    for &x in xs {
        let (lo, hi) = (s.a - x * scale, s.b + x * scale);
        let count = set
            .samples
            .iter()
            .filter(|smp| smp.lambdas[0] < lo || smp.lambdas[smp.lambdas.len() - 1] > hi)
            .count();
        let p = count as f64 / total as f64;
        let (wl, wu) = stats::wilson_interval(count, total, 1.96);
        let mut row = Row::info(
            format!("x={x}"),
            None,
            p,
            Some((p * (1.0 - p) / total as f64).sqrt()),
        );
        row.lower = Some(wl);
        row.upper = Some(wu);
        report.rows.push(row);
        surv.push(p);
    }
    report.rows.push(Row::check(
        "strictly decreasing",
        surv.windows(2).all(|w| w[1] < w[0]),
    ));
    let (p, _, _) = fit_stretch_exponent(xs, &surv).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    report.rows.push(Row::window(
        "stretch exponent",
        None,
        p,
        None,
        Some(0.7),
        Some(1.7),
    ));
    Ok(report)
}

/// `E[#(λ ∈ [E - δℓ(E), E + δℓ(E)])]` for decreasing `δ`. Gated on strict
/// decrease and on each value staying below `4δ + 0.5`.
pub fn wegner_scan(
    set: &SampleSet,
    m: &EquilibriumMeasure,
    e: f64,
    deltas: &[f64],
) -> Result<ExperimentReport> {
    if deltas.windows(2).any(|w| w[1] >= w[0]) || deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidInput(
            "deltas must be positive and decreasing".into(),
        ));
    }
    let ell = m.scales(e, set.config.n).ell;
    let mut report = ExperimentReport::new(
        "wegner",
        "Wegner estimate: E[#(I)] vanishes with |I|/ℓ(E)",
        json!({ "samples": config_echo(set), "E": e, "deltas": deltas, "ell": ell }),
    );
    let mut means = Vec::new();
    for &d in deltas {
        let v: Vec<f64> = set
            .samples
            .iter()
            .map(|s| observables::count_interval(&s.lambdas, e - d * ell, e + d * ell) as f64)
            .collect();
        let est = mean_estimate(set, &v);
        report.rows.push(Row::window(
            format!("delta={d}"),
            None,
            est.mean,
            Some(est.stderr),
            None,
            Some(4.0 * d + 0.5),
        ));
        means.push(est.mean);
    }
    report.rows.push(Row::check(
        "strictly decreasing",
        means.windows(2).all(|w| w[1] < w[0]),
    ));
    Ok(report)
}

fn sigma2_at<F, D>(m: &EquilibriumMeasure, beta: f64, f: &F, df: &D, n: usize) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let s = m.support();
    let (c, r) = (s.center(), s.half_width());
    // First kind in t (weight 1/τ), second kind in s (weight τ).
    let t_nodes: Vec<f64> = chebyshev_nodes(n).iter().map(|x| c + r * x).collect();
    let ft: Vec<f64> = t_nodes.iter().map(|&t| f(t)).collect();
    let mut total = 0.0;
    for i in 1..=n {
        let th = i as f64 * PI / (n + 1) as f64;
        let sv = c + r * th.cos();
        let w_s = r * r * PI / (n + 1) as f64 * th.sin().powi(2);
        let (fs, dfs) = (f(sv), df(sv));
        let mut inner = 0.0;
        for (&t, &fv) in t_nodes.iter().zip(&ft) {
            let d = sv - t;
            inner += if d.abs() < 1e-14 * r {
                dfs
            } else {
                (fs - fv) / d
            };
        }
        total += w_s * dfs * inner * PI / n as f64;
    }
    total / (PI * PI * beta)
}

/// `σ²(f) = (1/(π²β)) ∫∫ f'(s) (f(s) - f(t))/(s - t) τ(s)/τ(t) ds dt`,
/// computed with `n` and `2n` nodes per axis.
pub fn sigma2_quadrature<F, D>(
    m: &EquilibriumMeasure,
    beta: f64,
    f: F,
    df: D,
    n: usize,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let a = sigma2_at(m, beta, &f, &df, n);
    let b = sigma2_at(m, beta, &f, &df, 2 * n);
    if !((a - b).abs() <= REFINEMENT_TOL * b.abs().max(1e-300)) && (a - b).abs() > 1e-14 {
        return Err(Error::Refinement {
            coarse: a.to_string(),
            fine: b.to_string(),
        });
    }
    Ok(b)
}

/// `p.v. ∫_A^B ψ(s)/(x - s) ds` with `ψ = r'τ/r`, by subtracting `ψ(x)`.
fn delta_inner(m: &EquilibriumMeasure, x: f64) -> Result<f64> {
    let s = m.support();
    let psi = |t: f64| m.r_prime(t) * s.tau(t) / m.r_real(t);
    let px = psi(x);
    let (reg, _) = integrate_adaptive(
        |t: f64| (psi(t) - px) / (x - t),
        s.a,
        s.b,
        &[x],
        1e-12,
        0.0,
        2000,
    )?;
    Ok(reg + px * ((x - s.a) / (s.b - x)).ln())
}

fn delta_at<F: Fn(f64) -> f64>(m: &EquilibriumMeasure, beta: f64, f: &F, n: usize) -> Result<f64> {
    let s = m.support();
    let (c, r) = (s.center(), s.half_width());
    let mut outer = 0.0;
    for x in chebyshev_nodes(n) {
        let t = c + r * x;
        outer += f(t) * (PI + delta_inner(m, t)?);
    }
    outer *= PI / n as f64;
    Ok((2.0 / beta - 1.0) * ((f(s.a) + f(s.b)) / 4.0 - outer / (2.0 * PI * PI)))
}

/// `δ(f) = (2/β - 1)((f(A) + f(B))/4 - (1/2π²) ∫ f/τ (π + p.v.∫ r'τ/(r(x - s)) ds) dx)`.
pub fn delta_quadrature<F: Fn(f64) -> f64>(
    m: &EquilibriumMeasure,
    beta: f64,
    f: F,
    n: usize,
) -> Result<f64> {
    let a = delta_at(m, beta, &f, n)?;
    let b = delta_at(m, beta, &f, 2 * n)?;
    let scale = f(m.support().a).abs() + f(m.support().b).abs() + f(m.support().center()).abs();
    if (a - b).abs() > REFINEMENT_TOL * scale.max(b.abs()) && (a - b).abs() > 1e-14 {
        return Err(Error::Refinement {
            coarse: a.to_string(),
            fine: b.to_string(),
        });
    }
    Ok(b)
}

/// Finite-`N` covariance surrogates at `z_l = E_l + iη(E_l)`, already
/// multiplied by `β`: `(Re-Re, Im-Im)` for the ordered pair `(l, j)`.
fn clt_covariance(zl: Complex64, zj: Complex64, kappa_l: f64, eta_l: f64) -> (f64, f64) {
    let d = (zl.conj() - zj).norm();
    let re = -d.ln();
    let im = -((d / kappa_l.max(eta_l)).min(1.0)).ln();
    (re, im)
}

/// Log-correlated field at `z_l = E_l + iη(E_l)`: mean shift of `Re L_N`,
/// variances and covariances of `(Re L_N, Im L_N)` normalized by
/// `log N / β`, and Gaussianity diagnostics.
pub fn clt_logfield(
    set: &SampleSet,
    m: &EquilibriumMeasure,
    energies: &[f64],
) -> Result<ExperimentReport> {
    if set.len() < MIN_CLT_SAMPLES {
        return Err(Error::Underpowered {
            got: set.len(),
            need: MIN_CLT_SAMPLES,
        });
    }
    let s = m.support();
    if energies.iter().any(|&e| !s.contains(e)) {
        return Err(Error::InvalidInput(
            "energies must lie in the support".into(),
        ));
    }
    if energies.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInput("energies must be distinct".into()));
    }
    let beta = set.config.beta;
    let n = set.config.n;
    let log_n = (n as f64).ln();
    let norm = beta / log_n;
    let shift_sign = 2.0 / beta - 1.0;
    let scales: Vec<_> = energies.iter().map(|&e| m.scales(e, n)).collect();
    let zs: Vec<Complex64> = energies
        .iter()
        .zip(&scales)
        .map(|(&e, sc)| Complex64::new(e, sc.eta))
        .collect();
    let integrals: Vec<Complex64> = zs
        .iter()
        .map(|&z| log_integral(m, z))
        .collect::<Result<_>>()?;
    let fields = per_sample(set, |l| {
        zs.iter()
            .zip(&integrals)
            .map(|(&z, &i)| observables::log_char_with(l, z, i).map(|f| f.value()))
            .collect::<Result<Vec<_>>>()
    })?;
    let re: Vec<Vec<f64>> = (0..zs.len())
        .map(|k| fields.iter().map(|f| f[k].re).collect())
        .collect();
    let im: Vec<Vec<f64>> = (0..zs.len())
        .map(|k| fields.iter().map(|f| f[k].im).collect())
        .collect();

    let mut report = ExperimentReport::new(
        "clt",
        "log-correlated CLT: sqrt(β/log N)(Re L_N - δ, Im L_N) is asymptotically Gaussian with covariance (a 0; 0 b)",
        json!({ "samples": config_echo(set), "energies": energies, "z": zs.iter().map(|&z| fmt_z(z)).collect::<Vec<_>>() }),
    );
    report.notes.push(
        "finite-N predictions use the covariance surrogates evaluated at z = E + iη(E), η(E) = exp((log N)^{1/4})ℓ(E)"
            .into(),
    );
    let width = s.b - s.a;
    for (l, &e) in energies.iter().enumerate() {
        let sc = scales[l];
        let delta = 0.25 * shift_sign * sc.kappa.max((n as f64).powf(-2.0 / 3.0)).ln();
        let mean_re = mean_estimate(set, &re[l]);
        if shift_sign == 0.0 {
            report
                .rows
                .push(Row::z_test(format!("E={e} mean re"), delta, mean_re, MAX_Z));
        } else {
            report.rows.push(Row::info(
                format!("E={e} mean re"),
                Some(delta),
                mean_re.mean,
                Some(mean_re.stderr),
            ));
            let mut row = Row::check(
                format!("E={e} mean re sign"),
                mean_re.mean * shift_sign > 0.0,
            );
            row.predicted = Some(shift_sign.signum());
            row.estimated = mean_re.mean.signum();
            report.rows.push(row);
        }
        let (pred_re, pred_im) = clt_covariance(zs[l], zs[l], sc.kappa, sc.eta);
        let var_im = covariance_estimate(set, &im[l], &im[l]);
        let var_re = covariance_estimate(set, &re[l], &re[l]);
        let bulk = sc.kappa >= 0.05 * width;
        let im_label = format!("E={e} var im normalized");
        if bulk {
            report.rows.push(Row::window(
                im_label,
                Some(pred_im / log_n),
                var_im.mean * norm,
                Some(var_im.stderr * norm),
                Some(0.7),
                Some(1.3),
            ));
        } else {
            report.rows.push(Row::info(
                im_label,
                Some(pred_im / log_n),
                var_im.mean * norm,
                Some(var_im.stderr * norm),
            ));
        }
        report.rows.push(Row::info(
            format!("E={e} var re normalized"),
            Some(pred_re / log_n),
            var_re.mean * norm,
            Some(var_re.stderr * norm),
        ));
        let cross = covariance_estimate(set, &re[l], &im[l]);
        report.rows.push(Row::window(
            format!("E={e} cov re-im normalized"),
            Some(0.0),
            cross.mean * norm,
            Some(cross.stderr * norm),
            Some(-0.1),
            Some(0.1),
        ));
        for (part, v) in [("re", &re[l]), ("im", &im[l])] {
            let (g1, z1) = stats::skewness_z(v);
            let (g2, z2) = stats::kurtosis_z(v);
            let mut r1 = Row::info(format!("E={e} skewness {part}"), Some(0.0), g1, None);
            r1.z_score = Some(z1);
            let mut r2 = Row::info(format!("E={e} excess kurtosis {part}"), Some(0.0), g2, None);
            r2.z_score = Some(z2);
            report.rows.push(r1);
            report.rows.push(r2);
        }
    }
    for l in 0..energies.len() {
        for j in l + 1..energies.len() {
            let (sl, sj) = (scales[l], scales[j]);
            let (re_lj, im_lj) = clt_covariance(zs[l], zs[j], sl.kappa, sl.eta);
            let (re_jl, im_jl) = clt_covariance(zs[j], zs[l], sj.kappa, sj.eta);
            let pred_im = 0.5 * (im_lj + im_jl);
            let pred_re = 0.5 * (re_lj + re_jl);
            let tag = format!("E={},{}", energies[l], energies[j]);
            let cov_im = covariance_estimate(set, &im[l], &im[j]);
            report.rows.push(Row::window(
                format!("{tag} cov im-im normalized"),
                Some(pred_im / log_n),
                cov_im.mean * norm,
                Some(cov_im.stderr * norm),
                Some(-0.15),
                Some(0.15),
            ));
            let asym = if im_lj.abs().max(im_jl.abs()) > 0.0 {
                (im_lj - im_jl).abs() / im_lj.abs().max(im_jl.abs())
            } else {
                0.0
            };
            report.rows.push(Row::info(
                format!("{tag} im-im prediction asymmetry"),
                None,
                asym,
                None,
            ));
            let cov_re = covariance_estimate(set, &re[l], &re[j]);
            report.rows.push(Row::info(
                format!("{tag} cov re-re normalized"),
                Some(pred_re / log_n),
                cov_re.mean * norm,
                Some(cov_re.stderr * norm),
            ));
            for (a, b, name) in [(l, j, "re-im"), (j, l, "im-re")] {
                let c = covariance_estimate(set, &re[a], &im[b]);
                report.rows.push(Row::info(
                    format!("{tag} cov {name} normalized"),
                    Some(0.0),
                    c.mean * norm,
                    Some(c.stderr * norm),
                ));
            }
        }
    }
    Ok(report)
}

/// Finite-`N` value of `log(((|γ_i - γ_j| ∨ ℓ(γ_i))/κ(γ_i)) ∧ 1)/(-log N)`.
pub fn displacement_b(m: &EquilibriumMeasure, n: usize, gi: f64, gj: f64) -> f64 {
    let sc = m.scales(gi, n);
    let r = ((gi - gj).abs().max(sc.ell) / sc.kappa).min(1.0);
    r.ln() / -(n as f64).ln()
}

/// Joint fluctuations of the normalized displacements `Y_N(n_i)`.
pub fn gustavsson(
    set: &SampleSet,
    m: &EquilibriumMeasure,
    indices: &[usize],
) -> Result<ExperimentReport> {
    if set.len() < MIN_CLT_SAMPLES {
        return Err(Error::Underpowered {
            got: set.len(),
            need: MIN_CLT_SAMPLES,
        });
    }
    let n = set.config.n;
    let beta = set.config.beta;
    let min_khat = (n as f64).powf(0.1);
    for &k in indices {
        if k < 1 || k > n {
            return Err(Error::IndexOutOfRange { k, n });
        }
        if ((k.min(n + 1 - k)) as f64) < min_khat {
            return Err(Error::InvalidInput(format!("index {k} is not in the bulk")));
        }
    }
    let gammas: Vec<f64> = indices
        .iter()
        .map(|&k| m.quantile(k, n))
        .collect::<Result<_>>()?;
    let scale: Vec<f64> = gammas
        .iter()
        .map(|&g| observables::displacement_scale(n, beta, m.density(g)))
        .collect();
    let ys: Vec<Vec<f64>> = indices
        .iter()
        .zip(&gammas)
        .zip(&scale)
        .map(|((&k, &g), &c)| {
            set.samples
                .iter()
                .map(|s| c * (s.lambdas[k - 1] - g))
                .collect()
        })
        .collect();
    let mut report = ExperimentReport::new(
        "gustavsson",
        "eigenvalue displacements Y_N(n) are asymptotically jointly Gaussian with covariance b",
        json!({ "samples": config_echo(set), "indices": indices }),
    );
    let b: Vec<Vec<f64>> = gammas
        .iter()
        .map(|&gi| {
            gammas
                .iter()
                .map(|&gj| displacement_b(m, n, gi, gj))
                .collect()
        })
        .collect();
    for (i, &k) in indices.iter().enumerate() {
        let v = covariance_estimate(set, &ys[i], &ys[i]);
        report.rows.push(Row::window(
            format!("n={k} var"),
            Some(b[i][i]),
            v.mean,
            Some(v.stderr),
            Some(0.7),
            Some(1.3),
        ));
    }
    for i in 0..indices.len() {
        for j in i + 1..indices.len() {
            let corr = stats::correlation(&ys[i], &ys[j]);
            let se = (1.0 - corr * corr) / (set.len() as f64).sqrt();
            let bij = 0.5 * (b[i][j] + b[j][i]);
            let pred = bij / (b[i][i] * b[j][j]).sqrt();
            let label = format!("n={},{} correlation", indices[i], indices[j]);
            let row = if indices[i].abs_diff(indices[j]) == 1 {
                Row::window(label, Some(pred), corr, Some(se), Some(0.9), None)
            } else if indices[i].abs_diff(indices[j]) >= n / 8 {
                Row::window(label, Some(pred), corr, Some(se), Some(-0.15), Some(0.15))
            } else {
                Row::info(label, Some(pred), corr, Some(se))
            };
            report.rows.push(row);
        }
    }
    report.notes.push(
        "predicted values use the finite-N b matrix; windows gate the limits b_11 = 1, adjacent correlation 1, and 0 at index separation ≥ N/8"
            .into(),
    );
    Ok(report)
}

/// Linear statistic `S_N(f)`: mean against `δ(f)`, variance against
/// `σ²(f)`, and the log-moment generating function against
/// `t²σ²/2 + tδ`.
pub fn smooth_clt<F, D>(
    set: &SampleSet,
    m: &EquilibriumMeasure,
    name: &str,
    f: F,
    df: D,
) -> Result<ExperimentReport>
where
    F: Fn(f64) -> f64 + Sync,
    D: Fn(f64) -> f64,
{
    let beta = set.config.beta;
    let sigma2 = sigma2_quadrature(m, beta, &f, &df, 128)?;
    let delta = delta_quadrature(m, beta, &f, 64)?;
    let mean_f = observables::equilibrium_mean(m, &f, &[])?;
    let v = per_sample(set, |l| Ok(observables::linear_stat_with(l, &f, mean_f)))?;
    let mut report = ExperimentReport::new(
        "smooth-clt",
        "linear statistics: S_N(f) → Gaussian with mean δ(f) and variance σ²(f)",
        json!({ "samples": config_echo(set), "f": name, "sigma2": sigma2, "delta": delta }),
    );
    report
        .rows
        .push(Row::z_test("mean", delta, mean_estimate(set, &v), MAX_Z));
    report.rows.push(Row::z_test(
        "variance",
        sigma2,
        covariance_estimate(set, &v, &v),
        MAX_Z,
    ));
    let n = v.len() as f64;
    for t in [-0.5, -0.25, 0.25, 0.5] {
        let e: Vec<f64> = v.iter().map(|x| (t * x).exp()).collect();
        let mean = stats::mean(&e);
        let se = (stats::variance(&e) / n).sqrt() / mean;
        report.rows.push(Row::info(
            format!("log mgf t={t}"),
            Some(0.5 * t * t * sigma2 + t * delta),
            mean.ln(),
            Some(se),
        ));
    }
    let (_, kz) = stats::kurtosis_z(&v);
    if kz.abs() > 10.0 {
        let msg = format!("heavy tails: kurtosis z-score {kz:.1}");
        log::warn!("{msg}");
        report.notes.push(msg);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{run_chains, EnsembleConfig};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gue() -> EquilibriumMeasure {
        EquilibriumMeasure::solve(&Potential::quadratic()).unwrap()
    }

    #[test]
    fn oracle_loop_equations_vanish() {
        let spec = OracleSpec::new(2.0, 2, Potential::quadratic()).unwrap();
        let r1 = verify_loop_rank1(LoopSource::Oracle(&spec), &[c(0.0, 1.0)]).unwrap();
        assert!(r1.passed(), "{r1:#?}");
        let r2 = verify_loop_rankn(LoopSource::Oracle(&spec), c(0.0, 1.0), &[c(0.0, 2.0)]).unwrap();
        assert!(r2.passed(), "{r2:#?}");
        let spec = OracleSpec::new(1.0, 2, Potential::quartic(-0.5)).unwrap();
        let r = verify_loop_rankn(LoopSource::Oracle(&spec), c(0.3, 0.7), &[c(-0.5, 0.4)]).unwrap();
        assert!(r.passed(), "{r:#?}");
    }

    #[test]
    fn broken_loop_term_is_detected() {
        // Dropping the derivative term at β = 1 leaves a nonzero expectation.
        let spec = OracleSpec::new(1.0, 2, Potential::quadratic()).unwrap();
        let z = c(0.2, 0.8);
        let p = Potential::quadratic();
        let v = exact_expectation(&spec, |l: &[f64]| {
            let mut s = l.to_vec();
            s.sort_by(f64::total_cmp);
            loop_rank1_term(&s, &p, 2.0, z).unwrap()
        })
        .unwrap();
        assert!(v.value.norm() > 1e-3);
    }

    #[test]
    fn loop_inputs_are_checked() {
        let spec = OracleSpec::new(2.0, 2, Potential::quadratic()).unwrap();
        assert!(verify_loop_rank1(LoopSource::Oracle(&spec), &[c(1.0, 0.0)]).is_err());
        assert!(verify_loop_rankn(LoopSource::Oracle(&spec), c(0.0, 1.0), &[]).is_err());
    }

    #[test]
    fn monte_carlo_loop_equation() {
        let set = run_chains(&EnsembleConfig::tridiagonal(1.0, 64), 2, 200, 5).unwrap();
        let r = verify_loop_rank1(LoopSource::Samples(&set), &[c(0.3, 0.5), c(-1.0, 0.2)]).unwrap();
        assert!(r.passed(), "{r:#?}");
        assert!(r.rows.iter().all(|row| row.stderr.unwrap() > 0.0));
    }

    #[test]
    fn conjugate_pair_residual_is_real() {
        // With z_1 = conj(z_2) the rank-3 term of a real configuration at
        // real-symmetric z is the conjugate of itself under z → conj(z).
        let l = [-1.1, -0.2, 0.5, 1.3];
        let p = Potential::quadratic();
        let z = c(0.0, 0.7);
        let zs = [c(0.4, 0.3), c(0.4, -0.3)];
        let a = loop_rankn_term(&l, &p, 2.0, z, &zs).unwrap();
        let b = loop_rankn_term(&l, &p, 2.0, z.conj(), &[zs[1].conj(), zs[0].conj()]).unwrap();
        assert!((a - b.conj()).norm() < 1e-14);
    }

    #[test]
    fn sigma2_hand_values() {
        let m = gue();
        for beta in [1.0, 2.0, 4.0] {
            let v = sigma2_quadrature(&m, beta, |x| x, |_| 1.0, 64).unwrap();
            assert_relative_eq!(v, 2.0 / beta, epsilon = 1e-12);
        }
        assert_eq!(
            sigma2_quadrature(&m, 2.0, |_| 3.0, |_| 0.0, 64).unwrap(),
            0.0
        );
        let a = sigma2_quadrature(&m, 2.0, |x: f64| x.sin(), |x: f64| x.cos(), 64).unwrap();
        let b =
            sigma2_quadrature(&m, 2.0, |x: f64| 3.0 * x.sin(), |x: f64| 3.0 * x.cos(), 64).unwrap();
        assert_relative_eq!(b, 9.0 * a, max_relative = 1e-12);
        // σ²(x²) for the semicircle: the Chebyshev expansion x² = 2 + T_2(x/2)·2
        // gives (1/β)·Σ k c_k² / 2 with c_2 = 2, i.e. 4/β.
        let q = sigma2_quadrature(&m, 1.0, |x| x * x, |x| 2.0 * x, 64).unwrap();
        assert_relative_eq!(q, 4.0, epsilon = 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn sigma2_polarization(a in -1.0f64..1.0, b in -1.0f64..1.0, s in -2.0f64..2.0, t in -2.0f64..2.0) {
            let m = EquilibriumMeasure::solve(&Potential::quartic(0.3)).unwrap();
            let f = move |x: f64| (a * x).sin() + x * x * b;
            let df = move |x: f64| a * (a * x).cos() + 2.0 * x * b;
            let g = move |x: f64| (b * x).exp() - a * x;
            let dg = move |x: f64| b * (b * x).exp() - a;
            let sf = sigma2_quadrature(&m, 2.0, f, df, 64).unwrap();
            let sg = sigma2_quadrature(&m, 2.0, g, dg, 64).unwrap();
            let sfg = sigma2_quadrature(&m, 2.0, move |x| f(x) + g(x), move |x| df(x) + dg(x), 64).unwrap();
            let cross = 0.5 * (sfg - sf - sg);
            let comb = sigma2_quadrature(&m, 2.0, move |x| s * f(x) + t * g(x), move |x| s * df(x) + t * dg(x), 64).unwrap();
            let expand = s * s * sf + t * t * sg + 2.0 * s * t * cross;
            prop_assert!((comb - expand).abs() < 1e-8 * (1.0 + comb.abs()));
            prop_assert!(sf >= -1e-12 && sg >= -1e-12);
        }
    }

    #[test]
    fn delta_hand_values() {
        let m = gue();
        assert!(delta_quadrature(&m, 1.0, |x| x, 64).unwrap().abs() < 1e-13);
        assert!(delta_quadrature(&m, 1.0, |_| 1.0, 64).unwrap().abs() < 1e-13);
        // (f(A)+f(B))/4 - (1/2π)∫x²/τ = 2 - 1 for the semicircle.
        assert_relative_eq!(
            delta_quadrature(&m, 1.0, |x| x * x, 64).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let q = EquilibriumMeasure::solve(&Potential::quartic(0.5)).unwrap();
        for f in [
            |x: f64| x.cos(),
            |x: f64| x.powi(4),
            |x: f64| (x - 0.3).exp(),
        ] {
            assert_eq!(delta_quadrature(&q, 2.0, f, 64).unwrap(), 0.0);
        }
        // Mass conservation: the correction to the density integrates to 0.
        assert!(delta_quadrature(&q, 1.0, |_| 1.0, 64).unwrap().abs() < 1e-10);
    }

    #[test]
    fn stretch_fit_recovers_exponent() {
        let xs = [0.0, 0.5, 1.0, 2.0, 4.0];
        let surv: Vec<f64> = xs
            .iter()
            .map(|x: &f64| (-0.4 - 0.7 * x.powf(1.5)).exp())
            .collect();
        let (p, a, c) = fit_stretch_exponent(&xs, &surv).unwrap();
        assert!((p - 1.5).abs() < 1e-9, "{p}");
        assert_relative_eq!(a, 0.4, epsilon = 1e-9);
        assert_relative_eq!(c, 0.7, epsilon = 1e-9);
        assert!(fit_stretch_exponent(&xs, &[0.5, 0.4, 0.3, 0.1, 0.0]).is_none());
    }

    #[test]
    fn rigidity_statistic_of_quantiles_is_zero() {
        let m = gue();
        let g: Vec<f64> = (1..=50).map(|k| m.quantile(k, 50).unwrap()).collect();
        assert_eq!(rigidity_statistic(&g, &g, 5), 0.0);
        let mut l = g.clone();
        l[24] += 0.1;
        let khat = 25.0f64;
        let want = 50f64.powf(2.0 / 3.0) * khat.powf(1.0 / 3.0) * 0.1 / 50f64.ln();
        assert_relative_eq!(rigidity_statistic(&l, &g, 5), want, epsilon = 1e-12);
        l[24] = g[24];
        l[0] -= 1.0;
        assert_eq!(rigidity_statistic(&l, &g, 5), 0.0);
    }

    #[test]
    fn small_scans_behave() {
        let m = gue();
        let set = run_chains(&EnsembleConfig::tridiagonal(2.0, 128), 1, 300, 11).unwrap();
        let w = wegner_scan(&set, &m, 0.0, &[2.0, 1.0, 0.5]).unwrap();
        assert!(w.rows.iter().all(|r| r.estimated >= 0.0));
        assert!(wegner_scan(&set, &m, 0.0, &[0.5, 1.0]).is_err());
        let edge = wegner_scan(&set, &m, 2.0, &[1.0]).unwrap();
        assert!(edge.rows[0].estimated < w.rows[1].estimated);
        let t = edge_tail(&set, &m, &[0.0, 1.0, 2.0]).unwrap();
        let p0 = t.rows[0].estimated;
        assert!(p0 > 0.0 && p0 < 1.0);
        assert!(t.rows[1].estimated <= p0);
        let ll = local_law_scan(&set, &m, 0.0, &[0.03, 0.1, 0.3, 10.0], 1).unwrap();
        assert!(ll.rows[3].estimated < ll.rows[0].estimated);
        assert!(local_law_scan(&set, &m, 0.0, &[0.1, 0.2, 0.3], 1).is_err());
        assert!(matches!(
            clt_logfield(&set, &m, &[0.0]),
            Err(Error::Underpowered { .. })
        ));
    }

    #[test]
    fn smooth_clt_trace_law() {
        let m = gue();
        let set = run_chains(&EnsembleConfig::tridiagonal(2.0, 64), 1, 400, 3).unwrap();
        let r = smooth_clt(&set, &m, "x", |x| x, |_| 1.0).unwrap();
        assert!(r.passed(), "{r:#?}");
        assert_eq!(r.row("mean").unwrap().predicted, Some(0.0));
    }

    #[test]
    fn displacement_b_limits() {
        let m = gue();
        let n = 4096;
        let g = m.quantile(n / 2, n).unwrap();
        assert!(displacement_b(&m, n, g, g) > 1.0);
        let (lo, hi) = (
            m.quantile(n / 8, n).unwrap(),
            m.quantile(7 * n / 8, n).unwrap(),
        );
        assert_eq!(displacement_b(&m, n, lo, hi), 0.0);
    }

    #[test]
    fn report_gating() {
        let mut r = ExperimentReport::new("t", "claim", json!({}));
        r.rows.push(Row::info("a", None, 1.0, None));
        r.rows.push(Row::z_test(
            "b",
            0.0,
            Estimate {
                mean: 0.1,
                stderr: 0.1,
            },
            4.0,
        ));
        assert!(r.passed());
        r.rows
            .push(Row::window("c", None, 2.0, None, Some(0.0), Some(1.0)));
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
        assert!(!Row::window("nan", None, f64::NAN, None, None, Some(1.0)).pass);
    }
}
