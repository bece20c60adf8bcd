//! Samplers for the β-ensemble
//!
//! ```text
//! dμ_N ∝ ∏_{k<l} |λ_k - λ_l|^β exp(-(βN/2) Σ_k V(λ_k))
//! ```
//!
//! Two independent routes: the tridiagonal matrix model (quadratic `V`
//! only, exact i.i.d. draws) and Metropolis-adjusted Langevin (any
//! polynomial `V`).

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use std::sync::Arc;

use rayon::prelude::*;
use rustdct::{Dct2, Dct3, DctPlanner};
use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::rng::{stream, stream_id, StreamRng};
use crate::tridiag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tridiagonal,
    Mala,
}

/// Fixed mass matrix of the Langevin proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    /// Identity: plain MALA.
    None,
    /// Inverse of the approximate log-gas Hessian symbol `π|θ| - θ²/2` in a
    /// cosine basis over particle labels, so long-wavelength modes take
    /// steps about `N` times larger than nearest-neighbor ones.
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcParams {
    pub burn_in_sweeps: usize,
    pub thinning_sweeps: usize,
    /// Initial Langevin step; non-positive means "pick from N and β".
    pub step_size: f64,
    pub adapt: bool,
    pub preconditioner: Preconditioner,
}

impl Default for McmcParams {
    fn default() -> Self {
        McmcParams {
            burn_in_sweeps: 2000,
            thinning_sweeps: 50,
            step_size: 0.0,
            adapt: true,
            preconditioner: Preconditioner::Spectral,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub beta: f64,
    pub n: usize,
    pub potential: Potential,
    pub method: Method,
    #[serde(default)]
    pub mcmc: McmcParams,
}

impl EnsembleConfig {
    pub fn tridiagonal(beta: f64, n: usize) -> Self {
        EnsembleConfig {
            beta,
            n,
            potential: Potential::quadratic(),
            method: Method::Tridiagonal,
            mcmc: McmcParams::default(),
        }
    }

    pub fn mala(beta: f64, n: usize, potential: Potential) -> Self {
        EnsembleConfig {
            beta,
            n,
            potential,
            method: Method::Mala,
            mcmc: McmcParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        match self.method {
            Method::Tridiagonal => {
                if self.n < 2 {
                    return Err(Error::InvalidConfig(format!(
                        "N must be at least 2, got {}",
                        self.n
                    )));
                }
                if !self.potential.is_quadratic() {
                    return Err(Error::InvalidConfig(
                        "tridiagonal sampler requires the quadratic potential".into(),
                    ));
                }
            }
            Method::Mala => {
                // One particle is allowed here: it is a plain Gaussian check.
                if self.n < 1 {
                    return Err(Error::InvalidConfig("N must be positive".into()));
                }
                if self.mcmc.thinning_sweeps == 0 {
                    return Err(Error::InvalidConfig(
                        "thinning_sweeps must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// One sorted configuration `λ_1 < … < λ_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub lambdas: Vec<f64>,
    pub seed: u64,
    pub chain_id: u32,
    pub sweep_index: u64,
}

impl Sample {
    pub fn n(&self) -> usize {
        self.lambdas.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub config: EnsembleConfig,
    pub samples: Vec<Sample>,
    pub rng_stream_ids: Vec<u64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Whether samples within a chain are independent draws.
    pub fn is_iid(&self) -> bool {
        self.config.method == Method::Tridiagonal
    }

    /// Sample indices grouped by chain, in sweep order.
    pub fn chains(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut last = None;
        for (i, s) in self.samples.iter().enumerate() {
            if last != Some(s.chain_id) {
                out.push(Vec::new());
                last = Some(s.chain_id);
            }
            out.last_mut().unwrap().push(i);
        }
        out
    }
}

/// Diagonal and off-diagonal of the random tridiagonal matrix whose
/// eigenvalues follow the ensemble with `V(x) = x²/2`: diagonal entries
/// `N(0, 2/(βN))`, off-diagonals `χ_{β(N-k)}/√(βN)`.
pub fn tridiagonal_matrix<R: Rng + ?Sized>(
    beta: f64,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(beta > 0.0) || n < 1 {
        return Err(Error::InvalidConfig(format!(
            "need beta > 0 and N >= 1, got beta={beta}, N={n}"
        )));
    }
    let scale = 1.0 / (beta * n as f64).sqrt();
    let sd = (2.0 / (beta * n as f64)).sqrt();
    let diag: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect();
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for k in 1..n {
        let shape = beta * (n - k) as f64 / 2.0;
        let g = Gamma::new(shape, 2.0).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let chi2: f64 = g.sample(rng);
        off.push(chi2.sqrt() * scale);
    }
    Ok((diag, off))
}

/// Sorted eigenvalues of one tridiagonal-model draw.
pub fn sample_tridiagonal<R: Rng + ?Sized>(beta: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let (d, e) = tridiagonal_matrix(beta, n, rng)?;
    tridiag::eigenvalues(&d, &e)
}

/// `log π(λ)` up to a constant and its gradient, or `None` on a collision
/// or non-finite value.
pub fn log_density_and_gradient(
    x: &[f64],
    beta: f64,
    potential: &Potential,
    grad: &mut [f64],
) -> Option<f64> {
    let n = x.len();
    let confine = 0.5 * beta * n as f64;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut log_vdm = 0.0;
    for i in 0..n {
        let xi = x[i];
        let (_, rest) = x.split_at(i + 1);
        let (head, grest) = grad.split_at_mut(i + 1);
        let mut gi = 0.0;
        for (xc, gc) in rest.chunks(16).zip(grest.chunks_mut(16)) {
            let mut prod = 1.0;
            for (xj, gj) in xc.iter().zip(gc.iter_mut()) {
                let d = xi - xj;
                let inv = 1.0 / d;
                gi += inv;
                *gj -= inv;
                prod *= d;
            }
            log_vdm += prod.abs().ln();
        }
        head[i] += gi;
    }
    let mut logp = beta * log_vdm;
    for (g, &xi) in grad.iter_mut().zip(x) {
        *g = beta * *g - confine * potential.dv(xi);
        logp -= confine * potential.v(xi);
    }
    if logp.is_finite() && grad.iter().all(|g| g.is_finite()) {
        Some(logp)
    } else {
        None
    }
}

/// `β Σ log|λ_i-λ_j| - (βN/2) Σ V(λ_k)`, the unnormalized log density.
pub fn log_density(x: &[f64], beta: f64, potential: &Potential) -> f64 {
    let mut g = vec![0.0; x.len()];
    log_density_and_gradient(x, beta, potential, &mut g).unwrap_or(f64::NEG_INFINITY)
}

/// Orthonormal DCT-II transform `P` and the diagonal `c` of the mass
/// matrix `C = Pᵀ diag(c) P`.
struct SpectralBasis {
    dct2: Arc<dyn Dct2<f64>>,
    dct3: Arc<dyn Dct3<f64>>,
    scratch: Vec<f64>,
    c: Vec<f64>,
    sqrt_c: Vec<f64>,
}

impl SpectralBasis {
    fn new(n: usize) -> Self {
        use std::f64::consts::PI;
        let nf = n as f64;
        let mut planner = DctPlanner::new();
        let dct2 = planner.plan_dct2(n);
        let dct3 = planner.plan_dct3(n);
        let scratch = vec![0.0; dct2.get_scratch_len().max(dct3.get_scratch_len())];
        let top = 0.5 * PI * PI;
        let c: Vec<f64> = (0..n)
            .map(|j| {
                let t = PI * j as f64 / nf;
                top / (PI * t - 0.5 * t * t + top / nf)
            })
            .collect();
        let sqrt_c = c.iter().map(|v| v.sqrt()).collect();
        SpectralBasis {
            dct2,
            dct3,
            scratch,
            c,
            sqrt_c,
        }
    }

    /// `out = P v`.
    fn forward(&mut self, v: &[f64], out: &mut [f64]) {
        let nf = v.len() as f64;
        out.copy_from_slice(v);
        self.dct2.process_dct2_with_scratch(out, &mut self.scratch);
        out[0] *= (1.0 / nf).sqrt();
        let s = (2.0 / nf).sqrt();
        out[1..].iter_mut().for_each(|o| *o *= s);
    }

    /// `out = Pᵀ v`.
    fn inverse(&mut self, v: &[f64], out: &mut [f64]) {
        let nf = v.len() as f64;
        let s = (2.0 / nf).sqrt();
        out[0] = 2.0 * (1.0 / nf).sqrt() * v[0];
        for (o, x) in out[1..].iter_mut().zip(&v[1..]) {
            *o = s * x;
        }
        self.dct3.process_dct3_with_scratch(out, &mut self.scratch);
    }
}

/// One Metropolis-adjusted Langevin chain.
pub struct MalaChain {
    beta: f64,
    potential: Potential,
    params: McmcParams,
    rng: StreamRng,
    x: Vec<f64>,
    logp: f64,
    grad: Vec<f64>,
    prop: Vec<f64>,
    prop_grad: Vec<f64>,
    step: f64,
    sweeps: u64,
    accepted: u64,
    proposed: u64,
    basis: Option<SpectralBasis>,
    /// Scratch: transformed gradients and increment.
    grad_hat: Vec<f64>,
    prop_grad_hat: Vec<f64>,
    incr_hat: Vec<f64>,
    incr: Vec<f64>,
}

const TARGET_ACCEPT: f64 = 0.574;

impl MalaChain {
    pub fn new(config: &EnsembleConfig, rng: StreamRng, init: Option<Vec<f64>>) -> Result<Self> {
        config.validate()?;
        let n = config.n;
        let x = match init {
            Some(x) => {
                if x.len() != n {
                    return Err(Error::InvalidConfig(format!(
                        "initial state has {} particles, expected {n}",
                        x.len()
                    )));
                }
                x
            }
            None => {
                let m = EquilibriumMeasure::solve(&config.potential)?;
                (1..=n)
                    .map(|k| m.quantile(k, n))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let mut grad = vec![0.0; n];
        let logp = log_density_and_gradient(&x, config.beta, &config.potential, &mut grad)
            .ok_or(Error::NonFiniteGradient)?;
        let step = if config.mcmc.step_size > 0.0 {
            config.mcmc.step_size
        } else {
            // Local stiffness of the Vandermonde term scales like βN².
            0.5 / (config.beta * (n * n) as f64).max(1.0)
        };
        let basis = match config.mcmc.preconditioner {
            Preconditioner::Spectral if n > 1 => Some(SpectralBasis::new(n)),
            _ => None,
        };
        let mut grad_hat = vec![0.0; n];
        let mut basis = basis;
        if let Some(b) = basis.as_mut() {
            b.forward(&grad, &mut grad_hat);
        }
        Ok(MalaChain {
            beta: config.beta,
            potential: config.potential.clone(),
            params: config.mcmc.clone(),
            rng,
            x,
            logp,
            grad,
            prop: vec![0.0; n],
            prop_grad: vec![0.0; n],
            step,
            sweeps: 0,
            accepted: 0,
            proposed: 0,
            basis,
            grad_hat,
            prop_grad_hat: vec![0.0; n],
            incr_hat: vec![0.0; n],
            incr: vec![0.0; n],
        })
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// One joint Langevin proposal of all coordinates; returns the
    /// acceptance probability.
    pub fn sweep(&mut self) -> Result<f64> {
        if self.basis.is_some() {
            return self.sweep_spectral();
        }
        let h = self.step;
        let sh = h.sqrt();
        for i in 0..self.x.len() {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            self.prop[i] = self.x[i] + 0.5 * h * self.grad[i] + sh * z;
        }
        let u: f64 = self.rng.random();
        self.sweeps += 1;
        self.proposed += 1;
        let alpha = match log_density_and_gradient(
            &self.prop,
            self.beta,
            &self.potential,
            &mut self.prop_grad,
        ) {
            None => 0.0,
            Some(logp_new) => {
                let mut fwd = 0.0;
                let mut bwd = 0.0;
                for i in 0..self.x.len() {
                    let a = self.prop[i] - self.x[i] - 0.5 * h * self.grad[i];
                    let b = self.x[i] - self.prop[i] - 0.5 * h * self.prop_grad[i];
                    fwd += a * a;
                    bwd += b * b;
                }
                let log_ratio = logp_new - self.logp - (bwd - fwd) / (2.0 * h);
                let alpha = if log_ratio >= 0.0 {
                    1.0
                } else {
                    log_ratio.exp()
                };
                if u < alpha {
                    std::mem::swap(&mut self.x, &mut self.prop);
                    std::mem::swap(&mut self.grad, &mut self.prop_grad);
                    self.logp = logp_new;
                    self.accepted += 1;
                }
                alpha
            }
        };
        if !self.grad.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFiniteGradient);
        }
        Ok(alpha)
    }

    /// Proposal `y = x + (h/2) C ∇log π + √h C^{1/2} ξ`, carried out in the
    /// cosine basis where `C` is diagonal.
    fn sweep_spectral(&mut self) -> Result<f64> {
        let basis = self.basis.as_mut().unwrap();
        let h = self.step;
        let sh = h.sqrt();
        let mut fwd = 0.0;
        for j in 0..self.x.len() {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            self.incr_hat[j] = 0.5 * h * basis.c[j] * self.grad_hat[j] + sh * basis.sqrt_c[j] * z;
            fwd += h * z * z;
        }
        basis.inverse(&self.incr_hat, &mut self.incr);
        for ((p, x), d) in self.prop.iter_mut().zip(&self.x).zip(&self.incr) {
            *p = x + d;
        }
        let u: f64 = self.rng.random();
        self.sweeps += 1;
        self.proposed += 1;
        let alpha = match log_density_and_gradient(
            &self.prop,
            self.beta,
            &self.potential,
            &mut self.prop_grad,
        ) {
            None => 0.0,
            Some(logp_new) => {
                basis.forward(&self.prop_grad, &mut self.prop_grad_hat);
                let mut bwd = 0.0;
                for j in 0..self.x.len() {
                    let b = -self.incr_hat[j] - 0.5 * h * basis.c[j] * self.prop_grad_hat[j];
                    bwd += b * b / basis.c[j];
                }
                let log_ratio = logp_new - self.logp - (bwd - fwd) / (2.0 * h);
                let alpha = if log_ratio >= 0.0 {
                    1.0
                } else {
                    log_ratio.exp()
                };
                if u < alpha {
                    std::mem::swap(&mut self.x, &mut self.prop);
                    std::mem::swap(&mut self.grad, &mut self.prop_grad);
                    std::mem::swap(&mut self.grad_hat, &mut self.prop_grad_hat);
                    self.logp = logp_new;
                    self.accepted += 1;
                }
                alpha
            }
        };
        if !self.grad.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFiniteGradient);
        }
        Ok(alpha)
    }

    /// Burn-in with Robbins–Monro adaptation of `log h` toward an acceptance
    /// rate of about 0.57; the step is frozen afterwards.
    pub fn burn_in(&mut self) -> Result<()> {
        let total = self.params.burn_in_sweeps;
        for t in 0..total {
            let alpha = self.sweep()?;
            if self.params.adapt {
                let gain = 1.0 / ((t + 10) as f64).powf(0.6);
                self.step *= (gain * (alpha - TARGET_ACCEPT)).exp();
            }
        }
        self.accepted = 0;
        self.proposed = 0;
        Ok(())
    }

    /// Advances `thinning_sweeps` sweeps and returns the sorted state.
    pub fn next_sample(&mut self) -> Result<Vec<f64>> {
        for _ in 0..self.params.thinning_sweeps {
            self.sweep()?;
        }
        let mut s = self.x.clone();
        s.sort_by(f64::total_cmp);
        Ok(s)
    }
}

/// Runs a chain of MALA samples from an optional initial state.
pub fn sample_mala(
    config: &EnsembleConfig,
    rng: StreamRng,
    init: Option<Vec<f64>>,
    n_samples: usize,
) -> Result<Vec<Vec<f64>>> {
    if config.method != Method::Mala {
        return Err(Error::InvalidConfig(
            "sample_mala requires method = mala".into(),
        ));
    }
    let mut chain = MalaChain::new(config, rng, init)?;
    chain.burn_in()?;
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        out.push(chain.next_sample()?);
    }
    let rate = chain.acceptance_rate();
    if rate < 0.05 {
        return Err(Error::LowAcceptance(rate));
    }
    Ok(out)
}

fn check_sample(lambdas: &[f64]) -> Result<()> {
    if lambdas.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteGradient);
    }
    if lambdas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "sampler produced tied eigenvalues".into(),
        ));
    }
    Ok(())
}

/// Runs `n_chains` independent chains of `n_samples_per_chain` samples.
///
/// Output order is `(chain_id, sweep_index)` and depends only on the
/// arguments, not on the rayon pool it runs in.
pub fn run_chains(
    config: &EnsembleConfig,
    n_chains: u32,
    n_samples_per_chain: usize,
    seed: u64,
) -> Result<SampleSet> {
    config.validate()?;
    if n_chains < 1 || n_samples_per_chain < 1 {
        return Err(Error::InvalidConfig(
            "need at least one chain and one sample".into(),
        ));
    }
    let tag = |chain: u32| {
        move |e: Error| Error::Chain {
            chain,
            source: Box::new(e),
        }
    };
    let (samples, streams) = match config.method {
        Method::Tridiagonal => {
            let jobs: Vec<(u32, u32)> = (0..n_chains)
                .flat_map(|c| (0..n_samples_per_chain as u32).map(move |i| (c, i)))
                .collect();
            let samples = jobs
                .par_iter()
                .map(|&(c, i)| {
                    let mut rng = stream(seed, stream_id(c, i));
                    let lambdas =
                        sample_tridiagonal(config.beta, config.n, &mut rng).map_err(tag(c))?;
                    check_sample(&lambdas).map_err(tag(c))?;
                    Ok(Sample {
                        lambdas,
                        seed,
                        chain_id: c,
                        sweep_index: i as u64,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let streams = jobs.iter().map(|&(c, i)| stream_id(c, i)).collect();
            (samples, streams)
        }
        Method::Mala => {
            let per_chain = (0..n_chains)
                .into_par_iter()
                .map(|c| {
                    let rng = stream(seed, stream_id(c, u32::MAX));
                    let draws =
                        sample_mala(config, rng, None, n_samples_per_chain).map_err(tag(c))?;
                    let burn = config.mcmc.burn_in_sweeps as u64;
                    let thin = config.mcmc.thinning_sweeps as u64;
                    draws
                        .into_iter()
                        .enumerate()
                        .map(|(i, lambdas)| {
                            check_sample(&lambdas).map_err(tag(c))?;
                            Ok(Sample {
                                lambdas,
                                seed,
                                chain_id: c,
                                sweep_index: burn + thin * (i as u64 + 1),
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let streams = (0..n_chains).map(|c| stream_id(c, u32::MAX)).collect();
            (per_chain.into_iter().flatten().collect(), streams)
        }
    };
    Ok(SampleSet {
        config: config.clone(),
        samples,
        rng_stream_ids: streams,
    })
}
