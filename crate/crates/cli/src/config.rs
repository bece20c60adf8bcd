//! Run configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use loggas_core::{Complex64, EnsembleConfig, McmcParams, Method, OracleSpec, Potential};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "Potential::quadratic")]
    pub potential: Potential,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Sizes for experiments that scan N.
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub mcmc: McmcParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_chains")]
    pub chains: u32,
    /// Samples per chain.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Worker threads; 0 picks the machine default.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub experiment: ExperimentParams,
}

fn default_beta() -> f64 {
    2.0
}
fn default_n() -> usize {
    256
}
fn default_n_list() -> Vec<usize> {
    vec![256, 512, 1024, 2048]
}
fn default_method() -> Method {
    Method::Tridiagonal
}
fn default_chains() -> u32 {
    1
}
fn default_samples() -> usize {
    200
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// Parameters of the individual experiments; each block is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentParams {
    pub loops: LoopParams,
    pub local_law: LocalLawParams,
    pub rigidity: RigidityParams,
    pub edge_tail: EdgeTailParams,
    pub wegner: WegnerParams,
    pub clt: CltParams,
    pub gustavsson: GustavssonParams,
    pub smooth_clt: SmoothCltParams,
    pub oracle: OracleParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoopParams {
    /// Points `[re, im]` for the rank-1 equation.
    pub z: Vec<[f64; 2]>,
    /// Extra points for the rank-n equation, evaluated at the first `z`.
    pub zs: Vec<[f64; 2]>,
    /// Use the quadrature oracle instead of samples.
    pub oracle: bool,
}

impl Default for LoopParams {
    fn default() -> Self {
        LoopParams {
            z: vec![[0.0, 1.0], [0.5, 0.5], [-1.0, 0.5]],
            zs: vec![[0.0, 2.0]],
            oracle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalLawParams {
    pub energy: f64,
    /// Defaults to `k/N` for `k = 4, 8, …, 256`.
    pub etas: Option<Vec<f64>>,
    pub q: u32,
}

impl Default for LocalLawParams {
    fn default() -> Self {
        LocalLawParams {
            energy: 0.0,
            etas: None,
            q: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RigidityParams {
    pub bulk_fraction: f64,
}

impl Default for RigidityParams {
    fn default() -> Self {
        RigidityParams { bulk_fraction: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdgeTailParams {
    pub xs: Vec<f64>,
}

impl Default for EdgeTailParams {
    fn default() -> Self {
        EdgeTailParams {
            xs: vec![0.0, 0.5, 1.0, 2.0, 4.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WegnerParams {
    pub energy: f64,
    pub deltas: Vec<f64>,
}

impl Default for WegnerParams {
    fn default() -> Self {
        WegnerParams {
            energy: 0.0,
            deltas: vec![0.5, 0.2, 0.1, 0.05],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CltParams {
    pub energies: Vec<f64>,
}

impl Default for CltParams {
    fn default() -> Self {
        CltParams {
            energies: vec![0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GustavssonParams {
    /// Defaults to `N/2, N/2 + 1, N/4`.
    pub indices: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    #[default]
    X,
    X2,
    Cos,
    Sin,
}

impl TestFunction {
    pub fn name(self) -> &'static str {
        match self {
            TestFunction::X => "x",
            TestFunction::X2 => "x2",
            TestFunction::Cos => "cos",
            TestFunction::Sin => "sin",
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            TestFunction::X => x,
            TestFunction::X2 => x * x,
            TestFunction::Cos => x.cos(),
            TestFunction::Sin => x.sin(),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            TestFunction::X => 1.0,
            TestFunction::X2 => 2.0 * x,
            TestFunction::Cos => -x.sin(),
            TestFunction::Sin => x.cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothCltParams {
    pub f: TestFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    Trace,
    #[default]
    Trace2,
    Lmax,
    Gap2,
}

impl Observable {
    pub fn eval(self, l: &[f64]) -> f64 {
        match self {
            Observable::Trace => l.iter().sum(),
            Observable::Trace2 => l.iter().map(|x| x * x).sum(),
            Observable::Lmax => l.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Observable::Gap2 => {
                let hi = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = l.iter().copied().fold(f64::INFINITY, f64::min);
                (hi - lo).powi(2)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleParams {
    pub observable: Observable,
    pub n: usize,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            observable: Observable::Trace2,
            n: 2,
        }
    }
}

impl RunConfig {
    /// Parses a JSON document; errors name the offending key.
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("malformed config at `{path}`: {}", e.inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            bail!("malformed config at `beta`: must be positive");
        }
        if self.n < 1 {
            bail!("malformed config at `n`: must be positive");
        }
        if self.chains < 1 {
            bail!("malformed config at `chains`: must be positive");
        }
        if self.samples < 1 {
            bail!("malformed config at `samples`: must be positive");
        }
        if self.n_list.is_empty() {
            bail!("malformed config at `n_list`: must not be empty");
        }
        Ok(())
    }

    pub fn ensemble(&self, n: usize) -> EnsembleConfig {
        EnsembleConfig {
            beta: self.beta,
            n,
            potential: self.potential.clone(),
            method: self.method,
            mcmc: self.mcmc.clone(),
        }
    }

    pub fn oracle_spec(&self) -> loggas_core::Result<OracleSpec> {
        OracleSpec::new(self.beta, self.experiment.oracle.n, self.potential.clone())
    }

    pub fn loop_points(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        let c = |v: &Vec<[f64; 2]>| v.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        (c(&self.experiment.loops.z), c(&self.experiment.loops.zs))
    }

    pub fn etas(&self) -> Vec<f64> {
        self.experiment.local_law.etas.clone().unwrap_or_else(|| {
            (2..=8)
                .map(|k| (1u32 << k) as f64 / self.n as f64)
                .collect()
        })
    }

    pub fn gustavsson_indices(&self) -> Vec<usize> {
        self.experiment
            .gustavsson
            .indices
            .clone()
            .unwrap_or_else(|| {
                let n = self.n;
                vec![n / 2, n / 2 + 1, n / 4]
            })
    }
}
