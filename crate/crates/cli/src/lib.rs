//! Command-line driver: wires run configurations to samplers, the sample
//! cache, experiments and emitted artifacts.

// `!(x > 0.0)` is used deliberately so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};
use loggas_core::cache::{load_or_sample, run_hash};
use loggas_core::experiments::{self, LoopSource};
use loggas_core::oracle::exact_expectation;
use loggas_core::{run_chains, EquilibriumMeasure, ExperimentReport, SampleSet};
use serde_json::json;

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "loggas",
    version,
    about = "Numerical lab for one-cut β-ensembles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (for `equilibrium`, a `.json` path is also accepted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Sample cache directory.
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = auto); overrides LOGGAS_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub chains: Option<u32>,
    /// Samples per chain.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Solve for the equilibrium measure.
    Equilibrium,
    /// Draw samples (into the cache if one is given).
    Sample,
    /// Exact expectation of an observable by quadrature (small N).
    Oracle {
        #[arg(long, value_enum)]
        observable: Option<config::Observable>,
    },
    /// Rank-1 and rank-n loop equations.
    VerifyLoops,
    LocalLaw,
    Rigidity,
    EdgeTail,
    Wegner,
    Clt,
    Gustavsson,
    SmoothClt,
    /// Aggregate reports in a directory into a markdown summary.
    Report {
        dir: Option<PathBuf>,
    },
}

impl Cli {
    /// The configuration file with command-line overrides applied.
    pub fn effective_config(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Ok(v) = std::env::var("LOGGAS_THREADS") {
            cfg.threads = v
                .parse()
                .with_context(|| format!("LOGGAS_THREADS={v} is not a thread count"))?;
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = &self.cache {
            cfg.cache = Some(v.clone());
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.chains {
            cfg.chains = v;
        }
        if let Some(v) = self.samples {
            cfg.samples = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs the command. `Ok(false)` means a gated verdict failed.
pub fn run(cli: &Cli) -> anyhow::Result<bool> {
    let cfg = cli.effective_config()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()?;
    pool.install(|| dispatch(&cli.command, &cfg))
}

fn samples_for(cfg: &RunConfig, n: usize) -> anyhow::Result<(SampleSet, bool)> {
    let ens = cfg.ensemble(n);
    Ok(match &cfg.cache {
        Some(dir) => load_or_sample(dir, &ens, cfg.chains, cfg.samples, cfg.seed)?,
        None => (run_chains(&ens, cfg.chains, cfg.samples, cfg.seed)?, false),
    })
}

fn emit(cfg: &RunConfig, reports: &[ExperimentReport]) -> anyhow::Result<bool> {
    for r in reports {
        output::write_report(&cfg.out, r)?;
        for row in r.failures() {
            log::warn!(
                "{}: {} failed (estimated {})",
                r.name,
                row.label,
                row.estimated
            );
        }
        log::info!("{}: {}", r.name, if r.passed() { "PASS" } else { "FAIL" });
    }
    Ok(reports.iter().all(ExperimentReport::passed))
}

fn dispatch(command: &Command, cfg: &RunConfig) -> anyhow::Result<bool> {
    let measure =
        || EquilibriumMeasure::solve(&cfg.potential).context("solving for the equilibrium measure");
    match command {
        Command::Equilibrium => {
            equilibrium(cfg, &measure()?)?;
            Ok(true)
        }
        Command::Sample => {
            let (set, hit) = samples_for(cfg, cfg.n)?;
            let ens = cfg.ensemble(cfg.n);
            fs::create_dir_all(&cfg.out)?;
            if cfg.cache.is_none() {
                write_samples_csv(&cfg.out.join("samples.csv"), &set)?;
            }
            output::write_json(
                &cfg.out.join("samples.json"),
                &json!({
                    "hash": run_hash(&ens, cfg.chains, cfg.samples, cfg.seed),
                    "samples": set.len(),
                    "chains": cfg.chains,
                    "cache_hit": hit,
                    "config": ens,
                }),
            )?;
            Ok(true)
        }
        Command::Oracle { observable } => {
            let obs = observable.unwrap_or(cfg.experiment.oracle.observable);
            let spec = cfg.oracle_spec()?;
            let v = exact_expectation(&spec, |l: &[f64]| obs.eval(l))?;
            let doc =
                json!({ "observable": obs, "value": v.value, "error": v.error, "spec": spec });
            println!("{}", serde_json::to_string(&doc)?);
            fs::create_dir_all(&cfg.out)?;
            output::write_json(&cfg.out.join("oracle.json"), &doc)?;
            Ok(true)
        }
        Command::VerifyLoops => {
            let (z, zs) = cfg.loop_points();
            let first = *z.first().context("loops.z must not be empty")?;
            let reports = if cfg.experiment.loops.oracle {
                let spec = cfg.oracle_spec()?;
                vec![
                    experiments::verify_loop_rank1(LoopSource::Oracle(&spec), &z)?,
                    experiments::verify_loop_rankn(LoopSource::Oracle(&spec), first, &zs)?,
                ]
            } else {
                let (set, _) = samples_for(cfg, cfg.n)?;
                vec![
                    experiments::verify_loop_rank1(LoopSource::Samples(&set), &z)?,
                    experiments::verify_loop_rankn(LoopSource::Samples(&set), first, &zs)?,
                ]
            };
            emit(cfg, &reports)
        }
        Command::LocalLaw => {
            let p = &cfg.experiment.local_law;
            let (set, _) = samples_for(cfg, cfg.n)?;
            emit(
                cfg,
                &[experiments::local_law_scan(
                    &set,
                    &measure()?,
                    p.energy,
                    &cfg.etas(),
                    p.q,
                )?],
            )
        }
        Command::Rigidity => {
            let mut sets = Vec::new();
            for &n in &cfg.n_list {
                sets.push(samples_for(cfg, n)?.0);
            }
            emit(
                cfg,
                &[experiments::rigidity_profile(
                    &sets,
                    cfg.experiment.rigidity.bulk_fraction,
                )?],
            )
        }
        Command::EdgeTail => {
            let (set, _) = samples_for(cfg, cfg.n)?;
            emit(
                cfg,
                &[experiments::edge_tail(
                    &set,
                    &measure()?,
                    &cfg.experiment.edge_tail.xs,
                )?],
            )
        }
        Command::Wegner => {
            let p = &cfg.experiment.wegner;
            let (set, _) = samples_for(cfg, cfg.n)?;
            emit(
                cfg,
                &[experiments::wegner_scan(
                    &set,
                    &measure()?,
                    p.energy,
                    &p.deltas,
                )?],
            )
        }
        Command::Clt => {
            let (set, _) = samples_for(cfg, cfg.n)?;
            emit(
                cfg,
                &[experiments::clt_logfield(
                    &set,
                    &measure()?,
                    &cfg.experiment.clt.energies,
                )?],
            )
        }
        Command::Gustavsson => {
            let (set, _) = samples_for(cfg, cfg.n)?;
            emit(
                cfg,
                &[experiments::gustavsson(
                    &set,
                    &measure()?,
                    &cfg.gustavsson_indices(),
                )?],
            )
        }
        Command::SmoothClt => {
            let f = cfg.experiment.smooth_clt.f;
            let (set, _) = samples_for(cfg, cfg.n)?;
            let report = experiments::smooth_clt(
                &set,
                &measure()?,
                f.name(),
                |x| f.eval(x),
                |x| f.derivative(x),
            )?;
            emit(cfg, &[report])
        }
        Command::Report { dir } => {
            let dir = dir.as_deref().unwrap_or(&cfg.out);
            let (md, passed) = output::summarize(dir)?;
            let path = dir.join("summary.md");
            fs::write(&path, &md).with_context(|| format!("writing {}", path.display()))?;
            println!("{md}");
            Ok(passed)
        }
    }
}

fn equilibrium(cfg: &RunConfig, m: &EquilibriumMeasure) -> anyhow::Result<()> {
    let (json_path, csv_path) = if cfg.out.extension().is_some_and(|e| e == "json") {
        if let Some(parent) = cfg.out.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        (cfg.out.clone(), cfg.out.with_extension("csv"))
    } else {
        fs::create_dir_all(&cfg.out)?;
        (
            cfg.out.join("equilibrium.json"),
            cfg.out.join("equilibrium.csv"),
        )
    };
    let s = m.support();
    output::write_json(
        &json_path,
        &json!({
            "potential": cfg.potential,
            "A": s.a,
            "B": s.b,
            "r_coeffs": m.r_coeffs(),
            "quad_order": m.quad_order(),
            "newton_iterations": m.newton_iterations(),
        }),
    )?;
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["t", "density"])?;
    for i in 0..1001 {
        let t = s.a + (s.b - s.a) * i as f64 / 1000.0;
        w.write_record([output::fmt_f64(t), output::fmt_f64(m.density(t))])?;
    }
    w.flush()?;
    log::info!(
        "support [{}, {}] written to {}",
        s.a,
        s.b,
        json_path.display()
    );
    Ok(())
}

fn write_samples_csv(path: &Path, set: &SampleSet) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["chain".to_string(), "sweep".to_string()];
    header.extend((1..=set.config.n).map(|k| format!("lambda_{k}")));
    w.write_record(&header)?;
    for s in &set.samples {
        let mut rec = vec![s.chain_id.to_string(), s.sweep_index.to_string()];
        rec.extend(s.lambdas.iter().map(|&x| output::fmt_f64(x)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
