//! On-disk sample cache.
//!
//! A run `(config, chains, samples per chain, seed)` is keyed by a SHA-256
//! hash of its JSON form. Each sample is stored as
//! `{hash}/{chain}_{index}.bin`: the magic `LGSAMP01`, little-endian `u32`
//! N, `f64` β, then N little-endian `f64` eigenvalues.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::stream_id;
use crate::sampler::{run_chains, EnsembleConfig, Method, Sample, SampleSet};

pub const MAGIC: &[u8; 8] = b"LGSAMP01";

/// Hex key of a run.
pub fn run_hash(config: &EnsembleConfig, chains: u32, samples: usize, seed: u64) -> String {
    let key = json!({ "config": config, "chains": chains, "samples": samples, "seed": seed });
    let digest = Sha256::digest(key.to_string().as_bytes());
    hex::encode(&digest[..16])
}

pub fn encode(beta: f64, lambdas: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 8 * lambdas.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(lambdas.len() as u32).to_le_bytes());
    out.extend_from_slice(&beta.to_le_bytes());
    for x in lambdas {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

/// Decodes one sample file, returning `(β, eigenvalues)`.
pub fn decode(bytes: &[u8], path: &Path) -> Result<(f64, Vec<f64>)> {
    let corrupt = |reason: &str| Error::CacheCorrupt {
        path: path.display().to_string(),
        reason: reason.into(),
    };
    if bytes.len() < 20 || &bytes[..8] != MAGIC {
        return Err(corrupt("magic mismatch"));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let beta = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    if bytes.len() != 20 + 8 * n {
        return Err(corrupt("length does not match N"));
    }
    let lambdas = bytes[20..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((beta, lambdas))
}

fn file_name(dir: &Path, chain: u32, index: usize) -> PathBuf {
    dir.join(format!("{chain}_{index}.bin"))
}

fn sweep_index(config: &EnsembleConfig, index: usize) -> u64 {
    match config.method {
        Method::Tridiagonal => index as u64,
        Method::Mala => {
            let p = &config.mcmc;
            p.burn_in_sweeps as u64 + p.thinning_sweeps as u64 * (index as u64 + 1)
        }
    }
}

fn read_run(
    dir: &Path,
    config: &EnsembleConfig,
    chains: u32,
    samples: usize,
    seed: u64,
) -> Result<SampleSet> {
    let mut out = Vec::with_capacity(chains as usize * samples);
    for c in 0..chains {
        for i in 0..samples {
            let path = file_name(dir, c, i);
            let (beta, lambdas) = decode(&fs::read(&path)?, &path)?;
            if beta != config.beta || lambdas.len() != config.n {
                return Err(Error::CacheCorrupt {
                    path: path.display().to_string(),
                    reason: format!(
                        "header (N={}, β={beta}) does not match the run",
                        lambdas.len()
                    ),
                });
            }
            out.push(Sample {
                lambdas,
                seed,
                chain_id: c,
                sweep_index: sweep_index(config, i),
            });
        }
    }
    let rng_stream_ids = match config.method {
        Method::Tridiagonal => out
            .iter()
            .map(|s| stream_id(s.chain_id, s.sweep_index as u32))
            .collect(),
        Method::Mala => (0..chains).map(|c| stream_id(c, u32::MAX)).collect(),
    };
    Ok(SampleSet {
        config: config.clone(),
        samples: out,
        rng_stream_ids,
    })
}

fn write_run(dir: &Path, set: &SampleSet, samples: usize) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut per_chain = std::collections::HashMap::<u32, usize>::new();
    for s in &set.samples {
        let i = per_chain.entry(s.chain_id).or_default();
        fs::write(
            file_name(dir, s.chain_id, *i),
            encode(set.config.beta, &s.lambdas),
        )?;
        *i += 1;
    }
    debug_assert!(per_chain.values().all(|&v| v == samples));
    fs::write(
        dir.join("config.json"),
        serde_json::to_vec_pretty(&set.config).map_err(std::io::Error::other)?,
    )?;
    Ok(())
}

/// Reads a run from `root` if every sample file is present, otherwise
/// samples it and writes it. The flag is `true` on a cache hit.
pub fn load_or_sample(
    root: &Path,
    config: &EnsembleConfig,
    chains: u32,
    samples: usize,
    seed: u64,
) -> Result<(SampleSet, bool)> {
    let dir = root.join(run_hash(config, chains, samples, seed));
    let complete = (0..chains).all(|c| (0..samples).all(|i| file_name(&dir, c, i).is_file()));
    if complete {
        log::info!("cache hit: {}", dir.display());
        return Ok((read_run(&dir, config, chains, samples, seed)?, true));
    }
    log::info!("cache miss: sampling into {}", dir.display());
    let set = run_chains(config, chains, samples, seed)?;
    write_run(&dir, &set, samples)?;
    Ok((set, false))
}
