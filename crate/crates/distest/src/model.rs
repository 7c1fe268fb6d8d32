//! Distributed sequence-model sampling.
//!
//! Machine `i` observes every coefficient of the truth plus independent
//! Gaussian noise of standard deviation `sqrt(m/n)`: the full sample of size
//! `n` is spread over `m` machines, so each one sees an `n/m`-observation
//! signal-to-noise level. Draws are addressed by `(seed, machine, replicate,
//! role, flat index - 1)`, which makes samples reproducible coefficient by
//! coefficient regardless of evaluation order.
//!
//! [`split`] manufactures two conditionally independent half-samples by
//! adding and subtracting one auxiliary noise copy; each half has noise
//! variance `2m/n` and the halves sum back to twice the observation.

use serde::{Deserialize, Serialize};

use crate::coeff::CoeffSeq;
use crate::error::{Error, Result};
use crate::rng::{RandomStream, StreamRole};

/// Global model geometry: signal-to-noise `n` (a power of two), machine
/// count `m`, ladder depth, and base seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n: u64,
    pub m: usize,
    pub j_max: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(n: u64, m: usize, j_max: usize, seed: u64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidParam(format!(
                "n = {n} must be a power of two, at least 2"
            )));
        }
        if m == 0 || (m as u64) > n {
            return Err(Error::InvalidParam(format!(
                "machine count m = {m} must lie in 1..=n"
            )));
        }
        if j_max > 25 {
            return Err(Error::InvalidParam(format!("ladder depth {j_max} too deep")));
        }
        Ok(ModelConfig { n, m, j_max, seed })
    }

    /// Per-machine noise standard deviation `sqrt(m/n)`.
    pub fn noise_sd(&self) -> f64 {
        (self.m as f64 / self.n as f64).sqrt()
    }

    pub fn log2_n(&self) -> f64 {
        (self.n as f64).log2()
    }
}

/// One machine's observed coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalSample {
    pub machine: usize,
    pub obs: CoeffSeq,
    pub noise_sd: f64,
}

/// Two conditionally independent half-samples of one machine. Each half has
/// noise standard deviation `noise_sd` (`sqrt(2)` times the observation's).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSample {
    pub machine: usize,
    pub half1: CoeffSeq,
    pub half2: CoeffSeq,
    pub noise_sd: f64,
}

/// The stream for a given machine/replicate/role under this config's seed.
pub fn rng_stream(cfg: &ModelConfig, machine: usize, replicate: u64, role: StreamRole) -> RandomStream {
    RandomStream::new(cfg.seed, machine, replicate, role)
}

/// Observes the truth on one machine.
pub fn simulate_machine(
    f0: &CoeffSeq,
    cfg: &ModelConfig,
    replicate: u64,
    machine: usize,
) -> Result<LocalSample> {
    if f0.j_max() != cfg.j_max {
        return Err(Error::ShapeMismatch(format!(
            "truth depth {} vs config depth {}",
            f0.j_max(),
            cfg.j_max
        )));
    }
    if machine >= cfg.m {
        return Err(Error::InvalidParam(format!(
            "machine {machine} outside 0..{}",
            cfg.m
        )));
    }
    let sd = cfg.noise_sd();
    let stream = rng_stream(cfg, machine, replicate, StreamRole::Noise);
    let mut obs = f0.clone();
    for t in 1..=f0.len() {
        let z = stream.normal_at((t - 1) as u64);
        obs.set_flat(t, f0.get_flat(t)? + sd * z)?;
    }
    Ok(LocalSample {
        machine,
        obs,
        noise_sd: sd,
    })
}

/// Observes the truth on all `m` machines, in machine-index order.
pub fn simulate(f0: &CoeffSeq, cfg: &ModelConfig, replicate: u64) -> Result<Vec<LocalSample>> {
    (0..cfg.m)
        .map(|i| simulate_machine(f0, cfg, replicate, i))
        .collect()
}

/// Splits one machine's sample into two half-samples by adding and
/// subtracting an auxiliary noise copy with the observation's own standard
/// deviation. The halves are independent given the truth and reconstruct
/// the observation up to rounding: `half1 + half2 = 2 * obs` coefficientwise.
pub fn split(sample: &LocalSample, cfg: &ModelConfig, replicate: u64) -> Result<SplitSample> {
    let stream = rng_stream(cfg, sample.machine, replicate, StreamRole::Split);
    let mut half1 = sample.obs.clone();
    let mut half2 = sample.obs.clone();
    for t in 1..=sample.obs.len() {
        let z = sample.noise_sd * stream.normal_at((t - 1) as u64);
        let x = sample.obs.get_flat(t)?;
        half1.set_flat(t, x + z)?;
        half2.set_flat(t, x - z)?;
    }
    Ok(SplitSample {
        machine: sample.machine,
        half1,
        half2,
        noise_sd: 2.0f64.sqrt() * sample.noise_sd,
    })
}
