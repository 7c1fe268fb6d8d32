//! Distributed estimation procedures.
//!
//! Every procedure consumes one [`LocalSample`] per machine, encodes a
//! budget-limited set of coefficients through the bit channel, and
//! aggregates the decoded messages at the centre. Reports carry the
//! reconstructed sequence, exact per-machine bit counts against the
//! procedure's hard cap, and the procedure-specific side information
//! (group count, per-machine smoothness decisions, median count).
//!
//! Non-adaptive procedures assume the regularity; adaptive ones spend half
//! of each machine's sample on a smoothness decision and the other half on
//! transmission.

use serde::{Deserialize, Serialize};

use crate::channel::{decode_value, encode_value, BudgetLedger, EncoderConfig};
use crate::coeff::CoeffSeq;
use crate::error::{Error, Result};
use crate::model::{split, LocalSample, ModelConfig};
use crate::signal::SelfSimSpec;
use crate::smooth::{
    grid_smoothness, mn_alpha, selfsim_smoothness, test_alpha, two_point_smoothness,
    SmoothnessGrid, TestParams,
};

/// Everything a procedure needs besides the samples: the model geometry,
/// the channel encoder, and which replicate's auxiliary streams to use.
#[derive(Clone, Copy, Debug)]
pub struct ProcContext {
    pub model: ModelConfig,
    pub enc: EncoderConfig,
    pub replicate: u64,
}

impl ProcContext {
    /// Standard context: channel quantization at approximation order 1/2,
    /// so one message costs at most `log2(n) + 2` bits.
    pub fn new(model: ModelConfig, replicate: u64) -> Result<Self> {
        Ok(ProcContext {
            model,
            enc: EncoderConfig::new(model.n, 0.5)?,
            replicate,
        })
    }

    pub fn with_encoder(model: ModelConfig, enc: EncoderConfig, replicate: u64) -> Self {
        ProcContext { model, enc, replicate }
    }
}

/// Outcome of one distributed estimation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    /// Centre reconstruction; identically zero beyond the aggregated range.
    pub fhat: CoeffSeq,
    /// Exact framed bits sent by each machine.
    pub bits_per_machine: Vec<u64>,
    /// The procedure's hard per-machine cap those counts respect.
    pub bit_cap: f64,
    /// Messages (coefficients) sent by each machine.
    pub transmitted: Vec<u64>,
    /// Group count for the grouped non-adaptive procedures.
    pub eta: Option<usize>,
    /// Per-machine smoothness decisions, when the procedure makes them.
    pub s_hat_per_machine: Option<Vec<f64>>,
    /// Aggregated smoothness (the decision of the machine realizing the
    /// median count).
    pub s_hat: Option<f64>,
    /// Median transmitted count; coefficients beyond it are zero.
    pub n_tilde: Option<u64>,
    /// Contributor-set sizes `|M_t|` for flat indices `t <= n_tilde`.
    pub contributors: Option<Vec<usize>>,
    /// Truncation level selected by the centre, when one is.
    pub truncation_level: Option<usize>,
    /// Non-fatal regime flags.
    pub warnings: Vec<String>,
}

impl EstimateReport {
    fn bare(fhat: CoeffSeq, ledger: &BudgetLedger, transmitted: Vec<u64>) -> Self {
        EstimateReport {
            fhat,
            bits_per_machine: ledger.per_machine().to_vec(),
            bit_cap: ledger.cap().unwrap_or(f64::INFINITY),
            transmitted,
            eta: None,
            s_hat_per_machine: None,
            s_hat: None,
            n_tilde: None,
            contributors: None,
            truncation_level: None,
            warnings: Vec::new(),
        }
    }
}

/// `floor(base^(1/(1+2s)))`, computed through base-2 logarithms so powers
/// of two with divisible exponents floor exactly (e.g. `4096^(1/3) = 16`).
pub fn count_for(base: f64, s: f64) -> u64 {
    (base.log2() / (1.0 + 2.0 * s)).exp2().floor() as u64
}

/// Lower median: the `ceil(m/2)`-th ascending order statistic, so at least
/// `ceil(m/2)` machines have a count at least this large.
pub fn median_count(counts: &[u64]) -> Result<u64> {
    if counts.is_empty() {
        return Err(Error::InvalidParam("median of no counts".into()));
    }
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    Ok(sorted[counts.len().div_ceil(2) - 1])
}

/// 1-based group of 1-based machine `i` among `eta` groups: `ceil(i eta / m)`.
fn group_of(i: usize, m: usize, eta: usize) -> usize {
    (i * eta).div_ceil(m)
}

/// Flat-index range owned by 1-based group `l`: `((l-1) w, min(l w, cap)]`.
fn owned_range(l: usize, w: u64, cap: u64) -> (u64, u64) {
    let lo = (l as u64 - 1) * w;
    let hi = (l as u64 * w).min(cap);
    (lo, hi.max(lo))
}

fn validate_samples(samples: &[LocalSample], ctx: &ProcContext) -> Result<()> {
    if samples.len() != ctx.model.m {
        return Err(Error::ShapeMismatch(format!(
            "{} samples for m = {}",
            samples.len(),
            ctx.model.m
        )));
    }
    for (i, s) in samples.iter().enumerate() {
        if s.machine != i {
            return Err(Error::ShapeMismatch(format!(
                "sample {i} labelled machine {}",
                s.machine
            )));
        }
        if s.obs.j_max() != ctx.model.j_max {
            return Err(Error::ShapeMismatch(format!(
                "machine {i} ladder depth {} vs model {}",
                s.obs.j_max(),
                ctx.model.j_max
            )));
        }
    }
    Ok(())
}

/// Shared non-adaptive core: machines are split into `eta` groups, group
/// `l` transmits the flat indices it owns, the centre averages per group.
fn grouped_transmit(
    samples: &[LocalSample],
    eta: usize,
    t_cap: u64,
    w: u64,
    ctx: &ProcContext,
) -> Result<(CoeffSeq, BudgetLedger, Vec<u64>)> {
    let m = ctx.model.m;
    let cap_bits = w as f64 * ctx.enc.max_message_bits() as f64;
    let mut ledger = BudgetLedger::new(m, Some(cap_bits));
    let mut fhat = CoeffSeq::zeros(ctx.model.j_max);
    let mut transmitted = vec![0u64; m];
    if t_cap as usize > fhat.len() {
        return Err(Error::InvalidParam(format!(
            "transmitted range {t_cap} exceeds ladder size {}; raise j_max",
            fhat.len()
        )));
    }
    // sums[t - 1] accumulates decoded values for flat index t in ascending
    // machine order; counts tracks the group size actually contributing.
    let mut sums = vec![0.0f64; t_cap as usize];
    let mut counts = vec![0u32; t_cap as usize];
    for (i, sample) in samples.iter().enumerate() {
        let (lo, hi) = owned_range(group_of(i + 1, m, eta), w, t_cap);
        for t in lo + 1..=hi {
            let msg = encode_value(sample.obs.get_flat(t as usize)?, &ctx.enc)?;
            ledger.record(i, &msg)?;
            transmitted[i] += 1;
            sums[t as usize - 1] += decode_value(&msg, &ctx.enc)?;
            counts[t as usize - 1] += 1;
        }
    }
    for t in 1..=t_cap as usize {
        if counts[t - 1] > 0 {
            fhat.set_flat(t, sums[t - 1] / f64::from(counts[t - 1]))?;
        }
    }
    Ok((fhat, ledger, transmitted))
}

/// Non-adaptive distributed estimator for squared-error risk at known
/// regularity `s` and radius `radius`, with `budget` bits per machine.
///
/// Machines are grouped so that together the groups cover the first
/// `min(eta * floor(B/log2 n), floor(n^(1/(1+2s))))` coefficients, each
/// machine sending at most `floor(B/log2 n)` messages.
pub fn nonadaptive_l2(
    samples: &[LocalSample],
    s: f64,
    radius: f64,
    budget: f64,
    ctx: &ProcContext,
) -> Result<EstimateReport> {
    validate_samples(samples, ctx)?;
    if !(s > 0.0 && s.is_finite()) || !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "need positive s and radius, got s = {s}, radius = {radius}"
        )));
    }
    let nf = ctx.model.n as f64;
    let log2n = ctx.model.log2_n();
    let w = (budget / log2n).floor() as u64;
    if w == 0 {
        return Err(Error::InsufficientBudget { budget, need: log2n });
    }
    let m = ctx.model.m;
    let full = (nf.log2() / (1.0 + 2.0 * s)).exp2();
    let eta_raw = ((full * log2n / budget).powf((1.0 + 2.0 * s) / (2.0 + 2.0 * s))).floor();
    let eta = (eta_raw as usize).max(1).min(m);
    let t_cap = (eta as u64 * w).min(count_for(nf, s));
    let (fhat, ledger, transmitted) = grouped_transmit(samples, eta, t_cap, w, ctx)?;
    let mut report = EstimateReport::bare(fhat, &ledger, transmitted);
    report.eta = Some(eta);
    Ok(report)
}

/// Non-adaptive distributed estimator for sup-norm risk at known
/// regularity: the sup-norm group count and the `(n/log2 n)^(1/(1+2s))`
/// index cap, otherwise the same grouped transmission.
pub fn nonadaptive_linf(
    samples: &[LocalSample],
    s: f64,
    radius: f64,
    budget: f64,
    ctx: &ProcContext,
) -> Result<EstimateReport> {
    validate_samples(samples, ctx)?;
    if !(s > 0.0 && s.is_finite()) || !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "need positive s and radius, got s = {s}, radius = {radius}"
        )));
    }
    let nf = ctx.model.n as f64;
    let log2n = ctx.model.log2_n();
    let w = (budget / log2n).floor() as u64;
    if w == 0 {
        return Err(Error::InsufficientBudget { budget, need: log2n });
    }
    let m = ctx.model.m;
    let eta_raw = (radius * radius * nf * log2n.powf(2.0 * s) / budget.powf(1.0 + 2.0 * s))
        .powf(1.0 / (2.0 + 2.0 * s))
        .floor();
    let eta = ((eta_raw as usize).min(m)).max(1);
    let t_cap = (eta as u64 * w).min(count_for(nf / log2n, s));
    let (fhat, ledger, transmitted) = grouped_transmit(samples, eta, t_cap, w, ctx)?;
    let mut report = EstimateReport::bare(fhat, &ledger, transmitted);
    report.eta = Some(eta);
    Ok(report)
}

/// Baseline adaptive estimator for a known lower regularity `s0`: every
/// machine transmits the first `floor(n^(1/(1+2s0)))` coefficients, the
/// centre averages them all and picks a truncation level by comparing
/// nested tail energies against `kappa * 2^j / n`.
///
/// `s_max` only names the upper end of the regularity range the baseline
/// is claimed for; the level search does not depend on it.
pub fn global_adaptive_s0(
    samples: &[LocalSample],
    s0: f64,
    s_max: f64,
    kappa: f64,
    ctx: &ProcContext,
) -> Result<EstimateReport> {
    validate_samples(samples, ctx)?;
    if !(s0 > 0.0 && s0 < s_max && s_max.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "need 0 < s0 < s_max, got s0 = {s0}, s_max = {s_max}"
        )));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParam(format!("kappa = {kappa} must be positive")));
    }
    let nf = ctx.model.n as f64;
    let n0 = count_for(nf, s0).max(1);
    let mut fbar = CoeffSeq::zeros(ctx.model.j_max);
    if n0 as usize > fbar.len() {
        return Err(Error::InvalidParam(format!(
            "transmitted range {n0} exceeds ladder size {}; raise j_max",
            fbar.len()
        )));
    }
    let m = ctx.model.m;
    let cap_bits = n0 as f64 * ctx.enc.max_message_bits() as f64;
    let mut ledger = BudgetLedger::new(m, Some(cap_bits));
    for (i, sample) in samples.iter().enumerate() {
        for t in 1..=n0 as usize {
            let msg = encode_value(sample.obs.get_flat(t)?, &ctx.enc)?;
            ledger.record(i, &msg)?;
            let prev = fbar.get_flat(t)?;
            fbar.set_flat(t, prev + decode_value(&msg, &ctx.enc)?)?;
        }
    }
    for t in 1..=n0 as usize {
        let v = fbar.get_flat(t)?;
        fbar.set_flat(t, v / m as f64)?;
    }

    // Level search: keep(j) = min(2^(j+1), n0) flat indices; j_hat is the
    // smallest j whose tail against every deeper j' stays below the bound.
    let top = (n0 as f64).log2().floor() as usize;
    let keep = |j: usize| -> usize { (1u64 << (j + 1)).min(n0) as usize };
    let mut j_hat = top;
    'outer: for j in 0..top {
        for j2 in j + 1..=top {
            let mut tail = 0.0;
            for t in keep(j) + 1..=keep(j2) {
                let v = fbar.get_flat(t)?;
                tail += v * v;
            }
            if tail > kappa * (j2 as f64).exp2() / nf {
                continue 'outer;
            }
        }
        j_hat = j;
        break;
    }
    let mut fhat = fbar;
    fhat.truncate_flat(keep(j_hat));
    let mut report = EstimateReport::bare(fhat, &ledger, vec![n0; m]);
    report.truncation_level = Some(j_hat);
    Ok(report)
}

/// Median aggregation shared by the adaptive procedures: machine `i`
/// transmits the first `counts[i]` coefficients of its second half-sample;
/// the centre keeps the lower-median count and averages contributors.
fn transmit_and_aggregate(
    samples: &[LocalSample],
    counts: &[u64],
    cap_bits: f64,
    ctx: &ProcContext,
) -> Result<(CoeffSeq, BudgetLedger, u64, Vec<usize>)> {
    let m = ctx.model.m;
    let mut ledger = BudgetLedger::new(m, Some(cap_bits));
    let mut fhat = CoeffSeq::zeros(ctx.model.j_max);
    let n_tilde = median_count(counts)?;
    if n_tilde as usize > fhat.len() {
        return Err(Error::InvalidParam(format!(
            "median count {n_tilde} exceeds ladder size {}; raise j_max",
            fhat.len()
        )));
    }
    let mut sums = vec![0.0f64; n_tilde as usize];
    let mut sizes = vec![0usize; n_tilde as usize];
    for (i, sample) in samples.iter().enumerate() {
        let halves = split(sample, &ctx.model, ctx.replicate)?;
        for t in 1..=counts[i] {
            let msg = encode_value(halves.half2.get_flat(t as usize)?, &ctx.enc)?;
            ledger.record(i, &msg)?;
            if t <= n_tilde {
                sums[t as usize - 1] += decode_value(&msg, &ctx.enc)?;
                sizes[t as usize - 1] += 1;
            }
        }
    }
    for t in 1..=n_tilde as usize {
        if sizes[t - 1] == 0 {
            return Err(Error::Malformed(format!(
                "no contributor for flat index {t} at or below the median count"
            )));
        }
        fhat.set_flat(t, sums[t - 1] / sizes[t - 1] as f64)?;
    }
    Ok((fhat, ledger, n_tilde, sizes))
}

/// The aggregated smoothness decision: the one made by a machine realizing
/// the median count (ties broken toward the lowest machine index).
fn median_s_hat(counts: &[u64], s_hats: &[f64], n_tilde: u64) -> f64 {
    let i = counts
        .iter()
        .position(|c| *c == n_tilde)
        .expect("median is one of the counts");
    s_hats[i]
}

fn regime_warnings(n: u64, p: f64, s_upper: f64, warnings: &mut Vec<String>) {
    if mn_alpha(n, p, s_upper).is_err() {
        warnings.push(format!(
            "outside the calibrated regime: smoothness range reaches {s_upper} \
             but budgets n^{p} only calibrate up to {}",
            1.0 / (4.0 * p) - 0.5
        ));
    }
}

fn adaptive_core(
    samples: &[LocalSample],
    s_hats: Vec<f64>,
    full_counts: &[u64],
    cap_count: u64,
    ctx: &ProcContext,
) -> Result<EstimateReport> {
    let cap_bits = cap_count as f64 * ctx.enc.max_message_bits() as f64;
    let (fhat, ledger, n_tilde, sizes) =
        transmit_and_aggregate(samples, full_counts, cap_bits, ctx)?;
    let s_hat = median_s_hat(full_counts, &s_hats, n_tilde);
    let mut report = EstimateReport::bare(fhat, &ledger, full_counts.to_vec());
    report.s_hat_per_machine = Some(s_hats);
    report.s_hat = Some(s_hat);
    report.n_tilde = Some(n_tilde);
    report.contributors = Some(sizes);
    Ok(report)
}

/// Two-point adaptive procedure: each machine tests its first half-sample
/// for regularity `s2` against separated `s1` alternatives at the level
/// calibrated for budgets growing like `n^p`, then transmits the first
/// `floor(n^(1/(1+2s_hat)))` coefficients of its second half-sample.
pub fn adaptive_l2_twopoint(
    samples: &[LocalSample],
    s1: f64,
    s2: f64,
    radius: f64,
    p: f64,
    ctx: &ProcContext,
) -> Result<EstimateReport> {
    validate_samples(samples, ctx)?;
    if ctx.model.m < 2 {
        return Err(Error::InvalidParam(
            "two-point procedure needs at least 2 machines".into(),
        ));
    }
    let n = ctx.model.n;
    let m = ctx.model.m;
    let params = TestParams::new(s1, s2, radius, test_alpha(n, p, s1), n, m)?;
    let nf = n as f64;
    let mut s_hats = Vec::with_capacity(m);
    let mut counts = Vec::with_capacity(m);
    for sample in samples {
        let halves = split(sample, &ctx.model, ctx.replicate)?;
        let s_hat = two_point_smoothness(&halves.half1, &params)?;
        s_hats.push(s_hat);
        counts.push(count_for(nf, s_hat).max(1));
    }
    let mut report = adaptive_core(samples, s_hats, &counts, count_for(nf, s1).max(1), ctx)?;
    regime_warnings(n, p, s2, &mut report.warnings);
    Ok(report)
}

/// Grid adaptive procedure on an explicit candidate set: like
/// [`adaptive_l2_twopoint`] but each machine picks the largest surviving
/// candidate of `grid`. On a two-point grid this reduces to the two-point
/// procedure bit for bit.
pub fn adaptive_l2_grid_with(
    samples: &[LocalSample],
    grid: &SmoothnessGrid,
    radius: f64,
    p: f64,
    ctx: &ProcContext,
) -> Result<EstimateReport> {
    validate_samples(samples, ctx)?;
    if ctx.model.m < 2 {
        return Err(Error::InvalidParam(
            "grid procedure needs at least 2 machines".into(),
        ));
    }
    let n = ctx.model.n;
    let m = ctx.model.m;
    let nf = n as f64;
    let mut s_hats = Vec::with_capacity(m);
    let mut counts = Vec::with_capacity(m);
    for sample in samples {
        let halves = split(sample, &ctx.model, ctx.replicate)?;
        let s_hat = grid_smoothness(&halves.half1, grid, radius, n, m, p)?;
        s_hats.push(s_hat);
        counts.push(count_for(nf, s_hat).max(1));
    }
    let cap_count = count_for(nf, grid.min_s()).max(1);
    let mut report = adaptive_core(samples, s_hats, &counts, cap_count, ctx)?;
    regime_warnings(n, p, grid.max_s(), &mut report.warnings);
    Ok(report)
}

/// Grid adaptive procedure over the standard `1/log2(n)` mesh on `[s1, s2]`.
pub fn adaptive_l2_grid(
    samples: &[LocalSample],
    s1: f64,
    s2: f64,
    radius: f64,
    p: f64,
    ctx: &ProcContext,
) -> Result<EstimateReport> {
    let grid = SmoothnessGrid::new(s1, s2, ctx.model.n)?;
    adaptive_l2_grid_with(samples, &grid, radius, p, ctx)
}

/// Sup-norm adaptive procedure for self-similar signals: each machine reads
/// its smoothness from block maxima of the first half-sample, transmits the
/// first `floor((n/log2 n)^(1/(1+2s_hat)))` coefficients of the second, and
/// the centre aggregates by median count.
pub fn adaptive_linf_selfsim(
    samples: &[LocalSample],
    spec: &SelfSimSpec,
    grid: &SmoothnessGrid,
    ctx: &ProcContext,
) -> Result<EstimateReport> {
    validate_samples(samples, ctx)?;
    let n = ctx.model.n;
    let m = ctx.model.m;
    let base = n as f64 / ctx.model.log2_n();
    let mut s_hats = Vec::with_capacity(m);
    let mut counts = Vec::with_capacity(m);
    for sample in samples {
        let halves = split(sample, &ctx.model, ctx.replicate)?;
        let s_hat = selfsim_smoothness(&halves.half1, spec, grid, n, m)?;
        s_hats.push(s_hat);
        counts.push(count_for(base, s_hat).max(1));
    }
    let cap_count = count_for(base, grid.min_s()).max(1);
    adaptive_core(samples, s_hats, &counts, cap_count, ctx)
}
