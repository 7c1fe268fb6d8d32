//! Monte Carlo experiment runner: risk estimation with bit accounting,
//! rate-exponent fitting, and the hard-instance indistinguishability
//! experiment, plus CSV/JSON report emission.
//!
//! Replicates run in parallel but reports are assembled in grid/replicate
//! order from counter-indexed streams, so a report is byte-identical for a
//! given seed no matter how many worker threads execute it.

use std::collections::BTreeSet;
use std::f64::consts::LN_2;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::EncoderConfig;
use crate::coeff::CoeffSeq;
use crate::error::{Error, Result};
use crate::estimators::{
    adaptive_l2_grid, adaptive_l2_twopoint, adaptive_linf_selfsim, global_adaptive_s0,
    nonadaptive_l2, nonadaptive_linf, EstimateReport, ProcContext,
};
use crate::model::{simulate, ModelConfig};
use crate::rng::{RandomStream, StreamRole, SIGNAL_MACHINE};
use crate::signal::{
    delta_tilde, gen_besov_random, gen_hard_l2, gen_hard_linf, gen_self_similar,
    gen_separated_alt, hard_level, solve_delta_n, BesovKind, BesovSpec, SelfSimSpec,
};
use crate::smooth::{run_test, separation_radius, test_alpha, SmoothnessGrid, TestParams};

/// Bumped whenever a report field changes meaning or order.
pub const SCHEMA_VERSION: u32 = 1;

/// Which loss the harness measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiskNorm {
    /// Squared sequence norm (squared-error risk).
    #[serde(rename = "l2sq")]
    L2Sq,
    /// Sup-norm of the reconstructed function.
    #[serde(rename = "linf")]
    Linf,
}

/// How the machine count follows the grid: fixed, or `m = round(n^p)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum MachineRule {
    Fixed { m: usize },
    Power { p: f64 },
}

impl MachineRule {
    pub fn resolve(&self, n: u64) -> usize {
        match *self {
            MachineRule::Fixed { m } => m,
            MachineRule::Power { p } => ((n as f64).powf(p).round() as usize).max(1),
        }
    }
}

/// Per-machine bit budget as a function of `n`:
/// `scale * n^n_exponent * (log2 n)^log2_exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetRule {
    pub scale: f64,
    pub n_exponent: f64,
    pub log2_exponent: f64,
}

impl BudgetRule {
    pub fn resolve(&self, n: u64) -> f64 {
        let nf = n as f64;
        self.scale * nf.powf(self.n_exponent) * nf.log2().powf(self.log2_exponent)
    }
}

/// Truth generator, drawn fresh per replicate from the signal stream when
/// random.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SignalSpec {
    Zero,
    /// Random coefficients filling a Besov ball to `fill` of its radius.
    BesovRandom { s: f64, radius: f64, ball: BesovKind, fill: f64 },
    /// Worst-case squared-error instance at the budget-matched scale.
    HardL2 { s: f64, radius: f64 },
    /// Worst-case sup-norm instance (single coefficient).
    HardLinf { s: f64, radius: f64, position: Option<usize> },
    /// Self-similar truth with per-level anchor coefficients.
    SelfSimilar { s: f64, radius: f64, eps: f64, j0: usize, rho: usize },
    /// Alternative at the calibrated separation from the smooth ball.
    Separated { s1: f64, s2: f64, radius: f64, p: f64, level: usize },
    /// A fixed coefficient sequence used verbatim each replicate.
    Fixed { coeffs: CoeffSeq },
}

/// Which procedure the experiment drives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum MethodSpec {
    NonadaptiveL2 { s: f64, radius: f64 },
    NonadaptiveLinf { s: f64, radius: f64 },
    GlobalAdaptive { s0: f64, s_max: f64, kappa: f64 },
    AdaptiveTwopoint { s1: f64, s2: f64, radius: f64, p: f64 },
    AdaptiveGrid { s1: f64, s2: f64, radius: f64, p: f64 },
    AdaptiveSelfsim {
        s: f64,
        radius: f64,
        eps: f64,
        j0: usize,
        rho: usize,
        grid_min: f64,
        grid_max: f64,
    },
}

impl MethodSpec {
    pub fn id(&self) -> &'static str {
        match self {
            MethodSpec::NonadaptiveL2 { .. } => "nonadaptive-l2",
            MethodSpec::NonadaptiveLinf { .. } => "nonadaptive-linf",
            MethodSpec::GlobalAdaptive { .. } => "global-adaptive",
            MethodSpec::AdaptiveTwopoint { .. } => "adaptive-twopoint",
            MethodSpec::AdaptiveGrid { .. } => "adaptive-grid",
            MethodSpec::AdaptiveSelfsim { .. } => "adaptive-selfsim",
        }
    }

    fn needs_budget(&self) -> bool {
        matches!(
            self,
            MethodSpec::NonadaptiveL2 { .. } | MethodSpec::NonadaptiveLinf { .. }
        )
    }
}

fn default_approx_order() -> f64 {
    0.5
}

/// One full experiment: a method, a truth, and the grids to sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub method: MethodSpec,
    pub signal: SignalSpec,
    pub machines: MachineRule,
    /// Per-machine budget rule; required by the non-adaptive methods and by
    /// hard-instance signals, ignored otherwise.
    #[serde(default)]
    pub budget: Option<BudgetRule>,
    pub norm: RiskNorm,
    pub n_grid: Vec<u64>,
    pub j_max: usize,
    pub reps: u64,
    pub seed: u64,
    /// Channel approximation order (quantization fineness exponent).
    #[serde(default = "default_approx_order")]
    pub approx_order: f64,
    /// Optional output path used by the CLI.
    #[serde(default)]
    pub out: Option<String>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidParam("reps must be at least 1".into()));
        }
        if self.n_grid.is_empty() {
            return Err(Error::InvalidParam("empty n grid".into()));
        }
        for &n in &self.n_grid {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::InvalidParam(format!(
                    "grid point n = {n} is not a power of two at least 2"
                )));
            }
        }
        if self.method.needs_budget() && self.budget.is_none() {
            return Err(Error::InvalidParam(format!(
                "method {} needs a budget rule",
                self.method.id()
            )));
        }
        if matches!(
            self.signal,
            SignalSpec::HardL2 { .. } | SignalSpec::HardLinf { .. }
        ) && self.budget.is_none()
        {
            return Err(Error::InvalidParam(
                "hard-instance signals need a budget rule".into(),
            ));
        }
        Ok(())
    }
}

/// One grid point of a risk experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub n: u64,
    pub m: usize,
    /// Monte Carlo mean risk over the replicates.
    pub risk: f64,
    /// Sample standard deviation of the risk divided by sqrt(reps).
    pub risk_se: f64,
    /// Mean transmitted bits per machine (over replicates and machines).
    pub bits_mean: f64,
    /// Largest per-machine bit count observed.
    pub bits_max: u64,
}

/// Assembled experiment output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub schema_version: u32,
    pub method: String,
    pub norm: RiskNorm,
    pub rows: Vec<RiskRow>,
    /// Least-squares slope of log2(risk) against log2(n), when the grid has
    /// at least three points with positive mean risk.
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
    pub warnings: Vec<String>,
}

/// Draws the replicate's truth from the signal stream keyed by `seed`.
/// Hard-instance rules need the per-machine `budget` to locate their level.
pub fn generate_signal(
    signal: &SignalSpec,
    n: u64,
    m: usize,
    j_max: usize,
    seed: u64,
    budget: Option<f64>,
    rep: u64,
) -> Result<CoeffSeq> {
    let mut rng = RandomStream::new(seed, SIGNAL_MACHINE, rep, StreamRole::Signal);
    match signal {
        SignalSpec::Zero => Ok(CoeffSeq::zeros(j_max)),
        SignalSpec::BesovRandom { s, radius, ball, fill } => {
            let bspec = BesovSpec::new(*s, *radius, *ball)?;
            gen_besov_random(&bspec, *fill, j_max, &mut rng)
        }
        SignalSpec::HardL2 { s, radius } => {
            let b = budget.ok_or_else(|| {
                Error::InvalidParam("hard-instance signal needs a budget rule".into())
            })?;
            gen_hard_l2(*s, *radius, n, m, &vec![b; m], j_max, &mut rng)
        }
        SignalSpec::HardLinf { s, radius, position } => {
            let b = budget.ok_or_else(|| {
                Error::InvalidParam("hard-instance signal needs a budget rule".into())
            })?;
            gen_hard_linf(*s, *radius, n, m, &vec![b; m], j_max, *position, &mut rng)
        }
        SignalSpec::SelfSimilar { s, radius, eps, j0, rho } => {
            let sspec = SelfSimSpec::new(*s, *radius, *eps, *j0, *rho)?;
            gen_self_similar(&sspec, j_max, &mut rng)
        }
        SignalSpec::Separated { s1, s2, radius, p, level } => {
            let r = separation_radius(test_alpha(n, *p, *s1), *s1, *radius, n, m);
            gen_separated_alt(*s2, *radius, r, *level, j_max, &mut rng)
        }
        SignalSpec::Fixed { coeffs } => {
            if coeffs.j_max() != j_max {
                return Err(Error::ShapeMismatch(format!(
                    "fixed signal depth {} vs experiment j_max {}",
                    coeffs.j_max(),
                    j_max
                )));
            }
            Ok(coeffs.clone())
        }
    }
}

/// Runs the procedure a method spec names. Non-adaptive methods consume
/// the resolved `budget`; the others ignore it.
pub fn run_method(
    method: &MethodSpec,
    samples: &[crate::model::LocalSample],
    budget: Option<f64>,
    ctx: &ProcContext,
) -> Result<EstimateReport> {
    match method {
        MethodSpec::NonadaptiveL2 { s, radius } => {
            let b = budget
                .ok_or_else(|| Error::InvalidParam("nonadaptive-l2 needs a budget".into()))?;
            nonadaptive_l2(samples, *s, *radius, b, ctx)
        }
        MethodSpec::NonadaptiveLinf { s, radius } => {
            let b = budget
                .ok_or_else(|| Error::InvalidParam("nonadaptive-linf needs a budget".into()))?;
            nonadaptive_linf(samples, *s, *radius, b, ctx)
        }
        MethodSpec::GlobalAdaptive { s0, s_max, kappa } => {
            global_adaptive_s0(samples, *s0, *s_max, *kappa, ctx)
        }
        MethodSpec::AdaptiveTwopoint { s1, s2, radius, p } => {
            adaptive_l2_twopoint(samples, *s1, *s2, *radius, *p, ctx)
        }
        MethodSpec::AdaptiveGrid { s1, s2, radius, p } => {
            adaptive_l2_grid(samples, *s1, *s2, *radius, *p, ctx)
        }
        MethodSpec::AdaptiveSelfsim { s, radius, eps, j0, rho, grid_min, grid_max } => {
            let sspec = SelfSimSpec::new(*s, *radius, *eps, *j0, *rho)?;
            let grid = SmoothnessGrid::new(*grid_min, *grid_max, ctx.model.n)?;
            adaptive_linf_selfsim(samples, &sspec, &grid, ctx)
        }
    }
}

/// Sup-norm distance between reconstructions, via the Haar expansion.
fn sup_dist(a: &CoeffSeq, b: &CoeffSeq) -> Result<f64> {
    if a.j_max() != b.j_max() {
        return Err(Error::ShapeMismatch("sup distance across depths".into()));
    }
    let mut diff = CoeffSeq::zeros(a.j_max());
    for t in 1..=a.len() {
        diff.set_flat(t, a.get_flat(t)? - b.get_flat(t)?)?;
    }
    Ok(diff.haar_sup_norm())
}

struct RepOutcome {
    risk: f64,
    bits_sum: u64,
    bits_max: u64,
    warnings: Vec<String>,
}

fn run_one(spec: &ExperimentSpec, cfg: &ModelConfig, budget: Option<f64>, rep: u64) -> Result<RepOutcome> {
    let f0 = generate_signal(&spec.signal, cfg.n, cfg.m, spec.j_max, spec.seed, budget, rep)?;
    let samples = simulate(&f0, cfg, rep)?;
    let enc = EncoderConfig::new(cfg.n, spec.approx_order)?;
    let ctx = ProcContext::with_encoder(*cfg, enc, rep);
    let report = run_method(&spec.method, &samples, budget, &ctx)?;
    let risk = match spec.norm {
        RiskNorm::L2Sq => report.fhat.l2_dist_sq(&f0)?,
        RiskNorm::Linf => sup_dist(&report.fhat, &f0)?,
    };
    Ok(RepOutcome {
        risk,
        bits_sum: report.bits_per_machine.iter().sum(),
        bits_max: report.bits_per_machine.iter().copied().max().unwrap_or(0),
        warnings: report.warnings,
    })
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len();
    let mean = xs.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

/// Runs the full grid, averaging risks and bit counts over replicates.
///
/// Replicate `r` of grid point `gi` uses replicate id `gi * reps + r`, so
/// every stream in the experiment is distinct and restart-free.
pub fn run_risk(spec: &ExperimentSpec) -> Result<RiskReport> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.n_grid.len());
    let mut warnings = BTreeSet::new();
    for (gi, &n) in spec.n_grid.iter().enumerate() {
        let m = spec.machines.resolve(n);
        let cfg = ModelConfig::new(n, m, spec.j_max, spec.seed)?;
        let budget = spec.budget.as_ref().map(|b| b.resolve(n));
        let outcomes: Vec<RepOutcome> = (0..spec.reps)
            .into_par_iter()
            .map(|r| run_one(spec, &cfg, budget, gi as u64 * spec.reps + r))
            .collect::<Result<_>>()?;
        let risks: Vec<f64> = outcomes.iter().map(|o| o.risk).collect();
        let (risk, risk_se) = mean_and_se(&risks);
        let bits_total: u64 = outcomes.iter().map(|o| o.bits_sum).sum();
        let bits_max = outcomes.iter().map(|o| o.bits_max).max().unwrap_or(0);
        for o in &outcomes {
            warnings.extend(o.warnings.iter().cloned());
        }
        rows.push(RiskRow {
            n,
            m,
            risk,
            risk_se,
            bits_mean: bits_total as f64 / (spec.reps as f64 * m as f64),
            bits_max,
        });
    }
    let mut warnings: Vec<String> = warnings.into_iter().collect();
    let (slope, slope_se) = if rows.len() >= 3 {
        match fit_rate(&rows) {
            Ok((b, se)) => (Some(b), Some(se)),
            Err(e) => {
                warnings.push(format!("rate fit skipped: {e}"));
                (None, None)
            }
        }
    } else {
        (None, None)
    };
    Ok(RiskReport {
        schema_version: SCHEMA_VERSION,
        method: spec.method.id().to_string(),
        norm: spec.norm,
        rows,
        slope,
        slope_se,
        warnings,
    })
}

/// Ordinary least squares of `ys` on `xs`; returns the slope and its
/// standard error (zero when the fit is exact).
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let k = xs.len();
    if k != ys.len() {
        return Err(Error::ShapeMismatch(format!("{k} xs vs {} ys", ys.len())));
    }
    if k < 3 {
        return Err(Error::NotEnoughPoints(k));
    }
    if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression input".into()));
    }
    let xm = xs.iter().sum::<f64>() / k as f64;
    let ym = ys.iter().sum::<f64>() / k as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidParam("degenerate grid: all n equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let se = if k > 2 {
        (rss.max(0.0) / (k - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, se))
}

/// Rate exponent: OLS slope of `log2(risk)` against `log2(n)`.
pub fn fit_rate(rows: &[RiskRow]) -> Result<(f64, f64)> {
    let mut xs = Vec::with_capacity(rows.len());
    let mut ys = Vec::with_capacity(rows.len());
    for row in rows {
        if row.risk.is_nan() || row.risk <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "nonpositive risk {} at n = {} cannot be log-fitted",
                row.risk, row.n
            )));
        }
        xs.push((row.n as f64).log2());
        ys.push(row.risk.log2());
    }
    ols_slope(&xs, &ys)
}

/// Numerically stable `ln cosh t`.
fn ln_cosh(t: f64) -> f64 {
    let a = t.abs();
    a - LN_2 + (-2.0 * a).exp().ln_1p()
}

/// Log of the sign-averaged likelihood ratio at one machine: the product
/// over support coordinates of `exp(-mass n / 2m) cosh(x_k sqrt(mass) n/m)`
/// computed in the log domain.
pub fn log_likelihood_ratio(x: &[f64], mass: f64, n: u64, m: usize) -> f64 {
    let scale = n as f64 / m as f64;
    let root = mass.sqrt() * scale;
    x.iter().map(|&xk| ln_cosh(xk * root) - 0.5 * mass * scale).sum()
}

/// Brute-force counterpart of [`log_likelihood_ratio`]: log-sum-exp over
/// all `2^d` sign vectors of the exact Gaussian likelihood ratio. Feasible
/// for small supports only.
pub fn enumerated_log_ratio(x: &[f64], mass: f64, n: u64, m: usize) -> Result<f64> {
    let d = x.len();
    if d == 0 || d > 20 {
        return Err(Error::InvalidParam(format!(
            "enumeration needs 1..=20 support coordinates, got {d}"
        )));
    }
    let scale = n as f64 / m as f64;
    let amp = mass.sqrt();
    let mut terms = Vec::with_capacity(1usize << d);
    for signs in 0u64..(1u64 << d) {
        let mut log_ratio = 0.0;
        for (k, &xk) in x.iter().enumerate() {
            let fk = if signs >> k & 1 == 1 { amp } else { -amp };
            log_ratio += (xk * fk - 0.5 * fk * fk) * scale;
        }
        terms.push(log_ratio);
    }
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    Ok(max + sum.ln() - d as f64 * LN_2)
}

/// Outcome of the hard-instance indistinguishability experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndisReport {
    pub schema_version: u32,
    pub n: u64,
    pub m: usize,
    pub s1: f64,
    pub s2: f64,
    pub budget: f64,
    /// Fixed point of the budget-matched rate equation.
    pub delta: f64,
    /// The fixed point capped at the single-machine noise scale `m/n`.
    pub delta_tilde: f64,
    /// Level of the hard class; its support has `2^level` coefficients.
    pub level: usize,
    /// Frequency of rejecting the zero signal (type I error).
    pub type1: f64,
    /// Frequency of keeping a randomly signed hard truth (type II error).
    pub type2: f64,
    pub total_error: f64,
}

/// Runs the exact likelihood-ratio test `1{Z > 1}` at one machine's noise
/// level against the randomly signed hard class, and reports both error
/// frequencies. A total error near 1 means the machine's data cannot tell
/// the hard class from zero.
pub fn run_indistinguishability(
    n: u64,
    machines: MachineRule,
    s1: f64,
    s2: f64,
    budget_per_machine: f64,
    reps: u64,
    seed: u64,
) -> Result<IndisReport> {
    if reps == 0 {
        return Err(Error::InvalidParam("reps must be at least 1".into()));
    }
    let m = machines.resolve(n);
    if m > n as usize {
        return Err(Error::InvalidParam(format!("m = {m} exceeds n = {n}")));
    }
    let budgets = vec![budget_per_machine; m];
    let delta = solve_delta_n(n, m, &budgets, s1)?;
    let dt = delta_tilde(n, m, &budgets, s1)?;
    let level = hard_level(delta, s1);
    if level > 25 {
        return Err(Error::InvalidParam(format!(
            "hard level {level} has an infeasible support size"
        )));
    }
    let d = 1usize << level;
    let sd = (m as f64 / n as f64).sqrt();
    let amp = dt.sqrt();
    let outcomes: Vec<(bool, bool)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            // Machine 0 observes the null arm, machine 1 the alternative;
            // the signal stream signs the hard truth.
            let null_noise = RandomStream::new(seed, 0, rep, StreamRole::Noise);
            let alt_noise = RandomStream::new(seed, 1, rep, StreamRole::Noise);
            let signs = RandomStream::new(seed, SIGNAL_MACHINE, rep, StreamRole::Signal);
            let mut x0 = Vec::with_capacity(d);
            let mut x1 = Vec::with_capacity(d);
            for k in 0..d {
                x0.push(sd * null_noise.normal_at(k as u64));
                let f = if signs.word_at(k as u64) >> 63 == 1 { amp } else { -amp };
                x1.push(f + sd * alt_noise.normal_at(k as u64));
            }
            let reject_null = log_likelihood_ratio(&x0, dt, n, m) > 0.0;
            let keep_alt = log_likelihood_ratio(&x1, dt, n, m) <= 0.0;
            (reject_null, keep_alt)
        })
        .collect();
    let type1 = outcomes.iter().filter(|o| o.0).count() as f64 / reps as f64;
    let type2 = outcomes.iter().filter(|o| o.1).count() as f64 / reps as f64;
    Ok(IndisReport {
        schema_version: SCHEMA_VERSION,
        n,
        m,
        s1,
        s2,
        budget: budget_per_machine,
        delta,
        delta_tilde: dt,
        level,
        type1,
        type2,
        total_error: type1 + type2,
    })
}

/// Error frequencies of the composite smoothness test at level `alpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub schema_version: u32,
    pub n: u64,
    pub m: usize,
    pub s1: f64,
    pub s2: f64,
    pub radius: f64,
    pub alpha: f64,
    /// Distance of the alternatives from the smooth ball.
    pub separation: f64,
    /// Wavelet level carrying the alternatives' energy.
    pub level: usize,
    /// Rejection frequency under the zero signal.
    pub type1: f64,
    /// Retention frequency under alternatives at the calibrated separation.
    pub type2: f64,
}

/// Monte Carlo calibration of the smoothness test: type-I error on the
/// zero signal and type-II error on alternatives separated from the
/// `(s2, radius)` ball by the test's own detection radius, both at the
/// half-sample noise level `sqrt(2m/n)`.
#[allow(clippy::too_many_arguments)]
pub fn run_calibration(
    n: u64,
    m: usize,
    s1: f64,
    s2: f64,
    radius: f64,
    alpha: f64,
    level: usize,
    reps: u64,
    seed: u64,
) -> Result<CalibrationReport> {
    if reps == 0 {
        return Err(Error::InvalidParam("reps must be at least 1".into()));
    }
    let params = TestParams::new(s1, s2, radius, alpha, n, m)?;
    let j_max = params.level_cap().max(level).max(1);
    let separation = separation_radius(alpha, s1, radius, n, m);
    let sd = (2.0 * m as f64 / n as f64).sqrt();
    let outcomes: Vec<(bool, bool)> = (0..reps)
        .into_par_iter()
        .map(|rep| -> Result<(bool, bool)> {
            let null_noise = RandomStream::new(seed, 0, rep, StreamRole::Noise);
            let alt_noise = RandomStream::new(seed, 1, rep, StreamRole::Noise);
            let mut signs = RandomStream::new(seed, SIGNAL_MACHINE, rep, StreamRole::Signal);
            let mut null = CoeffSeq::zeros(j_max);
            for t in 1..=null.len() {
                null.set_flat(t, sd * null_noise.normal_at(t as u64))?;
            }
            let mut alt = gen_separated_alt(s2, radius, separation, level, j_max, &mut signs)?;
            for t in 1..=alt.len() {
                let v = alt.get_flat(t)?;
                alt.set_flat(t, v + sd * alt_noise.normal_at(t as u64))?;
            }
            let on_null = run_test(&null, &params)?;
            let on_alt = run_test(&alt, &params)?;
            Ok((on_null.reject, !on_alt.reject))
        })
        .collect::<Result<_>>()?;
    Ok(CalibrationReport {
        schema_version: SCHEMA_VERSION,
        n,
        m,
        s1,
        s2,
        radius,
        alpha,
        separation,
        level,
        type1: outcomes.iter().filter(|o| o.0).count() as f64 / reps as f64,
        type2: outcomes.iter().filter(|o| o.1).count() as f64 / reps as f64,
    })
}

/// Fixed CSV header for risk reports.
pub const CSV_HEADER: [&str; 10] = [
    "n",
    "m",
    "method",
    "risk",
    "risk_se",
    "bits_mean",
    "bits_max",
    "slope",
    "slope_se",
    "schema_version",
];

/// Serializes a risk report to CSV with the fixed column order. An empty
/// report produces the header line only.
pub fn csv_string(report: &RiskReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in &report.rows {
        w.write_record(&[
            row.n.to_string(),
            row.m.to_string(),
            report.method.clone(),
            row.risk.to_string(),
            row.risk_se.to_string(),
            row.bits_mean.to_string(),
            row.bits_max.to_string(),
            opt(report.slope),
            opt(report.slope_se),
            report.schema_version.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Malformed(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Malformed(e.to_string()))
}

/// Serializes a risk report to pretty JSON (stable field order).
pub fn json_string(report: &RiskReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// Report output format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmitFormat {
    Csv,
    Json,
}

/// Writes a report to `path` in the requested format.
pub fn emit(report: &RiskReport, format: EmitFormat, path: &Path) -> Result<()> {
    let body = match format {
        EmitFormat::Csv => csv_string(report)?,
        EmitFormat::Json => json_string(report)?,
    };
    let mut file = std::fs::File::create(path)?;
    file.write_all(body.as_bytes())?;
    Ok(())
}
