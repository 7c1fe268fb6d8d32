//! Smoothness testing and data-driven smoothness selection.
//!
//! The composite test compares level-wise centred energy statistics `T(l)`
//! against explicit thresholds `t(l)` calibrated for a smooth null
//! (membership in a `(2, inf)` ball of regularity `s2`) versus rough,
//! separated alternatives of regularity `s1`. Built on it are the two-point
//! selector, a grid selector over a `1/log2(n)` mesh, and a block-maximum
//! smoothness estimator for self-similar signals.
//!
//! All levels here refer to the effective half-sample model: the input
//! sequence is one machine's first half-sample, with noise variance `2m/n`
//! and signal-to-noise `nu = n/(2m)`.

use serde::{Deserialize, Serialize};

use crate::coeff::CoeffSeq;
use crate::error::{Error, Result};
use crate::signal::SelfSimSpec;

/// Width of the father level (one father wavelet at the coarsest scale).
pub const Z0: f64 = 1.0;

/// Floor applied to test levels to keep thresholds finite.
pub const MIN_ALPHA: f64 = 1e-6;

/// Parameters of the composite smoothness test between regularities
/// `s1 < s2` at radius `radius` and level `alpha`, run on half-samples of a
/// size-`n` problem spread over `m` machines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestParams {
    pub s1: f64,
    pub s2: f64,
    pub radius: f64,
    pub alpha: f64,
    pub n: u64,
    pub m: usize,
}

impl TestParams {
    pub fn new(s1: f64, s2: f64, radius: f64, alpha: f64, n: u64, m: usize) -> Result<Self> {
        if !(s1 > 0.0 && s1.is_finite()) || !(s2 > s1 && s2.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "need 0 < s1 < s2, got s1 = {s1}, s2 = {s2}"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParam(format!("radius {radius} must be positive")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParam(format!("alpha = {alpha} must lie in (0, 1]")));
        }
        if m == 0 || (n as f64) < 4.0 * m as f64 {
            return Err(Error::InvalidParam(format!(
                "need n/(2m) >= 2 for the half-sample test, got n = {n}, m = {m}"
            )));
        }
        Ok(TestParams { s1, s2, radius, alpha, n, m })
    }

    /// Effective half-sample signal-to-noise `n/(2m)`.
    pub fn nu(&self) -> f64 {
        self.n as f64 / (2.0 * self.m as f64)
    }

    /// Half-sample noise variance `2m/n`.
    pub fn sigma_sq(&self) -> f64 {
        2.0 * self.m as f64 / self.n as f64
    }

    /// Deepest tested level, `floor(log2(nu) / (2 s1 + 1/2))`.
    pub fn level_cap(&self) -> usize {
        (self.nu().log2() / (2.0 * self.s1 + 0.5)).floor() as usize
    }

    /// Concentration scale `tau_l` entering the threshold at level `l`.
    pub fn tau(&self, l: usize) -> f64 {
        let root = (Z0 / self.alpha).sqrt();
        let nu = self.nu();
        if l == 0 {
            24.0 * root / nu.sqrt()
        } else {
            let shift = (nu.log2() / (0.5 + 2.0 * self.s2)).floor();
            24.0 * root * (l as f64 + shift).exp2() / nu.sqrt()
        }
    }
}

/// Centred energy statistic at one level: the squared norm of the level
/// projection minus its expectation under pure noise of variance `sigma_sq`.
/// Level 0 is the father slot (width [`Z0`]); level `l >= 1` is wavelet
/// level `l` (width `2^l`).
pub fn test_statistic(fhat: &CoeffSeq, l: usize, sigma_sq: f64) -> Result<f64> {
    if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "sigma_sq = {sigma_sq} must be positive"
        )));
    }
    if l == 0 {
        return Ok(fhat.father() * fhat.father() - Z0 * sigma_sq);
    }
    if l > fhat.j_max() {
        return Err(Error::InvalidParam(format!(
            "tested level {l} exceeds ladder depth {}",
            fhat.j_max()
        )));
    }
    let mass: f64 = fhat.level(l).iter().map(|v| v * v).sum();
    Ok(mass - (l as f64).exp2() * sigma_sq)
}

/// Rejection threshold `t(l) = L^2 2^(-2 l s2) + L 2^(-l s2) tau_l + tau_l^2 / 4`.
pub fn threshold(l: usize, params: &TestParams) -> f64 {
    let tau = params.tau(l);
    let band = params.radius * (-(l as f64) * params.s2).exp2();
    band * band + band * tau + tau * tau / 4.0
}

/// One tested level: statistic, threshold, and whether it exceeded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCheck {
    pub level: usize,
    pub statistic: f64,
    pub threshold: f64,
}

impl LevelCheck {
    pub fn exceeds(&self) -> bool {
        self.statistic > self.threshold
    }
}

/// Outcome of the composite test: per-level checks and the decision.
/// `reject` means the smooth null was rejected (the signal looks rough).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub levels: Vec<LevelCheck>,
    pub reject: bool,
    pub alpha: f64,
}

impl TestReport {
    /// The decision as the conventional 0/1 indicator.
    pub fn psi(&self) -> u8 {
        u8::from(self.reject)
    }
}

/// Runs the composite test on one half-sample: rejects iff some level
/// `l <= level_cap` has `T(l) > t(l)`.
pub fn run_test(half1: &CoeffSeq, params: &TestParams) -> Result<TestReport> {
    let cap = params.level_cap();
    if half1.j_max() < cap {
        return Err(Error::InvalidParam(format!(
            "ladder depth {} below tested range {cap}",
            half1.j_max()
        )));
    }
    let sigma_sq = params.sigma_sq();
    let mut levels = Vec::with_capacity(cap + 1);
    let mut reject = false;
    for l in 0..=cap {
        let check = LevelCheck {
            level: l,
            statistic: test_statistic(half1, l, sigma_sq)?,
            threshold: threshold(l, params),
        };
        reject |= check.exceeds();
        levels.push(check);
    }
    Ok(TestReport { levels, reject, alpha: params.alpha })
}

/// Two-point smoothness selection: `s2` when the smooth null is retained,
/// `s1` when it is rejected.
pub fn two_point_smoothness(half1: &CoeffSeq, params: &TestParams) -> Result<f64> {
    Ok(if run_test(half1, params)?.reject {
        params.s1
    } else {
        params.s2
    })
}

/// Separation constant `24 (2^s1 L / sqrt(1 - 2^(-2 s1)) + 19) 2^(s1/(1+2 s1)) / sqrt(alpha)`.
///
/// Callers wanting a different conservativeness can scale the result; the
/// printed constant is far from tight at bench sizes.
pub fn separation_constant(alpha: f64, s1: f64, radius: f64) -> f64 {
    let lead = (s1).exp2() * radius / (1.0 - (-2.0 * s1).exp2()).sqrt();
    24.0 * (lead + 19.0) * (s1 / (1.0 + 2.0 * s1)).exp2() / alpha.sqrt()
}

/// Distance from the smooth ball at which the test is guaranteed power:
/// `separation_constant * (n/m)^(-s1 / (1/2 + 2 s1))`.
pub fn separation_radius(alpha: f64, s1: f64, radius: f64, n: u64, m: usize) -> f64 {
    let expo = -s1 / (0.5 + 2.0 * s1);
    separation_constant(alpha, s1, radius) * (expo * (n as f64 / m as f64).log2()).exp2()
}

/// Calibration multiplier `M_n = n^(2 s1 (1/2 - p(1+2 s1)) / ((1+2 s1)(1/2+2 s1)))`
/// for budgets growing like `n^p`; the test level is `1/M_n`.
///
/// Errors when `s1 > 1/(4p) - 1/2`, where the exponent turns negative and no
/// consistent calibration exists.
pub fn mn_alpha(n: u64, p: f64, s1: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParam(format!("budget exponent p = {p} must be positive")));
    }
    if !(s1 > 0.0 && s1.is_finite()) {
        return Err(Error::InvalidParam(format!("s1 = {s1} must be positive")));
    }
    let boundary = 1.0 / (4.0 * p) - 0.5;
    if s1 > boundary + 1e-12 {
        return Err(Error::InvalidParam(format!(
            "s1 = {s1} exceeds the calibration boundary 1/(4p) - 1/2 = {boundary}"
        )));
    }
    Ok((mn_exponent(p, s1) * (n as f64).log2()).exp2())
}

fn mn_exponent(p: f64, s: f64) -> f64 {
    2.0 * s * (0.5 - p * (1.0 + 2.0 * s)) / ((1.0 + 2.0 * s) * (0.5 + 2.0 * s))
}

/// Test level for a rough candidate `s` under budget exponent `p`:
/// `1/M_n` clamped into `[MIN_ALPHA, 1]`. Total: candidates beyond the
/// calibration boundary get the loosest level 1.
pub fn test_alpha(n: u64, p: f64, s: f64) -> f64 {
    let raw = (-mn_exponent(p, s) * (n as f64).log2()).exp2();
    raw.clamp(MIN_ALPHA, 1.0)
}

/// Ordered candidate regularities with mesh `1/log2(n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessGrid {
    points: Vec<f64>,
}

impl SmoothnessGrid {
    /// The mesh `{s1, s1 + 1/log2 n, ..., s2}`. When the span is not a whole
    /// number of steps, the final step to `s2` is shorter.
    pub fn new(s1: f64, s2: f64, n: u64) -> Result<Self> {
        if !(s1 > 0.0 && s1.is_finite()) || !(s2 > s1 && s2.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "need 0 < s1 < s2, got s1 = {s1}, s2 = {s2}"
            )));
        }
        if n < 4 {
            return Err(Error::InvalidParam(format!("n = {n} too small for a 1/log2(n) mesh")));
        }
        let step = 1.0 / (n as f64).log2();
        let whole = ((s2 - s1) / step + 1e-9).floor() as usize;
        let mut points: Vec<f64> = (0..=whole).map(|i| s1 + i as f64 * step).collect();
        let last = *points.last().expect("nonempty by construction");
        if last < s2 - 1e-9 * (s2 - s1) {
            points.push(s2);
        } else {
            *points.last_mut().expect("nonempty") = s2;
        }
        Ok(SmoothnessGrid { points })
    }

    /// An explicit candidate set; must be strictly increasing and positive.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParam("empty smoothness grid".into()));
        }
        if points.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParam("grid points must be positive and finite".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParam("grid points must be strictly increasing".into()));
        }
        Ok(SmoothnessGrid { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn min_s(&self) -> f64 {
        self.points[0]
    }

    pub fn max_s(&self) -> f64 {
        *self.points.last().expect("grid is never empty")
    }

    /// Clips a raw estimate into the grid's range.
    pub fn clip(&self, s: f64) -> f64 {
        s.clamp(self.min_s(), self.max_s())
    }
}

/// Grid smoothness selection: the largest candidate `s` that survives the
/// composite test against every rougher candidate `t < s`, each test run at
/// level [`test_alpha`]`(n, p, t)`. The smallest candidate survives
/// vacuously, so the maximum always exists.
pub fn grid_smoothness(
    half1: &CoeffSeq,
    grid: &SmoothnessGrid,
    radius: f64,
    n: u64,
    m: usize,
    p: f64,
) -> Result<f64> {
    let pts = grid.points();
    for a in (1..pts.len()).rev() {
        let mut retained = true;
        for &t in &pts[..a] {
            let params = TestParams::new(t, pts[a], radius, test_alpha(n, p, t), n, m)?;
            if run_test(half1, &params)?.reject {
                retained = false;
                break;
            }
        }
        if retained {
            return Ok(pts[a]);
        }
    }
    Ok(pts[0])
}

/// Block-maximum smoothness estimator for self-similar signals.
///
/// Hard-thresholds the half-sample at `lambda = sqrt(2m/n) sqrt(2 ln n)`,
/// reads off `s_j = -log2|X| / l - 1/2` from the largest surviving entry
/// `(l, k)` of each block `[j, rho j]`, and returns the most conservative
/// (smallest) block reading clipped to the grid. With no surviving entries
/// the signal is indistinguishable from the smoothest candidate, so the grid
/// maximum is returned. Only the block geometry `(j0, rho)` of `spec` is
/// read; its smoothness and radius play no role.
pub fn selfsim_smoothness(
    half1: &CoeffSeq,
    spec: &SelfSimSpec,
    grid: &SmoothnessGrid,
    n: u64,
    m: usize,
) -> Result<f64> {
    if m == 0 || (n as f64) < 4.0 * m as f64 {
        return Err(Error::InvalidParam(format!(
            "need n/(2m) >= 2 for half-sample thresholding, got n = {n}, m = {m}"
        )));
    }
    let nf = n as f64;
    let lambda = (2.0 * m as f64 / nf).sqrt() * (2.0 * nf.ln()).sqrt();
    let j_use = (nf / (2.0 * m as f64)).log2().floor() as usize;
    let top = (j_use / spec.rho).min(half1.j_max() / spec.rho);
    if spec.j0 > top {
        return Err(Error::InvalidParam(format!(
            "no usable blocks: j0 = {} exceeds top start {top}",
            spec.j0
        )));
    }
    let mut s_hat = f64::INFINITY;
    for j in spec.j0..=top {
        let hi = (spec.rho * j).min(half1.j_max());
        let mut best: Option<(usize, f64)> = None;
        for l in j..=hi {
            for &v in half1.level(l) {
                let mag = v.abs();
                if mag > lambda && best.is_none_or(|(_, b)| mag > b) {
                    best = Some((l, mag));
                }
            }
        }
        if let Some((l, mag)) = best {
            s_hat = s_hat.min(-mag.log2() / l as f64 - 0.5);
        }
    }
    Ok(if s_hat.is_finite() { grid.clip(s_hat) } else { grid.max_s() })
}

/// Deviation radius of the centred energy statistics: with signal-to-noise
/// `nu`, all levels `l <= j` satisfy `|T(l) - mass_l| <` this bound except
/// on an event of probability [`concentration_tail`]`(delta)`.
pub fn concentration_radius(j: usize, l: usize, mass: f64, nu: f64, delta: f64) -> f64 {
    let cross = ((j + l) as f64 / 2.0).exp2();
    let lift = (l as f64 / 4.0).exp2();
    4.0 * ((3.0 * Z0 / delta) * (cross / (nu * nu) + lift * mass / nu)).sqrt()
}

/// Probability bound accompanying [`concentration_radius`]:
/// `2 exp(-sqrt(3/2) / sqrt(delta))`.
pub fn concentration_tail(delta: f64) -> f64 {
    2.0 * (-(1.5f64).sqrt() / delta.sqrt()).exp()
}
