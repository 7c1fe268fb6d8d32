//! Acceptance gate: thirteen end-to-end criteria covering channel fidelity,
//! budget caps, rate exponents, test calibration, concentration,
//! adaptivity, the indistinguishability mechanism, and determinism.
//!
//! Each test prints exactly one `criterion NN <name>: PASS/FAIL` line
//! (visible with `--nocapture`) and asserts its stated tolerance.

use std::sync::OnceLock;

use distest::channel::{decode_value, encode_value, EncoderConfig};
use distest::coeff::CoeffSeq;
use distest::estimators::{
    adaptive_l2_grid_with, adaptive_l2_twopoint, adaptive_linf_selfsim, global_adaptive_s0,
    nonadaptive_l2, nonadaptive_linf, ProcContext,
};
use distest::harness::{
    json_string, ols_slope, run_calibration, run_indistinguishability, run_risk,
    enumerated_log_ratio, log_likelihood_ratio, BudgetRule, ExperimentSpec, MachineRule,
    MethodSpec, RiskNorm, SignalSpec,
};
use distest::model::{simulate, simulate_machine, split, ModelConfig};
use distest::rng::{RandomStream, StreamRole, SIGNAL_MACHINE};
use distest::signal::{gen_besov_random, gen_separated_alt, gen_self_similar, BesovKind, BesovSpec, SelfSimSpec};
use distest::smooth::{
    concentration_radius, concentration_tail, selfsim_smoothness, separation_radius, test_alpha,
    test_statistic, SmoothnessGrid,
};

fn verdict(number: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {number:02} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {number:02} {name} failed: {detail}");
}

#[test]
fn criterion_01_channel_fidelity() {
    let draws = 100_000u64;
    let mut worst = 0.0f64;
    let mut violations = 0u64;
    for (i, &n) in [16u64, 256, 4096].iter().enumerate() {
        let cfg = EncoderConfig::new(n, 0.5).unwrap();
        let tol = 2.0 * (n as f64).powf(-0.5);
        let len_cap = ((0.5 + 0.5) * (n as f64).log2()).ceil() as u64 + 2;
        let stream = RandomStream::new(101 + i as u64, 0, 0, StreamRole::Aux);
        for k in 0..draws {
            let mu = 2.0 * stream.uniform_at(2 * k) - 1.0;
            let x = mu + stream.normal_at(2 * k + 1);
            let msg = encode_value(x, &cfg).unwrap();
            if msg.len() > len_cap {
                violations += 1;
            }
            if x.abs() < (n as f64).sqrt() {
                let err = (x - decode_value(&msg, &cfg).unwrap()).abs();
                worst = worst.max(err / tol);
                if err > tol {
                    violations += 1;
                }
            }
        }
    }
    verdict(
        1,
        "channel-fidelity",
        violations == 0 && worst <= 1.0,
        &format!("{violations} violations over 3x{draws} draws, worst error {worst:.3} of the 2n^-D budget"),
    );
}

#[test]
fn criterion_02_budget_hard_cap() {
    let stream = RandomStream::new(202, 0, 0, StreamRole::Aux);
    let mut checked = 0u32;
    let mut overruns = 0u32;
    for i in 0..100u64 {
        let w = stream.word_at(i);
        let n = 1u64 << (8 + (w % 5));
        let m = 2 + (w >> 8 & 7) as usize;
        let j_max = 9;
        let seed = w >> 16 & 0xffff;
        let cfg = ModelConfig::new(n, m, j_max, seed).unwrap();
        let ctx = ProcContext::new(cfg, i).unwrap();
        let s = 0.3 + 0.1 * (w >> 3 & 7) as f64;
        let mut rng = RandomStream::new(seed, SIGNAL_MACHINE, i, StreamRole::Signal);
        let spec = BesovSpec::new(s.max(0.35), 1.0, BesovKind::TwoInf).unwrap();
        let f0 = gen_besov_random(&spec, 0.9, j_max, &mut rng).unwrap();
        let samples = simulate(&f0, &cfg, i).unwrap();
        let budget = (n as f64).log2() * (1 + (w >> 32 & 63)) as f64;
        let report = match i % 6 {
            0 => nonadaptive_l2(&samples, s.max(0.35), 1.0, budget, &ctx),
            1 => nonadaptive_linf(&samples, s.max(0.35), 1.0, budget, &ctx),
            2 => global_adaptive_s0(&samples, 0.4, 2.0, 16.0, &ctx),
            3 => adaptive_l2_twopoint(&samples, 0.4, 1.0, 1.0, 0.1, &ctx),
            4 => {
                let grid = SmoothnessGrid::new(0.4, 1.2, n).unwrap();
                adaptive_l2_grid_with(&samples, &grid, 1.0, 0.1, &ctx)
            }
            _ => {
                let sspec = SelfSimSpec::new(1.0, 1.0, 0.5, 1, 2).unwrap();
                let grid = SmoothnessGrid::new(0.3, 2.0, n).unwrap();
                adaptive_linf_selfsim(&samples, &sspec, &grid, &ctx)
            }
        }
        .unwrap();
        checked += 1;
        let max_bits = report.bits_per_machine.iter().copied().max().unwrap_or(0);
        if (max_bits as f64) > report.bit_cap {
            overruns += 1;
        }
    }
    verdict(
        2,
        "budget-hard-cap",
        checked == 100 && overruns == 0,
        &format!("{overruns} cap violations over {checked} random configs"),
    );
}

#[test]
fn criterion_03_nonadaptive_l2_rate() {
    let spec = ExperimentSpec {
        method: MethodSpec::NonadaptiveL2 { s: 1.0, radius: 1.0 },
        signal: SignalSpec::BesovRandom { s: 1.0, radius: 1.0, ball: BesovKind::TwoInf, fill: 0.9 },
        machines: MachineRule::Fixed { m: 8 },
        budget: Some(BudgetRule { scale: 1.0, n_exponent: 1.0 / 3.0, log2_exponent: 1.0 }),
        norm: RiskNorm::L2Sq,
        n_grid: (10..=18).map(|e| 1u64 << e).collect(),
        j_max: 10,
        reps: 200,
        seed: 303,
        approx_order: 0.5,
        out: None,
    };
    let report = run_risk(&spec).unwrap();
    let slope = report.slope.unwrap();
    let pass = (-0.78..=-0.56).contains(&slope);
    verdict(
        3,
        "nonadaptive-l2-rate",
        pass,
        &format!("slope {slope:.4} in [-0.78, -0.56] (target -2/3)"),
    );
}

#[test]
fn criterion_04_insufficient_budget_degradation() {
    let n = 1u64 << 16;
    let sufficient = (n as f64).powf(1.0 / 3.0) * (n as f64).log2();
    let mut rows = Vec::new();
    for k in 0..4 {
        let spec = ExperimentSpec {
            method: MethodSpec::NonadaptiveL2 { s: 1.0, radius: 1.0 },
            signal: SignalSpec::BesovRandom {
                s: 1.0,
                radius: 1.0,
                ball: BesovKind::TwoInf,
                fill: 0.9,
            },
            machines: MachineRule::Fixed { m: 8 },
            budget: Some(BudgetRule {
                scale: sufficient / (1u64 << k) as f64,
                n_exponent: 0.0,
                log2_exponent: 0.0,
            }),
            norm: RiskNorm::L2Sq,
            n_grid: vec![n],
            j_max: 10,
            reps: 200,
            seed: 404,
            approx_order: 0.5,
            out: None,
        };
        let report = run_risk(&spec).unwrap();
        rows.push(report.rows[0].clone());
    }
    let mut pass = true;
    let mut detail = String::new();
    for pair in rows.windows(2) {
        let margin = pair[1].risk - pair[0].risk;
        let sd = (pair[0].risk_se.powi(2) + pair[1].risk_se.powi(2)).sqrt();
        if margin <= 3.0 * sd {
            pass = false;
        }
        detail.push_str(&format!("{:.2e}->{:.2e} (+{:.1} sd); ", pair[0].risk, pair[1].risk, margin / sd));
    }
    verdict(4, "insufficient-budget-degradation", pass, detail.trim_end_matches("; "));
}

#[test]
fn criterion_05_test_calibration() {
    let mut pass = true;
    let mut detail = String::new();
    for (n, m) in [(1u64 << 13, 16usize), (1u64 << 16, 16)] {
        let report = run_calibration(n, m, 0.5, 1.0, 1.0, 0.04, 1, 2000, 505).unwrap();
        if report.type1 > 0.05 || report.type2 > 0.10 {
            pass = false;
        }
        detail.push_str(&format!(
            "n/m=2^{}: type1 {:.4} <= 0.05, type2 {:.4} <= 0.10; ",
            (n as f64 / m as f64).log2() as u32,
            report.type1,
            report.type2
        ));
    }
    verdict(5, "test-calibration", pass, detail.trim_end_matches("; "));
}

#[test]
fn criterion_06_concentration() {
    // Half-sample noise level 1/sqrt(nu); deviation event taken over all
    // levels l <= j with the per-level masses of a fixed smooth signal.
    let nu = 512.0f64;
    let sigma = (1.0 / nu).sqrt();
    let j = 5usize;
    let reps = 2000u64;
    let mut rng = RandomStream::new(606, SIGNAL_MACHINE, 0, StreamRole::Signal);
    let bspec = BesovSpec::new(1.0, 1.0, BesovKind::TwoInf).unwrap();
    let f0 = gen_besov_random(&bspec, 0.9, j, &mut rng).unwrap();
    let masses: Vec<f64> = (0..=j)
        .map(|l| f0.project_level(l).unwrap().l2_norm_sq())
        .collect();
    let mut pass = true;
    let mut detail = String::new();
    for delta in [0.25f64, 0.5, 1.0] {
        let mut exceed = 0u64;
        for rep in 0..reps {
            let noise = RandomStream::new(606, 0, rep, StreamRole::Noise);
            let mut fhat = f0.clone();
            for t in 1..=fhat.len() {
                let v = fhat.get_flat(t).unwrap();
                fhat.set_flat(t, v + sigma * noise.normal_at(t as u64)).unwrap();
            }
            let hit = (0..=j).any(|l| {
                let t = test_statistic(&fhat, l, 1.0 / nu).unwrap();
                (t - masses[l]).abs() >= concentration_radius(j, l, masses[l], nu, delta)
            });
            if hit {
                exceed += 1;
            }
        }
        let freq = exceed as f64 / reps as f64;
        let bound = concentration_tail(delta);
        let se = (bound * (1.0 - bound) / reps as f64).sqrt();
        if freq > bound + 3.0 * se {
            pass = false;
        }
        detail.push_str(&format!("delta={delta}: {freq:.4} <= {:.4}; ", bound + 3.0 * se));
    }
    verdict(6, "concentration", pass, detail.trim_end_matches("; "));
}

struct TwoPointBench {
    smooth_bits: f64,
    rough_bits: f64,
    smooth_adapt_mse: f64,
    rough_adapt_mse: f64,
    smooth_oracle_mse: f64,
    rough_oracle_mse: f64,
}

static TWO_POINT: OnceLock<TwoPointBench> = OnceLock::new();

/// Shared 500-replicate two-point experiment at n = 2^16, m = 8, feeding
/// both the bit criterion and the risk-ratio criterion.
fn two_point_bench() -> &'static TwoPointBench {
    TWO_POINT.get_or_init(|| {
        let n = 1u64 << 16;
        let m = 8usize;
        let j_max = 9usize;
        let (s1, s2, radius, p) = (0.4f64, 1.0f64, 1.0f64, 0.15f64);
        let reps = 500u64;
        let seed = 707u64;
        let cfg = ModelConfig::new(n, m, j_max, seed).unwrap();
        let sep = separation_radius(test_alpha(n, p, s1), s1, radius, n, m);
        let truth = |smooth: bool, rep: u64| -> CoeffSeq {
            let mut rng = RandomStream::new(seed, SIGNAL_MACHINE, rep, StreamRole::Signal);
            if smooth {
                let bspec = BesovSpec::new(s2, radius, BesovKind::TwoInf).unwrap();
                gen_besov_random(&bspec, 0.9, j_max, &mut rng).unwrap()
            } else {
                gen_separated_alt(s2, radius, sep, 1, j_max, &mut rng).unwrap()
            }
        };
        let mut out = TwoPointBench {
            smooth_bits: 0.0,
            rough_bits: 0.0,
            smooth_adapt_mse: 0.0,
            rough_adapt_mse: 0.0,
            smooth_oracle_mse: 0.0,
            rough_oracle_mse: 0.0,
        };
        for smooth in [true, false] {
            let mut bits = 0.0;
            let mut mse = 0.0;
            for rep in 0..reps {
                let f0 = truth(smooth, rep);
                let samples = simulate(&f0, &cfg, rep).unwrap();
                let ctx = ProcContext::new(cfg, rep).unwrap();
                let report = adaptive_l2_twopoint(&samples, s1, s2, radius, p, &ctx).unwrap();
                bits += report.bits_per_machine.iter().sum::<u64>() as f64 / m as f64;
                mse += report.fhat.l2_dist_sq(&f0).unwrap();
            }
            let bits_mean = bits / reps as f64;
            let adapt_mse = mse / reps as f64;
            // Oracle with known regularity and the adaptive run's budget.
            let s_true = if smooth { s2 } else { s1 };
            let mut oracle_mse = 0.0;
            for rep in 0..reps {
                let f0 = truth(smooth, rep);
                let samples = simulate(&f0, &cfg, rep).unwrap();
                let ctx = ProcContext::new(cfg, rep).unwrap();
                let report = nonadaptive_l2(&samples, s_true, radius, bits_mean, &ctx).unwrap();
                oracle_mse += report.fhat.l2_dist_sq(&f0).unwrap();
            }
            let oracle_mse = oracle_mse / reps as f64;
            if smooth {
                out.smooth_bits = bits_mean;
                out.smooth_adapt_mse = adapt_mse;
                out.smooth_oracle_mse = oracle_mse;
            } else {
                out.rough_bits = bits_mean;
                out.rough_adapt_mse = adapt_mse;
                out.rough_oracle_mse = oracle_mse;
            }
        }
        out
    })
}

#[test]
fn criterion_07_adaptive_twopoint_bits() {
    let bench = two_point_bench();
    let n = (1u64 << 16) as f64;
    let smooth_cap = 2.0 * n.powf(1.0 / 3.0) * (n.log2() + 2.0);
    let ratio = bench.smooth_bits / bench.rough_bits;
    let pass = bench.smooth_bits <= smooth_cap && ratio <= 0.35;
    verdict(
        7,
        "adaptive-twopoint-bits",
        pass,
        &format!(
            "smooth {:.0} <= {:.0} bits, smooth/rough ratio {:.3} <= 0.35",
            bench.smooth_bits, smooth_cap, ratio
        ),
    );
}

#[test]
fn criterion_08_adaptive_twopoint_risk() {
    let bench = two_point_bench();
    let smooth_ratio = bench.smooth_adapt_mse / bench.smooth_oracle_mse;
    let rough_ratio = bench.rough_adapt_mse / bench.rough_oracle_mse;
    let pass = smooth_ratio <= 3.0 && rough_ratio <= 3.0;
    verdict(
        8,
        "adaptive-twopoint-risk",
        pass,
        &format!("adaptive/oracle MSE: smooth {smooth_ratio:.2} <= 3, rough {rough_ratio:.2} <= 3"),
    );
}

#[test]
fn criterion_09_grid_reduces_to_twopoint() {
    let n = 4096u64;
    let m = 4usize;
    let j_max = 8usize;
    let (s1, s2, radius, p) = (0.45, 1.0, 1.0, 0.12);
    let grid = SmoothnessGrid::from_points(vec![s1, s2]).unwrap();
    let mut identical = 0u32;
    for seed in 0..20u64 {
        let cfg = ModelConfig::new(n, m, j_max, seed).unwrap();
        let mut rng = RandomStream::new(seed, SIGNAL_MACHINE, 0, StreamRole::Signal);
        let bspec = BesovSpec::new(0.7, 1.0, BesovKind::TwoInf).unwrap();
        let f0 = gen_besov_random(&bspec, 0.8, j_max, &mut rng).unwrap();
        let samples = simulate(&f0, &cfg, 0).unwrap();
        let ctx = ProcContext::new(cfg, 0).unwrap();
        let a = adaptive_l2_twopoint(&samples, s1, s2, radius, p, &ctx).unwrap();
        let b = adaptive_l2_grid_with(&samples, &grid, radius, p, &ctx).unwrap();
        if a == b {
            identical += 1;
        }
    }
    verdict(
        9,
        "grid-reduces-to-twopoint",
        identical == 20,
        &format!("{identical}/20 seeds bit-identical"),
    );
}

#[test]
fn criterion_10_indistinguishability() {
    let n = 1u64 << 16;
    let s1 = 1.0;
    let budget = ((n as f64).log2() / (1.0 + 2.0 * s1)).exp2() * (n as f64).log2();
    let report = run_indistinguishability(
        n,
        MachineRule::Power { p: 0.45 },
        s1,
        2.0,
        budget,
        2000,
        1010,
    )
    .unwrap();
    // Closed form versus enumeration across small supports.
    let stream = RandomStream::new(1010, 0, 0, StreamRole::Aux);
    let mut enum_ok = true;
    let mut worst = 0.0f64;
    for d in [2usize, 6, 10] {
        let x: Vec<f64> = (0..d).map(|k| 0.05 * stream.normal_at(k as u64)).collect();
        let fast = log_likelihood_ratio(&x, report.delta_tilde, n, report.m);
        let slow = enumerated_log_ratio(&x, report.delta_tilde, n, report.m).unwrap();
        let rel = (fast - slow).abs() / fast.abs().max(1.0);
        worst = worst.max(rel);
        if rel > 1e-10 {
            enum_ok = false;
        }
    }
    let pass = report.total_error >= 0.4 && enum_ok;
    verdict(
        10,
        "indistinguishability",
        pass,
        &format!(
            "total error {:.3} >= 0.4 at level {} (support {}), enum gap {worst:.2e} <= 1e-10",
            report.total_error,
            report.level,
            1u64 << report.level
        ),
    );
}

#[test]
fn criterion_11_selfsim_smoothness_consistency() {
    let n = 1u64 << 20;
    let m = 16usize;
    let j_max = 14usize;
    let reps = 500u64;
    let tol = 3.0 / ((n / m as u64) as f64).log2();
    let grid = SmoothnessGrid::new(0.25, 2.0, n).unwrap();
    let cfg = ModelConfig::new(n, m, j_max, 1111).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for s in [0.5f64, 1.0, 1.5] {
        let spec = SelfSimSpec::new(s, 1.0, 0.5, 2, 2).unwrap();
        let mut good = 0u64;
        for rep in 0..reps {
            let mut rng = RandomStream::new(1111, SIGNAL_MACHINE, rep, StreamRole::Signal);
            let f0 = gen_self_similar(&spec, j_max, &mut rng).unwrap();
            let sample = simulate_machine(&f0, &cfg, rep, 0).unwrap();
            let halves = split(&sample, &cfg, rep).unwrap();
            let s_hat = selfsim_smoothness(&halves.half1, &spec, &grid, n, m).unwrap();
            if (s_hat - s).abs() <= tol {
                good += 1;
            }
        }
        if good * 10 < reps * 9 {
            pass = false;
        }
        detail.push_str(&format!("s={s}: {good}/{reps} within {tol:.3}; "));
    }
    verdict(11, "selfsim-smoothness-consistency", pass, detail.trim_end_matches("; "));
}

#[test]
fn criterion_12_adaptive_linf_rate_trend() {
    let spec = ExperimentSpec {
        method: MethodSpec::AdaptiveSelfsim {
            s: 1.0,
            radius: 1.0,
            eps: 0.5,
            j0: 1,
            rho: 2,
            grid_min: 0.25,
            grid_max: 2.0,
        },
        signal: SignalSpec::SelfSimilar { s: 1.0, radius: 1.0, eps: 0.5, j0: 1, rho: 2 },
        machines: MachineRule::Fixed { m: 4 },
        budget: None,
        norm: RiskNorm::Linf,
        n_grid: (6..=10).map(|e| 1u64 << (2 * e)).collect(),
        j_max: 12,
        reps: 200,
        seed: 1212,
        approx_order: 0.5,
        out: None,
    };
    let report = run_risk(&spec).unwrap();
    let xs: Vec<f64> = report
        .rows
        .iter()
        .map(|r| (r.n as f64 / (r.n as f64).log2()).log2())
        .collect();
    let ys: Vec<f64> = report.rows.iter().map(|r| r.risk.log2()).collect();
    let (slope, _) = ols_slope(&xs, &ys).unwrap();
    let pass = (-0.43..=-0.23).contains(&slope);
    verdict(
        12,
        "adaptive-linf-rate-trend",
        pass,
        &format!("slope {slope:.4} of log2 risk vs log2(n/log2 n) in [-0.43, -0.23] (target -1/3)"),
    );
}

#[test]
fn criterion_13_determinism_across_thread_counts() {
    let risk_spec = ExperimentSpec {
        method: MethodSpec::AdaptiveTwopoint { s1: 0.4, s2: 1.0, radius: 1.0, p: 0.15 },
        signal: SignalSpec::BesovRandom { s: 1.0, radius: 1.0, ball: BesovKind::TwoInf, fill: 0.9 },
        machines: MachineRule::Fixed { m: 4 },
        budget: None,
        norm: RiskNorm::L2Sq,
        n_grid: vec![1 << 10, 1 << 11, 1 << 12],
        j_max: 8,
        reps: 20,
        seed: 1313,
        approx_order: 0.5,
        out: None,
    };
    let run_all = || -> (String, String, String) {
        let risk = json_string(&run_risk(&risk_spec).unwrap()).unwrap();
        let cal = serde_json::to_string(
            &run_calibration(1 << 13, 16, 0.5, 1.0, 1.0, 0.04, 1, 200, 1313).unwrap(),
        )
        .unwrap();
        let indis = serde_json::to_string(
            &run_indistinguishability(
                1 << 14,
                MachineRule::Power { p: 0.45 },
                1.0,
                2.0,
                1024.0,
                500,
                1313,
            )
            .unwrap(),
        )
        .unwrap();
        (risk, cal, indis)
    };
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(run_all);
    let quad = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(run_all);
    let pass = single == quad;
    verdict(
        13,
        "determinism-across-thread-counts",
        pass,
        "risk, calibration, and hard-instance reports byte-identical on 1 and 4 worker threads",
    );
}
