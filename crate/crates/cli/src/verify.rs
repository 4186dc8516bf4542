//! The verification suite: oracle comparisons, structural properties,
//! channel statistics and trend reproduction, each reported as a single
//! pass/fail outcome. `semra verify` runs all of them and the acceptance
//! tests assert them one by one.

use std::fmt::Write as _;
use std::time::Instant;

use semra_core::channel::{transmit, ChannelConfig, ChannelModel};
use semra_core::corpus::stub_embedding;
use semra_core::metrics::{bleu, semantic_accuracy, semantic_completeness};
use semra_core::optimizer::{
    brute_force, diminishing_returns_check, dual_ascent_with, greedy_select, lagrangian,
    lagrangian_grad, primal_dual_kkt_with, Multipliers, ProblemInstance, SolveReport,
    SolverOptions,
};
use semra_core::rng::CounterRng;
use semra_core::testgen::{interior_instance, mixed_instance, submodular_instance};

use crate::config::{RunConfig, Solver};
use crate::pipeline::build_codebook;
use crate::sweep::{run_grid_point, run_sweep, sweep_csv};
use crate::synth::synthetic_corpus;

pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "{}: criterion {:2} {:<22} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

const ORACLE_INSTANCES: u64 = 200;
const ORACLE_TOLERANCE: f64 = 0.05;

fn solve_all(seed: u64) -> (ProblemInstance, SolveReport, SolveReport, SolveReport) {
    let inst = mixed_instance(seed);
    let options = SolverOptions { trace: true, trace_multipliers: false };
    let brute = brute_force(&inst).expect("oracle instances are valid");
    let dual = dual_ascent_with(&inst, &options).expect("oracle instances are valid");
    let kkt = primal_dual_kkt_with(&inst, &options).expect("oracle instances are valid");
    (inst, brute, dual, kkt)
}

/// Criterion 1: both relaxation solvers' rounded solutions land within 5%
/// of the exhaustive optimum on 200 mixed instances, within the time budget.
pub fn oracle_equivalence() -> CriterionOutcome {
    let start = Instant::now();
    let mut failures = 0;
    let mut worst: f64 = 1.0;
    for seed in 0..ORACLE_INSTANCES {
        let (_, brute, dual, kkt) = solve_all(seed);
        let bound = brute.objective * (1.0 + ORACLE_TOLERANCE) + 1e-9;
        for report in [&dual, &kkt] {
            if report.objective > bound {
                failures += 1;
            }
            if brute.objective > 1e-12 {
                worst = worst.max(report.objective / brute.objective);
            }
        }
    }
    let elapsed = start.elapsed();
    let within_budget = elapsed.as_secs_f64() < 60.0;
    CriterionOutcome {
        id: 1,
        name: "oracle equivalence",
        passed: failures == 0 && within_budget,
        detail: format!(
            "{ORACLE_INSTANCES} instances, {failures} beyond 5% (worst ratio {worst:.4}), {:.1}s",
            elapsed.as_secs_f64()
        ),
    }
}

/// Criterion 2: greedy reaches the (1 - 1/e - 0.01) fraction of the best
/// improvement on 200 monotone-submodular cardinality instances.
pub fn greedy_ratio() -> CriterionOutcome {
    let threshold = 1.0 - 1.0 / std::f64::consts::E - 0.01;
    let mut violations = 0;
    let mut worst = f64::MAX;
    for seed in 0..200u64 {
        let inst = submodular_instance(seed);
        let empty = inst.objective_at(&vec![0.0; inst.n()]);
        let brute = brute_force(&inst).expect("submodular instances are valid");
        let greedy = greedy_select(&inst).expect("submodular instances are valid");
        let best = empty - brute.objective;
        if best <= 1e-12 {
            continue;
        }
        let ratio = (empty - greedy.objective) / best;
        worst = worst.min(ratio);
        if ratio < threshold {
            violations += 1;
        }
    }
    CriterionOutcome {
        id: 2,
        name: "greedy ratio",
        passed: violations == 0,
        detail: format!("200 instances, {violations} below {threshold:.4} (worst {worst:.4})"),
    }
}

/// Criterion 3: diminishing returns holds over 500 sampled nested pairs.
pub fn diminishing_returns() -> CriterionOutcome {
    let mut total_violations = 0;
    let mut trials = 0;
    for seed in 0..10u64 {
        let inst = submodular_instance(seed);
        let report =
            diminishing_returns_check(&inst, 50, seed).expect("hypothesis holds by construction");
        total_violations += report.violations;
        trials += report.trials;
    }
    CriterionOutcome {
        id: 3,
        name: "diminishing returns",
        passed: total_violations == 0 && trials == 500,
        detail: format!("{trials} trials, {total_violations} violations at 1e-9"),
    }
}

/// Criterion 4: every logged dual value lower-bounds the binary optimum.
pub fn weak_duality() -> CriterionOutcome {
    let mut violations = 0;
    let mut logged = 0usize;
    for seed in 0..ORACLE_INSTANCES {
        let (_, brute, dual, kkt) = solve_all(seed);
        for report in [&dual, &kkt] {
            for row in report.trace.as_ref().expect("tracing was requested") {
                logged += 1;
                if row.dual_value > brute.objective + 1e-8 {
                    violations += 1;
                }
            }
        }
    }
    CriterionOutcome {
        id: 4,
        name: "weak duality",
        passed: violations == 0,
        detail: format!("{logged} logged iterations, {violations} above the primal"),
    }
}

/// Criterion 5: stationarity and complementary slackness at convergence on
/// strictly convex interior instances.
pub fn kkt_convergence() -> CriterionOutcome {
    let mut bad_residual = 0;
    let mut bad_slackness = 0;
    let count = 100u64;
    for seed in 0..count {
        let inst = interior_instance(seed);
        let report = primal_dual_kkt_with(&inst, &SolverOptions::default())
            .expect("interior instances are valid");
        if !report.converged || report.kkt_residual.unwrap_or(f64::MAX) > 1e-6 {
            bad_residual += 1;
            continue;
        }
        let s = &report.relaxed.as_ref().unwrap().values;
        let mult = report.multipliers.as_ref().unwrap();
        if max_slackness_product(&inst, s, mult) > 1e-6 {
            bad_slackness += 1;
        }
    }
    CriterionOutcome {
        id: 5,
        name: "kkt convergence",
        passed: bad_residual == 0 && bad_slackness == 0,
        detail: format!(
            "{count} instances, {bad_residual} residual failures, {bad_slackness} slackness failures"
        ),
    }
}

fn max_slackness_product(inst: &ProblemInstance, s: &[f64], mult: &Multipliers) -> f64 {
    let n = inst.n();
    let c = &inst.constraints;
    let mut worst: f64 = 0.0;
    if c.max_tokens != usize::MAX {
        worst = worst.max((mult.budget * (s.iter().sum::<f64>() - c.max_tokens as f64)).abs());
    }
    for i in 0..n {
        worst = worst.max((mult.kg[i] * (inst.kl[i] - c.max_kl)).abs());
        worst = worst.max((mult.recon[i] * (inst.recon_error[i] - c.max_recon_error) * s[i]).abs());
        worst = worst.max((mult.snr[i] * s[i] * (c.min_snr - inst.snr[i])).abs());
    }
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max(
                (mult.redundancy[k] * (s[i] + s[j] - 1.0 - inst.redundancy_slack(i, j))).abs(),
            );
            k += 1;
        }
    }
    worst
}

/// Criterion 6: the analytic stationarity gradient matches central finite
/// differences at 100 random interior points.
pub fn gradient_check() -> CriterionOutcome {
    let mut checked = 0;
    let mut failures = 0;
    let mut seed = 0u64;
    while checked < 100 {
        let inst = mixed_instance(seed);
        let n = inst.n();
        let rng = CounterRng::new(seed ^ 0x62ad_c4ec);
        let point: Vec<f64> = (0..n).map(|i| 0.1 + 0.8 * rng.uniform(0, i as u64)).collect();
        let mut mult = Multipliers::zeros(n, 0.05);
        mult.budget = rng.uniform(1, 0);
        for i in 0..n {
            mult.kg[i] = rng.uniform(2, i as u64);
            mult.recon[i] = rng.uniform(3, i as u64);
            mult.snr[i] = rng.uniform(4, i as u64);
        }
        for (k, slot) in mult.redundancy.iter_mut().enumerate() {
            *slot = rng.uniform(5, k as u64);
        }

        let grad = lagrangian_grad(&inst, &point, &mult);
        let h = 1e-5;
        for i in 0..n {
            let mut hi = point.clone();
            let mut lo = point.clone();
            hi[i] += h;
            lo[i] -= h;
            let numeric =
                (lagrangian(&inst, &hi, &mult) - lagrangian(&inst, &lo, &mult)) / (2.0 * h);
            let scale = numeric.abs().max(grad[i].abs()).max(1e-8);
            if (numeric - grad[i]).abs() / scale > 1e-6 {
                failures += 1;
            }
            checked += 1;
            if checked == 100 {
                break;
            }
        }
        seed += 1;
    }
    CriterionOutcome {
        id: 6,
        name: "gradient check",
        passed: failures == 0,
        detail: format!("100 interior points, {failures} beyond relative 1e-6"),
    }
}

/// Criterion 7: frozen metric values and the exact argument-swap duality.
pub fn metrics_golden() -> CriterionOutcome {
    let mut detail = String::new();
    let mut passed = true;

    let golden =
        bleu(&["a", "b", "c", "d"], &["a", "b", "c", "d", "e", "f"], 2, &[0.5, 0.5]).unwrap();
    if (golden - 0.3836).abs() > 1e-3 {
        passed = false;
        let _ = write!(detail, "n-gram golden {golden:.6} off 0.3836; ");
    }

    let accuracy = semantic_accuracy(&["the", "cat"], &["the", "cat", "cat"]).unwrap();
    if accuracy != 2.0 / 3.0 {
        passed = false;
        let _ = write!(detail, "accuracy {accuracy} != 2/3; ");
    }
    let completeness = semantic_completeness(&["the", "cat"], &["the", "cat", "cat"]).unwrap();
    if completeness != 1.0 {
        passed = false;
        let _ = write!(detail, "completeness {completeness} != 1; ");
    }

    let rng = CounterRng::new(0x7e57);
    let mut swap_failures = 0;
    for pair in 0..1000u64 {
        let len_a = 1 + rng.below(0, 2 * pair, 10) as usize;
        let len_b = 1 + rng.below(0, 2 * pair + 1, 10) as usize;
        let a: Vec<u8> = (0..len_a).map(|i| rng.below(1, pair * 16 + i as u64, 6) as u8).collect();
        let b: Vec<u8> = (0..len_b).map(|i| rng.below(2, pair * 16 + i as u64, 6) as u8).collect();
        if semantic_accuracy(&a, &b).unwrap() != semantic_completeness(&b, &a).unwrap() {
            swap_failures += 1;
        }
    }
    if swap_failures > 0 {
        passed = false;
        let _ = write!(detail, "{swap_failures} swap-duality failures; ");
    }
    if detail.is_empty() {
        detail = format!("golden {golden:.6}, 1000 exact swap pairs");
    }
    CriterionOutcome { id: 7, name: "metrics golden values", passed, detail }
}

/// Criterion 8: fading gain second moment and error-rate monotonicity.
pub fn channel_statistics() -> CriterionOutcome {
    let start = Instant::now();
    let mut detail = String::new();
    let mut passed = true;

    // |h|^2 over one million draws via single-symbol blocks at 0 dB
    let book: Vec<Vec<f64>> =
        (0..4).map(|i| stub_embedding(&format!("cw{i}"), 2, 9)).collect();
    let cfg = ChannelConfig { model: ChannelModel::Rayleigh, snr_db: 0.0, seed: 77, block_len: 1 };
    let selected: Vec<Vec<f64>> = (0..1_000_000).map(|i| book[i % 4].clone()).collect();
    let result = transmit(&selected, &book, &cfg).unwrap();
    let mean: f64 = result.realized_snr.iter().sum::<f64>() / result.realized_snr.len() as f64;
    if (mean - 1.0).abs() > 0.01 {
        passed = false;
        let _ = write!(detail, "fading second moment {mean:.4}; ");
    }

    // token error rate across the sweep, 100 seeds
    let dim = 16;
    let codebook: Vec<Vec<f64>> =
        (0..64).map(|i| stub_embedding(&format!("word{i}"), dim, 21)).collect();
    let mut rates = Vec::new();
    for snr_db in [0.0, 5.0, 10.0, 15.0, 20.0] {
        let mut errors = 0usize;
        let mut total = 0usize;
        for seed in 0..100u64 {
            let cfg = ChannelConfig { model: ChannelModel::Rayleigh, snr_db, seed, block_len: 8 };
            let payload: Vec<Vec<f64>> =
                (0..25).map(|i| codebook[(i * 11 + seed as usize) % 64].clone()).collect();
            let out = transmit(&payload, &codebook, &cfg).unwrap();
            errors += out.error_count();
            total += 25;
        }
        rates.push(errors as f64 / total as f64);
    }
    for pair in rates.windows(2) {
        if pair[1] > pair[0] + 0.01 {
            passed = false;
            let _ = write!(detail, "error rate not monotone {rates:?}; ");
            break;
        }
    }

    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 120.0 {
        passed = false;
        let _ = write!(detail, "over time budget; ");
    }
    if detail.is_empty() {
        detail = format!(
            "|h|^2 mean {mean:.4}, rates {:?}, {:.1}s",
            rates.iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            elapsed.as_secs_f64()
        );
    }
    CriterionOutcome { id: 8, name: "channel statistics", passed, detail }
}

/// Criterion 9: accuracy and completeness rise with SNR within two standard
/// errors, and the compression histogram shifts down as the cost weight
/// grows.
pub fn trend_reproduction() -> CriterionOutcome {
    let corpus = synthetic_corpus(500, 2024);
    let mut cfg = RunConfig::default();
    cfg.selection.solver = Solver::Greedy;
    cfg.sweep.seeds = vec![0, 1, 2];
    let codebooks = build_codebook(&corpus).expect("synthetic corpus yields a codebook");

    let mut detail = String::new();
    let mut passed = true;

    // metric trends over the sweep
    let snrs = [0.0, 5.0, 10.0, 15.0, 20.0];
    let mut acc_stats = Vec::new();
    let mut comp_stats = Vec::new();
    for &snr in &snrs {
        let mut acc = Vec::new();
        let mut comp = Vec::new();
        for &seed in &cfg.sweep.seeds {
            let point = run_grid_point(&corpus, &cfg, &codebooks, snr, seed)
                .expect("grid point runs cleanly");
            acc.extend(point.outcomes.iter().map(|o| o.metrics.accuracy));
            comp.extend(point.outcomes.iter().map(|o| o.metrics.completeness));
        }
        acc_stats.push(mean_sem(&acc));
        comp_stats.push(mean_sem(&comp));
    }
    for (name, stats) in [("accuracy", &acc_stats), ("completeness", &comp_stats)] {
        for window in stats.windows(2) {
            let (mean_lo, sem_lo) = window[0];
            let (mean_hi, sem_hi) = window[1];
            if mean_hi < mean_lo - 2.0 * sem_lo.max(sem_hi) {
                passed = false;
                let _ = write!(detail, "{name} dropped {mean_lo:.4} -> {mean_hi:.4}; ");
            }
        }
    }

    // compression shifts down as the cost weight grows
    let mut mean_ratios = Vec::new();
    for cost_weight in [0.01, 0.1, 1.0] {
        let mut tuned = cfg.clone();
        tuned.weights.cost_weight = cost_weight;
        tuned.channel.snr_db = 10.0;
        let point = run_grid_point(&corpus, &tuned, &codebooks, 10.0, 0)
            .expect("grid point runs cleanly");
        let ratios: Vec<f64> = point.outcomes.iter().map(|o| o.compression_ratio).collect();
        mean_ratios.push(ratios.iter().sum::<f64>() / ratios.len() as f64);
    }
    if !(mean_ratios[0] > mean_ratios[1] && mean_ratios[1] > mean_ratios[2]) {
        passed = false;
        let _ = write!(detail, "compression did not shift down {mean_ratios:?}; ");
    }

    if detail.is_empty() {
        detail = format!(
            "accuracy {:.3}->{:.3}, completeness {:.3}->{:.3}, ratios {:?}",
            acc_stats[0].0,
            acc_stats[4].0,
            comp_stats[0].0,
            comp_stats[4].0,
            mean_ratios.iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        );
    }
    CriterionOutcome { id: 9, name: "trend reproduction", passed, detail }
}

fn mean_sem(values: &[f64]) -> (f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let variance =
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    (mean, (variance / values.len() as f64).sqrt())
}

/// Criterion 10: two sweep executions over identical configuration produce
/// byte-identical CSV.
pub fn determinism() -> CriterionOutcome {
    let corpus = synthetic_corpus(60, 7);
    let mut cfg = RunConfig::default();
    cfg.sweep.snrs_db = vec![0.0, 10.0, 20.0];
    cfg.sweep.seeds = vec![0, 1];

    let render = || -> String {
        let points = run_sweep(&corpus, &cfg).expect("sweep runs cleanly");
        let rows: Vec<_> = points.iter().map(|p| p.to_row()).collect();
        sweep_csv(&rows)
    };
    let first = render();
    let second = render();
    CriterionOutcome {
        id: 10,
        name: "determinism",
        passed: first == second,
        detail: format!("{} bytes per run, identical: {}", first.len(), first == second),
    }
}

/// Runs every criterion in order.
pub fn run_all() -> Vec<CriterionOutcome> {
    vec![
        oracle_equivalence(),
        greedy_ratio(),
        diminishing_returns(),
        weak_duality(),
        kkt_convergence(),
        gradient_check(),
        metrics_golden(),
        channel_statistics(),
        trend_reproduction(),
        determinism(),
    ]
}
