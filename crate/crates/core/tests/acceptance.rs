//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Thresholds are fixed; nothing here is tuned to the outcome.

use std::process::ExitCode;
use std::time::Instant;

use hypercrit::beta::{critical_profile, t_star, Alpha, BetaParams, BorelModel};
use hypercrit::bfw::{breadth_first_walk, RootPolicy};
use hypercrit::collapse::{domain_of, identify, PatchLimits};
use hypercrit::hypergraph::Hypergraph;
use hypercrit::rng::par_trials;
use hypercrit::scaling::{fluctuations, fluid_deviation, rescale_trace, simulate_wk, wk_exceedance_probability, WkConfig};
use hypercrit::stats::{empirical_pmf, fit_exponent, ks_one_sample, ks_two_sample, mean, median, normal_cdf, total_variation};
use hypercrit::walk::{first_domain_size, patches_at, sample_modified_walk, sample_walk, sequential_patch_walk};
use hypercrit::scaling::FluctuationEnsemble;
use rand::Rng;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn subcritical_k3() -> BetaParams {
    BetaParams::new(vec![0.5, 0.1]).unwrap()
}

fn subcritical_k4() -> BetaParams {
    BetaParams::new(vec![0.5, 1.0 / 6.0, 0.05]).unwrap()
}

fn supercritical_k3() -> BetaParams {
    critical_profile(3, 1.0 / 3.0).unwrap()
}

fn median_domain_slope(params: &BetaParams, seed: u64) -> (f64, Vec<f64>) {
    let ns = [1_000usize, 10_000, 100_000];
    let medians: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let sizes = par_trials(seed ^ n as u64, 500, |_, rng| first_domain_size(n, params, rng).unwrap() as f64);
            median(&sizes).unwrap()
        })
        .collect();
    let pairs: Vec<(f64, f64)> = ns.iter().map(|&n| n as f64).zip(medians.iter().copied()).collect();
    let slope = fit_exponent(&pairs).map(|f| f.slope).unwrap_or(f64::NAN);
    (slope, medians)
}

fn criterion_1() -> Outcome {
    let (s3, m3) = median_domain_slope(&subcritical_k3(), 101);
    let (s4, m4) = median_domain_slope(&subcritical_k4(), 102);
    let ok = (0.57..=0.77).contains(&s3) && (0.70..=0.90).contains(&s4);
    (
        ok,
        format!(
            "k=3 slope {s3:.3} (target {:.3}, window [0.57, 0.77], medians {m3:?}); \
             k=4 slope {s4:.3} (target {:.3}, window [0.70, 0.90], medians {m4:?})",
            Alpha::for_k(3).value(),
            Alpha::for_k(4).value()
        ),
    )
}

fn criterion_2() -> Outcome {
    let n = 100_000usize;
    let budget = (n as f64).powf(0.4).floor() as usize;
    let params = subcritical_k3();
    let limits = PatchLimits::new(0.5, budget).unwrap();
    let fractions = par_trials(201, 200, |_, rng| {
        sequential_patch_walk(n, &params, rng, limits).unwrap().identified_count as f64 / n as f64
    });
    let good = fractions.iter().filter(|&&f| f < 0.05).count() as f64 / fractions.len() as f64;
    let worst = fractions.iter().cloned().fold(0.0, f64::max);
    (good >= 0.99, format!("budget {budget}: X_N/N < 0.05 in {:.1}% of 200 trials (max {worst:.4})", 100.0 * good))
}

fn criterion_3() -> Outcome {
    let params = supercritical_k3();
    let star = t_star(&params, 0.0).value;
    let limits = PatchLimits::new(0.1 * star, usize::MAX).unwrap();
    let devs: Vec<(usize, f64, f64)> = [10_000usize, 100_000]
        .iter()
        .map(|&n| {
            let xs = par_trials(301 + n as u64, 200, |_, rng| {
                sequential_patch_walk(n, &params, rng, limits).unwrap().identified_count as f64 / n as f64
            });
            let m = mean(&xs).unwrap();
            (n, m, (m - star).abs())
        })
        .collect();
    let (_, m5, d5) = devs[1];
    let ok = (m5 - 0.684).abs() <= 0.02 && d5 < devs[0].2;
    (
        ok,
        format!(
            "t* = {star:.6}; mean X_N/N = {:.5} (N=1e4, |dev| {:.2e}), {m5:.5} (N=1e5, |dev| {d5:.2e})",
            devs[0].1, devs[0].2
        ),
    )
}

fn neg_inf_w3(trials: usize, seed: u64, dt: f64) -> Vec<f64> {
    let cfg = WkConfig::adaptive(dt, 3, 1.0);
    par_trials(seed, trials, |_, rng| simulate_wk(3, 1.0, &cfg, rng).unwrap().neg_infimum())
}

fn criterion_4() -> Outcome {
    let n = 100_000usize;
    let params = supercritical_k3();
    let delta = 0.1 * t_star(&params, 0.0).value;
    let scale = (n as f64).powf(-Alpha::for_k(3).value() / 2.0);
    let a = par_trials(401, 1000, |_, rng| patches_at(n, &params, rng, delta).unwrap() as f64 * scale);
    let w = neg_inf_w3(10_000, 402, 1e-3);
    let d = ks_two_sample(&a, &w).unwrap();
    (
        d <= 0.1,
        format!(
            "KS(N^-1/3 A_N, -inf W^3) = {d:.4}; medians {:.4} vs {:.4}",
            median(&a).unwrap(),
            median(&w).unwrap()
        ),
    )
}

fn rescaled_at_one(params: &BetaParams, n: usize, trials: usize, seed: u64) -> Vec<f64> {
    let alpha = Alpha::for_k(3).value();
    par_trials(seed, trials, |_, rng| {
        let horizon = ((n as f64).powf(alpha) + 1e-9).floor() as usize + 1;
        let trace = sample_walk(n, params, rng, horizon).unwrap();
        rescale_trace(&trace, alpha).unwrap().at(1.0).unwrap()
    })
}

fn criterion_5() -> Outcome {
    let n = 100_000;
    let graph = rescaled_at_one(&BetaParams::graph(0.5).unwrap(), n, 2000, 501);
    let d = ks_one_sample(&graph, |x| normal_cdf(-0.5, 1.0, x)).unwrap();
    let drift = mean(&rescaled_at_one(&supercritical_k3(), n, 2000, 502)).unwrap();
    (
        d <= 0.05 && drift > 0.0,
        format!("KS vs Normal(-0.5, 1) = {d:.4}; beta_3=1/3 mean at t=1 = {drift:.4}"),
    )
}

fn fluid_devs(n: usize, trials: usize, seed: u64) -> Vec<f64> {
    let params = supercritical_k3();
    let delta = 0.1 * t_star(&params, 0.0).value;
    par_trials(seed, trials, |_, rng| {
        let trace = sample_modified_walk(n, &params, rng, delta).unwrap();
        fluid_deviation(&trace, &params, 1.0).unwrap()
    })
}

fn criterion_6() -> Outcome {
    let big = fluid_devs(1_000_000, 50, 601);
    let small = fluid_devs(100_000, 50, 602);
    let within = big.iter().filter(|&&d| d <= 0.02).count() as f64 / big.len() as f64;
    let (mb, ms) = (median(&big).unwrap(), median(&small).unwrap());
    (
        within >= 0.95 && mb < ms,
        format!("N=1e6: {:.0}% of trials within 0.02; median sup-dev {mb:.5} (N=1e6) vs {ms:.5} (N=1e5)", 100.0 * within),
    )
}

fn criterion_7() -> Outcome {
    let n = 100_000usize;
    let params = BetaParams::graph(1.0).unwrap();
    let grid = [0.25, 0.5, 0.7];
    let horizon = (n as f64 * 0.7) as usize + 1;
    let paths = par_trials(701, 400, |_, rng| {
        let trace = sample_walk(n, &params, rng, horizon).unwrap();
        fluctuations(&trace, &params, &grid).unwrap()
    });
    let e = FluctuationEnsemble::from_paths(&params, &grid, paths).unwrap();
    let rel: Vec<f64> = e.variance.iter().zip(&e.oracle_variance).map(|(v, o)| (v - o).abs() / o).collect();
    let detail: Vec<String> = (0..grid.len())
        .map(|j| format!("t={}: {:.4} vs {:.4}", grid[j], e.variance[j], e.oracle_variance[j]))
        .collect();
    (rel.iter().all(|&r| r <= 0.15), format!("variances {}", detail.join(", ")))
}

/// Least fixed point by scanning: repeatedly identify the last vertex of any
/// edge whose other vertices are all identified.
fn lfp(n: usize, edges: &[Vec<usize>], patches: &[usize]) -> Vec<usize> {
    let mut known = vec![false; n];
    for &p in patches {
        known[p] = true;
    }
    loop {
        let mut changed = false;
        for e in edges {
            let unknown: Vec<usize> = e.iter().copied().filter(|&v| !known[v]).collect();
            if unknown.len() == 1 {
                known[unknown[0]] = true;
                changed = true;
            }
        }
        if !changed {
            return (0..n).filter(|&v| known[v]).collect();
        }
    }
}

fn subsets_of_size_at_least_two(n: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() >= 2)
        .map(|m| (0..n).filter(|&v| m >> v & 1 == 1).collect())
        .collect()
}

fn criterion_8() -> Outcome {
    // (a) every edge set on N <= 4, and every set of at most two edges
    // (with repeats) on N = 5, 6, against every patch set
    let mut families: Vec<(usize, Vec<Vec<usize>>)> = Vec::new();
    for n in 1..=4 {
        let all = subsets_of_size_at_least_two(n);
        for mask in 0u32..1 << all.len() {
            let edges = (0..all.len()).filter(|&j| mask >> j & 1 == 1).map(|j| all[j].clone()).collect();
            families.push((n, edges));
        }
    }
    for n in 5..=6 {
        let all = subsets_of_size_at_least_two(n);
        families.push((n, Vec::new()));
        for i in 0..all.len() {
            for j in i..all.len() {
                families.push((n, vec![all[i].clone(), all[j].clone()]));
            }
            families.push((n, vec![all[i].clone()]));
        }
    }
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    for (n, edges) in &families {
        let h = Hypergraph::from_edges(*n, edges).unwrap();
        for pmask in 0u32..1 << n {
            let patches: Vec<usize> = (0..*n).filter(|&v| pmask >> v & 1 == 1).collect();
            if identify(&h, &patches).unwrap() != lfp(*n, edges, &patches) {
                mismatches += 1;
            }
            checked += 1;
        }
    }
    let a = mismatches == 0;

    // (b) materialized walk vs sequential sampler at N = 50
    let params = BetaParams::graph(0.5).unwrap();
    let marks = [5usize, 10, 25];
    let from_graph = par_trials(801, 10_000, |_, rng| {
        let h = Hypergraph::sample(50, &params, rng).unwrap();
        let t = breadth_first_walk(&h, rng, RootPolicy::UniformRandom);
        marks.map(|i| t.z[i] as f64)
    });
    let from_law = par_trials(802, 10_000, |_, rng| {
        let t = sample_walk(50, &params, rng, 25).unwrap();
        marks.map(|i| t.z[i] as f64)
    });
    let ks: Vec<f64> = (0..marks.len())
        .map(|j| {
            let x: Vec<f64> = from_graph.iter().map(|r| r[j]).collect();
            let y: Vec<f64> = from_law.iter().map(|r| r[j]).collect();
            ks_two_sample(&x, &y).unwrap()
        })
        .collect();
    let b = ks.iter().all(|&d| d <= 0.03);

    // (c) Borel survival vs t*
    let surv = BorelModel::new(2.0).unwrap().survival();
    let ts = t_star(&BetaParams::graph(1.0).unwrap(), 0.0).value;
    let c = (surv - ts).abs() <= 1e-8;

    // (d) Gaussian exceedance at R = 1
    let cfg = WkConfig::fixed(1e-3, 1.0);
    let hits = par_trials(804, 10_000, |_, rng| simulate_wk(3, 1.0, &cfg, rng).unwrap().end_value > 1.0);
    let p = hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64;
    let exact = wk_exceedance_probability(3, 1.0, 1.0);
    let d = (p - exact).abs() <= 0.02;

    (
        a && b && c && d,
        format!(
            "(a) {checked} cases, {mismatches} mismatches; (b) KS at Z(5),Z(10),Z(25) = {ks:.4?}; \
             (c) |{surv:.12} - {ts:.12}| = {:.1e}; (d) P(W(1) > 1) = {p:.4} vs {exact:.4}",
            (surv - ts).abs()
        ),
    )
}

fn criterion_9() -> Outcome {
    let n = 10_000;
    let params = BetaParams::graph(0.3).unwrap();
    let sizes = par_trials(901, 10_000, |_, rng| {
        let h = Hypergraph::sample(n, &params, rng).unwrap();
        let v = rng.random_range(0..n);
        domain_of(&h, v).unwrap().len()
    });
    let max = 30;
    let emp = empirical_pmf(&sizes, max);
    let borel = BorelModel::new(0.6).unwrap();
    let law: Vec<f64> = (0..=max as u64).map(|m| borel.pmf(m)).collect();
    let tv = total_variation(&emp, &law).unwrap();
    (tv <= 0.02, format!("TV(domain sizes <= 30, Borel(0.6)) = {tv:.4}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 subcritical domain scaling", criterion_1),
        ("2 vanishing identified fraction", criterion_2),
        ("3 giant-set size", criterion_3),
        ("4 patch-count limit law", criterion_4),
        ("5 critical walk marginal", criterion_5),
        ("6 fluid limit", criterion_6),
        ("7 fluctuation variance", criterion_7),
        ("8 oracle equivalences", criterion_8),
        ("9 Borel small domains", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = run();
        println!(
            "criterion {name}: {} [{:.1}s] {detail}",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!ok);
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    }
}
