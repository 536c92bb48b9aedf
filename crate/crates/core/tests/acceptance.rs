//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use bulkjl::batching::binomial;
use bulkjl::bounds::{gaussian_constants, hw_tail_rate, retraction_bound, EpsilonSplit, TailVariant};
use bulkjl::estimation::{estimate_rhat, rhat_sample_size, second_moment, DiscreteLaw};
use bulkjl::harness::{
    empirical_tail, run_experiment, synth, DataSource, ExperimentConfig, SynthKind, SynthParams, TheoremChoice,
};
use bulkjl::matrix::{intrinsic_dimension, singular_spectrum, stable_ranks, symmetric_operator_norm};
use bulkjl::projection::EntryDist;
use bulkjl::rng::PhiloxStream;
use bulkjl::walecki::{decompose, Edge, SubgraphKind};
use bulkjl::Matrix;
use rand_core::RngCore;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(start: Instant, limit: Duration) -> (bool, String) {
    let t = start.elapsed();
    (t < limit, format!("{:.2}s of {:.0}s", t.as_secs_f64(), limit.as_secs_f64()))
}

fn difference_matrix(points: &Matrix, edges: &[Edge]) -> Matrix {
    let d = points.cols();
    let cols: Vec<Vec<f64>> =
        edges.iter().map(|e| (0..d).map(|c| points.get(e.u, c) - points.get(e.v, c)).collect()).collect();
    Matrix::from_columns(d, &cols).unwrap()
}

fn walecki_exhaustive() -> Outcome {
    let start = Instant::now();
    let mut problems = Vec::new();
    for n in 3..=300usize {
        let dec = decompose(n).unwrap();
        let idx = |e: &Edge| e.u * n + e.v;
        let mut seen = vec![0u8; n * n];
        for s in &dec.subgraphs {
            for e in &s.edges {
                seen[idx(e)] += 1;
            }
        }
        let total: usize = seen.iter().map(|&c| c as usize).sum();
        let all_once = (0..n).all(|u| (u + 1..n).all(|v| seen[u * n + v] == 1));
        if total != n * (n - 1) / 2 || !all_once {
            problems.push(format!("N={n}: not a partition"));
        }
        let expected_cycles = if n % 2 == 1 { (n - 1) / 2 } else { (n - 2) / 2 };
        if dec.cycles.len() != expected_cycles {
            problems.push(format!("N={n}: {} cycles", dec.cycles.len()));
        }
        if n % 2 == 0 {
            let ok = dec.leftover().is_some_and(|l| l.edges.len() == n / 2)
                && dec.subgraphs.len() == n - 1
                && dec.subgraphs.iter().all(|s| s.edges.len() == n / 2);
            if !ok {
                problems.push(format!("N={n}: one-factor sizes"));
            }
        } else if n >= 7 {
            let expected = if n % 4 == 3 {
                [(n - 1) / 2, (n + 1) / 4, (n + 1) / 4]
            } else {
                [(n - 1) / 2, n.div_ceil(4), (n - 1) / 4]
            };
            for j in 0..expected_cycles {
                let size = |kind: SubgraphKind| {
                    dec.subgraphs.iter().find(|s| s.kind == kind).map(|s| s.edges.len()).unwrap_or(0)
                };
                let got = [size(SubgraphKind::WOdd(j)), size(SubgraphKind::W0Plus(j)), size(SubgraphKind::W0Minus(j))];
                if got != expected {
                    problems.push(format!("N={n} j={j}: sizes {got:?}, expected {expected:?}"));
                }
            }
        }
    }
    let (fast, time) = within(start, Duration::from_secs(10));
    outcome(problems.is_empty() && fast, format!("{} problems; {time}; {}", problems.len(), problems.join("; ")))
}

fn circulant_spectrum() -> Outcome {
    let start = Instant::now();
    let mut worst_err = 0.0f64;
    let mut worst_rank_margin = f64::INFINITY;
    let mut worst_star = 0.0f64;
    for d in 3..=64usize {
        let points = Matrix::identity(d);
        let cycle = &decompose(d).unwrap().cycles[0];
        let y = difference_matrix(&points, cycle);
        let mut got: Vec<f64> = singular_spectrum(&y).unwrap().values.iter().map(|s| s * s).collect();
        got.sort_by(f64::total_cmp);
        let mut want: Vec<f64> =
            (0..d).map(|j| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * j as f64 / d as f64).cos()).collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            worst_err = worst_err.max((g - w).abs());
        }
        let r = stable_ranks(&y).unwrap().r_inf;
        worst_rank_margin = worst_rank_margin.min(r - d as f64 / 2.0);

        let star: Vec<Edge> = (1..d).map(|v| Edge::new(0, v)).collect();
        worst_star = worst_star.max(stable_ranks(&difference_matrix(&points, &star)).unwrap().r_inf);
    }
    let (fast, time) = within(start, Duration::from_secs(5));
    outcome(
        worst_err <= 1e-9 && worst_rank_margin >= -1e-9 && worst_star <= 2.0 + 1e-12 && fast,
        format!(
            "max |sigma^2 err| {worst_err:.2e}; min r_inf - D/2 = {worst_rank_margin:.3}; max star r_inf {worst_star:.4}; {time}"
        ),
    )
}

fn simplex_end_to_end() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        data: DataSource::Synthetic { kind: SynthKind::Simplex, params: SynthParams::new(0, 256), seed: 0 },
        theorem: TheoremChoice::Simplex,
        eta: 0.1,
        zeta: None,
        eps: 0.5,
        delta: 0.05,
        dist: EntryDist::Gaussian,
        trials: 100,
        master_seed: 20_240_501,
    };
    match run_experiment(&cfg) {
        Ok(report) => {
            let good = report.fractions.iter().filter(|&&f| f >= 1.0 - 2.0 * cfg.eta).count();
            let (fast, time) = within(start, Duration::from_secs(120));
            outcome(
                good >= 88 && fast,
                format!(
                    "k={} {good}/100 trials at fraction >= 0.8 (need 88); min fraction {:.4}; {time}",
                    report.k_used, report.min_fraction
                ),
            )
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn hanson_wright_tails() -> Outcome {
    let start = Instant::now();
    let geometric: Vec<f64> = (1..=16).map(|j| 0.8f64.powi(j)).collect();
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, a) in [("identity", Matrix::identity(16)), ("geometric", Matrix::from_diagonal(&geometric))] {
        let rep = empirical_tail(&a, 8, 0.5, 100_000, 77, EntryDist::Gaussian).unwrap();
        let ranks = stable_ranks(&a).unwrap();
        let up_bound = hw_tail_rate(&ranks, 8, 0.5, TailVariant::GaussianUpper).unwrap();
        let low_bound = hw_tail_rate(&ranks, 8, 0.5, TailVariant::GaussianLower).unwrap();
        if name == "identity" {
            pass &= (up_bound - (-4.0f64).exp()).abs() < 1e-15 && (low_bound - (-8.0f64).exp()).abs() < 1e-15;
        }
        pass &= rep.upper.consistent_with_at_most(up_bound) && rep.lower.consistent_with_at_most(low_bound);
        lines.push(format!(
            "{name}: upper {:.2e} [{:.2e},{:.2e}] vs {up_bound:.2e}, lower {:.2e} [{:.2e},{:.2e}] vs {low_bound:.2e}",
            rep.upper.rate,
            rep.upper.wilson_low,
            rep.upper.wilson_high,
            rep.lower.rate,
            rep.lower.wilson_low,
            rep.lower.wilson_high
        ));
    }
    let (fast, time) = within(start, Duration::from_secs(60));
    lines.push(time);
    outcome(pass && fast, lines.join("; "))
}

fn epsilon_identities() -> Outcome {
    let mut worst = 0.0f64;
    for theta in [1.0, 2f64.sqrt(), 3.0] {
        for i in 1..=1000 {
            let eps = i as f64 / 1001.0;
            let s = EpsilonSplit::new(eps, theta * theta, 1.0).unwrap();
            worst = worst
                .max(((1.0 - eps).powi(2) / s.gamma - (1.0 - s.eps_minus)).abs())
                .max(((1.0 + eps).powi(2) / s.gamma - (1.0 + s.eps_plus)).abs())
                .max((s.eps_plus - theta * s.eps_minus).abs());
        }
    }
    let mut max_c = 0.0f64;
    for i in 1..=1000 {
        let eps = (2.0 / 3.0) * i as f64 / 1000.0;
        max_c = max_c.max(gaussian_constants(eps).unwrap().0);
    }
    outcome(
        worst <= 1e-12 && max_c < 2.25,
        format!("max identity residual {worst:.2e}; max C(eps) on (0,2/3] {max_c:.6}"),
    )
}

fn rhat_estimator() -> Outcome {
    let start = Instant::now();
    let d = 32;
    let m = rhat_sample_size(d, 0.05);
    // For iid Gaussian coordinates y_hat is uniform on the sphere, so r_hat = D.
    let truth = d as f64;
    let estimates: Vec<f64> = (0..50u64)
        .into_par_iter()
        .map(|rep| {
            let ds = synth(SynthKind::IidGaussian, &SynthParams::new(2 * m + 1, d), 1000 + rep).unwrap();
            estimate_rhat(&ds, 0.05).unwrap().rhat_lower
        })
        .collect();
    let hits = estimates.iter().filter(|&&r| r >= truth / 5.0 && r <= truth).count();
    let (lo, hi) = estimates.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let (fast, time) = within(start, Duration::from_secs(60));
    outcome(hits >= 45 && fast, format!("m={m}; {hits}/50 in [6.4, 32] (need 45); range [{lo:.3}, {hi:.3}]; {time}"))
}

fn isotropic_retraction() -> Outcome {
    let d = 8;
    let samples = 100_000;
    let mut lines = Vec::new();
    let mut pass = true;
    for kind in [SynthKind::IidCauchy, SynthKind::IidGaussian] {
        let ds = synth(kind, &SynthParams::new(2 * samples, d), 99).unwrap();
        let cols: Vec<Vec<f64>> = (0..samples)
            .map(|p| {
                let y = ds.difference(2 * p, 2 * p + 1);
                let n = y.iter().map(|x| x * x).sum::<f64>().sqrt();
                y.into_iter().map(|x| x / n).collect()
            })
            .collect();
        let sigma = second_moment(&Matrix::from_columns(d, &cols).unwrap());
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d as f64 * sigma.get(i, j) - target).abs());
            }
        }
        pass &= worst <= 0.05;
        lines.push(format!("{kind:?}: max |D Sigma_hat - I| = {worst:.4}"));
    }
    outcome(pass, lines.join("; "))
}

fn random_constant_norm_matrix(s: &mut PhiloxStream, d: usize, m: usize) -> Matrix {
    let norm = 0.1 + 10.0 * s.next_f64();
    let cols: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| s.next_gaussian()).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| norm * x / n).collect()
        })
        .collect();
    Matrix::from_columns(d, &cols).unwrap()
}

fn subset_stable_rank() -> Outcome {
    let worst = (0..200u64)
        .into_par_iter()
        .map(|case| {
            let mut s = PhiloxStream::new(8, case);
            let d = 1 + (s.next_u32() % 32) as usize;
            let m_total = 1 + (s.next_u32() % 24) as usize;
            let a = random_constant_norm_matrix(&mut s, d, m_total);
            let r_a = stable_ranks(&a).unwrap().r_inf;
            let mut subsets: Vec<Vec<usize>> = Vec::new();
            for i in 0..m_total {
                for j in i + 1..=m_total {
                    subsets.push((i..j).collect());
                }
            }
            for _ in 0..100 {
                let mut idx: Vec<usize> = (0..m_total).collect();
                for i in (1..m_total).rev() {
                    idx.swap(i, (s.next_u64() % (i as u64 + 1)) as usize);
                }
                let size = 1 + (s.next_u32() as usize % m_total);
                idx.truncate(size);
                subsets.push(idx);
            }
            subsets
                .iter()
                .map(|cols| {
                    let b = a.select_columns(cols).unwrap();
                    let r_b = stable_ranks(&b).unwrap().r_inf;
                    let bound = (cols.len() as f64 / m_total as f64 * r_a).max(1.0);
                    r_b / bound
                })
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    outcome(worst >= 1.0 - 1e-12, format!("min r_inf(B)/max((m/M) r_inf(A), 1) = {worst:.15}"))
}

fn retraction_lemma() -> Outcome {
    let mut worst_slack = f64::INFINITY;
    for case in 0..20u64 {
        let mut s = PhiloxStream::new(9, case);
        let d = 2 + (s.next_u32() % 5) as usize;
        let count = 3 + (s.next_u32() % 6) as usize;
        let scales = [1e-2, 0.3, 1.0, 4.0];
        let atoms: Vec<Vec<f64>> = (0..count)
            .map(|_| {
                let scale = scales[(s.next_u32() % 4) as usize];
                (0..d).map(|_| scale * s.next_gaussian()).collect()
            })
            .collect();
        let raw: Vec<f64> = (0..count).map(|_| 0.05 + s.next_f64()).collect();
        let total: f64 = raw.iter().sum();
        let weights = raw.iter().map(|w| w / total).collect();
        let law = DiscreteLaw::new(atoms, weights).unwrap();
        let r = intrinsic_dimension(&law.second_moment()).unwrap();
        let sigma_hat = symmetric_operator_norm(&law.unit_second_moment()).unwrap();
        for eps in [0.1, 0.5, 0.9] {
            let bound = retraction_bound(r, law.small_ball(eps), eps).unwrap().sigma_hat_upper;
            worst_slack = worst_slack.min(bound - sigma_hat);
        }
    }
    outcome(worst_slack >= -1e-9, format!("min (bound - |Sigma_hat|) over 60 cases = {worst_slack:.4e}"))
}

fn binomial_estimate() -> Outcome {
    let mut worst = f64::INFINITY;
    for m in 1..=30usize {
        for j in 1..=m / 2 {
            let exact = binomial(m, j) as f64;
            let bound = (std::f64::consts::E * m as f64 / j as f64).powi(j as i32);
            worst = worst.min(bound / exact);
        }
    }
    outcome(worst >= 1.0, format!("min (eM/j)^j / C(M,j) = {worst:.4}"))
}

fn unit_sphere_config(kind: SynthKind, params: SynthParams, trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        data: DataSource::Synthetic { kind, params, seed: 5 },
        theorem: TheoremChoice::UnitSphere { alpha: 2.0, r_hat: None },
        eta: 0.1,
        zeta: Some(0.25),
        eps: 0.5,
        delta: 0.05,
        dist: EntryDist::Gaussian,
        trials,
        master_seed: 31,
    }
}

fn unit_sphere_pipeline() -> Outcome {
    let start = Instant::now();
    let cfg = unit_sphere_config(SynthKind::IidGaussian, SynthParams::new(2001, 64), 50);
    let target = (1.0 - 2.0 * 0.1) * (1.0 - 0.25);
    match run_experiment(&cfg) {
        Ok(report) => {
            let good = report.fractions.iter().filter(|&&f| f >= target).count();
            let (fast, time) = within(start, Duration::from_secs(300));
            outcome(
                good >= 42 && fast,
                format!("k={} {good}/50 trials at fraction >= {target} (need 42); {time}", report.k_used),
            )
        }
        Err(e) => outcome(false, format!("theorem preconditions fail at this configuration: {e}")),
    }
}

/// Same pipeline on rank-two data. Unit differences are uniform on a great
/// circle there, so `r_hat = 2` exactly and the preconditions hold.
fn unit_sphere_feasible_demo() -> String {
    let params = SynthParams { rank: 2, noise: 0.0, ..SynthParams::new(2001, 64) };
    let mut cfg = unit_sphere_config(SynthKind::LowRankPlusNoise, params, 50);
    cfg.theorem = TheoremChoice::UnitSphere { alpha: 2.0, r_hat: Some(2.0) };
    match run_experiment(&cfg) {
        Ok(r) => {
            let good = r.fractions.iter().filter(|&&f| f >= r.target_fraction).count();
            format!(
                "rank-two data, r_hat=2: M={} k={} {good}/50 trials at fraction >= {:.4}, min fraction {:.4}",
                r.target_dim.as_ref().map_or(0.0, |t| t.derived["M"]),
                r.k_used,
                r.target_fraction,
                r.min_fraction
            )
        }
        Err(e) => format!("rank-two data also infeasible: {e}"),
    }
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("walecki exhaustive", walecki_exhaustive),
        ("circulant spectrum", circulant_spectrum),
        ("simplex end-to-end", simplex_end_to_end),
        ("bulk tail bounds", hanson_wright_tails),
        ("epsilon adjustment", epsilon_identities),
        ("r_hat estimator", rhat_estimator),
        ("isotropic retraction", isotropic_retraction),
        ("subset stable rank", subset_stable_rank),
        ("retraction bound", retraction_lemma),
        ("binomial estimate", binomial_estimate),
        ("unit-sphere pipeline", unit_sphere_pipeline),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let out = check();
        if !out.pass {
            failed += 1;
        }
        println!("{} [{:>2}] {name}: {}", if out.pass { "PASS" } else { "FAIL" }, i + 1, out.detail);
    }
    println!("INFO [11] {}", unit_sphere_feasible_demo());
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
