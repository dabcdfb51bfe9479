mod common;

use bestsubset::selectors::{
    dfo, dfo_from, dfon, exhaustive, forward_selection, genetic, hard_threshold, sffs, sfs, Chromosome, GeneticSearch,
    StepConstant,
};
use bestsubset::{solve, Budget, Dataset, SolverConfig, SolverKind, StopReason, SupportSet};
use common::*;
use nalgebra::DMatrix;

fn cfg(kind: SolverKind) -> SolverConfig {
    SolverConfig::new(kind)
}

#[test]
fn forward_matches_naive_greedy() {
    for seed in 0..20 {
        let d = instance(30, 10, seed);
        let out = forward_selection(&d, 3, &Budget::default(), &cfg(SolverKind::Fs)).unwrap();
        assert_eq!(out.solution.support.indices(), naive_greedy(&d, 3).as_slice(), "seed {seed}");
        let naive = forward_selection(&d, 3, &Budget::default(), &cfg(SolverKind::Fs).with_naive(true)).unwrap();
        assert_eq!(naive.solution.support, out.solution.support);
    }
}

#[test]
fn floating_never_loses_to_forward_when_converged() {
    let mut strictly_better = 0;
    for seed in 0..200 {
        let d = instance(25, 10, 1000 + seed);
        let budget = Budget::default();
        let fs = forward_selection(&d, 4, &budget, &cfg(SolverKind::Fs)).unwrap();
        let fl = sffs(&d, 4, &budget, &cfg(SolverKind::Sffs)).unwrap();
        assert_eq!(fl.diagnostics.stop_reason, StopReason::Converged);
        assert!(fl.solution.rss <= fs.solution.rss + 1e-8, "seed {seed}: {} > {}", fl.solution.rss, fs.solution.rss);
        if fl.solution.rss < fs.solution.rss - 1e-8 {
            strictly_better += 1;
        }
    }
    println!("SFFS strictly better than FS on {strictly_better}/200");
}

/// Random small instances until forward selection misses the optimum and
/// floating search finds it.
#[test]
fn floating_escapes_a_nested_trap() {
    let found = (0..5000u64).find_map(|seed| {
        let d = instance(12, 6, 50_000 + seed);
        let (f_star, best) = brute_force(&d, 3);
        let fs = forward_selection(&d, 3, &Budget::default(), &cfg(SolverKind::Fs)).unwrap();
        if fs.solution.rss <= f_star + 1e-9 * f_star {
            return None;
        }
        let fl = sffs(&d, 3, &Budget::default(), &cfg(SolverKind::Sffs)).unwrap();
        (fl.solution.support == best).then_some((fs.solution.rss, fl.solution.rss))
    });
    let (fs, fl) = found.expect("no trap instance among the searched seeds");
    assert!(fl < fs);
}

#[test]
fn swapping_never_beats_the_oracle() {
    let mut hits = [0usize; 2];
    for seed in 0..30 {
        let d = instance(20, 12, 2000 + seed);
        let (f_star, _) = brute_force(&d, 4);
        for t in 1..=2 {
            let out = sfs(&d, 4, t, &Budget::default(), &cfg(SolverKind::Sfs).with_trace(true)).unwrap();
            assert!(out.solution.rss >= f_star - 1e-9 * f_star);
            let trace = out.diagnostics.rss_trace.unwrap();
            assert!(trace.windows(2).all(|w| w[1] < w[0]), "t={t} seed={seed}");
            if out.solution.rss <= f_star * (1.0 + 1e-9) {
                hits[t - 1] += 1;
            }
        }
    }
    println!("f* attained: SFS1 {}/30, SFS2 {}/30", hits[0], hits[1]);
}

#[test]
fn hard_threshold_matches_sort_oracle() {
    assert_eq!(hard_threshold(&[3.0, -5.0, 1.0], 2), vec![3.0, -5.0, 0.0]);
    assert_eq!(hard_threshold(&[2.0, -2.0, 0.5], 1), vec![2.0, 0.0, 0.0]);
    let c = [0.5, -1.5, 1.5, 0.0, -0.5, 2.0];
    for k in 0..=6 {
        assert_eq!(hard_threshold(&c, k), sort_threshold(&c, k), "k={k}");
    }
}

fn orthonormal_design() -> Dataset {
    let p = 5;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut x = DMatrix::zeros(10, p);
    for j in 0..p {
        x[(2 * j, j)] = s;
        x[(2 * j + 1, j)] = -s;
    }
    let y: Vec<f64> = (0..10).map(|i| [3.0, -1.0, 0.5, 2.0, -4.0, 1.0, 0.2, 0.1, 1.0, -2.5][i]).collect();
    Dataset::new("orth", x, y).unwrap()
}

#[test]
fn orthonormal_design_is_a_one_step_fixed_point() {
    let d = orthonormal_design();
    let xty: Vec<f64> = (0..d.p()).map(|j| d.column(j).iter().zip(d.y()).map(|(a, b)| a * b).sum()).collect();
    let expected = sort_threshold(&xty, 2);
    let config = cfg(SolverKind::Dfo).with_step(StepConstant::Fixed(2.0)).with_trace(true);
    let out = dfo_from(&d, 2, &vec![0.0; d.p()], &Budget::default(), &config).unwrap();
    let beta = out.solution.dense_beta(d.p());
    for j in 0..d.p() {
        assert!((beta[j] - expected[j]).abs() < 1e-12);
    }
    let trace = out.diagnostics.rss_trace.unwrap();
    assert_eq!(trace.len(), 3);
    assert!((trace[1] - trace[2]).abs() < 1e-12);
    assert_eq!(out.diagnostics.stop_reason, StopReason::Converged);
}

#[test]
fn dfo_stays_above_the_oracle() {
    for seed in 0..20 {
        let d = instance(20, 12, 3000 + seed);
        let (f_star, _) = brute_force(&d, 4);
        let out = dfo(&d, 4, &Budget::default(), &cfg(SolverKind::Dfo).with_seed(seed)).unwrap();
        assert!(out.solution.rss >= f_star - 1e-9 * f_star);
    }
}

#[test]
fn restarts_never_lose_to_a_single_run() {
    for seed in 0..200 {
        let d = instance(20, 10, 4000 + seed);
        let one = dfo(&d, 3, &Budget::default(), &cfg(SolverKind::Dfo).with_seed(seed)).unwrap();
        let many = dfon(&d, 3, &Budget::default(), &cfg(SolverKind::Dfon).with_seed(seed)).unwrap();
        assert!(many.solution.rss <= one.solution.rss, "seed {seed}");
    }
}

#[test]
fn restarts_over_every_support_reach_the_optimum() {
    let mut checked = 0;
    for seed in 0..10 {
        let d = instance(20, 12, 5000 + seed);
        let (f_star, best) = brute_force(&d, 4);
        let start = bestsubset::linalg::subset_rss(&d, &best).unwrap().dense_beta(12);
        let stays = dfo_from(&d, 4, &start, &Budget::default(), &cfg(SolverKind::Dfo)).unwrap();
        let out = dfon(&d, 4, &Budget::default(), &cfg(SolverKind::Dfon).with_restarts(495).with_seed(seed)).unwrap();
        assert!(out.solution.rss >= f_star - 1e-9 * f_star);
        if stays.solution.support == best {
            checked += 1;
            assert!(rel_close(out.solution.rss, f_star, 1e-9), "seed {seed}");
        }
    }
    assert!(checked > 0);
}

#[test]
fn restarts_beyond_distinct_supports_warn() {
    let d = instance(15, 4, 6);
    let out = dfon(&d, 3, &Budget::default(), &cfg(SolverKind::Dfon).with_restarts(10)).unwrap();
    assert!(out.diagnostics.notes.iter().any(|n| n.contains("distinct supports")));
}

#[test]
fn chromosomes_keep_k_ones() {
    let d = instance(40, 30, 7);
    for seed in 0..5 {
        let mut search = GeneticSearch::new(&d, 5, &cfg(SolverKind::Ga).with_seed(seed)).unwrap();
        for _ in 0..100 {
            search.step();
            assert!(search.population().iter().all(|c| c.ones() == 5));
        }
        assert_eq!(search.generations(), 100);
    }
}

#[test]
fn homogeneous_population_stops_immediately() {
    let d = instance(40, 30, 8);
    let c = Chromosome::from_support(30, &SupportSet::new(vec![0, 3, 7, 9, 20]));
    let out = bestsubset::selectors::genetic_from(&d, 5, vec![c; 10], &Budget::default(), &cfg(SolverKind::Ga)).unwrap();
    assert_eq!(out.diagnostics.stop_reason, StopReason::PopulationHomogeneous);
    assert_eq!(out.diagnostics.iterations, 0);
}

#[test]
fn genetic_lands_near_the_optimum() {
    let d = instance(30, 10, 9);
    let (f_star, _) = brute_force(&d, 3);
    let close = (0..100)
        .filter(|&seed| {
            let out = genetic(&d, 3, &Budget::default(), &cfg(SolverKind::Ga).with_seed(seed)).unwrap();
            assert!(out.solution.rss >= f_star - 1e-9 * f_star);
            100.0 * (out.solution.rss - f_star) / f_star <= 5.0
        })
        .count();
    assert!(close >= 90, "only {close}/100 seeds within 5%");
}

#[test]
fn exhaustive_dominates_every_heuristic() {
    for seed in 0..10 {
        let d = instance(20, 12, 7000 + seed);
        let budget = Budget::default();
        let oracle = exhaustive(&d, 4, &budget, &cfg(SolverKind::Exhaustive)).unwrap();
        let (f_star, _) = brute_force(&d, 4);
        assert!(rel_close(oracle.solution.rss, f_star, 1e-9));
        for name in ["fs", "sffs", "sfs1", "sfs2", "dfo", "dfon", "ga"] {
            let out = solve(&d, 4, &SolverConfig::from_name(name).unwrap().with_seed(seed), &budget).unwrap();
            assert!(out.solution.rss >= oracle.solution.rss * (1.0 - 1e-9), "{name} seed {seed}");
        }
    }
}

#[test]
fn tiny_budgets_stop_with_limits() {
    let d = instance(40, 20, 10);
    let budget = Budget::default().with_max_iterations(1);
    let out = genetic(&d, 5, &budget, &cfg(SolverKind::Ga)).unwrap();
    assert_eq!(out.diagnostics.stop_reason, StopReason::IterLimit);
    assert_eq!(out.solution.support.len(), 5);
    let out = exhaustive(&d, 5, &Budget::default().with_time_limit(0.0), &cfg(SolverKind::Exhaustive)).unwrap();
    assert_eq!(out.diagnostics.stop_reason, StopReason::TimeLimit);
}
