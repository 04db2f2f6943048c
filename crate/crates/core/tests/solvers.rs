mod common;

use common::{naive_energy, random_instance};
use hubo_core::oracle::brute_force_ground_state;
use hubo_core::rng::seeded;
use hubo_core::solvers::{
    greedy_descent, make_schedule, percentile_nearest_rank, run_mts, run_pt, run_sa, run_solver, sample_flip_deltas,
    MtsParams, PtParams, SaParams, ScheduleParams, SolverConfig,
};
use hubo_core::{SpinConfig, VariableIndexTable};

fn sa(restarts: usize, sweeps: usize) -> SolverConfig {
    SolverConfig::sa(SaParams {
        n_restarts: restarts,
        sweeps,
        ..Default::default()
    })
}

fn pt_sweeps(sweeps: u64) -> SolverConfig {
    SolverConfig::pt(PtParams {
        max_sweeps: Some(sweeps),
        ..Default::default()
    })
}

fn mts(generations: usize) -> SolverConfig {
    SolverConfig::mts(MtsParams {
        generations,
        ..Default::default()
    })
}

#[test]
fn solvers_reach_the_exhaustive_ground_state_at_n18() {
    for k in 0..3u64 {
        let h = random_instance(18, 100 + k);
        let gs = brute_force_ground_state(&h).unwrap();
        for cfg in [sa(100, 500), pt_sweeps(2000), mts(200)] {
            let r = run_solver(&h, &cfg, 7 + k).unwrap();
            r.check_consistency(&h).unwrap();
            assert!(r.best_energy >= gs.energy - 1e-9, "{} beat the oracle", r.solver);
            assert!(
                (r.best_energy - gs.energy).abs() <= 1e-9 * gs.energy.abs().max(1.0),
                "{} on instance {k}: {} vs ground {}",
                r.solver,
                r.best_energy,
                gs.energy
            );
            let direct = naive_energy(&h, r.best_config.spins());
            assert!((direct - r.best_energy).abs() <= 1e-9 * h.coefficient_scale());
        }
    }
}

#[test]
fn runs_are_reproducible_for_fixed_seed_and_threads() {
    let h = random_instance(16, 5);
    for cfg in [sa(40, 200), pt_sweeps(300), mts(100), SolverConfig::greedy()] {
        for threads in [1, 2] {
            let cfg = cfg.clone().with_threads(threads);
            let a = run_solver(&h, &cfg, 99).unwrap();
            let b = run_solver(&h, &cfg, 99).unwrap();
            assert_eq!(a.without_timing(), b.without_timing(), "{}", cfg.name());
        }
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let h = random_instance(16, 6);
    for cfg in [sa(24, 100), pt_sweeps(200), mts(50)] {
        let one = run_solver(&h, &cfg.clone().with_threads(1), 3).unwrap();
        let mut four = run_solver(&h, &cfg.clone().with_threads(4), 3).unwrap();
        // the hash covers the thread count itself
        assert_ne!(one.config_hash, four.config_hash);
        four.config_hash = one.config_hash.clone();
        assert_eq!(one.without_timing(), four.without_timing(), "{}", cfg.name());
    }
}

#[test]
fn sa_attempted_flips_closed_form() {
    let h = random_instance(13, 8);
    let r = run_sa(&h, &sa(17, 33), 1).unwrap();
    assert_eq!(r.attempted_flips, 17 * 33 * 13);
    assert!(r.accepted_flips <= r.attempted_flips);
}

#[test]
fn time_limited_runs_stop_and_stay_consistent() {
    let h = random_instance(18, 9);
    let pt = SolverConfig::pt(PtParams::default()).with_time_limit(0.2);
    let r = run_pt(&h, &pt, 2).unwrap();
    r.check_consistency(&h).unwrap();
    assert!(r.elapsed_total < 2.0);
    let acc = r.diagnostics.exchange_acceptance.as_ref().unwrap();
    assert_eq!(acc.len(), 15);
    assert!(acc.iter().all(|&a| (0.0..=1.0).contains(&a)));

    let long = sa(1_000_000, 1000).with_time_limit(0.2);
    let r = run_sa(&h, &long, 2).unwrap();
    r.check_consistency(&h).unwrap();
    assert!(r.diagnostics.restarts_completed.unwrap() < 1_000_000);

    let m = mts(1_000_000_000).with_time_limit(0.2);
    let r = run_mts(&h, &m, 2).unwrap();
    r.check_consistency(&h).unwrap();
}

#[test]
fn greedy_output_is_one_flip_optimal() {
    for seed in 0..20 {
        let h = random_instance(14, 200 + seed);
        let start = SpinConfig::random(14, &mut seeded(seed));
        let out = greedy_descent(&h, &start).unwrap();
        let e = naive_energy(&h, out.spins());
        for v in 0..14 {
            let flipped = out.flipped(v);
            let e2 = naive_energy(&h, flipped.spins());
            assert!(
                e2 >= e - 1e-9 * h.coefficient_scale(),
                "flip {v} improves a greedy optimum"
            );
        }
    }
}

#[test]
fn schedule_percentiles_match_independent_computation() {
    let h = random_instance(18, 11);
    let params = ScheduleParams::default();
    let s = make_schedule(&h, &params, 4).unwrap();
    let deltas = sample_flip_deltas(&h, params.n_samples, 4);

    // independent: recompute every |dE| by full re-evaluation, then rank
    let mut rng = seeded(4);
    let mut mine = Vec::new();
    for _ in 0..params.n_samples {
        let c = SpinConfig::random(18, &mut rng);
        let e = naive_energy(&h, c.spins());
        for v in 0..18 {
            let d = (naive_energy(&h, c.flipped(v).spins()) - e).abs();
            if d > 1e-9 * h.coefficient_scale() {
                mine.push(d);
            }
        }
    }
    assert_eq!(mine.len(), deltas.len());
    mine.sort_by(f64::total_cmp);
    let rank = |p: f64| mine[((p * mine.len() as f64).ceil() as usize).max(1) - 1];
    let tol = 1e-9 * h.coefficient_scale();
    assert!((s.t_hot - rank(0.9) / 2f64.ln()).abs() < tol);
    assert!((s.t_cold - rank(0.1) / 100f64.ln()).abs() < tol);
    assert_eq!(percentile_nearest_rank(&deltas, 0.9).unwrap() / 2f64.ln(), s.t_hot);
}

#[test]
fn table_deltas_agree_with_cache_after_solver_output() {
    let h = random_instance(12, 12);
    let r = run_sa(&h, &sa(5, 50), 0).unwrap();
    let t = VariableIndexTable::build(&h, &r.best_config).unwrap();
    assert!((t.energy() - r.best_energy).abs() < 1e-12 * h.coefficient_scale());
}
