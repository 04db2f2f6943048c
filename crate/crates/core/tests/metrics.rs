mod common;

use std::collections::BTreeMap;

use common::random_instance;
use hubo_core::metrics::{
    closeness_curve, compute_tts, default_grid, geometric_mean_tts, speedup_table, throughput, value_at,
    InstanceTraces, Tts,
};
use hubo_core::oracle::brute_force_ground_state;
use hubo_core::solvers::{run_solver, SaParams, SolverConfig, TracePoint};

#[test]
fn tts_at_half_hit_rate() {
    // ln(0.01) / ln(0.5), evaluated separately
    let expected = 6.643_856_189_774_724;
    let r = compute_tts(1.0, 0.5, 0.99).unwrap();
    assert!((r.tts.as_f64() - expected).abs() < 1e-12);
    assert_eq!(compute_tts(1.0, 0.99, 0.99).unwrap().tts, Tts::Finite(1.0));
    assert_eq!(compute_tts(1.0, 0.0, 0.99).unwrap().tts, Tts::Infinite);
}

#[test]
fn geometric_mean_matches_log_domain_recomputation() {
    let xs = [0.8, 3.87, 43.77, 9.8, 426.74, 1.0, 9.02, 13.73, 2.11, 55.5];
    let tts: Vec<Tts> = xs.iter().map(|&x| Tts::Finite(x)).collect();
    let mut log_sum = 0.0;
    for x in xs {
        log_sum += f64::ln(x);
    }
    let expected = (log_sum / 10.0).exp();
    let g = geometric_mean_tts(&tts).unwrap();
    assert!((g.value.unwrap() - expected).abs() < 1e-12 * expected);
    assert_eq!(g.excluded, 0);
}

#[test]
fn speedup_wins_match_hand_count() {
    // (a, b): a wins on 0, 2, 3, 5, 6 and 9; b wins on 1, 4 and 8; 7 ties
    let a = [1.0, 5.0, 2.0, 0.5, f64::INFINITY, 3.0, 1.0, 4.0, 9.0, 2.0];
    let b = [2.0, 4.0, 3.0, f64::INFINITY, 1.0, 3.5, 10.0, 4.0, 8.0, 2.5];
    let to_map = |xs: &[f64]| -> BTreeMap<String, Tts> {
        xs.iter()
            .enumerate()
            .map(|(k, &x)| (format!("i{k}"), Tts::from_f64(x)))
            .collect()
    };
    let t = speedup_table(&to_map(&a), &to_map(&b)).unwrap();
    assert_eq!(t.wins_a, 6);
    assert_eq!(t.wins_b, 3);
    let winners: Vec<bool> = t.rows.iter().map(|r| r.a_wins).collect();
    assert_eq!(
        winners,
        vec![true, false, true, true, false, true, true, false, false, true]
    );
}

#[test]
fn sa_flip_count_and_throughput() {
    let h = random_instance(18, 31);
    let cfg = SolverConfig::sa(SaParams {
        n_restarts: 50,
        sweeps: 400,
        ..Default::default()
    });
    let r = run_solver(&h, &cfg, 4).unwrap();
    assert_eq!(r.attempted_flips, 50 * 400 * 18);
    let rate = throughput(&r).unwrap();
    assert!((rate - r.attempted_flips as f64 / r.elapsed_total).abs() <= 1e-9 * rate);
}

#[test]
fn oracle_targets_bound_closeness_by_one() {
    let sa = SolverConfig::sa(SaParams {
        n_restarts: 20,
        sweeps: 200,
        ..Default::default()
    });
    let mut groups = Vec::new();
    for k in 0..4u64 {
        let h = random_instance(18, 300 + k);
        let gs = brute_force_ground_state(&h).unwrap();
        assert!(gs.energy < 0.0);
        let traces = (0..3).map(|trial| run_solver(&h, &sa, trial).unwrap().trace).collect();
        groups.push(InstanceTraces {
            instance_id: format!("r{k}"),
            e_target: gs.energy,
            traces,
        });
    }
    let grid = default_grid(&groups, 200).unwrap();
    let c = closeness_curve(&groups, &grid).unwrap();
    for row in &c.per_instance {
        let defined: Vec<f64> = row.iter().flatten().copied().collect();
        assert!(!defined.is_empty());
        assert!(defined.iter().all(|&x| x <= 1.0 + 1e-12));
        assert!(defined.windows(2).all(|w| w[1] >= w[0]));
        // once defined, it stays defined
        let first = row.iter().position(Option::is_some).unwrap();
        assert!(row[first..].iter().all(Option::is_some));
    }
}

#[test]
fn closeness_never_looks_ahead() {
    let trace = vec![
        TracePoint { t: 0.1, energy: -1.0 },
        TracePoint { t: 0.2, energy: -3.0 },
        TracePoint { t: 0.4, energy: -4.0 },
    ];
    assert_eq!(value_at(&trace, 0.05), None);
    assert_eq!(value_at(&trace, 0.1), Some(-1.0));
    assert_eq!(value_at(&trace, 0.399), Some(-3.0));
    assert_eq!(value_at(&trace, 0.4), Some(-4.0));
    let g = InstanceTraces {
        instance_id: "x".into(),
        e_target: -4.0,
        traces: vec![trace.clone()],
    };
    let c = closeness_curve(&[g], &[0.15, 0.3]).unwrap();
    assert_eq!(c.per_instance[0], vec![Some(0.25), Some(0.75)]);
}
