use hubo_core::instance_gen::{deserialize_instance, serialize_instance};
use hubo_core::metrics::{closeness_curve, compute_tts, value_at, InstanceTraces, Tts};
use hubo_core::oracle::brute_force_ground_state;
use hubo_core::solvers::{
    merge_traces, metropolis_accept, run_solver, DeltaCache, MtsParams, PtParams, SaParams, SolverConfig, TracePoint,
};
use hubo_core::{evaluate_energy, HuboInstance, InstanceMetadata, SpinConfig, VariableIndexTable};
use proptest::prelude::*;

fn coeff() -> impl Strategy<Value = f64> {
    prop_oneof![-10.0f64..-1e-3, 1e-3f64..10.0]
}

fn support(n: usize, arities: Vec<usize>) -> impl Strategy<Value = Vec<usize>> {
    prop::sample::select(arities.into_iter().filter(|&a| a <= n).collect::<Vec<_>>())
        .prop_flat_map(move |a| prop::sample::subsequence((0..n).collect::<Vec<_>>(), a))
}

fn instance_with(arities: Vec<usize>, max_n: usize) -> impl Strategy<Value = HuboInstance> {
    (3..=max_n)
        .prop_flat_map(move |n| {
            (
                Just(n),
                prop::collection::vec((support(n, arities.clone()), coeff()), 1..4 * n),
            )
        })
        .prop_filter_map("all terms cancelled", |(n, terms)| {
            HuboInstance::new(n, terms, InstanceMetadata::default()).ok()
        })
}

fn instance() -> impl Strategy<Value = HuboInstance> {
    instance_with(vec![1, 2, 3], 9)
}

fn with_config(max_n: usize) -> impl Strategy<Value = (HuboInstance, SpinConfig)> {
    instance_with(vec![1, 2, 3], max_n)
        .prop_flat_map(|h| {
            let n = h.n_vars();
            (Just(h), prop::collection::vec(prop::bool::ANY, n))
        })
        .prop_map(|(h, bits)| {
            let spins = bits.into_iter().map(|b| if b { 1 } else { -1 }).collect();
            (h, SpinConfig::new(spins).unwrap())
        })
}

fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    (a - b).abs() <= rel * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn delta_matches_recomputation((h, c) in with_config(10)) {
        let table = VariableIndexTable::build(&h, &c).unwrap();
        let e0 = evaluate_energy(&h, &c).unwrap();
        let scale = h.coefficient_scale();
        for i in 0..h.n_vars() {
            let e1 = evaluate_energy(&h, &c.flipped(i)).unwrap();
            let d = table.delta_energy(i).unwrap();
            prop_assert!(close(d, e1 - e0, 1e-12, scale), "var {i}: {d} vs {}", e1 - e0);
        }
    }

    #[test]
    fn apply_flip_is_an_involution((h, c) in with_config(10), pick in any::<prop::sample::Index>()) {
        let mut table = VariableIndexTable::build(&h, &c).unwrap();
        let mut cfg = c.clone();
        let v = pick.index(h.n_vars());
        let before_energy = table.energy();
        let before = table.clone();
        let d = table.delta_energy(v).unwrap();
        let e1 = table.apply_flip(&mut cfg, v).unwrap();
        prop_assert!(table.is_synchronized_with(&h, &cfg));
        prop_assert_eq!(table.delta_energy(v).unwrap(), -d);
        let e2 = table.apply_flip(&mut cfg, v).unwrap();
        prop_assert_eq!(&cfg, &c);
        prop_assert_eq!(table.energy(), before_energy);
        prop_assert!(close(e1 - before_energy, d, 1e-12, h.coefficient_scale()));
        prop_assert_eq!(e2, before_energy);
        prop_assert!(table.is_synchronized_with(&h, &c));
        prop_assert_eq!(table.cached_sum(), before.cached_sum());
    }

    #[test]
    fn all_plus_energy_is_coefficient_sum(h in instance()) {
        let sum: f64 = h.terms().iter().map(|t| t.coeff()).sum();
        let e = evaluate_energy(&h, &SpinConfig::all_up(h.n_vars())).unwrap();
        prop_assert!(close(e, sum, 1e-12, h.coefficient_scale()));
    }

    #[test]
    fn inversion_negates_odd_arity_energy(
        odd in instance_with(vec![1, 3], 9),
        bits in prop::collection::vec(prop::bool::ANY, 9),
    ) {
        let spins: Vec<i8> = bits[..odd.n_vars()].iter().map(|&b| if b { 1 } else { -1 }).collect();
        let c = SpinConfig::new(spins).unwrap();
        let e = evaluate_energy(&odd, &c).unwrap();
        let inv = evaluate_energy(&odd, &c.inverted()).unwrap();
        prop_assert!(close(inv, -e, 1e-12, odd.coefficient_scale()));
    }

    #[test]
    fn inversion_preserves_even_arity_energy(
        even in instance_with(vec![2], 9),
        bits in prop::collection::vec(prop::bool::ANY, 9),
    ) {
        let spins: Vec<i8> = bits[..even.n_vars()].iter().map(|&b| if b { 1 } else { -1 }).collect();
        let c = SpinConfig::new(spins).unwrap();
        let e = evaluate_energy(&even, &c).unwrap();
        prop_assert_eq!(evaluate_energy(&even, &c.inverted()).unwrap(), e);
    }

    #[test]
    fn delta_cache_tracks_flip_sequences((h, c) in with_config(10), flips in prop::collection::vec(any::<prop::sample::Index>(), 0..40)) {
        let mut cache = DeltaCache::new(&h, c).unwrap();
        for f in flips {
            cache.flip(f.index(h.n_vars())).unwrap();
        }
        let fresh = VariableIndexTable::build(&h, cache.config()).unwrap();
        let scale = h.coefficient_scale();
        prop_assert!(close(cache.energy(), evaluate_energy(&h, cache.config()).unwrap(), 1e-12, scale));
        for v in 0..h.n_vars() {
            prop_assert!(close(cache.delta(v), fresh.delta_energy(v).unwrap(), 1e-12, scale));
        }
    }

    #[test]
    fn instances_round_trip_through_text(h in instance()) {
        let back = deserialize_instance(&serialize_instance(&h)).unwrap();
        prop_assert_eq!(back, h);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn oracle_bounds_every_solver(h in instance_with(vec![1, 2, 3], 10), seed in any::<u64>()) {
        let gs = brute_force_ground_state(&h).unwrap();
        prop_assert_eq!(gs.flips, (1u64 << h.n_vars()) - 1);
        prop_assert!(close(evaluate_energy(&h, &gs.config).unwrap(), gs.energy, 1e-12, h.coefficient_scale()));
        let configs = [
            SolverConfig::greedy(),
            SolverConfig::sa(SaParams { n_restarts: 3, sweeps: 20, ..Default::default() }),
            SolverConfig::pt(PtParams { n_replicas: 4, max_sweeps: Some(20), ..Default::default() }),
            SolverConfig::mts(MtsParams { population: 4, generations: 5, ..Default::default() }),
        ];
        let tol = 1e-9 * h.coefficient_scale().max(1.0);
        for cfg in &configs {
            let r = run_solver(&h, cfg, seed).unwrap();
            r.check_consistency(&h).unwrap();
            prop_assert!(r.attempted_flips >= r.accepted_flips);
            prop_assert!(gs.energy <= r.best_energy + tol, "{}: {} < {}", r.solver, r.best_energy, gs.energy);
            prop_assert!(r.trace.windows(2).all(|w| w[1].t > w[0].t && w[1].energy <= w[0].energy));
        }
    }
}

proptest! {
    #[test]
    fn metropolis_rule(delta in -50.0f64..50.0, t in 0.01f64..20.0, u in 0.0f64..1.0) {
        let accepted = metropolis_accept(delta, t, u);
        if delta <= 0.0 {
            prop_assert!(accepted);
        } else {
            prop_assert_eq!(accepted, u < (-delta / t).exp());
        }
    }

    #[test]
    fn tts_non_increasing_in_p_hit(t_run in 1e-3f64..1e3, p1 in 1e-6f64..=1.0, p2 in 1e-6f64..=1.0, p_target in 0.01f64..0.999) {
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let a = compute_tts(t_run, lo, p_target).unwrap().tts.as_f64();
        let b = compute_tts(t_run, hi, p_target).unwrap().tts.as_f64();
        prop_assert!(b <= a * (1.0 + 1e-12), "{b} > {a}");
    }

    #[test]
    fn tts_scales_with_run_time(t_run in 1e-3f64..1e3, p in 0.0f64..=1.0, p_target in 0.01f64..0.999) {
        let a = compute_tts(t_run, p, p_target).unwrap().tts;
        let b = compute_tts(2.0 * t_run, p, p_target).unwrap().tts;
        prop_assert_eq!(a.is_finite(), p > 0.0);
        match (a, b) {
            (Tts::Finite(x), Tts::Finite(y)) => prop_assert!(close(y, 2.0 * x, 1e-12, y)),
            (Tts::Infinite, Tts::Infinite) => {}
            _ => prop_assert!(false, "finiteness changed with t_run"),
        }
    }

    #[test]
    fn closeness_never_looks_ahead(
        steps in prop::collection::vec((1e-3f64..1.0, 0.0f64..5.0), 1..20),
        cut in 0usize..20,
    ) {
        let mut t = 0.0;
        let mut e = -1.0;
        let trace: Vec<TracePoint> = steps.iter().map(|&(dt, de)| {
            t += dt;
            e -= de;
            TracePoint { t, energy: e }
        }).collect();
        let cut = cut.min(trace.len() - 1);
        let at = trace[cut].t;
        prop_assert_eq!(value_at(&trace, at), value_at(&trace[..=cut], at));
        prop_assert_eq!(value_at(&trace, at), Some(trace[cut].energy));
        prop_assert_eq!(value_at(&trace, trace[0].t * 0.5), None);
        let (a, b): (Vec<_>, Vec<_>) = trace.iter().enumerate().partition(|(k, _)| k % 2 == 0);
        let split = [a, b].map(|v| v.into_iter().map(|(_, p)| *p).collect::<Vec<_>>());
        let last = *trace.last().unwrap();
        let merged = merge_traces(split, last.energy, last.t);
        prop_assert_eq!(merged, trace);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closeness_at_most_one_against_ground_state(seed in any::<u64>()) {
        let h = hubo_core::instance_gen::random_instance(10, seed).unwrap();
        let gs = brute_force_ground_state(&h).unwrap();
        prop_assume!(gs.energy < 0.0);
        let traces: Vec<Vec<TracePoint>> = (0..3)
            .map(|k| run_solver(&h, &SolverConfig::sa(SaParams { n_restarts: 2, sweeps: 10, ..Default::default() }), seed ^ k).unwrap().trace)
            .collect();
        let t_max = traces.iter().flat_map(|tr| tr.iter().map(|p| p.t)).fold(0.0, f64::max);
        let grid: Vec<f64> = (0..=10).map(|k| t_max * k as f64 / 10.0 + 1e-9).collect();
        let group = InstanceTraces { instance_id: "x".into(), e_target: gs.energy, traces };
        let curve = closeness_curve(&[group], &grid).unwrap();
        for c in curve.per_instance[0].iter().flatten() {
            prop_assert!(*c <= 1.0 + 1e-12);
        }
        let defined: Vec<f64> = curve.per_instance[0].iter().flatten().copied().collect();
        prop_assert!(defined.windows(2).all(|w| w[1] >= w[0]));
    }
}
