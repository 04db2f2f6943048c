//! Searches schedule recipes whose cumulative support counts hit given
//! targets for two consecutive swap-layer counts.
//!
//! cargo run --release -p hubo-core --example calibrate_schedule -- 3 1128 1323

use hubo_core::instance_gen::{densify, HeavyHexGraph, LatticeSize, PathCenters, ScheduleRecipe};

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().unwrap()).collect();
    let (layers, lo, hi) = match args.as_slice() {
        [l, a, b] => (*l, *a, *b),
        _ => (3, 1128, 1323),
    };
    let graph = HeavyHexGraph::build(LatticeSize::Heron156);
    let mut found = 0;
    for centers in [PathCenters::DegreeThree, PathCenters::Any] {
        let n_paths = ScheduleRecipe {
            path_centers: centers,
            local_fields: false,
            rounds: vec![(0, 0)],
            swap_classes: vec![0],
        }
        .build(&graph, "probe")
        .unwrap()
        .slices
        .len()
            - 3;
        for fields in [true, false] {
            for swaps in [
                vec![0, 1],
                vec![1, 0],
                vec![0, 2],
                vec![2, 0],
                vec![1, 2],
                vec![2, 1],
                vec![0, 1, 2],
                vec![2, 1, 0],
            ] {
                // uniform rounds after a base round
                for base3 in 0..=n_paths {
                    for n2 in 1..=3 {
                        for n3 in 0..=n_paths {
                            let mut rounds = vec![(3, base3)];
                            rounds.extend(std::iter::repeat_n((n2, n3), layers + 1));
                            let recipe = ScheduleRecipe {
                                path_centers: centers,
                                local_fields: fields,
                                rounds,
                                swap_classes: swaps.clone(),
                            };
                            let schedule = recipe.build(&graph, "search").unwrap();
                            let a = densify(&graph, &schedule, layers).unwrap().len();
                            let b = densify(&graph, &schedule, layers + 1).unwrap().len();
                            if a == lo && b == hi {
                                found += 1;
                                println!("{}", serde_json::to_string(&recipe).unwrap());
                            }
                        }
                    }
                }
            }
        }
    }
    eprintln!("{found} uniform recipes");
    let hits = per_round_search(layers, lo, hi);
    eprintln!("{} per-round recipes", hits.len());
}

// Per-round search: every round applies all coloring classes, the number of
// path slices varies per round.
pub fn per_round_search(layers: usize, lo: usize, hi: usize) -> Vec<ScheduleRecipe> {
    use std::collections::HashSet;
    let graph = HeavyHexGraph::build(LatticeSize::Heron156);
    let mut out = Vec::new();
    for centers in [PathCenters::DegreeThree, PathCenters::Any] {
        for fields in [true, false] {
            for swaps in [
                vec![0, 1],
                vec![1, 0],
                vec![0, 2],
                vec![2, 0],
                vec![1, 2],
                vec![2, 1],
                vec![0, 1, 2],
                vec![2, 1, 0],
                vec![0],
                vec![1],
                vec![2],
            ] {
                let probe = ScheduleRecipe {
                    path_centers: centers,
                    local_fields: fields,
                    rounds: vec![(0, 0)],
                    swap_classes: swaps.clone(),
                }
                .build(&graph, "probe")
                .unwrap();
                let n_paths = probe.slices.len() - 3;
                // enumerate per-round path counts with DFS
                fn key(s: &[u32]) -> u64 {
                    let mut v = s.to_vec();
                    v.sort_unstable();
                    v.iter().fold(v.len() as u64, |k, &x| k * 1024 + x as u64 + 1)
                }
                struct Ctx<'a> {
                    probe: &'a hubo_core::instance_gen::SliceSchedule,
                    n_paths: usize,
                    layers: usize,
                    lo: usize,
                    hi: usize,
                    hits: Vec<Vec<usize>>,
                }
                fn rec(
                    ctx: &mut Ctx,
                    depth: usize,
                    logical: Vec<u32>,
                    set: HashSet<u64>,
                    cursor: usize,
                    counts: Vec<usize>,
                ) {
                    if depth == ctx.layers + 2 {
                        ctx.hits.push(counts);
                        return;
                    }
                    let mut logical = logical;
                    if depth > 0 {
                        let layer = ctx.probe.swap_layer(depth - 1);
                        for &(a, b) in &layer.pairs {
                            logical.swap(a as usize, b as usize);
                        }
                    }
                    for n3 in 0..=ctx.n_paths {
                        let mut s = set.clone();
                        for c in 0..3 {
                            for sup in &ctx.probe.slices[c].supports {
                                s.insert(key(&sup.iter().map(|&p| logical[p as usize]).collect::<Vec<_>>()));
                            }
                        }
                        for j in 0..n3 {
                            for sup in &ctx.probe.slices[3 + (cursor + j) % ctx.n_paths].supports {
                                s.insert(key(&sup.iter().map(|&p| logical[p as usize]).collect::<Vec<_>>()));
                            }
                        }
                        if depth == ctx.layers && s.len() != ctx.lo {
                            continue;
                        }
                        if depth == ctx.layers + 1 && s.len() != ctx.hi {
                            continue;
                        }
                        if s.len() > ctx.hi {
                            continue;
                        }
                        let mut c2 = counts.clone();
                        c2.push(n3);
                        rec(ctx, depth + 1, logical.clone(), s, cursor + n3, c2);
                    }
                }
                let mut init = HashSet::new();
                if fields {
                    for i in 0..156u32 {
                        init.insert(key(&[i]));
                    }
                }
                let mut ctx = Ctx {
                    probe: &probe,
                    n_paths,
                    layers,
                    lo,
                    hi,
                    hits: vec![],
                };
                rec(&mut ctx, 0, (0..156).collect(), init, 0, vec![]);
                for h in ctx.hits {
                    let r = ScheduleRecipe {
                        path_centers: centers,
                        local_fields: fields,
                        rounds: h.iter().map(|&n3| (3, n3)).collect(),
                        swap_classes: swaps.clone(),
                    };
                    let sch = r.build(&graph, "check").unwrap();
                    let a = densify(&graph, &sch, layers).unwrap().len();
                    let b = densify(&graph, &sch, layers + 1).unwrap().len();
                    println!("{} -> {a} {b}", serde_json::to_string(&r).unwrap());
                    out.push(r);
                }
            }
        }
    }
    out
}
