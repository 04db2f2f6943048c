#![allow(dead_code)]

use hubo_core::instance_gen::standard_cauchy;
use hubo_core::rng::seeded;
use hubo_core::{HuboInstance, InstanceMetadata};
use rand::Rng;

/// Random mixed-arity instance: a field on about half the variables plus
/// `2n` pairs and `2n` triples, all with standard Cauchy couplings.
pub fn random_instance(n: usize, seed: u64) -> HuboInstance {
    let mut rng = seeded(seed);
    let mut terms: Vec<(Vec<usize>, f64)> = Vec::new();
    for v in 0..n {
        if rng.random_bool(0.5) {
            terms.push((vec![v], standard_cauchy(&mut rng)));
        }
    }
    for arity in [2, 3] {
        if n < arity {
            continue;
        }
        for _ in 0..2 * n {
            let mut vars: Vec<usize> = Vec::with_capacity(arity);
            while vars.len() < arity {
                let v = rng.random_range(0..n);
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            terms.push((vars, standard_cauchy(&mut rng)));
        }
    }
    HuboInstance::new(n, terms, InstanceMetadata::default()).unwrap()
}

/// Energy by direct summation over terms, independent of the library.
pub fn naive_energy(instance: &HuboInstance, spins: &[i8]) -> f64 {
    instance
        .terms()
        .iter()
        .map(|t| {
            let p: i32 = t.vars().iter().map(|&v| spins[v as usize] as i32).product();
            t.coeff() * p as f64
        })
        .sum()
}
