//! Exact ground states of small instances by Gray-code enumeration.

use rayon::prelude::*;

use crate::error::{HuboError, Result};
use crate::model::{HuboInstance, SpinConfig, VariableIndexTable};

/// Default enumeration cap (2^24 configurations).
pub const DEFAULT_MAX_VARS: usize = 24;

/// Energies closer than this are counted as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    pub max_vars: usize,
    /// Number of leading spins fixed per work unit; `2^split_bits` units.
    pub split_bits: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            max_vars: DEFAULT_MAX_VARS,
            split_bits: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub energy: f64,
    /// Lexicographically smallest minimizer, ordering -1 before +1 and
    /// comparing spin 0 first.
    pub config: SpinConfig,
    pub degeneracy: u64,
    /// Single-spin flips performed by the enumeration.
    pub flips: u64,
}

/// Exhaustive minimum over all `2^N` configurations.
pub fn brute_force_ground_state(instance: &HuboInstance) -> Result<GroundState> {
    brute_force_with(instance, OracleOptions::default())
}

pub fn brute_force_with(instance: &HuboInstance, opts: OracleOptions) -> Result<GroundState> {
    let n = instance.n_vars();
    if n > opts.max_vars {
        return Err(HuboError::TooLarge(format!(
            "{n} variables exceed the enumeration cap of {}; raise max_vars (each extra variable doubles the cost) or use a heuristic solver",
            opts.max_vars
        )));
    }
    if n > 62 {
        return Err(HuboError::TooLarge(format!("{n} variables cannot be enumerated")));
    }
    if opts.max_vars > DEFAULT_MAX_VARS && n > DEFAULT_MAX_VARS {
        eprintln!(
            "warning: enumerating 2^{n} configurations; this is far beyond the default cap of {DEFAULT_MAX_VARS} variables"
        );
    }
    let split = opts.split_bits.min(n);
    let low_bits = n - split;
    let parts: Vec<Partial> = (0..1u64 << split)
        .into_par_iter()
        .map(|prefix| enumerate_block(instance, prefix << low_bits, low_bits))
        .collect();

    let best = parts.iter().map(|p| p.energy).fold(f64::INFINITY, f64::min);
    let mut degeneracy = 0;
    let mut arg = None;
    let mut flips = 0;
    for p in &parts {
        flips += p.flips;
        if (p.energy - best).abs() <= DEGENERACY_TOL {
            degeneracy += p.count;
            arg = Some(match arg {
                Some(a) if !lex_less(p.mask, a) => a,
                _ => p.mask,
            });
        }
    }
    Ok(GroundState {
        energy: best,
        config: SpinConfig::from_mask(n, arg.expect("at least one block")),
        degeneracy,
        flips,
    })
}

struct Partial {
    energy: f64,
    mask: u64,
    count: u64,
    flips: u64,
}

/// Whether configuration `a` precedes `b`: at the first differing spin,
/// `a` holds -1 (mask bit set).
fn lex_less(a: u64, b: u64) -> bool {
    let diff = a ^ b;
    diff != 0 && a & (diff & diff.wrapping_neg()) != 0
}

/// Enumerates the `2^low_bits` configurations sharing the high bits of
/// `base`, in Gray-code order.
fn enumerate_block(instance: &HuboInstance, base: u64, low_bits: usize) -> Partial {
    let n = instance.n_vars();
    let mut config = SpinConfig::from_mask(n, base);
    let mut table = VariableIndexTable::build_unchecked(instance, config.spins());
    let tol = table.fixed_tolerance(DEGENERACY_TOL);
    let mut mask = base;
    let mut best = table.energy_fixed();
    let mut best_mask = mask;
    let mut count = 1u64;
    let mut flips = 0u64;
    for step in 1u64..(1u64 << low_bits) {
        let var = step.trailing_zeros() as usize;
        table.flip_unchecked(config.spins_mut(), var);
        mask ^= 1 << var;
        flips += 1;
        let e = table.energy_fixed();
        if e < best.saturating_sub(tol) {
            best = e;
            best_mask = mask;
            count = 1;
        } else if (e - best).abs() <= tol {
            count += 1;
            if e < best {
                best = e;
            }
            if lex_less(mask, best_mask) {
                best_mask = mask;
            }
        }
    }
    Partial {
        energy: table.fixed_to_f64(best),
        mask: best_mask,
        count,
        flips,
    }
}

/// `|candidate - ground| / |ground|`.
pub fn relative_gap(candidate: f64, ground: f64) -> Result<f64> {
    if ground == 0.0 {
        return Err(HuboError::Invalid(
            "relative gap is undefined for a zero ground energy".into(),
        ));
    }
    Ok((candidate - ground).abs() / ground.abs())
}
