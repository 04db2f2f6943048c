//! Ising-form HUBO instances with up to three-local terms, spin
//! configurations, and the incremental flip table every solver runs on.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HuboError, Result};

/// Largest supported interaction order.
pub const MAX_ARITY: usize = 3;

/// One interaction: `coeff * s[v0] * s[v1] * s[v2]` over 1..=3 distinct variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    vars: [u32; MAX_ARITY],
    arity: u8,
    coeff: f64,
}

impl Term {
    /// Builds a canonical term. Indices are sorted; repeated indices,
    /// unsupported arity, and zero or non-finite coefficients are rejected.
    pub fn new(vars: &[usize], coeff: f64) -> Result<Self> {
        if vars.is_empty() || vars.len() > MAX_ARITY {
            return Err(HuboError::InvalidTerm(format!(
                "arity {} outside 1..={MAX_ARITY}",
                vars.len()
            )));
        }
        if !coeff.is_finite() {
            return Err(HuboError::InvalidTerm(format!("non-finite coefficient {coeff}")));
        }
        if coeff == 0.0 {
            return Err(HuboError::InvalidTerm("zero coefficient".into()));
        }
        let mut sorted = [0u32; MAX_ARITY];
        for (slot, &v) in sorted.iter_mut().zip(vars) {
            *slot = u32::try_from(v).map_err(|_| HuboError::InvalidTerm(format!("index {v} does not fit in u32")))?;
        }
        let arity = vars.len();
        sorted[..arity].sort_unstable();
        if sorted[..arity].windows(2).any(|w| w[0] == w[1]) {
            return Err(HuboError::InvalidTerm(format!("repeated index in {vars:?}")));
        }
        Ok(Term {
            vars: sorted,
            arity: arity as u8,
            coeff,
        })
    }

    #[inline]
    pub fn vars(&self) -> &[u32] {
        &self.vars[..self.arity as usize]
    }

    #[inline]
    pub fn arity(&self) -> usize {
        self.arity as usize
    }

    #[inline]
    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    /// Product of the spins this term touches.
    #[inline]
    pub fn spin_product(&self, spins: &[i8]) -> i8 {
        self.vars().iter().fold(1i8, |p, &v| p * spins[v as usize])
    }

    #[inline]
    pub fn value(&self, spins: &[i8]) -> f64 {
        if self.spin_product(spins) > 0 {
            self.coeff
        } else {
            -self.coeff
        }
    }

    fn canonical_cmp(&self, other: &Term) -> Ordering {
        self.arity.cmp(&other.arity).then_with(|| self.vars().cmp(other.vars()))
    }
}

/// Descriptive metadata carried with an instance; it never affects energies.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_swap_layers: Option<u32>,
    #[serde(default)]
    pub provenance: String,
}

/// Uncanonicalized term list as read from a file or assembled by hand.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InstanceDraft {
    pub n_vars: usize,
    pub terms: Vec<(Vec<usize>, f64)>,
    pub metadata: InstanceMetadata,
}

impl InstanceDraft {
    pub fn new(n_vars: usize) -> Self {
        InstanceDraft {
            n_vars,
            ..Default::default()
        }
    }

    pub fn push(&mut self, vars: &[usize], coeff: f64) -> &mut Self {
        self.terms.push((vars.to_vec(), coeff));
        self
    }
}

/// A sparse hypergraph of 1-, 2- and 3-local couplings over `n_vars` spins.
///
/// Construction canonicalizes: indices within a term are sorted, terms with
/// the same support are merged by summing, zero sums are dropped, and the
/// term list is ordered by arity then lexicographically by indices.
#[derive(Debug, Clone, PartialEq)]
pub struct HuboInstance {
    n_vars: usize,
    terms: Vec<Term>,
    metadata: InstanceMetadata,
}

impl HuboInstance {
    pub fn new(
        n_vars: usize,
        terms: impl IntoIterator<Item = (Vec<usize>, f64)>,
        metadata: InstanceMetadata,
    ) -> Result<Self> {
        if n_vars == 0 {
            return Err(HuboError::Invalid("instance needs at least one variable".into()));
        }
        let mut built = Vec::new();
        for (vars, coeff) in terms {
            if let Some(&bad) = vars.iter().find(|&&v| v >= n_vars) {
                return Err(HuboError::VarOutOfRange { index: bad, n_vars });
            }
            if !coeff.is_finite() {
                return Err(HuboError::InvalidTerm(format!(
                    "non-finite coefficient {coeff} on {vars:?}"
                )));
            }
            if coeff == 0.0 {
                continue;
            }
            built.push(Term::new(&vars, coeff)?);
        }
        Ok(Self::from_terms_merged(n_vars, built, metadata))
    }

    pub fn from_draft(draft: InstanceDraft) -> Result<Self> {
        Self::new(draft.n_vars, draft.terms, draft.metadata)
    }

    fn from_terms_merged(n_vars: usize, mut terms: Vec<Term>, metadata: InstanceMetadata) -> Self {
        // stable sort keeps merge order (and therefore summation order) deterministic
        terms.sort_by(Term::canonical_cmp);
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.canonical_cmp(&t) == Ordering::Equal => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != 0.0);
        HuboInstance {
            n_vars,
            terms: merged,
            metadata,
        }
    }

    #[inline]
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    #[inline]
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn metadata(&self) -> &InstanceMetadata {
        &self.metadata
    }

    pub fn metadata_mut(&mut self) -> &mut InstanceMetadata {
        &mut self.metadata
    }

    pub fn with_metadata(mut self, metadata: InstanceMetadata) -> Self {
        self.metadata = metadata;
        self
    }

    /// Number of terms of each arity, indexed `[1-local, 2-local, 3-local]`.
    pub fn term_counts(&self) -> [usize; MAX_ARITY] {
        let mut counts = [0; MAX_ARITY];
        for t in &self.terms {
            counts[t.arity() - 1] += 1;
        }
        counts
    }

    /// Sum of absolute coefficients; a natural energy scale for tolerances.
    pub fn coefficient_scale(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    pub fn to_draft(&self) -> InstanceDraft {
        InstanceDraft {
            n_vars: self.n_vars,
            terms: self
                .terms
                .iter()
                .map(|t| (t.vars().iter().map(|&v| v as usize).collect(), t.coeff))
                .collect(),
            metadata: self.metadata.clone(),
        }
    }
}

/// An assignment of +1/-1 to every variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig {
    spins: Vec<i8>,
}

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(pos) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(HuboError::Invalid(format!(
                "spin {pos} is {}, expected +1 or -1",
                spins[pos]
            )));
        }
        Ok(SpinConfig { spins })
    }

    pub fn all_up(n: usize) -> Self {
        SpinConfig { spins: vec![1; n] }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        SpinConfig {
            spins: (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect(),
        }
    }

    /// Parses a string of `+`/`-` characters.
    pub fn from_spin_string(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(i, c)| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(HuboError::parse(
                    format!("spin string position {i}"),
                    format!("unexpected character {other:?}"),
                )),
            })
            .collect::<Result<Vec<i8>>>()
            .map(|spins| SpinConfig { spins })
    }

    pub fn to_spin_string(&self) -> String {
        self.spins.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.spins.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    #[inline]
    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        self.spins[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.spins[i] = -self.spins[i];
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut c = self.clone();
        c.flip(i);
        c
    }

    /// Global spin inversion s -> -s.
    pub fn inverted(&self) -> Self {
        SpinConfig {
            spins: self.spins.iter().map(|&s| -s).collect(),
        }
    }

    pub(crate) fn spins_mut(&mut self) -> &mut [i8] {
        &mut self.spins
    }

    /// Bitmask with bit i set when spin i is -1 (only for n <= 64).
    pub fn from_mask(n: usize, mask: u64) -> Self {
        SpinConfig {
            spins: (0..n).map(|i| if (mask >> i) & 1 == 1 { -1 } else { 1 }).collect(),
        }
    }
}

impl Serialize for SpinConfig {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_spin_string())
    }
}

impl<'de> Deserialize<'de> for SpinConfig {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        SpinConfig::from_spin_string(&s).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_spin_string())
    }
}

fn check_len(instance: &HuboInstance, config: &SpinConfig) -> Result<()> {
    if config.len() != instance.n_vars() {
        return Err(HuboError::Dimension(format!(
            "configuration has {} spins but the instance has {} variables",
            config.len(),
            instance.n_vars()
        )));
    }
    Ok(())
}

/// Full energy `sum_t coeff_t * prod_{i in t} s_i`.
pub fn evaluate_energy(instance: &HuboInstance, config: &SpinConfig) -> Result<f64> {
    check_len(instance, config)?;
    Ok(energy_of_spins(instance, config.spins()))
}

#[inline]
pub(crate) fn energy_of_spins(instance: &HuboInstance, spins: &[i8]) -> f64 {
    instance.terms().iter().map(|t| t.value(spins)).sum()
}

/// Exact fixed-point mirror of a set of doubles. Every cached term value
/// is also held as an integer multiple of `2^scale_exp`, so the running
/// energy is an exact integer sum: flips are exactly invertible and the
/// reported energy is the correctly rounded sum of the cached values.
#[derive(Debug, Clone, Copy)]
struct FixedScale {
    exp: i32,
}

impl FixedScale {
    const HEADROOM_BITS: i32 = 124;

    fn for_coefficients<'a>(coeffs: impl Iterator<Item = &'a f64> + Clone) -> Self {
        let mut lowest = i32::MAX;
        let mut total = 0.0f64;
        for &c in coeffs {
            total += c.abs();
            lowest = lowest.min(lowest_bit_exponent(c));
        }
        if lowest == i32::MAX {
            return FixedScale { exp: 0 };
        }
        // 2 * total bounds every partial sum; keep the top bit below 2^HEADROOM
        let top = (2.0 * total).log2().ceil() as i32 + 1;
        FixedScale {
            exp: lowest.max(top - Self::HEADROOM_BITS),
        }
    }

    #[inline]
    fn to_fixed(self, x: f64) -> i128 {
        // x * 2^-exp is an integer when exp <= lowest bit; otherwise round
        ldexp(x, -self.exp).round() as i128
    }

    #[inline]
    fn to_f64(self, acc: i128) -> f64 {
        ldexp(acc as f64, self.exp)
    }
}

/// `x * 2^e`, split in two factors so neither overflows on its own.
#[inline]
fn ldexp(x: f64, e: i32) -> f64 {
    let half = e / 2;
    x * 2f64.powi(half) * 2f64.powi(e - half)
}

/// Exponent of the least significant set bit of a finite nonzero double.
fn lowest_bit_exponent(x: f64) -> i32 {
    let bits = x.abs().to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i32;
    let mut mantissa = bits & ((1u64 << 52) - 1);
    let mut exp = if exp_field == 0 {
        -1074
    } else {
        mantissa |= 1u64 << 52;
        exp_field - 1075
    };
    if mantissa == 0 {
        return i32::MAX;
    }
    exp += mantissa.trailing_zeros() as i32;
    exp
}

/// Per-variable incidence lists with cached term values, kept synchronized
/// with one spin configuration. Flip deltas cost O(deg(i)).
#[derive(Debug, Clone)]
pub struct VariableIndexTable {
    offsets: Vec<u32>,
    incidence: Vec<u32>,
    term_vars: Vec<[u32; MAX_ARITY]>,
    term_arity: Vec<u8>,
    term_values: Vec<f64>,
    term_fixed: Vec<i128>,
    scale: FixedScale,
    energy_fixed: i128,
    total_terms: usize,
}

impl VariableIndexTable {
    /// Builds a table synchronized with `config`.
    pub fn build(instance: &HuboInstance, config: &SpinConfig) -> Result<Self> {
        check_len(instance, config)?;
        Ok(Self::build_unchecked(instance, config.spins()))
    }

    pub(crate) fn build_unchecked(instance: &HuboInstance, spins: &[i8]) -> Self {
        let n = instance.n_vars();
        let terms = instance.terms();
        let mut degree = vec![0u32; n];
        for t in terms {
            for &v in t.vars() {
                degree[v as usize] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0u32);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor: Vec<u32> = offsets[..n].to_vec();
        let mut incidence = vec![0u32; *offsets.last().unwrap() as usize];
        for (id, t) in terms.iter().enumerate() {
            for &v in t.vars() {
                incidence[cursor[v as usize] as usize] = id as u32;
                cursor[v as usize] += 1;
            }
        }
        let scale = FixedScale::for_coefficients(terms.iter().map(|t| &t.coeff));
        let term_values: Vec<f64> = terms.iter().map(|t| t.value(spins)).collect();
        let term_fixed: Vec<i128> = term_values.iter().map(|&v| scale.to_fixed(v)).collect();
        let energy_fixed = term_fixed.iter().sum();
        VariableIndexTable {
            offsets,
            incidence,
            term_vars: terms.iter().map(|t| t.vars).collect(),
            term_arity: terms.iter().map(|t| t.arity).collect(),
            term_values,
            term_fixed,
            scale,
            energy_fixed,
            total_terms: terms.len(),
        }
    }

    #[inline]
    pub fn n_vars(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn total_terms(&self) -> usize {
        self.total_terms
    }

    /// Current energy of the synchronized configuration.
    #[inline]
    pub fn energy(&self) -> f64 {
        self.scale.to_f64(self.energy_fixed)
    }

    #[inline]
    pub(crate) fn energy_fixed(&self) -> i128 {
        self.energy_fixed
    }

    pub(crate) fn fixed_to_f64(&self, x: i128) -> f64 {
        self.scale.to_f64(x)
    }

    /// An absolute energy tolerance expressed in accumulator units.
    pub(crate) fn fixed_tolerance(&self, tol: f64) -> i128 {
        self.scale.to_fixed(tol).max(0)
    }

    /// Ids of the terms containing `var`.
    #[inline]
    pub fn terms_of(&self, var: usize) -> &[u32] {
        let lo = self.offsets[var] as usize;
        let hi = self.offsets[var + 1] as usize;
        &self.incidence[lo..hi]
    }

    #[inline]
    pub fn degree(&self, var: usize) -> usize {
        (self.offsets[var + 1] - self.offsets[var]) as usize
    }

    #[inline]
    pub fn term_vars(&self, term: usize) -> &[u32] {
        &self.term_vars[term][..self.term_arity[term] as usize]
    }

    #[inline]
    pub fn term_value(&self, term: usize) -> f64 {
        self.term_values[term]
    }

    #[inline]
    pub(crate) fn term_fixed(&self, term: usize) -> i128 {
        self.term_fixed[term]
    }

    /// `(term id, cached value)` pairs for every term touching `var`.
    pub fn entries(&self, var: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.terms_of(var)
            .iter()
            .map(move |&t| (t as usize, self.term_values[t as usize]))
    }

    fn check_var(&self, var: usize) -> Result<()> {
        if var >= self.n_vars() {
            return Err(HuboError::VarOutOfRange {
                index: var,
                n_vars: self.n_vars(),
            });
        }
        Ok(())
    }

    /// Energy change of flipping `var`: `-2 * sum` of the cached values of
    /// the terms containing it.
    pub fn delta_energy(&self, var: usize) -> Result<f64> {
        self.check_var(var)?;
        Ok(self.delta_unchecked(var))
    }

    #[inline]
    pub fn delta_unchecked(&self, var: usize) -> f64 {
        let mut sum = 0.0;
        for &t in self.terms_of(var) {
            sum += self.term_values[t as usize];
        }
        -2.0 * sum
    }

    /// Flips `var` in `config`, negates the cached values it touches and
    /// returns the new energy.
    pub fn apply_flip(&mut self, config: &mut SpinConfig, var: usize) -> Result<f64> {
        self.check_var(var)?;
        if config.len() != self.n_vars() {
            return Err(HuboError::Dimension(format!(
                "configuration has {} spins but the table indexes {} variables",
                config.len(),
                self.n_vars()
            )));
        }
        self.flip_unchecked(config.spins_mut(), var);
        Ok(self.energy())
    }

    /// Hot-loop flip without bounds or length checks.
    #[inline]
    pub(crate) fn flip_unchecked(&mut self, spins: &mut [i8], var: usize) {
        spins[var] = -spins[var];
        let lo = self.offsets[var] as usize;
        let hi = self.offsets[var + 1] as usize;
        for &t in &self.incidence[lo..hi] {
            let t = t as usize;
            self.term_values[t] = -self.term_values[t];
            let fixed = self.term_fixed[t];
            self.term_fixed[t] = -fixed;
            self.energy_fixed -= 2 * fixed;
        }
    }

    /// Whether every cached value equals its term evaluated on `config`.
    pub fn is_synchronized_with(&self, instance: &HuboInstance, config: &SpinConfig) -> bool {
        config.len() == self.n_vars()
            && instance.terms().len() == self.total_terms
            && instance
                .terms()
                .iter()
                .zip(&self.term_values)
                .all(|(t, &v)| t.value(config.spins()) == v)
    }

    /// Sum of the cached values in plain double arithmetic.
    pub fn cached_sum(&self) -> f64 {
        self.term_values.iter().sum()
    }
}

/// A violation found by [`validate_instance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    BadArity {
        term: usize,
        arity: usize,
    },
    RepeatedIndex {
        term: usize,
    },
    OutOfRange {
        term: usize,
        index: usize,
        n_vars: usize,
    },
    NonFiniteCoefficient {
        term: usize,
    },
    ZeroCoefficient {
        term: usize,
    },
    DuplicateVars {
        first: usize,
        second: usize,
        vars: Vec<usize>,
    },
    NonCanonicalOrder {
        term: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Reports every structural problem in a draft without aborting.
pub fn validate_instance(draft: &InstanceDraft) -> ValidationReport {
    let mut violations = Vec::new();
    let mut keys: Vec<(Vec<usize>, usize)> = Vec::with_capacity(draft.terms.len());
    let mut previous: Option<Vec<usize>> = None;
    for (id, (vars, coeff)) in draft.terms.iter().enumerate() {
        if vars.is_empty() || vars.len() > MAX_ARITY {
            violations.push(Violation::BadArity {
                term: id,
                arity: vars.len(),
            });
        }
        for &v in vars {
            if v >= draft.n_vars {
                violations.push(Violation::OutOfRange {
                    term: id,
                    index: v,
                    n_vars: draft.n_vars,
                });
            }
        }
        if !coeff.is_finite() {
            violations.push(Violation::NonFiniteCoefficient { term: id });
        } else if *coeff == 0.0 {
            violations.push(Violation::ZeroCoefficient { term: id });
        }
        let mut sorted = vars.clone();
        sorted.sort_unstable();
        let strictly_increasing = vars.windows(2).all(|w| w[0] < w[1]);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            violations.push(Violation::RepeatedIndex { term: id });
        }
        // canonical order: strictly increasing indices, terms sorted by (arity, vars)
        let key = sorted.clone();
        let in_order = previous
            .as_ref()
            .is_none_or(|p| (p.len(), p.as_slice()) < (key.len(), key.as_slice()));
        if !strictly_increasing || !in_order {
            violations.push(Violation::NonCanonicalOrder { term: id });
        }
        previous = Some(key.clone());
        keys.push((key, id));
    }
    keys.sort();
    for pair in keys.windows(2) {
        if pair[0].0 == pair[1].0 {
            violations.push(Violation::DuplicateVars {
                first: pair[0].1,
                second: pair[1].1,
                vars: pair[0].0.clone(),
            });
        }
    }
    ValidationReport { violations }
}
