use crate::error::{HuboError, Result};
use crate::model::{HuboInstance, SpinConfig, VariableIndexTable};

/// Every single-flip energy change of one configuration, kept up to date
/// across flips. A flip of `v` negates its own delta and shifts the delta
/// of each variable sharing a term with it by `+4 * old term value`.
///
/// Deltas live in the table's exact fixed-point domain, so long tabu runs
/// never drift.
#[derive(Debug, Clone)]
pub struct DeltaCache {
    table: VariableIndexTable,
    config: SpinConfig,
    delta: Vec<i128>,
}

impl DeltaCache {
    pub fn new(instance: &HuboInstance, config: SpinConfig) -> Result<Self> {
        if config.len() != instance.n_vars() {
            return Err(HuboError::Dimension(format!(
                "configuration has {} spins but the instance has {} variables",
                config.len(),
                instance.n_vars()
            )));
        }
        let table = VariableIndexTable::build_unchecked(instance, config.spins());
        let delta = (0..instance.n_vars())
            .map(|v| {
                -2 * table
                    .terms_of(v)
                    .iter()
                    .map(|&t| table.term_fixed(t as usize))
                    .sum::<i128>()
            })
            .collect();
        Ok(DeltaCache { table, config, delta })
    }

    #[inline]
    pub fn n_vars(&self) -> usize {
        self.delta.len()
    }

    pub fn config(&self) -> &SpinConfig {
        &self.config
    }

    pub fn into_config(self) -> SpinConfig {
        self.config
    }

    pub fn table(&self) -> &VariableIndexTable {
        &self.table
    }

    #[inline]
    pub fn energy(&self) -> f64 {
        self.table.energy()
    }

    #[inline]
    pub(crate) fn energy_fixed(&self) -> i128 {
        self.table.energy_fixed()
    }

    #[inline]
    pub fn delta(&self, var: usize) -> f64 {
        self.table.fixed_to_f64(self.delta[var])
    }

    #[inline]
    pub(crate) fn delta_fixed(&self, var: usize) -> i128 {
        self.delta[var]
    }

    pub(crate) fn to_f64(&self, x: i128) -> f64 {
        self.table.fixed_to_f64(x)
    }

    pub fn flip(&mut self, var: usize) -> Result<f64> {
        if var >= self.n_vars() {
            return Err(HuboError::VarOutOfRange {
                index: var,
                n_vars: self.n_vars(),
            });
        }
        self.flip_unchecked(var);
        Ok(self.energy())
    }

    pub(crate) fn flip_unchecked(&mut self, var: usize) {
        for &t in self.table.terms_of(var) {
            let t = t as usize;
            let old = self.table.term_fixed(t);
            for &u in self.table.term_vars(t) {
                if u as usize != var {
                    self.delta[u as usize] += 4 * old;
                }
            }
        }
        self.delta[var] = -self.delta[var];
        self.table.flip_unchecked(self.config.spins_mut(), var);
    }

    /// Variable with the most negative delta (lowest index on ties), if
    /// any delta is negative.
    pub fn steepest_descent_move(&self) -> Option<usize> {
        let mut best: Option<(i128, usize)> = None;
        for (v, &d) in self.delta.iter().enumerate() {
            if d < 0 && best.is_none_or(|(b, _)| d < b) {
                best = Some((d, v));
            }
        }
        best.map(|(_, v)| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InstanceMetadata;
    use crate::rng::seeded;

    #[test]
    fn cached_deltas_track_fresh_deltas() {
        let h = HuboInstance::new(
            5,
            vec![
                (vec![0], 0.5),
                (vec![0, 1], -1.25),
                (vec![1, 2, 3], 2.0),
                (vec![0, 3, 4], -0.75),
                (vec![2, 4], 3.0),
            ],
            InstanceMetadata::default(),
        )
        .unwrap();
        let mut rng = seeded(3);
        let mut cache = DeltaCache::new(&h, SpinConfig::random(5, &mut rng)).unwrap();
        for step in 0..200 {
            let v = (step * 7 + 3) % 5;
            cache.flip(v).unwrap();
            let fresh = VariableIndexTable::build(&h, cache.config()).unwrap();
            for u in 0..5 {
                assert_eq!(cache.delta(u), fresh.delta_unchecked(u));
            }
            assert_eq!(cache.energy(), fresh.energy());
        }
        assert!(cache.flip(5).is_err());
    }
}
