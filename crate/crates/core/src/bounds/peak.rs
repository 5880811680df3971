use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{min_power, PowerReport};
use crate::delivery::{build_user_messages, rate_profile, single_demand, sublibrary_groups};
use crate::error::{Error, Result};
use crate::model::{DemandVector, LibraryConfig};
use crate::placement::{build_placement, cache_parameters, CacheAllocation, Part};

/// How the demand space `[N]^K` is covered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandEnumeration {
    /// Largest number of demand vectors enumerated exhaustively.
    pub max_demands: u64,
    /// When set and `[N]^K` exceeds `max_demands`, draw `max_demands` demand
    /// vectors with this seed instead of failing.
    pub sample_seed: Option<u64>,
}

impl Default for DemandEnumeration {
    fn default() -> Self {
        DemandEnumeration {
            max_demands: 1_000_000,
            sample_seed: None,
        }
    }
}

impl DemandEnumeration {
    pub fn demands(&self, files: usize, users: usize) -> Result<Vec<DemandVector>> {
        let count = (files as u128).checked_pow(users as u32).unwrap_or(u128::MAX);
        if count <= self.max_demands as u128 {
            return Ok(DemandVector::enumerate(files, users).collect());
        }
        match self.sample_seed {
            Some(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok((0..self.max_demands)
                    .map(|_| {
                        let d = (0..users).map(|_| rng.gen_range(1..=files)).collect();
                        DemandVector::new(d, files).expect("sampled demands are in range")
                    })
                    .collect())
            }
            None => Err(Error::EnumerationTooLarge {
                count,
                limit: self.max_demands,
            }),
        }
    }

    /// True when the demand space is covered completely.
    pub fn is_exhaustive(&self, files: usize, users: usize) -> bool {
        (files as u128)
            .checked_pow(users as u32)
            .is_some_and(|c| c <= self.max_demands as u128)
    }
}

/// `(index, distinct files, power)` of one demand.
type Scored = (usize, usize, f64);

/// Keeps the larger power. Ties go to the demand asking for more distinct
/// files, then to the earlier one.
fn worse(a: Scored, b: Scored) -> Scored {
    let key = |x: &Scored| (x.2, x.1, std::cmp::Reverse(x.0));
    match key(&b).partial_cmp(&key(&a)) {
        Some(std::cmp::Ordering::Greater) => b,
        _ => a,
    }
}

/// Peak (worst-demand) power of the coded scheme under allocation `alloc`.
pub fn peak_power(
    config: &LibraryConfig,
    alloc: &CacheAllocation,
    enumeration: &DemandEnumeration,
) -> Result<PowerReport> {
    let placement = build_placement(config, alloc)?;
    let demands = enumeration.demands(config.files(), config.users())?;
    let scored: Vec<Scored> = demands
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let ledger = build_user_messages(d, &placement, config)?;
            let p = min_power(&rate_profile(&ledger), config.inv_gain_sq())?.total_power;
            Ok((i, d.distinct().len(), p))
        })
        .collect::<Result<_>>()?;
    let (idx, _, _) = scored
        .into_iter()
        .fold((0, 0, f64::NEG_INFINITY), worse);
    let worst = &demands[idx];
    let ledger = build_user_messages(worst, &placement, config)?;
    let mut report = min_power(&rate_profile(&ledger), config.inv_gain_sq())?;
    report.worst_demand = Some(worst.clone());
    Ok(report)
}

/// Message counts per (demand, sublibrary, integer caching parameter, level).
///
/// The grouping and the leader structure do not depend on the allocation, so
/// the rate profile of any allocation is a weighted sum of these counts. The
/// optimizer evaluates thousands of allocations against one table.
#[derive(Clone, Debug)]
pub struct RateTable {
    users: usize,
    sublibraries: Vec<usize>,
    demands: Vec<DemandVector>,
    // [demand][sublibrary slot][t][level]
    counts: Vec<Vec<Vec<Vec<u32>>>>,
}

impl RateTable {
    pub fn new(config: &LibraryConfig, enumeration: &DemandEnumeration) -> Result<Self> {
        let users = config.users();
        let sublibraries: Vec<usize> = config.active_sublibraries().collect();
        let demands = enumeration.demands(config.files(), users)?;
        let counts = demands
            .par_iter()
            .map(|d| {
                sublibraries
                    .iter()
                    .map(|&ell| {
                        let groups = sublibrary_groups(config.files(), d, ell)?;
                        Ok((0..=users)
                            .map(|t| {
                                let mut per_level = vec![0u32; users];
                                for g in &groups {
                                    for (k, msgs) in single_demand(Part::A, g, t, users, 0.0)
                                        .iter()
                                        .enumerate()
                                    {
                                        per_level[k] += msgs.len() as u32;
                                    }
                                }
                                per_level
                            })
                            .collect())
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RateTable {
            users,
            sublibraries,
            demands,
            counts,
        })
    }

    pub fn demands(&self) -> &[DemandVector] {
        &self.demands
    }

    /// Rate profile of demand `index` under `alloc`.
    pub fn rate_profile(&self, config: &LibraryConfig, alloc: &CacheAllocation, index: usize) -> Result<Vec<f64>> {
        let splits = cache_parameters(config, alloc)?;
        Ok(self.profile_for(&splits, index))
    }

    fn profile_for(&self, splits: &[crate::placement::PartSplit], index: usize) -> Vec<f64> {
        let mut rho = vec![0.0; self.users];
        for (slot, &ell) in self.sublibraries.iter().enumerate() {
            let Some(split) = splits.iter().find(|s| s.sublibrary == ell) else {
                continue;
            };
            for part in split.parts() {
                let t = split.parameter(part);
                let rate = split.packet_rate(part);
                for (k, &c) in self.counts[index][slot][t].iter().enumerate() {
                    rho[k] += c as f64 * rate;
                }
            }
        }
        rho
    }

    /// Peak power and worst demand index under `alloc`.
    pub fn peak(&self, config: &LibraryConfig, alloc: &CacheAllocation) -> Result<(f64, usize)> {
        let splits = cache_parameters(config, alloc)?;
        let g = config.inv_gain_sq();
        let (idx, _, power) = (0..self.demands.len())
            .into_par_iter()
            .map(|i| {
                let rho = self.profile_for(&splits, i);
                let p = min_power(&rho, g).expect("table rates are non-negative").total_power;
                (i, self.demands[i].distinct().len(), p)
            })
            .reduce(|| (usize::MAX, 0, f64::NEG_INFINITY), worse);
        Ok((power, idx))
    }
}
