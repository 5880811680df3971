//! Centralized uncoded placement with memory sharing.
//!
//! Sublibrary `ℓ` receives the fraction `π_ℓ` of the cache. That fixes the
//! caching parameter `t_ℓ = K π_ℓ M / (C(N, ℓ) R_ℓ)`. A fractional `t_ℓ` is
//! realised by splitting every subfile into a part A cached with parameter
//! `⌊t_ℓ⌋` and a part B cached with parameter `⌊t_ℓ⌋ + 1`. A part cached with
//! parameter `s` is cut into `C(K, s)` equal packets, one per user subset of
//! size `s`, and every user in that subset stores the packet.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sublibrary_subfiles, LibraryConfig, SubfileId};
use crate::subset::{binomial, subsets, Subset};

/// Distance below which a caching parameter is snapped to the nearest integer.
pub const INTEGER_SNAP: f64 = 1e-9;

/// Fractions of the cache given to each sublibrary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheAllocation(Vec<f64>);

impl CacheAllocation {
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        if let Some((l, p)) = pi
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0 || **p > 1.0)
        {
            return Err(Error::InvalidAllocation(format!(
                "pi_{} = {p} outside [0, 1]",
                l + 1
            )));
        }
        let sum: f64 = pi.iter().sum();
        if sum > 1.0 + 1e-12 {
            return Err(Error::InvalidAllocation(format!(
                "fractions sum to {sum} > 1"
            )));
        }
        Ok(CacheAllocation(pi))
    }

    /// Everything on sublibrary `ell`.
    pub fn concentrated(files: usize, ell: usize) -> Self {
        let mut pi = vec![0.0; files];
        pi[ell - 1] = 1.0;
        CacheAllocation(pi)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, ell: usize) -> f64 {
        self.0[ell - 1]
    }
}

/// Memory-sharing part of a subfile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Part {
    A,
    B,
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Part::A => write!(f, "A"),
            Part::B => write!(f, "B"),
        }
    }
}

/// Memory-sharing split of one sublibrary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartSplit {
    pub sublibrary: usize,
    /// Caching parameter `t_ℓ`, in `[0, K]`.
    pub t: f64,
    /// `⌊t_ℓ⌋`.
    pub lower: usize,
    /// `⌊t_ℓ⌋ + 1`; only meaningful while part B is present.
    pub upper: usize,
    pub rate_a: f64,
    pub rate_b: f64,
    pub packet_rate_a: f64,
    pub packet_rate_b: f64,
}

impl PartSplit {
    /// Split for a sublibrary with subfile rate `rate`, caching parameter `t`
    /// and `users` users. `t` is clamped to `[0, users]` and snapped to an
    /// integer when within [`INTEGER_SNAP`].
    pub fn from_parameter(sublibrary: usize, t: f64, rate: f64, users: usize) -> PartSplit {
        let mut t = t.clamp(0.0, users as f64);
        if (t - t.round()).abs() <= INTEGER_SNAP {
            t = t.round();
        }
        let lower = t.floor() as usize;
        let upper = lower + 1;
        let frac = t - lower as f64;
        let rate_a = (1.0 - frac) * rate;
        let rate_b = frac * rate;
        let packet_rate_a = rate_a / binomial(users, lower) as f64;
        let packet_rate_b = if frac > 0.0 {
            rate_b / binomial(users, upper) as f64
        } else {
            0.0
        };
        PartSplit {
            sublibrary,
            t,
            lower,
            upper,
            rate_a,
            rate_b,
            packet_rate_a,
            packet_rate_b,
        }
    }

    pub fn is_integer(&self) -> bool {
        self.rate_b == 0.0
    }

    /// Integer caching parameter of a part.
    pub fn parameter(&self, part: Part) -> usize {
        match part {
            Part::A => self.lower,
            Part::B => self.upper,
        }
    }

    pub fn packet_rate(&self, part: Part) -> f64 {
        match part {
            Part::A => self.packet_rate_a,
            Part::B => self.packet_rate_b,
        }
    }

    pub fn part_rate(&self, part: Part) -> f64 {
        match part {
            Part::A => self.rate_a,
            Part::B => self.rate_b,
        }
    }

    /// Parts with positive rate.
    pub fn parts(&self) -> impl Iterator<Item = Part> + '_ {
        [Part::A, Part::B]
            .into_iter()
            .filter(move |&p| self.part_rate(p) > 0.0)
    }
}

/// One packet `W^part_{S, holders}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PacketId {
    pub subfile: SubfileId,
    pub part: Part,
    pub holders: Subset,
}

impl PacketId {
    pub fn sublibrary(&self) -> usize {
        self.subfile.sublibrary()
    }
}

impl fmt::Debug for PacketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for PacketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "W{}^{}_{}", self.subfile, self.part, self.holders)
    }
}

/// Splits for every active sublibrary.
pub fn cache_parameters(config: &LibraryConfig, alloc: &CacheAllocation) -> Result<Vec<PartSplit>> {
    if alloc.len() != config.files() {
        return Err(Error::InvalidAllocation(format!(
            "{} fractions for {} sublibraries",
            alloc.len(),
            config.files()
        )));
    }
    let k = config.users();
    Ok(config
        .active_sublibraries()
        .map(|ell| {
            let rate = config.rate(ell);
            let t = k as f64 * alloc.get(ell) * config.cache()
                / (binomial(config.files(), ell) as f64 * rate);
            PartSplit::from_parameter(ell, t, rate, k)
        })
        .collect())
}

/// Cache contents of all users.
#[derive(Clone, Debug, PartialEq)]
pub struct CachePlacement {
    files: usize,
    users: usize,
    splits: Vec<PartSplit>,
    caches: Vec<BTreeSet<PacketId>>,
}

impl CachePlacement {
    pub fn files(&self) -> usize {
        self.files
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn splits(&self) -> &[PartSplit] {
        &self.splits
    }

    pub fn split(&self, ell: usize) -> Option<&PartSplit> {
        self.splits.iter().find(|s| s.sublibrary == ell)
    }

    /// `Z_k` for user `k` (1-based).
    pub fn cache(&self, k: usize) -> &BTreeSet<PacketId> {
        &self.caches[k - 1]
    }

    pub fn packet_rate(&self, packet: &PacketId) -> f64 {
        self.split(packet.sublibrary())
            .map(|s| s.packet_rate(packet.part))
            .unwrap_or(0.0)
    }

    /// Total rate stored by user `k`.
    pub fn cached_rate(&self, k: usize) -> f64 {
        self.cache(k).iter().map(|p| self.packet_rate(p)).sum()
    }

    /// All packets of one part of a subfile, holders in lexicographic order.
    pub fn packets(&self, subfile: SubfileId, part: Part) -> Vec<PacketId> {
        match self.split(subfile.sublibrary()) {
            Some(split) if split.part_rate(part) > 0.0 => {
                subfile_packets(subfile, part, split.parameter(part), self.users)
            }
            _ => Vec::new(),
        }
    }
}

fn subfile_packets(subfile: SubfileId, part: Part, t: usize, users: usize) -> Vec<PacketId> {
    subsets(users, t)
        .into_iter()
        .map(|holders| PacketId {
            subfile,
            part,
            holders,
        })
        .collect()
}

/// Places packets into every user's cache.
pub fn build_placement(config: &LibraryConfig, alloc: &CacheAllocation) -> Result<CachePlacement> {
    let splits = cache_parameters(config, alloc)?;
    let users = config.users();
    let mut caches = vec![BTreeSet::new(); users];
    for split in &splits {
        for subfile in sublibrary_subfiles(config.files(), split.sublibrary)? {
            for part in split.parts() {
                for packet in subfile_packets(subfile, part, split.parameter(part), users) {
                    for k in packet.holders.iter() {
                        caches[k - 1].insert(packet);
                    }
                }
            }
        }
    }
    Ok(CachePlacement {
        files: config.files(),
        users,
        splits,
        caches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reference_inv_gain_sq, AlphaProfile};

    /// Three files, three users, equal sublibrary rates and the cache split
    /// `R_1 + R_2 + R_3 / 3` of the worked three-user example.
    fn example_config() -> (LibraryConfig, CacheAllocation) {
        let r = 0.25;
        let m = r + r + r / 3.0;
        let cfg = LibraryConfig::new(3, 3, 1.0, vec![r; 3], reference_inv_gain_sq(3), m).unwrap();
        let alloc = CacheAllocation::new(vec![r / m, r / m, (r / 3.0) / m]).unwrap();
        (cfg, alloc)
    }

    #[test]
    fn example_allocation_gives_t_one() {
        let (cfg, alloc) = example_config();
        let splits = cache_parameters(&cfg, &alloc).unwrap();
        assert_eq!(splits.len(), 3);
        for s in &splits {
            assert_eq!(s.t, 1.0);
            assert!(s.is_integer());
            assert_eq!(s.parts().collect::<Vec<_>>(), vec![Part::A]);
            assert!((s.packet_rate_a - cfg.rate(s.sublibrary) / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn example_cache_of_user_one() {
        let (cfg, alloc) = example_config();
        let placement = build_placement(&cfg, &alloc).unwrap();
        let want: BTreeSet<PacketId> = [
            vec![1],
            vec![2],
            vec![3],
            vec![1, 2],
            vec![2, 3],
            vec![1, 3],
            vec![1, 2, 3],
        ]
        .into_iter()
        .map(|s| PacketId {
            subfile: SubfileId::from_files(s),
            part: Part::A,
            holders: Subset::singleton(1),
        })
        .collect();
        assert_eq!(placement.cache(1), &want);
    }

    #[test]
    fn zero_allocation_is_one_uncached_packet() {
        let (cfg, _) = example_config();
        let alloc = CacheAllocation::new(vec![0.0; 3]).unwrap();
        let placement = build_placement(&cfg, &alloc).unwrap();
        for split in placement.splits() {
            assert_eq!(split.t, 0.0);
            assert_eq!(split.rate_a, cfg.rate(split.sublibrary));
        }
        let p = placement.packets(SubfileId::from_files([2]), Part::A);
        assert_eq!(p.len(), 1);
        assert!(p[0].holders.is_empty());
        for k in 1..=3 {
            assert!(placement.cache(k).is_empty());
        }
    }

    #[test]
    fn fractional_parameter_counting_identity() {
        let split = PartSplit::from_parameter(2, 1.5, 0.4, 3);
        assert_eq!((split.lower, split.upper), (1, 2));
        assert!((split.rate_a - 0.2).abs() < 1e-15);
        assert!((split.rate_b - 0.2).abs() < 1e-15);
        assert!((split.packet_rate_a - 0.2 / 3.0).abs() < 1e-15);
        assert!((split.packet_rate_b - 0.2 / 3.0).abs() < 1e-15);
        // a user holds tA/K of part A and tB/K of part B
        let per_user = 1.0 / 3.0 * split.rate_a + 2.0 / 3.0 * split.rate_b;
        assert!((per_user - 1.5 * 0.4 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn full_caching_stores_everything() {
        let alpha = AlphaProfile::new(vec![0.5, 0.0, 0.5]).unwrap();
        let cfg = LibraryConfig::from_alpha(3, 1.0, &alpha, reference_inv_gain_sq(3), 10.0).unwrap();
        let alloc = CacheAllocation::new(vec![0.5, 0.0, 0.5]).unwrap();
        let placement = build_placement(&cfg, &alloc).unwrap();
        for s in placement.splits() {
            assert_eq!(s.t, 3.0);
        }
        for k in 1..=3 {
            assert!((placement.cached_rate(k) - cfg.library_rate()).abs() < 1e-12);
        }
    }

    #[test]
    fn allocation_validation() {
        assert!(CacheAllocation::new(vec![0.6, 0.6]).is_err());
        assert!(CacheAllocation::new(vec![-0.1, 0.6]).is_err());
        assert!(CacheAllocation::new(vec![0.4, 0.6]).is_ok());
        let (cfg, _) = example_config();
        assert!(cache_parameters(&cfg, &CacheAllocation::new(vec![1.0]).unwrap()).is_err());
    }

    #[test]
    fn zero_rate_sublibraries_are_skipped() {
        let alpha = AlphaProfile::new(vec![0.5, 0.0, 0.5]).unwrap();
        let cfg = LibraryConfig::from_alpha(3, 1.0, &alpha, reference_inv_gain_sq(3), 0.5).unwrap();
        let alloc = CacheAllocation::new(vec![0.5, 0.3, 0.2]).unwrap();
        let splits = cache_parameters(&cfg, &alloc).unwrap();
        let ells: Vec<_> = splits.iter().map(|s| s.sublibrary).collect();
        assert_eq!(ells, vec![1, 3]);
    }
}
