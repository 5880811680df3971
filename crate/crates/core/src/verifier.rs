//! Decodability check over GF(2).
//!
//! User `k` of a degraded broadcast channel recovers every superposition level
//! up to its own, so it sees its cache `Z_k` plus the messages on levels
//! `1..=k`. Each cached packet is a unit equation and each XOR message the
//! indicator of its operands. The user decodes its file iff every packet of
//! every subfile containing the requested file is in the row span. XORs never
//! mix sublibraries or memory-sharing parts, so the check is run separately on
//! each `(sublibrary, part)` packet universe.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::DemandEnumeration;
use crate::delivery::{build_user_messages, MessageLedger, XorMessage};
use crate::error::Result;
use crate::model::{sublibrary_subfiles, DemandVector, LibraryConfig};
use crate::placement::{build_placement, CacheAllocation, CachePlacement, PacketId, Part};

/// Dense bit vector over the column universe.
#[derive(Clone, Debug, PartialEq, Eq)]
struct BitRow(Vec<u64>);

impl BitRow {
    fn zeros(columns: usize) -> Self {
        BitRow(vec![0; columns.div_ceil(64)])
    }

    fn set(&mut self, c: usize) {
        self.0[c / 64] ^= 1 << (c % 64);
    }

    fn get(&self, c: usize) -> bool {
        self.0[c / 64] >> (c % 64) & 1 == 1
    }

    fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }

    fn is_unit(&self, c: usize) -> bool {
        self.0.iter().enumerate().all(|(i, &w)| {
            let want = if i == c / 64 { 1u64 << (c % 64) } else { 0 };
            w == want
        })
    }
}

/// Linear system over GF(2) with packets as columns.
#[derive(Clone, Debug)]
pub struct Gf2System {
    columns: BTreeMap<PacketId, usize>,
    // column indices of each equation
    rows: Vec<Vec<usize>>,
}

impl Gf2System {
    /// Empty system over `universe`. Duplicates are ignored.
    pub fn new(universe: impl IntoIterator<Item = PacketId>) -> Self {
        let mut columns = BTreeMap::new();
        for p in universe {
            let next = columns.len();
            columns.entry(p).or_insert(next);
        }
        Gf2System {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> usize {
        self.columns.len()
    }

    fn column(&mut self, p: PacketId) -> usize {
        let next = self.columns.len();
        *self.columns.entry(p).or_insert(next)
    }

    /// Adds the equation `XOR of packets = known`. Packets outside the
    /// universe extend it; empty or self-cancelling equations are dropped.
    pub fn add_equation<'a>(&mut self, packets: impl IntoIterator<Item = &'a PacketId>) {
        let mut cols: Vec<usize> = packets.into_iter().map(|p| self.column(*p)).collect();
        cols.sort_unstable();
        // a packet listed twice cancels
        let mut row = Vec::with_capacity(cols.len());
        for c in cols {
            if row.last() == Some(&c) {
                row.pop();
            } else {
                row.push(c);
            }
        }
        if !row.is_empty() {
            self.rows.push(row);
        }
    }

    /// Packets of `needed` whose unit vector is outside the row span.
    pub fn unresolved(&self, needed: &[PacketId]) -> Vec<PacketId> {
        let width = self.columns();
        let mut rows: Vec<BitRow> = self
            .rows
            .iter()
            .map(|cols| {
                let mut r = BitRow::zeros(width);
                for &c in cols {
                    r.set(c);
                }
                r
            })
            .collect();
        // reduced row echelon form; pivot_of[c] = row with pivot in column c
        let mut pivot_of = vec![None; width];
        let mut next = 0;
        for (c, slot) in pivot_of.iter_mut().enumerate() {
            let Some(found) = (next..rows.len()).find(|&i| rows[i].get(c)) else {
                continue;
            };
            rows.swap(next, found);
            let pivot = rows[next].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != next && row.get(c) {
                    row.xor_assign(&pivot);
                }
            }
            *slot = Some(next);
            next += 1;
        }
        needed
            .iter()
            .filter(|p| match self.columns.get(p) {
                Some(&c) => !pivot_of[c].is_some_and(|r| rows[r].is_unit(c)),
                None => true,
            })
            .copied()
            .collect()
    }
}

/// True iff every packet of `needed` is in the GF(2) span of `cache` and the
/// operand sets of `messages`.
pub fn decodable(needed: &BTreeSet<PacketId>, cache: &BTreeSet<PacketId>, messages: &[XorMessage]) -> bool {
    let needed: Vec<PacketId> = needed.difference(cache).copied().collect();
    if needed.is_empty() {
        return true;
    }
    let mut system = Gf2System::new(needed.iter().copied());
    for p in cache {
        system.add_equation([p]);
    }
    for m in messages {
        system.add_equation(&m.operands);
    }
    system.unresolved(&needed).is_empty()
}

/// Decoding by repeatedly resolving messages with a single unknown operand.
/// Sufficient for decodability but not necessary.
pub fn peel_decodable(needed: &BTreeSet<PacketId>, cache: &BTreeSet<PacketId>, messages: &[XorMessage]) -> bool {
    let mut known = cache.clone();
    loop {
        if needed.is_subset(&known) {
            return true;
        }
        let mut progress = false;
        for m in messages {
            let mut unknown = m.operands.iter().filter(|p| !known.contains(p));
            if let (Some(&p), None) = (unknown.next(), unknown.next()) {
                known.insert(p);
                progress = true;
            }
        }
        if !progress {
            return false;
        }
    }
}

/// One undecodable `(demand, user, sublibrary, part)` check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub demand: DemandVector,
    pub user: usize,
    pub sublibrary: usize,
    pub part: Part,
    pub missing: Vec<PacketId>,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let missing: Vec<String> = self.missing.iter().map(ToString::to_string).collect();
        write!(
            f,
            "demand={} user={} sublibrary={} part={} missing={}",
            self.demand,
            self.user,
            self.sublibrary,
            self.part,
            missing.join(",")
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub demands: usize,
    /// Number of `(demand, user, sublibrary, part)` systems solved.
    pub checks: usize,
    pub exhaustive: bool,
    pub failures: Vec<Failure>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// One line per failure.
    pub fn to_text(&self) -> String {
        self.failures.iter().map(|f| format!("{f}\n")).collect()
    }
}

/// Checks every user of one demand vector. Returns the number of systems
/// solved and the failures.
pub fn verify_demand(
    config: &LibraryConfig,
    placement: &CachePlacement,
    demand: &DemandVector,
    ledger: &MessageLedger,
) -> (usize, Vec<Failure>) {
    let mut checks = 0;
    let mut failures = Vec::new();
    for split in placement.splits() {
        let ell = split.sublibrary;
        let subfiles = sublibrary_subfiles(config.files(), ell).expect("split sublibrary is in range");
        for part in split.parts() {
            let universe: Vec<PacketId> = subfiles
                .iter()
                .flat_map(|&s| placement.packets(s, part))
                .collect();
            for k in 1..=config.users() {
                let file = demand.demand(k);
                let cache = placement.cache(k);
                let needed: Vec<PacketId> = universe
                    .iter()
                    .filter(|p| p.subfile.files().contains(file) && !cache.contains(p))
                    .copied()
                    .collect();
                checks += 1;
                if needed.is_empty() {
                    continue;
                }
                let mut system = Gf2System::new(universe.iter().copied());
                for p in universe.iter().filter(|p| cache.contains(p)) {
                    system.add_equation([p]);
                }
                for level in 1..=k {
                    for m in ledger.level(level) {
                        if m.sublibrary == ell && m.part == part {
                            system.add_equation(&m.operands);
                        }
                    }
                }
                let missing = system.unresolved(&needed);
                if !missing.is_empty() {
                    failures.push(Failure {
                        demand: demand.clone(),
                        user: k,
                        sublibrary: ell,
                        part,
                        missing,
                    });
                }
            }
        }
    }
    (checks, failures)
}

/// Decodability of every user under every demand vector of `enumeration`.
pub fn verify_all(
    config: &LibraryConfig,
    alloc: &CacheAllocation,
    enumeration: &DemandEnumeration,
) -> Result<VerifyReport> {
    let placement = build_placement(config, alloc)?;
    let demands = enumeration.demands(config.files(), config.users())?;
    let per_demand: Vec<(usize, Vec<Failure>)> = demands
        .par_iter()
        .map(|d| {
            let ledger = build_user_messages(d, &placement, config)?;
            Ok(verify_demand(config, &placement, d, &ledger))
        })
        .collect::<Result<_>>()?;
    let mut report = VerifyReport {
        demands: demands.len(),
        exhaustive: enumeration.is_exhaustive(config.files(), config.users()),
        ..VerifyReport::default()
    };
    for (checks, failures) in per_demand {
        report.checks += checks;
        report.failures.extend(failures);
    }
    Ok(report)
}
