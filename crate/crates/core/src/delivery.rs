//! Delivery: coded messages for a revealed demand vector.
//!
//! Sublibraries are handled independently. Within sublibrary `ℓ` the requested
//! subfiles are split by their overlap `r = |S ∩ D|` with the set `D` of
//! requested files. Each overlap class is partitioned into groups in which
//! every user asks for at most one subfile, and each group is served as a
//! single-demand problem: the weakest user asking for each distinct subfile is
//! its leader, and for every user `k` and every `U ⊆ [k+1:K]` of size `t`
//! whose union with `{k}` holds a leader, the XOR of the packets
//! `W_{S_j, U∪{k}\{j}}` is sent on superposition level `k`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DemandVector, LibraryConfig, SubfileId};
use crate::placement::{CachePlacement, PacketId, Part};
use crate::subset::{subsets, subsets_of_range, Subset};

/// Per-user subfile assignment of one group; `None` means the user asks for
/// nothing in this group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupDemand(Vec<Option<SubfileId>>);

impl GroupDemand {
    pub fn new(assignment: Vec<Option<SubfileId>>) -> Self {
        GroupDemand(assignment)
    }

    pub fn users(&self) -> usize {
        self.0.len()
    }

    /// Subfile assigned to user `k` (1-based).
    pub fn get(&self, k: usize) -> Option<SubfileId> {
        self.0[k - 1]
    }

    pub fn as_slice(&self) -> &[Option<SubfileId>] {
        &self.0
    }

    /// Users whose subfile is not requested by any weaker user.
    pub fn leaders(&self) -> Subset {
        let mut leaders = Subset::EMPTY;
        for (i, s) in self.0.iter().enumerate() {
            if let Some(s) = s {
                if !self.0[..i].contains(&Some(*s)) {
                    leaders = leaders.insert(i + 1);
                }
            }
        }
        leaders
    }
}

/// One XOR of packets, sent on superposition level `level`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XorMessage {
    pub level: usize,
    pub sublibrary: usize,
    pub part: Part,
    pub operands: Vec<PacketId>,
    pub rate: f64,
}

/// Messages of every superposition level for one demand vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MessageLedger {
    levels: Vec<Vec<XorMessage>>,
}

impl MessageLedger {
    pub fn new(users: usize) -> Self {
        MessageLedger {
            levels: vec![Vec::new(); users],
        }
    }

    pub fn users(&self) -> usize {
        self.levels.len()
    }

    /// Messages on level `k` (1-based).
    pub fn level(&self, k: usize) -> &[XorMessage] {
        &self.levels[k - 1]
    }

    pub fn push(&mut self, message: XorMessage) {
        self.levels[message.level - 1].push(message);
    }

    pub fn extend(&mut self, messages: impl IntoIterator<Item = XorMessage>) {
        for m in messages {
            self.push(m);
        }
    }

    pub fn messages(&self) -> impl Iterator<Item = &XorMessage> {
        self.levels.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total_rate(&self) -> f64 {
        self.messages().map(|m| m.rate).sum()
    }

    /// Number of messages on level `k` coming from sublibrary `ell`.
    pub fn count(&self, k: usize, ell: usize) -> usize {
        self.level(k).iter().filter(|m| m.sublibrary == ell).count()
    }
}

/// Subfiles of sublibrary `ell` sharing exactly `overlap` files with the
/// requested set.
pub fn requested_subfiles(files: usize, requested: Subset, ell: usize, overlap: usize) -> Vec<SubfileId> {
    if ell == 0 || ell > files || overlap > ell {
        return Vec::new();
    }
    subsets(files, ell)
        .into_iter()
        .filter(|s| s.intersection(requested).len() == overlap)
        .map(|s| SubfileId::from_files(s.iter()))
        .collect()
}

/// Partitions the subfiles of one overlap class into single-demand groups.
///
/// Picks are the lexicographically smallest eligible subfile. When fewer
/// files than `overlap` remain unserved in the current group, a subfile
/// covering all of them is split across this group and the next: the users
/// still waiting for it are served first in the following group.
pub fn group(
    requested: &[SubfileId],
    demand: &DemandVector,
    ell: usize,
    overlap: usize,
) -> Result<Vec<GroupDemand>> {
    let wanted = demand.distinct();
    for s in requested {
        let found = s.files().intersection(wanted).len();
        if found != overlap || s.sublibrary() != ell || overlap == 0 {
            return Err(Error::MalformedGroupInput {
                subfile: s.to_string(),
                found,
                expected: overlap,
            });
        }
    }

    let mut pool: Vec<SubfileId> = requested.to_vec();
    pool.sort();
    pool.dedup();
    let users = demand.users();
    // (subfile, files whose users still need it)
    let mut carry: Option<(SubfileId, Subset)> = None;
    let mut groups = Vec::new();

    while !pool.is_empty() || carry.is_some() {
        let mut assignment: Vec<Option<SubfileId>> = vec![None; users];
        let mut assign = |files: Subset, s: SubfileId| {
            for k in demand.users_requesting(files) {
                assignment[k - 1] = Some(s);
            }
        };
        let mut free = wanted;
        while !free.is_empty() {
            if free.len() >= overlap {
                if let Some((s, waiting)) = carry.take() {
                    assign(waiting, s);
                    free = free.difference(waiting);
                    continue;
                }
                let Some(pos) = pool
                    .iter()
                    .position(|s| s.files().intersection(wanted).is_subset_of(free))
                else {
                    break;
                };
                let s = pool.remove(pos);
                let covered = s.files().intersection(wanted);
                assign(covered, s);
                free = free.difference(covered);
            } else {
                let Some(pos) = pool.iter().position(|s| free.is_subset_of(s.files())) else {
                    break;
                };
                let s = pool.remove(pos);
                assign(free, s);
                let waiting = s.files().intersection(wanted).difference(free);
                carry = Some((s, waiting));
                free = Subset::EMPTY;
            }
        }
        if assignment.iter().all(Option::is_none) {
            // nothing left that can be placed
            break;
        }
        groups.push(GroupDemand(assignment));
    }
    Ok(groups)
}

/// Leader-based coded messages of one group for one memory-sharing part
/// cached with integer parameter `t`. Returned per level, index `k - 1`.
pub fn single_demand(
    part: Part,
    demand: &GroupDemand,
    t: usize,
    users: usize,
    packet_rate: f64,
) -> Vec<Vec<XorMessage>> {
    let leaders = demand.leaders();
    let mut out = vec![Vec::new(); users];
    if t >= users {
        return out;
    }
    for k in 1..=users {
        for upper in subsets_of_range(k + 1, users, t) {
            let served = upper.insert(k);
            if served.is_disjoint(leaders) {
                continue;
            }
            let operands: Vec<PacketId> = served
                .iter()
                .filter_map(|j| {
                    demand.get(j).map(|subfile| PacketId {
                        subfile,
                        part,
                        holders: served.remove(j),
                    })
                })
                .collect();
            let sublibrary = operands[0].sublibrary();
            out[k - 1].push(XorMessage {
                level: k,
                sublibrary,
                part,
                operands,
                rate: packet_rate,
            });
        }
    }
    out
}

/// Groups of every overlap class of sublibrary `ell`, in overlap order.
pub fn sublibrary_groups(files: usize, demand: &DemandVector, ell: usize) -> Result<Vec<GroupDemand>> {
    let wanted = demand.distinct();
    let mut groups = Vec::new();
    for overlap in 1..=ell.min(wanted.len()) {
        let requested = requested_subfiles(files, wanted, ell, overlap);
        if requested.is_empty() {
            continue;
        }
        groups.extend(group(&requested, demand, ell, overlap)?);
    }
    Ok(groups)
}

/// All messages for demand vector `demand` under `placement`.
pub fn build_user_messages(
    demand: &DemandVector,
    placement: &CachePlacement,
    config: &LibraryConfig,
) -> Result<MessageLedger> {
    let users = config.users();
    if demand.users() != users {
        return Err(Error::InvalidDemand(format!(
            "{} demands for {users} users",
            demand.users()
        )));
    }
    let mut ledger = MessageLedger::new(users);
    for split in placement.splits() {
        let groups = sublibrary_groups(config.files(), demand, split.sublibrary)?;
        for g in &groups {
            for part in split.parts() {
                let per_level = single_demand(
                    part,
                    g,
                    split.parameter(part),
                    users,
                    split.packet_rate(part),
                );
                for msgs in per_level {
                    ledger.extend(msgs);
                }
            }
        }
    }
    Ok(ledger)
}

/// `ρ_k`, the total message rate on each level.
pub fn rate_profile(ledger: &MessageLedger) -> Vec<f64> {
    ledger
        .levels
        .iter()
        .map(|msgs| msgs.iter().map(|m| m.rate).sum())
        .collect()
}
