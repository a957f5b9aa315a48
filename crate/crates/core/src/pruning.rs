//! Query-driven pruning: transaction filtering, per-sequence query match
//! positions, positional item filtering, seed admission, expansion windows
//! and the per-item count bounds that veto hopeless expansions.
//!
//! Positions are signed here. An empty query antecedent matches "before
//! position 0" (`left_end = -1`) and an empty query consequent matches "after
//! the last itemset" (`right_end = len`), which turns every positional test
//! below into a no-op for single-sided queries.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::rulecore::{prefix_completion, suffix_completion, QueryRule, RuleOccurrence};
use crate::seqdb::{Item, Itemset, Sequence, SequenceDatabase, Sid};

/// How many sequences a filter dropped out of how many.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FilteringRate {
    pub removed: usize,
    pub original: usize,
}

impl FilteringRate {
    pub fn rate(&self) -> f64 {
        if self.original == 0 {
            0.0
        } else {
            self.removed as f64 / self.original as f64
        }
    }
}

/// Drops every sequence that does not contain the whole query antecedent.
/// Sids are preserved.
pub fn utp_filter(db: &SequenceDatabase, query: &QueryRule) -> (SequenceDatabase, FilteringRate) {
    let kept: Vec<Sequence> = db
        .iter()
        .filter(|s| s.contains_all(query.antecedent()))
        .cloned()
        .collect();
    let rate = FilteringRate {
        removed: db.len() - kept.len(),
        original: db.len(),
    };
    (SequenceDatabase::from_sequences_unchecked(kept), rate)
}

/// Query match positions of one sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TmpmEntry {
    pub sid: Sid,
    /// First index at which a forward scan has seen all of the query antecedent.
    pub left_end: isize,
    /// Last index from which a backward scan sees all of the query consequent.
    pub right_end: isize,
    pub contains_consequent: bool,
}

/// Transaction matching position map, keyed by sid.
pub type Tmpm = BTreeMap<Sid, TmpmEntry>;

pub fn tmpm_entry(seq: &Sequence, query: &QueryRule) -> Result<TmpmEntry> {
    let last = seq.len() as isize - 1;
    let left_end = if query.antecedent().is_empty() {
        -1
    } else {
        prefix_completion(seq, query.antecedent()).ok_or_else(|| {
            Error::contract(format!(
                "sequence {} lacks the query antecedent; filter transactions first",
                seq.sid()
            ))
        })? as isize
    };
    let entry = if query.consequent().is_empty() {
        TmpmEntry {
            sid: seq.sid(),
            left_end,
            right_end: seq.len() as isize,
            contains_consequent: true,
        }
    } else {
        match suffix_completion(seq, query.consequent()) {
            Some(right_end) => TmpmEntry {
                sid: seq.sid(),
                left_end,
                right_end: right_end as isize,
                contains_consequent: true,
            },
            // Only useful for confidence: pin both ends to the last itemset.
            None => TmpmEntry {
                sid: seq.sid(),
                left_end: last,
                right_end: last,
                contains_consequent: false,
            },
        }
    };
    Ok(entry)
}

pub fn build_tmpm(db: &SequenceDatabase, query: &QueryRule) -> Result<Tmpm> {
    db.iter()
        .map(|s| tmpm_entry(s, query).map(|e| (s.sid(), e)))
        .collect()
}

/// Positional and frequency item filtering.
///
/// Query-antecedent items after `left_end` and query-consequent items before
/// `right_end` are deleted, then every item whose support in the result is
/// below `minsup` is deleted. Emptied itemsets and sequences are dropped, so
/// positions shift and the TMPM must be rebuilt on the output.
pub fn uip_filter(
    db: &SequenceDatabase,
    tmpm: &Tmpm,
    query: &QueryRule,
    minsup: usize,
) -> Result<SequenceDatabase> {
    let mut trimmed = Vec::with_capacity(db.len());
    for seq in db.iter() {
        let entry = tmpm
            .get(&seq.sid())
            .ok_or_else(|| Error::contract(format!("no TMPM entry for sequence {}", seq.sid())))?;
        let itemsets = seq
            .itemsets()
            .iter()
            .enumerate()
            .map(|(pos, set)| {
                let pos = pos as isize;
                set.iter()
                    .filter(|&i| {
                        !(query.antecedent().contains(i) && pos > entry.left_end
                            || query.consequent().contains(i) && pos < entry.right_end)
                    })
                    .collect::<Itemset>()
            })
            .collect::<Vec<_>>();
        trimmed.push((seq.sid(), itemsets));
    }

    let mut support: HashMap<Item, usize> = HashMap::new();
    for (_, itemsets) in &trimmed {
        let distinct: BTreeSet<Item> = itemsets.iter().flat_map(Itemset::iter).collect();
        for item in distinct {
            *support.entry(item).or_default() += 1;
        }
    }
    let infrequent: BTreeSet<Item> = support
        .into_iter()
        .filter(|&(_, n)| n < minsup)
        .map(|(i, _)| i)
        .collect();

    Ok(rebuild(trimmed, &infrequent))
}

/// Deletes the given items everywhere, dropping emptied itemsets/sequences.
pub fn remove_items(db: &SequenceDatabase, items: &BTreeSet<Item>) -> SequenceDatabase {
    let rows = db
        .iter()
        .map(|s| (s.sid(), s.itemsets().to_vec()))
        .collect();
    rebuild(rows, items)
}

fn rebuild(rows: Vec<(Sid, Vec<Itemset>)>, drop: &BTreeSet<Item>) -> SequenceDatabase {
    let sequences = rows
        .into_iter()
        .filter_map(|(sid, itemsets)| {
            let itemsets: Vec<Itemset> = itemsets
                .into_iter()
                .map(|set| {
                    if drop.is_empty() {
                        set
                    } else {
                        set.iter().filter(|i| !drop.contains(i)).collect()
                    }
                })
                .filter(|set| !set.is_empty())
                .collect();
            (!itemsets.is_empty()).then(|| Sequence::new(sid, itemsets).expect("non-empty itemsets"))
        })
        .collect();
    SequenceDatabase::from_sequences_unchecked(sequences)
}

/// Per-item upper bounds on the support a target rule can reach with the
/// item in its antecedent (`left`) or consequent (`right`). Only sequences
/// containing the query consequent are counted; query items are not tracked.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CountMaps {
    pub left: HashMap<Item, usize>,
    pub right: HashMap<Item, usize>,
    /// Non-query items whose two counts sum to less than `minsup`.
    pub removable: BTreeSet<Item>,
    /// Number of sequences that contributed.
    pub counted_sequences: usize,
}

impl CountMaps {
    pub fn left_count(&self, item: Item) -> usize {
        self.left.get(&item).copied().unwrap_or(0)
    }

    pub fn right_count(&self, item: Item) -> usize {
        self.right.get(&item).copied().unwrap_or(0)
    }
}

pub fn build_count_maps(
    db: &SequenceDatabase,
    tmpm: &Tmpm,
    query: &QueryRule,
    minsup: usize,
) -> Result<CountMaps> {
    let mut maps = CountMaps::default();
    for seq in db.iter() {
        let entry = tmpm
            .get(&seq.sid())
            .ok_or_else(|| Error::contract(format!("no TMPM entry for sequence {}", seq.sid())))?;
        if !entry.contains_consequent {
            continue;
        }
        maps.counted_sequences += 1;
        let mut spans: BTreeMap<Item, (isize, isize)> = BTreeMap::new();
        for (pos, set) in seq.itemsets().iter().enumerate() {
            for item in set.iter().filter(|&i| !query.mentions(i)) {
                let pos = pos as isize;
                spans.entry(item).and_modify(|s| s.1 = pos).or_insert((pos, pos));
            }
        }
        for (item, (first, last)) in spans {
            if first < entry.right_end {
                *maps.left.entry(item).or_default() += 1;
            }
            if last > entry.left_end {
                *maps.right.entry(item).or_default() += 1;
            }
        }
    }
    maps.removable = db
        .items()
        .into_iter()
        .filter(|&i| !query.mentions(i))
        .filter(|&i| maps.left_count(i) + maps.right_count(i) < minsup)
        .collect();
    Ok(maps)
}

/// Whether the seeds `{m} -> {n}` and `{n} -> {m}` may be generated.
///
/// A seed is vetoed when its antecedent item exceeds the query's smallest
/// antecedent item or its consequent item exceeds the query's smallest
/// consequent item (growth only ever adds larger items). With count maps,
/// a non-query item is also vetoed on a side whose count is below `minsup`.
pub fn urp_admits(
    m: Item,
    n: Item,
    query: &QueryRule,
    count_maps: Option<&CountMaps>,
    minsup: usize,
) -> (bool, bool) {
    let admits = |ante: Item, cons: Item| {
        if query.first_left().is_some_and(|f| ante > f) {
            return false;
        }
        if query.first_right().is_some_and(|f| cons > f) {
            return false;
        }
        match count_maps {
            None => true,
            Some(maps) => {
                (query.mentions(ante) || maps.left_count(ante) >= minsup)
                    && (query.mentions(cons) || maps.right_count(cons) >= minsup)
            }
        }
    };
    (admits(m, n), admits(n, m))
}

/// `(expand_right, expand_left)`: right-expansion items are searched strictly
/// after `expand_right`, left-expansion items strictly before `expand_left`.
pub fn expansion_window(occ: RuleOccurrence, entry: &TmpmEntry) -> (isize, isize) {
    (
        (occ.first_itemset as isize).max(entry.left_end),
        (occ.last_itemset as isize).min(entry.right_end),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// How many query items each side of a rule has matched so far, which is
/// also the index of the next query item to match.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MatchState {
    pub x_match: usize,
    pub y_match: usize,
}

impl MatchState {
    /// Match state of the seed `{m} -> {n}`.
    pub fn for_seed(m: Item, n: Item, query: &QueryRule) -> Self {
        let start = MatchState::default();
        let start = advance_match(start, Side::Left, m, query);
        advance_match(start, Side::Right, n, query)
    }

    pub fn left_complete(&self, query: &QueryRule) -> bool {
        self.x_match == query.antecedent().len()
    }

    pub fn right_complete(&self, query: &QueryRule) -> bool {
        self.y_match == query.consequent().len()
    }

    pub fn is_complete(&self, query: &QueryRule) -> bool {
        self.left_complete(query) && self.right_complete(query)
    }
}

pub fn ueip_item_admissible(
    item: Item,
    side: Side,
    state: MatchState,
    query: &QueryRule,
    count_maps: &CountMaps,
    minsup: usize,
) -> bool {
    let (side_query, matched, count) = match side {
        Side::Left => (query.antecedent(), state.x_match, count_maps.left_count(item)),
        Side::Right => (query.consequent(), state.y_match, count_maps.right_count(item)),
    };
    if side_query.get(matched).is_some_and(|next| item > next) {
        return false;
    }
    query.mentions(item) || count >= minsup
}

pub fn advance_match(state: MatchState, side: Side, item: Item, query: &QueryRule) -> MatchState {
    let mut next = state;
    match side {
        Side::Left => {
            if query.antecedent().get(state.x_match) == Some(item) {
                next.x_match += 1;
            }
        }
        Side::Right => {
            if query.consequent().get(state.y_match) == Some(item) {
                next.y_match += 1;
            }
        }
    }
    next
}
