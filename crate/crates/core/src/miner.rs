//! The rule-growth engine.
//!
//! Every rule is reached along exactly one path: a 1*1 seed `{m} -> {n}`,
//! then zero or more right-expansions (each adds a consequent item larger
//! than the current consequent's maximum), then zero or more
//! left-expansions (each adds an antecedent item larger than the current
//! antecedent's maximum). Once a rule has been left-expanded it is never
//! right-expanded again.
//!
//! The four [`Variant`]s run the same growth and differ only in the pruning
//! applied around it:
//!
//! - `Baseline`: plain growth on the full database, then a post-filter.
//! - `V1`: drops sequences lacking the query antecedent first.
//! - `V2`: V1 plus positional/frequency item filtering and seed vetoes.
//! - `V3`: V2 plus count-map item removal, narrowed scan windows,
//!   lexicographic expansion bounds and match tracking; only target rules
//!   are ever emitted, so no post-filter is needed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pruning::{
    advance_match, build_count_maps, build_tmpm, remove_items, ueip_item_admissible, uip_filter,
    urp_admits, utp_filter, CountMaps, FilteringRate, MatchState, Side, TmpmEntry,
};
use crate::rulecore::{is_target_rule, sort_rules, QueryRule, SequentialRule};
use crate::seqdb::{Item, Itemset, SequenceDatabase, Sid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Baseline,
    V1,
    V2,
    V3,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Baseline, Variant::V1, Variant::V2, Variant::V3];

    fn filters_transactions(self) -> bool {
        self != Variant::Baseline
    }

    fn filters_items(self) -> bool {
        matches!(self, Variant::V2 | Variant::V3)
    }

    fn tracks_matches(self) -> bool {
        self == Variant::V3
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Baseline => "baseline",
            Variant::V1 => "v1",
            Variant::V2 => "v2",
            Variant::V3 => "v3",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Variant::Baseline),
            "v1" => Ok(Variant::V1),
            "v2" => Ok(Variant::V2),
            "v3" => Ok(Variant::V3),
            other => Err(Error::param(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinerConfig {
    /// Absolute number of sequences.
    pub minsup: usize,
    pub minconf: f64,
    pub variant: Variant,
    pub max_antecedent: Option<usize>,
    pub max_consequent: Option<usize>,
    /// Grow independent seed subtrees on the rayon pool.
    pub parallel: bool,
}

impl MinerConfig {
    pub fn new(minsup: usize, minconf: f64, variant: Variant) -> Self {
        MinerConfig {
            minsup,
            minconf,
            variant,
            max_antecedent: None,
            max_consequent: None,
            parallel: false,
        }
    }

    pub fn with_caps(mut self, max_antecedent: usize, max_consequent: usize) -> Self {
        self.max_antecedent = Some(max_antecedent);
        self.max_consequent = Some(max_consequent);
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.minsup < 1 {
            return Err(Error::param("minsup must be at least 1"));
        }
        if !(self.minconf > 0.0 && self.minconf <= 1.0) {
            return Err(Error::param(format!("minconf {} not in (0, 1]", self.minconf)));
        }
        if self.max_antecedent == Some(0) || self.max_consequent == Some(0) {
            return Err(Error::param("size caps must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MiningStats {
    pub expansions_left: u64,
    pub expansions_right: u64,
    pub seed_pairs_evaluated: u64,
    pub rules_emitted: usize,
    pub filtering_rate: FilteringRate,
    pub elapsed: Duration,
}

impl MiningStats {
    pub fn expansions(&self) -> u64 {
        self.expansions_left + self.expansions_right
    }

    fn absorb(&mut self, other: &MiningStats) {
        self.expansions_left += other.expansions_left;
        self.expansions_right += other.expansions_right;
        self.seed_pairs_evaluated += other.seed_pairs_evaluated;
    }
}

#[derive(Clone, Debug, Default)]
pub struct MiningResult {
    /// Target rules in canonical order.
    pub rules: Vec<SequentialRule>,
    pub stats: MiningStats,
}

/// Mines every rule `X -> Y` with `XQuery ⊆ X`, `YQuery ⊆ Y`, support at
/// least `minsup` and confidence at least `minconf`.
pub fn mine(db: &SequenceDatabase, query: &QueryRule, config: &MinerConfig) -> Result<MiningResult> {
    config.validate()?;
    let start = Instant::now();
    let engine = Engine::prepare(db, query, config)?;
    let (rules, mut stats) = engine.run();
    let mut rules = if config.variant.tracks_matches() {
        rules
    } else {
        post_filter(rules, query)
    };
    sort_rules(&mut rules);
    stats.rules_emitted = rules.len();
    stats.filtering_rate = engine.filtering_rate();
    stats.elapsed = start.elapsed();
    Ok(MiningResult { rules, stats })
}

/// Every frequent, confident rule, without any query.
pub fn mine_baseline_all(db: &SequenceDatabase, config: &MinerConfig) -> Result<Vec<SequentialRule>> {
    let config = config.clone().with_variant(Variant::Baseline);
    Ok(mine(db, &QueryRule::empty(), &config)?.rules)
}

/// Keeps the rules whose sides contain the query's sides, in order.
pub fn post_filter(rules: Vec<SequentialRule>, query: &QueryRule) -> Vec<SequentialRule> {
    rules.into_iter().filter(|r| is_target_rule(r, query)).collect()
}

/// One supporting sequence of a rule and where the rule sits in it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Occurrence {
    pub sid: Sid,
    local: u32,
    pub first_itemset: u32,
    pub last_itemset: u32,
}

/// A rule under growth together with its supporting sequences.
#[derive(Clone, Debug)]
pub struct RuleState {
    pub antecedent: Itemset,
    pub consequent: Itemset,
    occurrences: Vec<Occurrence>,
    /// Local indices of the sequences containing the antecedent, ascending.
    antecedent_seqs: Arc<Vec<u32>>,
    pub matched: MatchState,
    left_grown: bool,
}

impl RuleState {
    pub fn support(&self) -> usize {
        self.occurrences.len()
    }

    pub fn antecedent_support(&self) -> usize {
        self.antecedent_seqs.len()
    }

    pub fn occurrences(&self) -> &[Occurrence] {
        &self.occurrences
    }

    pub fn sids(&self) -> Vec<Sid> {
        self.occurrences.iter().map(|o| o.sid).collect()
    }

    pub fn occurrence(&self, sid: Sid) -> Option<&Occurrence> {
        self.occurrences.iter().find(|o| o.sid == sid)
    }

    /// Whether this state came out of a left-expansion (and so may only be
    /// left-expanded further).
    pub fn is_left_grown(&self) -> bool {
        self.left_grown
    }

    pub fn to_rule(&self) -> SequentialRule {
        SequentialRule {
            antecedent: self.antecedent.clone(),
            consequent: self.consequent.clone(),
            support: self.support(),
            antecedent_support: self.antecedent_support(),
        }
    }
}

/// Candidate expansion items and the occurrences of the expanded rule.
#[derive(Clone, Debug, Default)]
pub struct ExpansionTable {
    entries: BTreeMap<Item, Vec<Occurrence>>,
}

impl ExpansionTable {
    pub fn items(&self) -> impl Iterator<Item = Item> + '_ {
        self.entries.keys().copied()
    }

    pub fn sids(&self, item: Item) -> Vec<Sid> {
        self.entries
            .get(&item)
            .map(|v| v.iter().map(|o| o.sid).collect())
            .unwrap_or_default()
    }

    pub fn support(&self, item: Item) -> usize {
        self.entries.get(&item).map_or(0, Vec::len)
    }

    fn record(&mut self, item: Item, occ: Occurrence) {
        let entry = self.entries.entry(item).or_default();
        if entry.last().is_none_or(|o| o.local != occ.local) {
            entry.push(occ);
        }
    }
}

/// Dense, index-friendly copy of the working database.
struct Workspace {
    db: SequenceDatabase,
    /// Per sequence: `(item, first, last)` sorted by item.
    spans: Vec<Vec<(Item, u32, u32)>>,
    /// Per item: local indices of the sequences containing it.
    item_seqs: BTreeMap<Item, Arc<Vec<u32>>>,
    /// Per sequence, only when windows are in use.
    tmpm: Option<Vec<TmpmEntry>>,
}

impl Workspace {
    fn new(db: SequenceDatabase) -> Self {
        let mut spans = Vec::with_capacity(db.len());
        let mut item_seqs: BTreeMap<Item, Vec<u32>> = BTreeMap::new();
        for (local, seq) in db.iter().enumerate() {
            let mut table: BTreeMap<Item, (u32, u32)> = BTreeMap::new();
            for (pos, set) in seq.itemsets().iter().enumerate() {
                for item in set.iter() {
                    let pos = pos as u32;
                    table.entry(item).and_modify(|s| s.1 = pos).or_insert((pos, pos));
                }
            }
            for &item in table.keys() {
                item_seqs.entry(item).or_default().push(local as u32);
            }
            spans.push(table.into_iter().map(|(i, (f, l))| (i, f, l)).collect());
        }
        Workspace {
            db,
            spans,
            item_seqs: item_seqs.into_iter().map(|(i, v)| (i, Arc::new(v))).collect(),
            tmpm: None,
        }
    }

    fn span(&self, local: u32, item: Item) -> Option<(u32, u32)> {
        let spans = &self.spans[local as usize];
        spans
            .binary_search_by_key(&item, |s| s.0)
            .ok()
            .map(|i| (spans[i].1, spans[i].2))
    }

    fn contains(&self, local: u32, item: Item) -> bool {
        self.span(local, item).is_some()
    }

    fn sid(&self, local: u32) -> Sid {
        self.db.sequences()[local as usize].sid()
    }
}

/// A prepared mining run: the variant's filtered database plus the pruning
/// structures the growth consults.
pub struct Engine {
    query: QueryRule,
    config: MinerConfig,
    work: Workspace,
    count_maps: Option<CountMaps>,
    filtering: FilteringRate,
    /// Set when filtering proved that no target rule exists.
    exhausted: bool,
}

impl Engine {
    pub fn prepare(db: &SequenceDatabase, query: &QueryRule, config: &MinerConfig) -> Result<Engine> {
        config.validate()?;
        let variant = config.variant;
        let mut filtering = FilteringRate::default();
        let mut exhausted = false;
        let mut count_maps = None;
        let mut tmpm = None;

        let mut working = if variant.filters_transactions() {
            let (filtered, rate) = utp_filter(db, query);
            filtering = rate;
            filtered
        } else {
            db.clone()
        };

        if variant.filters_items() && !working.is_empty() {
            let positions = build_tmpm(&working, query)?;
            working = uip_filter(&working, &positions, query, config.minsup)?;
            let present = working.items();
            exhausted = !query
                .antecedent()
                .iter()
                .chain(query.consequent().iter())
                .all(|i| present.contains(&i));
            if exhausted {
                working = SequenceDatabase::default();
            } else if variant.tracks_matches() {
                let positions = build_tmpm(&working, query)?;
                let maps = build_count_maps(&working, &positions, query, config.minsup)?;
                if !maps.removable.is_empty() {
                    working = remove_items(&working, &maps.removable);
                }
                let positions = build_tmpm(&working, query)?;
                tmpm = Some(working.iter().map(|s| positions[&s.sid()]).collect());
                count_maps = Some(maps);
            }
        }

        let mut work = Workspace::new(working);
        work.tmpm = tmpm;
        Ok(Engine {
            query: query.clone(),
            config: config.clone(),
            work,
            count_maps,
            filtering,
            exhausted,
        })
    }

    pub fn working_database(&self) -> &SequenceDatabase {
        &self.work.db
    }

    pub fn count_maps(&self) -> Option<&CountMaps> {
        self.count_maps.as_ref()
    }

    pub fn filtering_rate(&self) -> FilteringRate {
        self.filtering
    }

    fn minsup(&self) -> usize {
        self.config.minsup
    }

    fn v3(&self) -> bool {
        self.config.variant.tracks_matches()
    }

    /// All 1*1 seeds with enough support. Each unordered pair of frequent
    /// items is evaluated once, in both directions.
    pub fn seed_rules(&self, stats: &mut MiningStats) -> Vec<RuleState> {
        if self.exhausted {
            return Vec::new();
        }
        let minsup = self.minsup();
        let frequent: Vec<(Item, &Arc<Vec<u32>>)> = self
            .work
            .item_seqs
            .iter()
            .filter(|(_, seqs)| seqs.len() >= minsup)
            .map(|(&i, s)| (i, s))
            .collect();
        let urp = self.config.variant.filters_items();

        let mut seeds = Vec::new();
        for (a, &(m, m_seqs)) in frequent.iter().enumerate() {
            for &(n, n_seqs) in &frequent[a + 1..] {
                stats.seed_pairs_evaluated += 1;
                let (fwd, bwd) = if urp {
                    urp_admits(m, n, &self.query, self.count_maps.as_ref(), minsup)
                } else {
                    (true, true)
                };
                if !fwd && !bwd {
                    continue;
                }
                let mut mn = Vec::new();
                let mut nm = Vec::new();
                for local in intersect(m_seqs, n_seqs) {
                    let (mf, ml) = self.work.span(local, m).expect("indexed item");
                    let (nf, nl) = self.work.span(local, n).expect("indexed item");
                    let sid = self.work.sid(local);
                    if fwd && mf < nl {
                        mn.push(Occurrence { sid, local, first_itemset: mf, last_itemset: nl });
                    }
                    if bwd && nf < ml {
                        nm.push(Occurrence { sid, local, first_itemset: nf, last_itemset: ml });
                    }
                }
                if mn.len() >= minsup {
                    seeds.push(self.seed(m, n, mn, m_seqs));
                }
                if nm.len() >= minsup {
                    seeds.push(self.seed(n, m, nm, n_seqs));
                }
            }
        }
        seeds
    }

    fn seed(&self, m: Item, n: Item, occurrences: Vec<Occurrence>, m_seqs: &Arc<Vec<u32>>) -> RuleState {
        RuleState {
            antecedent: Itemset::from([m]),
            consequent: Itemset::from([n]),
            occurrences,
            antecedent_seqs: Arc::clone(m_seqs),
            matched: MatchState::for_seed(m, n, &self.query),
            left_grown: false,
        }
    }

    fn admissible(&self, item: Item, side: Side, state: &RuleState) -> bool {
        match &self.count_maps {
            Some(maps) if self.v3() => {
                ueip_item_admissible(item, side, state.matched, &self.query, maps, self.minsup())
            }
            _ => true,
        }
    }

    /// Items that can be appended to the consequent, with the occurrences
    /// of each expanded rule.
    pub fn right_candidates(&self, state: &RuleState) -> ExpansionTable {
        let floor = state.consequent.last().expect("non-empty consequent");
        let mut table = ExpansionTable::default();
        for occ in &state.occurrences {
            let mut start = occ.first_itemset as isize;
            if let Some(tmpm) = &self.work.tmpm {
                start = start.max(tmpm[occ.local as usize].left_end);
            }
            let itemsets = self.work.db.sequences()[occ.local as usize].itemsets();
            for set in itemsets.iter().skip((start + 1) as usize) {
                let items = set.as_slice();
                let from = items.partition_point(|&i| i <= floor);
                for &item in &items[from..] {
                    if state.antecedent.contains(item) || !self.admissible(item, Side::Right, state) {
                        continue;
                    }
                    let (_, last) = self.work.span(occ.local, item).expect("indexed item");
                    table.record(
                        item,
                        Occurrence {
                            last_itemset: occ.last_itemset.min(last),
                            ..*occ
                        },
                    );
                }
            }
        }
        table
    }

    /// Items that can be added to the antecedent, with the occurrences of
    /// each expanded rule.
    pub fn left_candidates(&self, state: &RuleState) -> ExpansionTable {
        let floor = state.antecedent.last().expect("non-empty antecedent");
        let mut table = ExpansionTable::default();
        for occ in &state.occurrences {
            let mut end = occ.last_itemset as isize;
            if let Some(tmpm) = &self.work.tmpm {
                end = end.min(tmpm[occ.local as usize].right_end);
            }
            let itemsets = self.work.db.sequences()[occ.local as usize].itemsets();
            for set in itemsets.iter().take(end.max(0) as usize) {
                let items = set.as_slice();
                let from = items.partition_point(|&i| i <= floor);
                for &item in &items[from..] {
                    if state.consequent.contains(item) || !self.admissible(item, Side::Left, state) {
                        continue;
                    }
                    let (first, _) = self.work.span(occ.local, item).expect("indexed item");
                    table.record(
                        item,
                        Occurrence {
                            first_itemset: occ.first_itemset.max(first),
                            ..*occ
                        },
                    );
                }
            }
        }
        table
    }

    /// One right-expansion step: the children `I -> J ∪ {e}` with enough
    /// support. Children that qualify are emitted into `rules`.
    pub fn expand_right(&self, state: &RuleState, rules: &mut Vec<SequentialRule>) -> Vec<RuleState> {
        let table = self.right_candidates(state);
        let minsup = self.minsup();
        table
            .entries
            .into_iter()
            .filter(|(_, occs)| occs.len() >= minsup)
            .map(|(item, occurrences)| {
                let child = RuleState {
                    antecedent: state.antecedent.clone(),
                    consequent: state.consequent.with(item),
                    occurrences,
                    antecedent_seqs: Arc::clone(&state.antecedent_seqs),
                    matched: advance_match(state.matched, Side::Right, item, &self.query),
                    left_grown: false,
                };
                self.emit(&child, rules);
                child
            })
            .collect()
    }

    /// One left-expansion step: the children `I ∪ {e} -> J`.
    pub fn expand_left(&self, state: &RuleState, rules: &mut Vec<SequentialRule>) -> Vec<RuleState> {
        let table = self.left_candidates(state);
        let minsup = self.minsup();
        table
            .entries
            .into_iter()
            .filter(|(_, occs)| occs.len() >= minsup)
            .map(|(item, occurrences)| {
                let antecedent_seqs: Vec<u32> = state
                    .antecedent_seqs
                    .iter()
                    .copied()
                    .filter(|&l| self.work.contains(l, item))
                    .collect();
                let child = RuleState {
                    antecedent: state.antecedent.with(item),
                    consequent: state.consequent.clone(),
                    occurrences,
                    antecedent_seqs: Arc::new(antecedent_seqs),
                    matched: advance_match(state.matched, Side::Left, item, &self.query),
                    left_grown: true,
                };
                self.emit(&child, rules);
                child
            })
            .collect()
    }

    fn emit(&self, state: &RuleState, rules: &mut Vec<SequentialRule>) {
        if self.v3() && !state.matched.is_complete(&self.query) {
            return;
        }
        let rule = state.to_rule();
        if rule.confidence() >= self.config.minconf {
            rules.push(rule);
        }
    }

    fn may_expand_right(&self, state: &RuleState) -> bool {
        !state.left_grown
            && self
                .config
                .max_consequent
                .is_none_or(|cap| state.consequent.len() < cap)
    }

    fn may_expand_left(&self, state: &RuleState) -> bool {
        self.config
            .max_antecedent
            .is_none_or(|cap| state.antecedent.len() < cap)
            && (!self.v3() || state.matched.right_complete(&self.query))
    }

    /// Grows one subtree with an explicit stack.
    fn grow(&self, root: RuleState, rules: &mut Vec<SequentialRule>, stats: &mut MiningStats) {
        let mut stack = vec![root];
        while let Some(state) = stack.pop() {
            if self.may_expand_right(&state) {
                stats.expansions_right += 1;
                stack.extend(self.expand_right(&state, rules));
            }
            if self.may_expand_left(&state) {
                stats.expansions_left += 1;
                stack.extend(self.expand_left(&state, rules));
            }
        }
    }

    /// Seeds and grows everything; rules are unsorted and, except for V3,
    /// not yet restricted to targets.
    pub fn run(&self) -> (Vec<SequentialRule>, MiningStats) {
        let mut stats = MiningStats::default();
        let mut rules = Vec::new();
        let seeds = self.seed_rules(&mut stats);
        for seed in &seeds {
            self.emit(seed, &mut rules);
        }
        if self.config.parallel {
            let (more, grown) = seeds
                .into_par_iter()
                .map(|seed| {
                    let mut rules = Vec::new();
                    let mut stats = MiningStats::default();
                    self.grow(seed, &mut rules, &mut stats);
                    (rules, stats)
                })
                .reduce(
                    || (Vec::new(), MiningStats::default()),
                    |(mut ra, mut sa), (rb, sb)| {
                        ra.extend(rb);
                        sa.absorb(&sb);
                        (ra, sa)
                    },
                );
            rules.extend(more);
            stats.absorb(&grown);
        } else {
            for seed in seeds {
                self.grow(seed, &mut rules, &mut stats);
            }
        }
        (rules, stats)
    }
}

/// Ascending intersection of two ascending index lists.
fn intersect<'a>(a: &'a [u32], b: &'a [u32]) -> impl Iterator<Item = u32> + 'a {
    let mut i = 0;
    let mut j = 0;
    std::iter::from_fn(move || {
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let v = a[i];
                    i += 1;
                    j += 1;
                    return Some(v);
                }
            }
        }
        None
    })
}

/// Distinct `(antecedent, consequent)` pairs in `rules`.
pub fn distinct_rule_keys(rules: &[SequentialRule]) -> BTreeSet<(Itemset, Itemset)> {
    rules
        .iter()
        .map(|r| (r.antecedent.clone(), r.consequent.clone()))
        .collect()
}
