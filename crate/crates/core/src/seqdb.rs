//! Sequence databases: the data model, SPMF text I/O, per-item position
//! indexing, summary statistics and a seeded synthetic generator.
//!
//! Items are unsigned integers and their numeric order is the total order
//! used by every growth step. Itemset positions inside a sequence are 0-based.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

pub type Item = u32;
pub type Sid = usize;

/// A set of items kept as a strictly increasing list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Itemset(Vec<Item>);

impl Itemset {
    /// Builds an itemset, sorting and de-duplicating the input.
    pub fn new(items: impl IntoIterator<Item = Item>) -> Self {
        let mut items: Vec<Item> = items.into_iter().collect();
        items.sort_unstable();
        items.dedup();
        Itemset(items)
    }

    pub fn empty() -> Self {
        Itemset(Vec::new())
    }

    pub fn as_slice(&self) -> &[Item] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Item> + '_ {
        self.0.iter().copied()
    }

    pub fn first(&self) -> Option<Item> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Item> {
        self.0.last().copied()
    }

    pub fn get(&self, index: usize) -> Option<Item> {
        self.0.get(index).copied()
    }

    pub fn contains(&self, item: Item) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    pub fn is_subset_of(&self, other: &Itemset) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn is_disjoint(&self, other: &Itemset) -> bool {
        self.0.iter().all(|&i| !other.contains(i))
    }

    /// Returns a copy with `item` inserted.
    pub fn with(&self, item: Item) -> Itemset {
        let mut items = self.0.clone();
        if let Err(pos) = items.binary_search(&item) {
            items.insert(pos, item);
        }
        Itemset(items)
    }

    pub fn into_vec(self) -> Vec<Item> {
        self.0
    }
}

impl FromIterator<Item> for Itemset {
    fn from_iter<T: IntoIterator<Item = Item>>(iter: T) -> Self {
        Itemset::new(iter)
    }
}

impl From<Vec<Item>> for Itemset {
    fn from(items: Vec<Item>) -> Self {
        Itemset::new(items)
    }
}

impl<const N: usize> From<[Item; N]> for Itemset {
    fn from(items: [Item; N]) -> Self {
        Itemset::new(items)
    }
}

/// Comma-separated, no spaces: `1,2,5`.
impl fmt::Display for Itemset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, item) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{item}")?;
        }
        Ok(())
    }
}

/// An ordered list of non-empty itemsets tagged with a sequence identifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sequence {
    sid: Sid,
    itemsets: Vec<Itemset>,
}

impl Sequence {
    pub fn new(sid: Sid, itemsets: Vec<Itemset>) -> Result<Self> {
        if let Some(pos) = itemsets.iter().position(Itemset::is_empty) {
            return Err(Error::param(format!(
                "sequence {sid}: itemset at position {pos} is empty"
            )));
        }
        Ok(Sequence { sid, itemsets })
    }

    pub fn sid(&self) -> Sid {
        self.sid
    }

    pub fn itemsets(&self) -> &[Itemset] {
        &self.itemsets
    }

    /// Number of itemsets.
    pub fn len(&self) -> usize {
        self.itemsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.itemsets.is_empty()
    }

    pub fn contains_item(&self, item: Item) -> bool {
        self.itemsets.iter().any(|s| s.contains(item))
    }

    /// Order-free containment: every item of `items` occurs somewhere.
    pub fn contains_all(&self, items: &Itemset) -> bool {
        items.iter().all(|i| self.contains_item(i))
    }

    pub fn first_position(&self, item: Item) -> Option<usize> {
        self.itemsets.iter().position(|s| s.contains(item))
    }

    pub fn last_position(&self, item: Item) -> Option<usize> {
        self.itemsets.iter().rposition(|s| s.contains(item))
    }

    /// Distinct items of the sequence in ascending order.
    pub fn items(&self) -> BTreeSet<Item> {
        self.itemsets.iter().flat_map(Itemset::iter).collect()
    }

    pub(crate) fn with_sid(mut self, sid: Sid) -> Self {
        self.sid = sid;
        self
    }
}

/// A collection of sequences with distinct identifiers.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SequenceDatabase {
    sequences: Vec<Sequence>,
}

impl SequenceDatabase {
    pub fn new(sequences: Vec<Sequence>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(sequences.len());
        for seq in &sequences {
            if !seen.insert(seq.sid) {
                return Err(Error::param(format!("duplicate sid {}", seq.sid)));
            }
        }
        Ok(SequenceDatabase { sequences })
    }

    /// Builds a database from nested item lists, assigning sids `0..n`.
    pub fn from_itemsets(rows: Vec<Vec<Vec<Item>>>) -> Result<Self> {
        let sequences = rows
            .into_iter()
            .enumerate()
            .map(|(sid, row)| Sequence::new(sid, row.into_iter().map(Itemset::new).collect()))
            .collect::<Result<Vec<_>>>()?;
        SequenceDatabase::new(sequences)
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn sequences(&self) -> &[Sequence] {
        &self.sequences
    }

    pub fn iter(&self) -> impl Iterator<Item = &Sequence> {
        self.sequences.iter()
    }

    pub fn get(&self, sid: Sid) -> Option<&Sequence> {
        self.sequences.iter().find(|s| s.sid == sid)
    }

    /// All distinct items of the database.
    pub fn items(&self) -> BTreeSet<Item> {
        self.sequences
            .iter()
            .flat_map(|s| s.itemsets.iter().flat_map(Itemset::iter))
            .collect()
    }

    /// Same sequences renumbered `0..n` in current order.
    pub fn renumbered(&self) -> SequenceDatabase {
        SequenceDatabase {
            sequences: self
                .sequences
                .iter()
                .cloned()
                .enumerate()
                .map(|(sid, s)| s.with_sid(sid))
                .collect(),
        }
    }

    /// Keeps the first `n` sequences.
    pub fn truncated(&self, n: usize) -> SequenceDatabase {
        SequenceDatabase {
            sequences: self.sequences.iter().take(n).cloned().collect(),
        }
    }

    pub(crate) fn from_sequences_unchecked(sequences: Vec<Sequence>) -> Self {
        SequenceDatabase { sequences }
    }
}

/// Parses the SPMF sequence format.
///
/// Each data line holds one sequence: items are non-negative integers, `-1`
/// closes an itemset and `-2` closes the sequence. Lines starting with `#`,
/// `%` or `@` and blank lines are skipped. Sequences get sids `0..n` in file
/// order.
pub fn parse_spmf(text: &str) -> Result<SequenceDatabase> {
    let mut sequences = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with(['#', '%', '@']) {
            continue;
        }
        let mut itemsets = Vec::new();
        let mut current: Vec<Item> = Vec::new();
        let mut terminated = false;
        for token in line.split_whitespace() {
            if terminated {
                return Err(Error::parse(lineno, format!("unexpected token {token:?} after -2")));
            }
            let value: i64 = token
                .parse()
                .map_err(|_| Error::parse(lineno, format!("malformed token {token:?}")))?;
            match value {
                -1 => {
                    if current.is_empty() {
                        return Err(Error::parse(lineno, "itemset with no items before -1"));
                    }
                    itemsets.push(Itemset::new(current.drain(..)));
                }
                -2 => {
                    if !current.is_empty() {
                        return Err(Error::parse(lineno, "itemset not terminated by -1 before -2"));
                    }
                    if itemsets.is_empty() {
                        return Err(Error::parse(lineno, "sequence with no itemsets before -2"));
                    }
                    terminated = true;
                }
                v if v >= 0 => {
                    let item = Item::try_from(v)
                        .map_err(|_| Error::parse(lineno, format!("item {v} out of range")))?;
                    current.push(item);
                }
                v => return Err(Error::parse(lineno, format!("unexpected negative token {v}"))),
            }
        }
        if !terminated {
            return Err(Error::parse(lineno, "missing -2 terminator"));
        }
        let sid = sequences.len();
        sequences.push(Sequence { sid, itemsets });
    }
    Ok(SequenceDatabase { sequences })
}

/// Renders a database in SPMF format, one newline-terminated line per sequence.
pub fn write_spmf(db: &SequenceDatabase) -> String {
    let mut out = String::new();
    for seq in db.iter() {
        for itemset in seq.itemsets() {
            for item in itemset.iter() {
                out.push_str(&item.to_string());
                out.push(' ');
            }
            out.push_str("-1 ");
        }
        out.push_str("-2\n");
    }
    out
}

/// First and last itemset index at which an item occurs in one sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ItemSpan {
    pub first: usize,
    pub last: usize,
}

/// Per-item map from sid to the item's first/last position in that sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ItemIndex {
    entries: BTreeMap<Item, BTreeMap<Sid, ItemSpan>>,
}

impl ItemIndex {
    pub fn build(db: &SequenceDatabase) -> Self {
        let mut entries: BTreeMap<Item, BTreeMap<Sid, ItemSpan>> = BTreeMap::new();
        for seq in db.iter() {
            for (pos, itemset) in seq.itemsets().iter().enumerate() {
                for item in itemset.iter() {
                    entries
                        .entry(item)
                        .or_default()
                        .entry(seq.sid())
                        .and_modify(|span| span.last = pos)
                        .or_insert(ItemSpan { first: pos, last: pos });
                }
            }
        }
        ItemIndex { entries }
    }

    pub fn span(&self, item: Item, sid: Sid) -> Option<ItemSpan> {
        self.entries.get(&item)?.get(&sid).copied()
    }

    /// Number of sequences containing `item`.
    pub fn support(&self, item: Item) -> usize {
        self.entries.get(&item).map_or(0, BTreeMap::len)
    }

    pub fn sids(&self, item: Item) -> impl Iterator<Item = Sid> + '_ {
        self.entries.get(&item).into_iter().flat_map(|m| m.keys().copied())
    }

    pub fn occurrences(&self, item: Item) -> impl Iterator<Item = (Sid, ItemSpan)> + '_ {
        self.entries
            .get(&item)
            .into_iter()
            .flat_map(|m| m.iter().map(|(&sid, &span)| (sid, span)))
    }

    pub fn items(&self) -> impl Iterator<Item = Item> + '_ {
        self.entries.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct items.
    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DatasetStats {
    pub num_sequences: usize,
    pub num_items: usize,
    pub avg_items_per_itemset: f64,
    pub avg_itemsets_per_sequence: f64,
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "|D|={} |I|={} AVI={:.2} AVL={:.2}",
            self.num_sequences,
            self.num_items,
            self.avg_items_per_itemset,
            self.avg_itemsets_per_sequence
        )
    }
}

pub fn dataset_stats(db: &SequenceDatabase) -> DatasetStats {
    let mut itemsets = 0usize;
    let mut occurrences = 0usize;
    for seq in db.iter() {
        itemsets += seq.len();
        occurrences += seq.itemsets().iter().map(Itemset::len).sum::<usize>();
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    DatasetStats {
        num_sequences: db.len(),
        num_items: db.items().len(),
        avg_items_per_itemset: ratio(occurrences, itemsets),
        avg_itemsets_per_sequence: ratio(itemsets, db.len()),
    }
}

/// Parameters of [`generate_synthetic`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorParams {
    pub num_sequences: usize,
    pub alphabet_size: usize,
    pub avg_itemsets_per_sequence: f64,
    pub avg_items_per_itemset: f64,
    pub seed: u64,
}

/// Seeded random sequence database.
///
/// Sequence lengths are `1 + Poisson(avg_itemsets_per_sequence - 1)` and
/// itemset sizes `1 + Poisson(avg_items_per_itemset - 1)` capped at the
/// alphabet size. Items of an itemset are drawn uniformly without
/// replacement from `1..=alphabet_size`. Sequences are drawn one after the
/// other, so a smaller database is a prefix of a larger one with the same
/// seed and shape parameters.
pub fn generate_synthetic(params: &GeneratorParams) -> Result<SequenceDatabase> {
    let GeneratorParams {
        num_sequences,
        alphabet_size,
        avg_itemsets_per_sequence,
        avg_items_per_itemset,
        seed,
    } = *params;
    if num_sequences < 1 || alphabet_size < 1 {
        return Err(Error::param("sequence count and alphabet size must be at least 1"));
    }
    if !(1.0..).contains(&avg_itemsets_per_sequence) || !(1.0..).contains(&avg_items_per_itemset) {
        return Err(Error::param("average lengths must be at least 1"));
    }
    if (alphabet_size as f64) < avg_items_per_itemset {
        return Err(Error::param(format!(
            "alphabet of {alphabet_size} items cannot fill itemsets of average size {avg_items_per_itemset}"
        )));
    }
    let seq_len = ShiftedPoisson::new(avg_itemsets_per_sequence)?;
    let set_len = ShiftedPoisson::new(avg_items_per_itemset)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sequences = Vec::with_capacity(num_sequences);
    for sid in 0..num_sequences {
        let n = seq_len.sample(&mut rng);
        let itemsets = (0..n)
            .map(|_| {
                let k = set_len.sample(&mut rng).min(alphabet_size);
                Itemset::new(sample(&mut rng, alphabet_size, k).iter().map(|i| i as Item + 1))
            })
            .collect();
        sequences.push(Sequence { sid, itemsets });
    }
    Ok(SequenceDatabase { sequences })
}

/// `1 + Poisson(mean - 1)`, degenerate at 1 when `mean == 1`.
struct ShiftedPoisson(Option<Poisson<f64>>);

impl ShiftedPoisson {
    fn new(mean: f64) -> Result<Self> {
        if mean <= 1.0 {
            return Ok(ShiftedPoisson(None));
        }
        Poisson::new(mean - 1.0)
            .map(|p| ShiftedPoisson(Some(p)))
            .map_err(|e| Error::param(format!("length distribution: {e}")))
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        match &self.0 {
            None => 1,
            Some(p) => 1 + p.sample(rng) as usize,
        }
    }
}
