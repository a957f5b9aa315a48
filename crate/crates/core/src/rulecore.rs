//! Partially-ordered sequential rules: occurrence, support, confidence,
//! query containment, and an exhaustive enumeration oracle.
//!
//! A rule `X -> Y` occurs in a sequence of `n` itemsets when some split
//! `0 <= k <= n - 2` puts all of `X` in itemsets `0..=k` and all of `Y` in
//! itemsets `k+1..n`. Items of `X` need not share an itemset, nor appear in
//! any particular order among themselves.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::seqdb::{Item, Itemset, Sequence, SequenceDatabase};

/// A rule `antecedent -> consequent` with its absolute support and the
/// number of sequences containing the antecedent (order-free).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SequentialRule {
    pub antecedent: Itemset,
    pub consequent: Itemset,
    pub support: usize,
    pub antecedent_support: usize,
}

impl SequentialRule {
    pub fn confidence(&self) -> f64 {
        self.support as f64 / self.antecedent_support as f64
    }

    /// `(|X|, |Y|)`, rendered `m * f`.
    pub fn size(&self) -> (usize, usize) {
        (self.antecedent.len(), self.consequent.len())
    }

    /// Canonical text rendering, e.g. `1,2 ==> 3 #SUP: 3 #CONF: 0.7500`.
    pub fn render(&self) -> String {
        self.to_string()
    }

    /// Output order: total size, then antecedent, then consequent.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        let size = |r: &Self| r.antecedent.len() + r.consequent.len();
        size(self)
            .cmp(&size(other))
            .then_with(|| self.antecedent.cmp(&other.antecedent))
            .then_with(|| self.consequent.cmp(&other.consequent))
    }
}

impl fmt::Display for SequentialRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ==> {} #SUP: {} #CONF: {:.4}",
            self.antecedent,
            self.consequent,
            self.support,
            self.confidence()
        )
    }
}

/// Sorts rules into canonical output order.
pub fn sort_rules(rules: &mut [SequentialRule]) {
    rules.sort_by(SequentialRule::canonical_cmp);
}

/// A query template. Target rules contain the query's antecedent in their
/// antecedent and the query's consequent in their consequent; an empty side
/// imposes nothing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct QueryRule {
    antecedent: Itemset,
    consequent: Itemset,
}

impl QueryRule {
    pub fn new(antecedent: Itemset, consequent: Itemset) -> Result<Self> {
        if !antecedent.is_disjoint(&consequent) {
            return Err(Error::param(format!(
                "query sides overlap: {antecedent} => {consequent}"
            )));
        }
        Ok(QueryRule {
            antecedent,
            consequent,
        })
    }

    pub fn empty() -> Self {
        QueryRule::default()
    }

    pub fn antecedent(&self) -> &Itemset {
        &self.antecedent
    }

    pub fn consequent(&self) -> &Itemset {
        &self.consequent
    }

    pub fn is_empty(&self) -> bool {
        self.antecedent.is_empty() && self.consequent.is_empty()
    }

    /// Smallest antecedent item of the query.
    pub fn first_left(&self) -> Option<Item> {
        self.antecedent.first()
    }

    /// Smallest consequent item of the query.
    pub fn first_right(&self) -> Option<Item> {
        self.consequent.first()
    }

    /// True if `item` appears on either side of the query.
    pub fn mentions(&self, item: Item) -> bool {
        self.antecedent.contains(item) || self.consequent.contains(item)
    }

    pub fn is_satisfied_by(&self, antecedent: &Itemset, consequent: &Itemset) -> bool {
        self.antecedent.is_subset_of(antecedent) && self.consequent.is_subset_of(consequent)
    }
}

impl fmt::Display for QueryRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}=>{}", self.antecedent, self.consequent)
    }
}

/// Where a rule sits in one sequence that contains it.
///
/// `first_itemset` is the earliest index whose prefix holds the whole
/// antecedent; `last_itemset` is the latest index whose suffix holds the
/// whole consequent. Right-expansion items are looked for after
/// `first_itemset`, left-expansion items before `last_itemset`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleOccurrence {
    pub first_itemset: usize,
    pub last_itemset: usize,
}

/// Support and antecedent support of a rule in a database.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleMeasures {
    pub support: usize,
    pub antecedent_support: usize,
}

impl RuleMeasures {
    pub fn confidence(&self) -> f64 {
        self.support as f64 / self.antecedent_support as f64
    }
}

fn check_sides(antecedent: &Itemset, consequent: &Itemset) -> Result<()> {
    if antecedent.is_empty() || consequent.is_empty() {
        return Err(Error::contract("rule sides must be non-empty"));
    }
    if !antecedent.is_disjoint(consequent) {
        return Err(Error::contract(format!(
            "rule sides overlap: {antecedent} ==> {consequent}"
        )));
    }
    Ok(())
}

/// Smallest index `k` with `items ⊆ itemsets[0..=k]`; `None` if some item
/// is missing. Undefined for an empty set (returns `None`).
pub fn prefix_completion(seq: &Sequence, items: &Itemset) -> Option<usize> {
    let mut k: Option<usize> = None;
    for item in items.iter() {
        let p = seq.first_position(item)?;
        k = Some(k.map_or(p, |k| k.max(p)));
    }
    k
}

/// Largest index `k` with `items ⊆ itemsets[k..]`; `None` if some item is
/// missing. Undefined for an empty set (returns `None`).
pub fn suffix_completion(seq: &Sequence, items: &Itemset) -> Option<usize> {
    let mut k: Option<usize> = None;
    for item in items.iter() {
        let p = seq.last_position(item)?;
        k = Some(k.map_or(p, |k| k.min(p)));
    }
    k
}

pub fn rule_occurs(seq: &Sequence, antecedent: &Itemset, consequent: &Itemset) -> Result<bool> {
    Ok(compute_occurrence(seq, antecedent, consequent)?.is_some())
}

pub fn compute_occurrence(
    seq: &Sequence,
    antecedent: &Itemset,
    consequent: &Itemset,
) -> Result<Option<RuleOccurrence>> {
    check_sides(antecedent, consequent)?;
    let (Some(first), Some(last)) = (
        prefix_completion(seq, antecedent),
        suffix_completion(seq, consequent),
    ) else {
        return Ok(None);
    };
    Ok((first < last).then_some(RuleOccurrence {
        first_itemset: first,
        last_itemset: last,
    }))
}

/// Full-scan support and antecedent support. `Ok(None)` when no sequence
/// contains the antecedent, in which case the rule has no support either.
pub fn support_and_confidence(
    db: &SequenceDatabase,
    antecedent: &Itemset,
    consequent: &Itemset,
) -> Result<Option<RuleMeasures>> {
    check_sides(antecedent, consequent)?;
    let mut support = 0;
    let mut antecedent_support = 0;
    for seq in db.iter() {
        if seq.contains_all(antecedent) {
            antecedent_support += 1;
            if rule_occurs(seq, antecedent, consequent)? {
                support += 1;
            }
        }
    }
    Ok((antecedent_support > 0).then_some(RuleMeasures {
        support,
        antecedent_support,
    }))
}

pub fn is_target_rule(rule: &SequentialRule, query: &QueryRule) -> bool {
    query.is_satisfied_by(&rule.antecedent, &rule.consequent)
}

/// Exhaustive miner used as a correctness oracle.
///
/// Tries every disjoint pair of non-empty itemsets over the database's
/// items within the size caps and scores each one with a full scan.
/// Exponential in the number of items; only meant for small inputs.
pub fn brute_force_mine(
    db: &SequenceDatabase,
    query: &QueryRule,
    minsup: usize,
    minconf: f64,
    max_antecedent: usize,
    max_consequent: usize,
) -> Result<Vec<SequentialRule>> {
    if max_antecedent < query.antecedent().len() || max_consequent < query.consequent().len() {
        return Err(Error::param("size caps are smaller than the query"));
    }
    let items: Vec<Item> = db.items().into_iter().collect();
    let mut rules = Vec::new();
    for antecedent in subsets_up_to(&items, max_antecedent) {
        let rest: Vec<Item> = items
            .iter()
            .copied()
            .filter(|&i| !antecedent.contains(i))
            .collect();
        for consequent in subsets_up_to(&rest, max_consequent) {
            let Some(m) = support_and_confidence(db, &antecedent, &consequent)? else {
                continue;
            };
            let rule = SequentialRule {
                antecedent: antecedent.clone(),
                consequent,
                support: m.support,
                antecedent_support: m.antecedent_support,
            };
            if rule.support >= minsup && rule.confidence() >= minconf && is_target_rule(&rule, query)
            {
                rules.push(rule);
            }
        }
    }
    sort_rules(&mut rules);
    Ok(rules)
}

/// Non-empty subsets of `items` with at most `max_len` elements.
fn subsets_up_to(items: &[Item], max_len: usize) -> Vec<Itemset> {
    fn walk(items: &[Item], max_len: usize, chosen: &mut Vec<Item>, out: &mut Vec<Itemset>) {
        for (i, &item) in items.iter().enumerate() {
            chosen.push(item);
            out.push(Itemset::new(chosen.iter().copied()));
            if chosen.len() < max_len {
                walk(&items[i + 1..], max_len, chosen, out);
            }
            chosen.pop();
        }
    }
    let mut out = Vec::new();
    if max_len > 0 {
        walk(items, max_len, &mut Vec::new(), &mut out);
    }
    out
}
