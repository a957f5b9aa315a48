//! Targeted mining of partially-ordered sequential rules.
//!
//! Given a sequence database, a query rule `XQuery => YQuery` and
//! support/confidence thresholds, [`miner::mine`] returns exactly the
//! frequent, confident rules `X -> Y` with `XQuery ⊆ X` and `YQuery ⊆ Y`.
//! Four engine variants share one rule-growth core and differ only in how
//! much query-driven pruning they apply; their outputs are identical.

pub mod error;
pub mod fixtures;
pub mod miner;
pub mod pruning;
pub mod rulecore;
pub mod seqdb;

pub use error::{Error, Result};
pub use rulecore::{QueryRule, RuleOccurrence, SequentialRule};
pub use seqdb::{Item, Itemset, Sequence, SequenceDatabase, Sid};
pub use miner::{mine, MinerConfig, MiningResult, MiningStats, Variant};
