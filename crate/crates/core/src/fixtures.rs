//! A small worked-example database used by tests, docs and the CLI demo.
//!
//! Letters map to item ids `a = 1` through `g = 7`.

use crate::seqdb::{Item, SequenceDatabase};

pub const A: Item = 1;
pub const B: Item = 2;
pub const C: Item = 3;
pub const D: Item = 4;
pub const E: Item = 5;
pub const F: Item = 6;
pub const G: Item = 7;

/// Five sequences with sids `0..=4`:
///
/// ```text
/// 0: <(b), (c,e)>
/// 1: <(b), (a), (d), (f)>
/// 2: <(b,c), (d), (a), (g), (b,c)>
/// 3: <(b), (a), (d), (e), (c,d)>
/// 4: <(c,d), (a,b), (e,g), (c)>
/// ```
pub fn example_db() -> SequenceDatabase {
    SequenceDatabase::from_itemsets(vec![
        vec![vec![B], vec![C, E]],
        vec![vec![B], vec![A], vec![D], vec![F]],
        vec![vec![B, C], vec![D], vec![A], vec![G], vec![B, C]],
        vec![vec![B], vec![A], vec![D], vec![E], vec![C, D]],
        vec![vec![C, D], vec![A, B], vec![E, G], vec![C]],
    ])
    .expect("example database is well formed")
}

/// The same database in SPMF text form.
pub const EXAMPLE_SPMF: &str = "\
2 -1 3 5 -1 -2
2 -1 1 -1 4 -1 6 -1 -2
2 3 -1 4 -1 1 -1 7 -1 2 3 -1 -2
2 -1 1 -1 4 -1 5 -1 3 4 -1 -2
3 4 -1 1 2 -1 5 7 -1 3 -1 -2
";
