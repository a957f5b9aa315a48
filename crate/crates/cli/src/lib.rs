//! Command-line front end: dataset loading, query parsing, mining, variant
//! benchmarking and synthetic data generation.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use seqrules::seqdb::{dataset_stats, generate_synthetic, parse_spmf, write_spmf, DatasetStats, GeneratorParams};
use seqrules::{mine, Item, Itemset, MinerConfig, MiningResult, QueryRule, SequenceDatabase, SequentialRule, Variant};

/// Exit code used when the variants disagree during a bench run.
pub const EXIT_DIVERGENCE: i32 = 70;

#[derive(Debug, Parser)]
#[command(name = "seqrules", version, about = "Targeted partially-ordered sequential rule mining")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine target rules with one variant.
    Mine(MineArgs),
    /// Run all four variants, check they agree, and report their statistics.
    Bench(BenchArgs),
    /// Generate a synthetic SPMF database.
    Gen(GenArgs),
    /// Print summary statistics of an SPMF database.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct MiningArgs {
    /// SPMF input file.
    #[arg(long)]
    pub input: PathBuf,
    /// Query rule, e.g. "1,2=>3", "=>3", "1,2=>" or "=>".
    #[arg(long, default_value = "=>", value_parser = query_arg)]
    pub query: QueryRule,
    /// Minimum support: an integer count, or a fraction in (0, 1) of the sequence count.
    #[arg(long)]
    pub minsup: MinSupport,
    /// Minimum confidence in (0, 1].
    #[arg(long)]
    pub minconf: f64,
    /// Largest antecedent size to explore.
    #[arg(long)]
    pub max_antecedent: Option<usize>,
    /// Largest consequent size to explore.
    #[arg(long)]
    pub max_consequent: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub mining: MiningArgs,
    #[arg(long, default_value = "v3")]
    pub variant: Variant,
    /// Rule file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSON statistics file.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Grow independent seed subtrees on a thread pool.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub mining: MiningArgs,
    /// Rule file for the agreed rule set.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSON report file; standard output when omitted.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub sequences: usize,
    /// Alphabet size; items are drawn from 1..=items.
    #[arg(long)]
    pub items: usize,
    #[arg(long)]
    pub avg_itemsets: f64,
    #[arg(long)]
    pub avg_items: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// SPMF output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
}

/// Minimum support as given on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MinSupport {
    Absolute(usize),
    Relative(f64),
}

impl MinSupport {
    /// Absolute count against a database of `num_sequences` sequences.
    /// Fractions round up and never fall below 1.
    pub fn resolve(self, num_sequences: usize) -> usize {
        match self {
            MinSupport::Absolute(n) => n,
            MinSupport::Relative(f) => ((f * num_sequences as f64).ceil() as usize).max(1),
        }
    }
}

impl FromStr for MinSupport {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if let Ok(n) = s.parse::<usize>() {
            return if n >= 1 { Ok(MinSupport::Absolute(n)) } else { Err("minsup must be at least 1".into()) };
        }
        match s.parse::<f64>() {
            Ok(f) if f > 0.0 && f < 1.0 => Ok(MinSupport::Relative(f)),
            Ok(_) => Err(format!("relative minsup {s} must lie strictly between 0 and 1")),
            Err(_) => Err(format!("minsup {s:?} is neither an integer nor a fraction")),
        }
    }
}

impl fmt::Display for MinSupport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MinSupport::Absolute(n) => write!(f, "{n}"),
            MinSupport::Relative(x) => write!(f, "{x}"),
        }
    }
}

/// Parses `<items> "=>" <items>`, each side a comma-separated list of
/// unsigned integers that may be empty.
pub fn parse_query(text: &str) -> Result<QueryRule> {
    let Some((left, right)) = text.trim().split_once("=>") else {
        bail!("query {text:?} is missing \"=>\"");
    };
    let side = |s: &str| -> Result<Itemset> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Itemset::empty());
        }
        s.split(',')
            .map(|tok| {
                let tok = tok.trim();
                tok.parse::<Item>().with_context(|| format!("query item {tok:?} is not an unsigned integer"))
            })
            .collect()
    };
    let (x, y) = (side(left)?, side(right)?);
    Ok(QueryRule::new(x, y)?)
}

fn query_arg(text: &str) -> std::result::Result<QueryRule, String> {
    parse_query(text).map_err(|e| format!("{e:#}"))
}

pub fn load_database(path: &Path) -> Result<SequenceDatabase> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_spmf(&text).with_context(|| format!("cannot parse {}", path.display()))
}

/// Canonical rule file contents: one rendered rule per line.
pub fn render_rules(rules: &[SequentialRule]) -> String {
    let mut out = String::new();
    for rule in rules {
        out.push_str(&rule.render());
        out.push('\n');
    }
    out
}

/// Peak resident set size of this process in KiB, where the platform exposes it.
pub fn peak_memory_kib() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetSummary {
    pub num_sequences: usize,
    pub num_items: usize,
    pub avg_items_per_itemset: f64,
    pub avg_itemsets_per_sequence: f64,
}

impl From<DatasetStats> for DatasetSummary {
    fn from(s: DatasetStats) -> Self {
        DatasetSummary {
            num_sequences: s.num_sequences,
            num_items: s.num_items,
            avg_items_per_itemset: s.avg_items_per_itemset,
            avg_itemsets_per_sequence: s.avg_itemsets_per_sequence,
        }
    }
}

/// Statistics document written by `mine --stats`.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MineStats {
    pub variant: String,
    pub minsup: usize,
    pub minconf: f64,
    pub query: String,
    pub rules_emitted: usize,
    pub expansions_left: u64,
    pub expansions_right: u64,
    pub seed_pairs_evaluated: u64,
    pub filtering_rate: f64,
    pub elapsed_millis: f64,
    pub dataset_stats: DatasetSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_memory_kib: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VariantReport {
    pub variant: String,
    pub elapsed_millis: f64,
    pub expansions_left: u64,
    pub expansions_right: u64,
    pub expansions: u64,
    pub seed_pairs_evaluated: u64,
    pub rules_emitted: usize,
    pub filtering_rate: f64,
    /// Process-wide high-water mark after this variant finished.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_memory_kib: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchConfig {
    pub query: String,
    pub minsup: usize,
    pub minconf: f64,
    pub max_antecedent: Option<usize>,
    pub max_consequent: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchReport {
    pub dataset_stats: DatasetSummary,
    pub config: BenchConfig,
    pub outputs_identical: bool,
    pub variants: Vec<VariantReport>,
}

/// Raised by `bench` when two variants return different rule sets.
#[derive(Debug)]
pub struct Divergence {
    pub reference: Variant,
    pub variant: Variant,
    pub detail: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "variant {} disagrees with {}: {}", self.variant, self.reference, self.detail)
    }
}

impl std::error::Error for Divergence {}

fn miner_config(args: &MiningArgs, db: &SequenceDatabase, variant: Variant) -> MinerConfig {
    let mut config = MinerConfig::new(args.minsup.resolve(db.len()), args.minconf, variant);
    config.max_antecedent = args.max_antecedent;
    config.max_consequent = args.max_consequent;
    config
}

fn millis(result: &MiningResult) -> f64 {
    result.stats.elapsed.as_secs_f64() * 1e3
}

/// Writes `contents` to `path`, or to standard output when no path is given.
/// Files are written through a sibling temporary so a failed run leaves nothing behind.
fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(path) => {
            let mut tmp = path.as_os_str().to_owned();
            tmp.push(".partial");
            let tmp = PathBuf::from(tmp);
            fs::write(&tmp, contents).with_context(|| format!("cannot write {}", tmp.display()))?;
            fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(contents.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn run_mine(args: &MineArgs) -> Result<MiningResult> {
    let db = load_database(&args.mining.input)?;
    let mut config = miner_config(&args.mining, &db, args.variant);
    config.parallel = args.parallel;
    let result = mine(&db, &args.mining.query, &config)?;

    let stats = args
        .stats
        .as_ref()
        .map(|_| {
            to_json(&MineStats {
                variant: args.variant.to_string(),
                minsup: config.minsup,
                minconf: config.minconf,
                query: args.mining.query.to_string(),
                rules_emitted: result.stats.rules_emitted,
                expansions_left: result.stats.expansions_left,
                expansions_right: result.stats.expansions_right,
                seed_pairs_evaluated: result.stats.seed_pairs_evaluated,
                filtering_rate: result.stats.filtering_rate.rate(),
                elapsed_millis: millis(&result),
                dataset_stats: dataset_stats(&db).into(),
                peak_memory_kib: peak_memory_kib(),
            })
        })
        .transpose()?;

    emit(args.output.as_deref(), &render_rules(&result.rules))?;
    if let (Some(path), Some(stats)) = (&args.stats, stats) {
        emit(Some(path), &stats)?;
    }
    Ok(result)
}

/// Runs every variant on the same input. Fails with [`Divergence`] unless all
/// rule sets are identical, and only then writes the report.
pub fn run_bench(args: &BenchArgs) -> Result<BenchReport> {
    let db = load_database(&args.mining.input)?;
    let mut reference: Option<(Variant, Vec<SequentialRule>)> = None;
    let mut variants = Vec::new();
    for variant in Variant::ALL {
        let config = miner_config(&args.mining, &db, variant);
        let result = mine(&db, &args.mining.query, &config)?;
        variants.push(VariantReport {
            variant: variant.to_string(),
            elapsed_millis: millis(&result),
            expansions_left: result.stats.expansions_left,
            expansions_right: result.stats.expansions_right,
            expansions: result.stats.expansions(),
            seed_pairs_evaluated: result.stats.seed_pairs_evaluated,
            rules_emitted: result.stats.rules_emitted,
            filtering_rate: result.stats.filtering_rate.rate(),
            peak_memory_kib: peak_memory_kib(),
        });
        match &reference {
            None => reference = Some((variant, result.rules)),
            Some((base, rules)) => {
                if let Some(detail) = first_difference(rules, &result.rules) {
                    return Err(Divergence { reference: *base, variant, detail }.into());
                }
            }
        }
    }
    let (_, rules) = reference.expect("at least one variant");
    let config = miner_config(&args.mining, &db, Variant::Baseline);
    let report = BenchReport {
        dataset_stats: dataset_stats(&db).into(),
        config: BenchConfig {
            query: args.mining.query.to_string(),
            minsup: config.minsup,
            minconf: config.minconf,
            max_antecedent: config.max_antecedent,
            max_consequent: config.max_consequent,
        },
        outputs_identical: true,
        variants,
    };
    if let Some(path) = &args.output {
        emit(Some(path), &render_rules(&rules))?;
    }
    emit(args.stats.as_deref(), &to_json(&report)?)?;
    Ok(report)
}

fn first_difference(expected: &[SequentialRule], actual: &[SequentialRule]) -> Option<String> {
    if let Some((a, b)) = expected.iter().zip(actual).find(|(a, b)| a != b) {
        return Some(format!("expected {a}, found {b}"));
    }
    match expected.len().cmp(&actual.len()) {
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Less => Some(format!("unexpected extra rule {}", actual[expected.len()])),
        std::cmp::Ordering::Greater => Some(format!("missing rule {}", expected[actual.len()])),
    }
}

pub fn run_gen(args: &GenArgs) -> Result<SequenceDatabase> {
    let db = generate_synthetic(&GeneratorParams {
        num_sequences: args.sequences,
        alphabet_size: args.items,
        avg_itemsets_per_sequence: args.avg_itemsets,
        avg_items_per_itemset: args.avg_items,
        seed: args.seed,
    })?;
    emit(args.output.as_deref(), &write_spmf(&db))?;
    Ok(db)
}

pub fn run_stats(args: &StatsArgs) -> Result<DatasetStats> {
    let stats = dataset_stats(&load_database(&args.input)?);
    emit(None, &format!("{stats}\n"))?;
    Ok(stats)
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Mine(args) => run_mine(args).map(drop),
        Command::Bench(args) => run_bench(args).map(drop),
        Command::Gen(args) => run_gen(args).map(drop),
        Command::Stats(args) => run_stats(args).map(drop),
    }
}
