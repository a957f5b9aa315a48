//! Acceptance suite. Each test prints one `[criterion N] PASS|FAIL` line and
//! then asserts, so a plain `cargo test` run shows the full scorecard with
//! `--nocapture`.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seqrules::fixtures::{example_db, A, B, C, D, E, EXAMPLE_SPMF, G};
use seqrules::pruning::{build_count_maps, build_tmpm, expansion_window, uip_filter, utp_filter};
use seqrules::rulecore::{brute_force_mine, compute_occurrence, support_and_confidence};
use seqrules::seqdb::{generate_synthetic, write_spmf, GeneratorParams};
use seqrules::{
    mine, Item, Itemset, MinerConfig, QueryRule, Sequence, SequenceDatabase, SequentialRule, Sid, Variant,
};

const BIN: &str = env!("CARGO_BIN_EXE_seqrules");

fn report(criterion: u32, outcome: Result<String, String>) {
    match &outcome {
        Ok(detail) => println!("[criterion {criterion}] PASS: {detail}"),
        Err(detail) => println!("[criterion {criterion}] FAIL: {detail}"),
    }
    if let Err(detail) = outcome {
        panic!("criterion {criterion} failed: {detail}");
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn query(x: &[Item], y: &[Item]) -> QueryRule {
    QueryRule::new(Itemset::new(x.iter().copied()), Itemset::new(y.iter().copied())).unwrap()
}

fn rule(x: &[Item], y: &[Item], support: usize, antecedent_support: usize) -> SequentialRule {
    SequentialRule {
        antecedent: Itemset::new(x.iter().copied()),
        consequent: Itemset::new(y.iter().copied()),
        support,
        antecedent_support,
    }
}

fn sets(db: &SequenceDatabase, sid: Sid) -> Vec<Vec<Item>> {
    db.get(sid).unwrap().itemsets().iter().map(|s| s.as_slice().to_vec()).collect()
}

#[test]
fn criterion_1_example_target_rules() {
    let outcome = (|| {
        let start = Instant::now();
        let qr = query(&[A, B], &[C]);
        let expected = vec![
            rule(&[A, B], &[C], 3, 4),
            rule(&[A, B, D], &[C], 3, 4),
            rule(&[A, B, E], &[C], 2, 2),
            rule(&[A, B, G], &[C], 2, 2),
            rule(&[A, B, D, E], &[C], 2, 2),
            rule(&[A, B, D, G], &[C], 2, 2),
        ];
        for variant in Variant::ALL {
            let result = mine(&example_db(), &qr, &MinerConfig::new(2, 0.6, variant)).map_err(|e| e.to_string())?;
            check(result.rules == expected, || format!("{variant}: got {:?}", result.rules))?;
            let sups: Vec<_> = result.rules.iter().map(|r| r.support).collect();
            let confs: Vec<_> = result.rules.iter().map(SequentialRule::confidence).collect();
            check(sups == [3, 3, 2, 2, 2, 2], || format!("{variant}: supports {sups:?}"))?;
            check(confs == [0.75, 0.75, 1.0, 1.0, 1.0, 1.0], || format!("{variant}: confidences {confs:?}"))?;
        }
        let elapsed = start.elapsed();
        check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
        Ok(format!("all four variants emit the six expected rules in {elapsed:?}"))
    })();
    report(1, outcome);
}

#[test]
fn criterion_2_empty_query_rule_count() {
    let outcome = (|| {
        let start = Instant::now();
        let db = example_db();
        let oracle = brute_force_mine(&db, &QueryRule::empty(), 2, 0.6, 7, 7).map_err(|e| e.to_string())?;
        check(oracle.len() == 40, || format!("oracle found {} rules", oracle.len()))?;
        for variant in Variant::ALL {
            let result =
                mine(&db, &QueryRule::empty(), &MinerConfig::new(2, 0.6, variant)).map_err(|e| e.to_string())?;
            check(result.rules == oracle, || format!("{variant} found {} rules", result.rules.len()))?;
        }
        let elapsed = start.elapsed();
        check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
        Ok(format!("40 rules, equal to exhaustive enumeration, in {elapsed:?}"))
    })();
    report(2, outcome);
}

#[test]
fn criterion_3_worked_examples() {
    let outcome = (|| {
        let qr = query(&[A, B], &[C]);
        let (filtered, _) = utp_filter(&example_db(), &qr);
        let tmpm = build_tmpm(&filtered, &qr).map_err(|e| e.to_string())?;
        let ends = |sid: Sid| (tmpm[&sid].left_end, tmpm[&sid].right_end);
        check(ends(1) == (3, 3), || format!("s2 ends {:?}", ends(1)))?;
        check(ends(2) == (2, 4), || format!("s3 ends {:?}", ends(2)))?;

        let pruned = uip_filter(&filtered, &tmpm, &qr, 2).map_err(|e| e.to_string())?;
        check(sets(&pruned, 1) == vec![vec![B], vec![A], vec![D]], || format!("s2 -> {:?}", sets(&pruned, 1)))?;
        check(sets(&pruned, 2) == vec![vec![B], vec![D], vec![A], vec![G], vec![C]], || {
            format!("s3 -> {:?}", sets(&pruned, 2))
        })?;
        check(sets(&pruned, 4) == vec![vec![D], vec![A, B], vec![E, G], vec![C]], || {
            format!("s5 -> {:?}", sets(&pruned, 4))
        })?;

        let db = example_db();
        let occ = |sid: Sid, x: Item, y: Item| {
            compute_occurrence(db.get(sid).unwrap(), &Itemset::from([x]), &Itemset::from([y]))
                .unwrap()
                .map(|o| (o.first_itemset, o.last_itemset))
        };
        check(occ(4, B, G) == Some((1, 2)), || format!("{{b}}->{{g}} in s5: {:?}", occ(4, B, G)))?;
        check(occ(3, B, D) == Some((0, 4)), || format!("{{b}}->{{d}} in s4: {:?}", occ(3, B, D)))?;

        let pruned_tmpm = build_tmpm(&pruned, &qr).map_err(|e| e.to_string())?;
        let s5 = pruned.get(4).unwrap();
        let a_c = compute_occurrence(s5, &Itemset::from([A]), &Itemset::from([C])).unwrap().unwrap();
        let window = expansion_window(a_c, &pruned_tmpm[&4]);
        check(window == (1, 3), || format!("window of {{a}}->{{c}} in s5: {window:?}"))?;

        let maps = build_count_maps(&pruned, &pruned_tmpm, &qr, 2).map_err(|e| e.to_string())?;
        let d = (maps.left_count(D), maps.right_count(D));
        check(d == (3, 1), || format!("count maps for d: {d:?}"))?;
        Ok("match positions, item pruning, occurrences, windows and count maps all match".into())
    })();
    report(3, outcome);
}

/// Random database within the oracle's reach: at most 8 sequences, items
/// 1..=6, 5 itemsets per sequence and 3 items per itemset.
fn random_database(rng: &mut ChaCha8Rng) -> SequenceDatabase {
    let rows = (0..rng.random_range(0..=8))
        .map(|_| {
            (0..rng.random_range(1..=5))
                .map(|_| {
                    let size = rng.random_range(1..=3);
                    sample(rng, 6, size).into_iter().map(|i| i as Item + 1).collect()
                })
                .collect()
        })
        .collect();
    SequenceDatabase::from_itemsets(rows).unwrap()
}

/// Cycles through the four query shapes: both sides, antecedent only,
/// consequent only, and empty.
fn random_query(rng: &mut ChaCha8Rng, case: usize) -> QueryRule {
    let picked: Vec<Item> = sample(rng, 6, 4).into_iter().map(|i| i as Item + 1).collect();
    let (nx, ny) = (rng.random_range(1..=2), rng.random_range(1..=2));
    let x = &picked[..nx];
    let y = &picked[2..2 + ny];
    match case % 4 {
        0 => query(x, y),
        1 => query(x, &[]),
        2 => query(&[], y),
        _ => QueryRule::empty(),
    }
}

struct Instance {
    db: SequenceDatabase,
    qr: QueryRule,
    minsup: usize,
    minconf: f64,
}

fn random_instances(count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..count)
        .map(|case| Instance {
            db: random_database(&mut rng),
            qr: random_query(&mut rng, case),
            minsup: rng.random_range(1..=3),
            minconf: [0.1, 0.25, 0.5, 0.6, 0.75, 1.0][rng.random_range(0..6)],
        })
        .collect()
}

const INSTANCES: usize = 600;

#[test]
fn criterion_4_oracle_equivalence() {
    let outcome = (|| {
        let start = Instant::now();
        let mut shapes = [0usize; 4];
        let mut nonempty = 0;
        for (case, inst) in random_instances(INSTANCES).iter().enumerate() {
            let oracle = brute_force_mine(&inst.db, &inst.qr, inst.minsup, inst.minconf, 3, 3)
                .map_err(|e| format!("case {case}: {e}"))?;
            for rule in &oracle {
                let m = support_and_confidence(&inst.db, &rule.antecedent, &rule.consequent).unwrap().unwrap();
                check(m.support == rule.support && m.antecedent_support == rule.antecedent_support, || {
                    format!("case {case}: oracle measures for {rule}")
                })?;
            }
            for variant in Variant::ALL {
                let config = MinerConfig::new(inst.minsup, inst.minconf, variant).with_caps(3, 3);
                let got = mine(&inst.db, &inst.qr, &config).map_err(|e| format!("case {case}: {e}"))?.rules;
                check(got == oracle, || {
                    format!("case {case} ({variant}, query {}): {:?} vs oracle {:?}", inst.qr, got, oracle)
                })?;
            }
            shapes[case % 4] += 1;
            nonempty += usize::from(!oracle.is_empty());
        }
        let elapsed = start.elapsed();
        check(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
        Ok(format!(
            "{INSTANCES} databases (query shapes {shapes:?}, {nonempty} with rules), all variants equal the oracle, {elapsed:?}"
        ))
    })();
    report(4, outcome);
}

fn expansion_chain(db: &SequenceDatabase, qr: &QueryRule, config: &MinerConfig) -> Result<[u64; 4], String> {
    let mut counts = [0; 4];
    for (slot, variant) in Variant::ALL.into_iter().enumerate() {
        let result = mine(db, qr, &config.clone().with_variant(variant)).map_err(|e| e.to_string())?;
        counts[slot] = result.stats.expansions();
    }
    check(counts[3] <= counts[2] && counts[2] <= counts[1] && counts[1] <= counts[0], || {
        format!("expansions baseline/v1/v2/v3 = {counts:?}")
    })?;
    Ok(counts)
}

#[test]
fn criterion_5_pruning_monotonicity() {
    let outcome = (|| {
        for (case, inst) in random_instances(INSTANCES).iter().enumerate() {
            let config = MinerConfig::new(inst.minsup, inst.minconf, Variant::Baseline).with_caps(3, 3);
            expansion_chain(&inst.db, &inst.qr, &config).map_err(|e| format!("case {case}: {e}"))?;
        }
        let db = generate_synthetic(&GeneratorParams {
            num_sequences: 10_000,
            alphabet_size: 50,
            avg_itemsets_per_sequence: 8.0,
            avg_items_per_itemset: 2.0,
            seed: 11,
        })
        .map_err(|e| e.to_string())?;
        let config = MinerConfig::new(100, 0.01, Variant::Baseline);
        let counts = expansion_chain(&db, &query(&[1], &[2]), &config)?;
        Ok(format!("{INSTANCES} small instances hold the chain; 10k database: baseline/v1/v2/v3 = {counts:?}"))
    })();
    report(5, outcome);
}

/// Database of `n` generated sequences where exactly the sids in `hits`
/// receive both query items, some at different itemsets, and a few others
/// receive only one of them.
fn injected_database(n: usize, hits: &BTreeSet<Sid>, rng: &mut ChaCha8Rng) -> SequenceDatabase {
    let base = generate_synthetic(&GeneratorParams {
        num_sequences: n,
        alphabet_size: 40,
        avg_itemsets_per_sequence: 5.0,
        avg_items_per_itemset: 2.0,
        seed: 99,
    })
    .unwrap();
    let sequences = base
        .iter()
        .map(|seq| {
            let mut rows: Vec<Vec<Item>> = seq.itemsets().iter().map(|s| s.as_slice().to_vec()).collect();
            let mut put = |item: Item, rng: &mut ChaCha8Rng| {
                let at = rng.random_range(0..rows.len());
                rows[at].push(item);
            };
            if hits.contains(&seq.sid()) {
                put(100, rng);
                put(101, rng);
            } else if rng.random_bool(0.2) {
                put(if rng.random_bool(0.5) { 100 } else { 101 }, rng);
            }
            Sequence::new(seq.sid(), rows.into_iter().map(Itemset::new).collect()).unwrap()
        })
        .collect();
    SequenceDatabase::new(sequences).unwrap()
}

#[test]
fn criterion_6_filtering_rate() {
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 1024;
        let mut lines = Vec::new();
        for k in [0, 1, 256, 512, 1000, 1024] {
            let hits: BTreeSet<Sid> = sample(&mut rng, n, k).into_iter().collect();
            let db = injected_database(n, &hits, &mut rng);
            let p = k as f64 / n as f64;
            let (kept, rate) = utp_filter(&db, &query(&[100, 101], &[]));
            check(rate.rate() == 1.0 - p, || format!("p={p}: rate {} != {}", rate.rate(), 1.0 - p))?;
            let kept_sids: BTreeSet<Sid> = kept.iter().map(Sequence::sid).collect();
            check(kept_sids == hits, || format!("p={p}: kept the wrong sequences"))?;
            let (_, none) = utp_filter(&db, &query(&[], &[100]));
            check(none.rate() == 0.0, || format!("empty antecedent query rate {}", none.rate()))?;
            let stats = mine(&db, &query(&[100, 101], &[]), &MinerConfig::new(n, 1.0, Variant::V3))
                .map_err(|e| e.to_string())?
                .stats;
            check(stats.filtering_rate.rate() == 1.0 - p, || format!("p={p}: miner reported {:?}", stats.filtering_rate))?;
            lines.push(format!("p={p}->{}", rate.rate()));
        }
        Ok(format!("rate = 1 - p exactly ({}); empty antecedent query gives 0", lines.join(", ")))
    })();
    report(6, outcome);
}

fn bench_file(path: &Path, query: &str, minsup: &str, minconf: &str) -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let report = dir.path().join("report.json");
    let rules = dir.path().join("rules.txt");
    let out = Command::new(BIN)
        .args(["bench", "--query", query, "--minsup", minsup, "--minconf", minconf])
        .arg("--input")
        .arg(path)
        .arg("--stats")
        .arg(&report)
        .arg("--output")
        .arg(&rules)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!("bench on {} failed: {}", path.display(), String::from_utf8_lossy(&out.stderr))
    })?;
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    check(json["outputsIdentical"] == true, || "report does not confirm equal outputs".into())?;
    let variants = json["variants"].as_array().ok_or("no variants in report")?;
    check(variants.len() == 4, || format!("{} variants reported", variants.len()))?;
    let emitted: BTreeSet<u64> = variants.iter().map(|v| v["rulesEmitted"].as_u64().unwrap()).collect();
    check(emitted.len() == 1, || format!("rule counts differ: {emitted:?}"))?;
    let written = fs::read_to_string(&rules).map_err(|e| e.to_string())?;
    for variant in ["baseline", "v1", "v2", "v3"] {
        let mined = Command::new(BIN)
            .args(["mine", "--query", query, "--minsup", minsup, "--minconf", minconf, "--variant", variant])
            .arg("--input")
            .arg(path)
            .output()
            .map_err(|e| e.to_string())?;
        check(mined.status.success() && String::from_utf8_lossy(&mined.stdout) == written, || {
            format!("{variant} rules differ from the bench rule file on {}", path.display())
        })?;
    }
    Ok(format!("{}: {} rules", path.display(), emitted.first().unwrap()))
}

/// Also re-runs the comparison on every SPMF file in `$SEQRULES_BENCH_DATA`,
/// if set, with `$SEQRULES_BENCH_QUERY`, `$SEQRULES_BENCH_MINSUP` and
/// `$SEQRULES_BENCH_MINCONF` (defaults `=>`, `0.05`, `0.5`).
#[test]
fn criterion_7_bench_proves_equality_on_supplied_files() {
    let outcome = (|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let example = dir.path().join("example.txt");
        fs::write(&example, EXAMPLE_SPMF).map_err(|e| e.to_string())?;
        let synthetic = dir.path().join("synthetic.txt");
        let db = generate_synthetic(&GeneratorParams {
            num_sequences: 500,
            alphabet_size: 30,
            avg_itemsets_per_sequence: 6.0,
            avg_items_per_itemset: 2.0,
            seed: 3,
        })
        .map_err(|e| e.to_string())?;
        fs::write(&synthetic, write_spmf(&db)).map_err(|e| e.to_string())?;
        let empty = dir.path().join("empty.txt");
        fs::write(&empty, "").map_err(|e| e.to_string())?;

        let mut done = vec![
            bench_file(&example, "1,2=>3", "2", "0.6")?,
            bench_file(&example, "=>", "2", "0.6")?,
            bench_file(&synthetic, "1=>", "0.05", "0.3")?,
            bench_file(&synthetic, "=>2", "0.05", "0.3")?,
            bench_file(&empty, "1=>2", "1", "0.5")?,
        ];
        if let Ok(data) = std::env::var("SEQRULES_BENCH_DATA") {
            let query = std::env::var("SEQRULES_BENCH_QUERY").unwrap_or_else(|_| "=>".into());
            let minsup = std::env::var("SEQRULES_BENCH_MINSUP").unwrap_or_else(|_| "0.05".into());
            let minconf = std::env::var("SEQRULES_BENCH_MINCONF").unwrap_or_else(|_| "0.5".into());
            let mut files: Vec<_> = fs::read_dir(&data)
                .map_err(|e| format!("{data}: {e}"))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            files.sort();
            for file in files {
                done.push(bench_file(&file, &query, &minsup, &minconf)?);
            }
        }
        Ok(format!(
            "bench proved equal outputs before reporting on {} runs; published-dataset timing curves need the external files and are not reproduced here",
            done.len()
        ))
    })();
    report(7, outcome);
}

fn scale_params(num_sequences: usize) -> GeneratorParams {
    GeneratorParams {
        num_sequences,
        alphabet_size: 100,
        avg_itemsets_per_sequence: 8.0,
        avg_items_per_itemset: 2.0,
        seed: 7,
    }
}

fn mine_file(input: &Path, output: &Path, stats: &Path) -> Result<serde_json::Value, String> {
    let out = Command::new(BIN)
        .args(["mine", "--query", "1=>2", "--minsup", "0.001", "--minconf", "0.01", "--variant", "v3"])
        .arg("--input")
        .arg(input)
        .arg("--output")
        .arg(output)
        .arg("--stats")
        .arg(stats)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    serde_json::from_str(&fs::read_to_string(stats).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

#[test]
fn criterion_8_scalability_smoke() {
    let outcome = (|| {
        let start = Instant::now();
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut expansions = Vec::new();
        for n in [10_000, 20_000] {
            let db = generate_synthetic(&scale_params(n)).map_err(|e| e.to_string())?;
            let input = dir.path().join(format!("syn{n}.txt"));
            fs::write(&input, write_spmf(&db)).map_err(|e| e.to_string())?;
            let first = dir.path().join(format!("rules{n}a.txt"));
            let second = dir.path().join(format!("rules{n}b.txt"));
            let stats = mine_file(&input, &first, &dir.path().join("stats.json"))?;
            mine_file(&input, &second, &dir.path().join("stats.json"))?;
            check(stats["minsup"] == n as u64 / 1000, || format!("minsup echoed as {}", stats["minsup"]))?;
            let a = fs::read(&first).map_err(|e| e.to_string())?;
            let b = fs::read(&second).map_err(|e| e.to_string())?;
            check(a == b, || format!("{n}: repeated runs wrote different rule files"))?;
            let count = stats["expansionsLeft"].as_u64().unwrap() + stats["expansionsRight"].as_u64().unwrap();
            expansions.push((n, count, stats["rulesEmitted"].as_u64().unwrap()));
        }
        check(expansions[1].1 > expansions[0].1, || format!("expansions did not grow: {expansions:?}"))?;
        let elapsed = start.elapsed();
        check(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
        Ok(format!("(|D|, expansions, rules) = {expansions:?}; repeated runs byte-identical; {elapsed:?}"))
    })();
    report(8, outcome);
}
