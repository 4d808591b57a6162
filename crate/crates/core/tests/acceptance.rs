//! End-to-end acceptance checks. Runs without the libtest harness so that the
//! verdict lines always reach stdout; exits nonzero if any check fails.
//!
//! Set `RULEBASIS_RETAIL` to a FIMI `retail.dat` to enable the retail check.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rulebasis::basis::{aggregate, annotate, union};
use rulebasis::miner::{binary_part, mine_sector, RuleSet, SectorRequest};
use rulebasis::oracle;
use rulebasis::perturb::{confidence_floor, mrd_run, ord_scan, RunPlan};
use rulebasis::relevance::MiningConfig;
use rulebasis::synth::{
    density_sweep, generate, random_table, recovery_experiment, table_seed, DensityStudy, InjectedRule, Noise,
    RecoveryPlan, SynthSpec,
};
use rulebasis::table::{AttrSet, BinaryTable, Origin};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn within(limit: Duration, started: Instant, detail: String) -> Verdict {
    let took = started.elapsed();
    if took > limit {
        Verdict::Fail(format!("{detail}; took {took:.1?}, limit {limit:?}"))
    } else {
        Verdict::Pass(format!("{detail}; {took:.1?}"))
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn oracle_equivalence() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut sectors = 0;
    for i in 0..200 {
        let rows = rng.gen_range(1..=10);
        let cols = rng.gen_range(1..=8);
        let density = rng.gen_range(0.2..=0.8);
        let t = random_table(&SynthSpec::random(rows, cols, density, table_seed(1, i))).unwrap();
        for b in 0..cols {
            let mined = mine_sector(&t, &SectorRequest::new(b, 1)).unwrap();
            let expected = oracle::enumerate_antecedents(&t, b, 1).unwrap();
            if mined != expected {
                return Verdict::Fail(format!("table {i} ({rows}x{cols}, density {density:.2}), column {b}"));
            }
            sectors += 1;
        }
    }
    within(Duration::from_secs(60), started, format!("200 tables, {sectors} sectors identical"))
}

struct MrdStats {
    runs: usize,
    rules: usize,
    localization: Option<String>,
    floor: Option<String>,
    min_margin: f64,
    elapsed: Duration,
}

fn mrd_batches() -> MrdStats {
    let started = Instant::now();
    let mut stats = MrdStats {
        runs: 0,
        rules: 0,
        localization: None,
        floor: None,
        min_margin: f64::INFINITY,
        elapsed: Duration::ZERO,
    };
    for i in 0..100 {
        let density = [0.3, 0.4, 0.5][i % 3];
        let n = 2 + i % 3;
        let b = i % 32;
        let t = random_table(&SynthSpec::random(20, 32, density, table_seed(2, i))).unwrap();
        let plan = RunPlan {
            blockers: t.row_ids().iter().copied().collect(),
            delete_count: n,
            runs: 20,
            seed: i as u64,
        };
        let req = SectorRequest::new(b, 1);
        let out = mrd_run(&t, &req, &plan, workers(), None).unwrap();
        stats.runs += 1;
        for r in out.aggregated_new.iter() {
            stats.rules += 1;
            let Origin::DeletedSet(origin) = &r.origin else {
                stats.localization.get_or_insert(format!("batch {i}: rule without origin"));
                continue;
            };
            let violators = t.violating_rows(&r.antecedent, b).unwrap();
            if violators.is_empty() || !violators.iter().all(|v| origin.contains(v)) {
                stats.localization.get_or_insert(format!(
                    "batch {i}: {:?} -> {b} violated by {violators:?}, origin {origin:?}",
                    r.antecedent.as_slice()
                ));
            }
            let s = out.sub_support[&r.antecedent];
            let conf = r.confidence().unwrap_or(0.0);
            let floor = confidence_floor(s, n);
            stats.min_margin = stats.min_margin.min(conf - floor);
            if conf < floor {
                stats.floor.get_or_insert(format!(
                    "batch {i}: {:?} -> {b} confidence {conf} below {floor}",
                    r.antecedent.as_slice()
                ));
            }
        }
    }
    stats.elapsed = started.elapsed();
    stats
}

fn failure_localization(s: &MrdStats) -> Verdict {
    match &s.localization {
        Some(msg) => Verdict::Fail(msg.clone()),
        None if s.rules == 0 => Verdict::Fail("no new rules produced".into()),
        None if s.elapsed > Duration::from_secs(120) => Verdict::Fail(format!("took {:.1?}", s.elapsed)),
        None => Verdict::Pass(format!("{} batches, {} new rules localized; {:.1?}", s.runs, s.rules, s.elapsed)),
    }
}

fn confidence_floor_holds(s: &MrdStats) -> Verdict {
    match &s.floor {
        Some(msg) => Verdict::Fail(msg.clone()),
        None if s.rules == 0 => Verdict::Fail("no new rules produced".into()),
        None => Verdict::Pass(format!("{} rules, smallest margin {:.4}", s.rules, s.min_margin)),
    }
}

fn parallel_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("table.csv");
    let t = random_table(&SynthSpec::random(20, 32, 0.4, 4)).unwrap();
    t.write_csv(std::fs::File::create(&input).unwrap()).unwrap();

    let run = |workers: usize, extra: &[&str], out: &Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_rulebasis"))
            .args(["mrd", "--input"])
            .arg(&input)
            .args(["--target", "5", "--delete-count", "3", "--runs", "40", "--seed", "11"])
            .args(["--workers", &workers.to_string(), "--reproducible", "--out"])
            .arg(out)
            .args(extra)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    for extra in [&[][..], &["--blockers", "topk:8"][..]] {
        let outputs: Vec<Vec<u8>> = [1, 4, 8]
            .iter()
            .map(|&w| run(w, extra, &dir.path().join(format!("out-{w}.json"))))
            .collect();
        if outputs.iter().any(|o| o != &outputs[0]) {
            return Verdict::Fail(format!("outputs differ across workers (flags {extra:?})"));
        }
    }
    Verdict::Pass("workers 1, 4, 8 give byte-identical output, with and without scored blockers".into())
}

fn noise_recovery() -> Verdict {
    let started = Instant::now();
    let x = AttrSet::from([3, 7]);
    let b = 12;
    let mut variants_removed = 0;
    let mut exact_hits = 0;
    for seed in 0..20 {
        let params = SynthSpec {
            injected: Some(InjectedRule {
                antecedent: x.clone(),
                target: b,
                coverage: 10,
            }),
            noise: Some(Noise::exact(2)),
            ..SynthSpec::random(20, 32, 0.3, seed)
        };
        let report = recovery_experiment(&params, RecoveryPlan::FlippedRows, 1).unwrap();
        let (t, _) = generate(&params).unwrap();
        let base = mine_sector(&t, &SectorRequest::new(b, 1)).unwrap();
        variants_removed += base.antecedents().filter(|a| x.is_subset(a) && **a != x).count();
        // a recovered antecedent may be a shorter subset of X
        exact_hits += report.recovered_rule.as_ref().is_some_and(|r| r.antecedent == x.as_slice()) as usize;
        if report.flipped_rows.len() != 2
            || report.found_on_full_table
            || !report.recovered
            || report.extended_variants_left != 0
        {
            return Verdict::Fail(format!("seed {seed}: {report:?}"));
        }
    }
    within(
        Duration::from_secs(30),
        started,
        format!("20 seeds recovered ({exact_hits} with X itself, the rest via a subset of X); {variants_removed} X+d variants aggregated away"),
    )
}

fn table_one_trend() -> Verdict {
    let started = Instant::now();
    let study = DensityStudy {
        rows: 20,
        cols: 32,
        tables: 500,
        seed: 6,
        mining: MiningConfig {
            workers: workers(),
            ..MiningConfig::implications_only(1)
        },
    };
    let rows = density_sweep(&study, &[0.3, 0.5]).unwrap();
    let (low, high) = (rows[0].mean, rows[1].mean);
    let detail = format!("mean rel {low:.3} at 0.3, {high:.3} at 0.5");
    if high > low && (0.5..=1.5).contains(&low) {
        within(Duration::from_secs(600), started, detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn retail() -> Verdict {
    let Some(path) = std::env::var_os("RULEBASIS_RETAIL") else {
        return Verdict::Skip("RULEBASIS_RETAIL not set".into());
    };
    let file = match std::fs::File::open(&path) {
        Ok(f) => f,
        Err(e) => return Verdict::Skip(format!("{}: {e}", Path::new(&path).display())),
    };
    let t = BinaryTable::load_fimi(std::io::BufReader::new(file), Some(90)).unwrap();
    let density = t.density().unwrap();
    if (t.n_rows(), t.n_cols()) != (90, 502) || (density - 0.0162).abs() > 0.0005 {
        return Verdict::Fail(format!("{}x{} density {density:.4}", t.n_rows(), t.n_cols()));
    }
    let b = t.column_index("38").unwrap();
    let req = SectorRequest::new(b, 1);
    let plan = RunPlan {
        blockers: t.row_ids().iter().copied().collect(),
        delete_count: 10,
        runs: 200,
        seed: 7,
    };
    let out = mrd_run(&t, &req, &plan, workers(), None).unwrap();
    let delta = aggregate(&union(&out.base, &out.aggregated_new).unwrap(), &binary_part(&t, 1));
    let short = t.attr_set(&["36"]).unwrap();
    let long = t.attr_set(&["36", "48"]).unwrap();
    if delta.contains(&short) && !delta.contains(&long) {
        Verdict::Pass(format!(
            "90x502 density {density:.4}; 36 -> 38 kept, 36,48 -> 38 absent; {} base implications",
            out.base.len()
        ))
    } else {
        Verdict::Fail(format!(
            "36 -> 38 present: {}, 36,48 -> 38 present: {}",
            delta.contains(&short),
            delta.contains(&long)
        ))
    }
}

fn ord_mrd_consistency() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut sectors = 0;
    for i in 0..12 {
        let rows = if i < 4 { 30 } else { rng.gen_range(2..=30) };
        let cols = if i < 4 { 16 } else { rng.gen_range(1..=16) };
        let density = rng.gen_range(0.2..=0.7);
        let t = random_table(&SynthSpec::random(rows, cols, density, table_seed(8, i))).unwrap();
        let plan = RunPlan {
            blockers: t.row_ids().iter().copied().collect(),
            delete_count: 1,
            runs: rows,
            seed: 0,
        };
        for b in 0..cols {
            for negated in [false, true] {
                let mut req = SectorRequest::new(b, 1);
                if negated {
                    req = req.negated();
                }
                let base = mine_sector(&t, &req).unwrap();
                let mut merged: Option<RuleSet> = None;
                for rep in ord_scan(&t, &req, &base, 1).unwrap() {
                    let acc = merged.get_or_insert_with(|| rep.new_rules.empty_like());
                    for r in rep.new_rules.iter() {
                        if !acc.contains(&r.antecedent) {
                            let mut r = r.clone();
                            r.origin = Origin::DeletedSet(rep.deleted_rows.clone());
                            acc.insert(r).unwrap();
                        }
                    }
                }
                let reference = if negated { t.negate_column(b).unwrap() } else { t.clone() };
                let expected = annotate(&merged.unwrap_or_else(|| base.empty_like()), &reference).unwrap();
                let got = mrd_run(&t, &req, &plan, 1, None).unwrap().aggregated_new;
                if got != expected {
                    return Verdict::Fail(format!("table {i} ({rows}x{cols}), column {b}, negated {negated}"));
                }
                sectors += 1;
            }
        }
    }
    Verdict::Pass(format!("12 tables up to 30x16, {sectors} sectors agree"))
}

type Check<'a> = Box<dyn FnOnce() -> Verdict + 'a>;

fn main() {
    let mrd = mrd_batches();
    let checks: Vec<(&str, Check<'_>)> = vec![
        ("1 oracle equivalence", Box::new(oracle_equivalence)),
        ("2 failure localization", Box::new(|| failure_localization(&mrd))),
        ("3 confidence floor", Box::new(|| confidence_floor_holds(&mrd))),
        ("4 parallel determinism", Box::new(parallel_determinism)),
        ("5 noise recovery", Box::new(noise_recovery)),
        ("6 random-table relevance trend", Box::new(table_one_trend)),
        ("7 retail slice", Box::new(retail)),
        ("8 ORD/MRD consistency", Box::new(ord_mrd_consistency)),
    ];
    let mut failed = BTreeSet::new();
    for (name, check) in checks {
        match check() {
            Verdict::Pass(d) => println!("PASS  {name}: {d}"),
            Verdict::Skip(d) => println!("SKIP  {name}: {d}"),
            Verdict::Fail(d) => {
                println!("FAIL  {name}: {d}");
                failed.insert(name);
            }
        }
    }
    if !failed.is_empty() {
        println!("{} acceptance check(s) failed", failed.len());
        std::process::exit(1);
    }
}
