//! Row-deletion mining.
//!
//! One-row deletion (ORD) mines the sector of every table obtained by dropping
//! a single row and keeps the implications that the full table did not have;
//! rows that unlock many or well-supported rules are blockers. Multiple-row
//! deletion (MRD) repeats this for sampled `n`-subsets of a blocker set,
//! accumulates the new rules and finally measures them on the full table,
//! where they become rules of confidence below 1.
//!
//! Each run works on its own copy of the table; the merge happens afterwards,
//! sequentially and in sampled order, so results do not depend on the number
//! of workers.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::{annotate, diff};
use crate::error::{Error, Result};
use crate::miner::{mine_sector, RuleSet, SectorRequest};
use crate::parallel::par_map;
use crate::table::{AttrSet, BinaryTable, Origin, RowId};

/// New implications found after deleting `deleted_rows`.
#[derive(Clone, Debug, PartialEq)]
pub struct NewRuleReport {
    pub deleted_rows: Vec<RowId>,
    /// Rules absent from the base sector; supports are sub-table supports.
    pub new_rules: RuleSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockerScore {
    pub row_id: RowId,
    pub rule_count: usize,
    pub total_support: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockerPolicy {
    TopK(usize),
    MinScore(usize),
}

impl FromStr for BlockerPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("blocker policy {s:?}: expected topk:K or minscore:T"));
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        let value: usize = value.trim().parse().map_err(|_| bad())?;
        match kind.trim() {
            "topk" => Ok(BlockerPolicy::TopK(value)),
            "minscore" => Ok(BlockerPolicy::MinScore(value)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for BlockerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockerPolicy::TopK(k) => write!(f, "topk:{k}"),
            BlockerPolicy::MinScore(t) => write!(f, "minscore:{t}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunPlan {
    /// Rows eligible for deletion.
    pub blockers: BTreeSet<RowId>,
    /// Rows deleted per run.
    pub delete_count: usize,
    pub runs: usize,
    pub seed: u64,
}

impl RunPlan {
    pub fn combinations(&self) -> Option<u128> {
        binomial(self.blockers.len(), self.delete_count)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delete_count == 0 {
            return Err(Error::InvalidPlan("delete count must be at least 1".into()));
        }
        if self.delete_count > self.blockers.len() {
            return Err(Error::InvalidPlan(format!(
                "delete count {} exceeds blocker set size {}",
                self.delete_count,
                self.blockers.len()
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidPlan("runs must be at least 1".into()));
        }
        if let Some(total) = self.combinations() {
            if self.runs as u128 > total {
                return Err(Error::InvalidPlan(format!(
                    "{} runs requested but only {total} distinct deletion sets exist",
                    self.runs
                )));
            }
        }
        Ok(())
    }
}

/// `n choose k`, or `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

fn sub_sector(t: &BinaryTable, req: &SectorRequest, base: &RuleSet, deleted: &[RowId]) -> Result<NewRuleReport> {
    let gone: BTreeSet<RowId> = deleted.iter().copied().collect();
    let sub = t.delete_rows(&gone)?;
    if sub.n_rows() == 0 {
        return Err(Error::InvalidPlan("deletion leaves an empty table".into()));
    }
    let mined = mine_sector(&sub, req)?;
    Ok(NewRuleReport {
        deleted_rows: deleted.to_vec(),
        new_rules: diff(&mined, base)?,
    })
}

/// One report per row: the implications that appear once that row is gone.
pub fn ord_scan(t: &BinaryTable, req: &SectorRequest, base: &RuleSet, workers: usize) -> Result<Vec<NewRuleReport>> {
    if t.n_rows() < 2 {
        return Err(Error::InvalidArgument(
            "one-row deletion needs at least 2 rows".into(),
        ));
    }
    let singles: Vec<[RowId; 1]> = t.row_ids().iter().map(|&r| [r]).collect();
    par_map(workers, &singles, |rows| sub_sector(t, req, base, rows))?
        .into_iter()
        .collect()
}

/// Per-row blocker statistics, best first: by total support, then rule count,
/// then row id.
pub fn blocker_scores(reports: &[NewRuleReport]) -> Vec<BlockerScore> {
    let mut by_row: BTreeMap<RowId, BlockerScore> = BTreeMap::new();
    for rep in reports {
        let total: usize = rep.new_rules.iter().map(|r| r.support).sum();
        for &row in &rep.deleted_rows {
            let s = by_row.entry(row).or_insert(BlockerScore {
                row_id: row,
                rule_count: 0,
                total_support: 0,
            });
            s.rule_count += rep.new_rules.len();
            s.total_support += total;
        }
    }
    let mut scores: Vec<BlockerScore> = by_row.into_values().collect();
    scores.sort_by(|a, b| {
        b.total_support
            .cmp(&a.total_support)
            .then(b.rule_count.cmp(&a.rule_count))
            .then(a.row_id.cmp(&b.row_id))
    });
    scores
}

pub fn select_blockers(scores: &[BlockerScore], policy: BlockerPolicy) -> BTreeSet<RowId> {
    match policy {
        BlockerPolicy::TopK(k) => scores.iter().take(k).map(|s| s.row_id).collect(),
        BlockerPolicy::MinScore(t) => scores
            .iter()
            .filter(|s| s.total_support >= t)
            .map(|s| s.row_id)
            .collect(),
    }
}

fn all_combinations(items: &[RowId], n: usize) -> Vec<Vec<RowId>> {
    let m = items.len();
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let Some(i) = (0..n).rev().find(|&i| idx[i] != i + m - n) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn nth_combination(items: &[RowId], n: usize, mut rank: u128) -> Vec<RowId> {
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for slot in 0..n {
        let remaining = n - slot;
        for i in start..items.len() {
            let with_i = binomial(items.len() - i - 1, remaining - 1).unwrap_or(u128::MAX);
            if rank < with_i {
                out.push(items[i]);
                start = i + 1;
                break;
            }
            rank -= with_i;
        }
    }
    out
}

/// `plan.runs` distinct deletion sets drawn from the blocker set.
///
/// When the plan asks for every combination they are listed in lexicographic
/// order; otherwise they are sampled without replacement from the plan seed.
pub fn sample_deletion_sets(plan: &RunPlan) -> Result<Vec<Vec<RowId>>> {
    plan.validate()?;
    let items: Vec<RowId> = plan.blockers.iter().copied().collect();
    let n = plan.delete_count;
    let total = plan.combinations();
    if total == Some(plan.runs as u128) {
        return Ok(all_combinations(&items, n));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    match total {
        Some(total) if total <= 4 * plan.runs as u128 && total <= (1 << 24) => {
            let picks = index::sample(&mut rng, total as usize, plan.runs);
            Ok(picks
                .into_iter()
                .map(|rank| nth_combination(&items, n, rank as u128))
                .collect())
        }
        _ => {
            let mut seen = BTreeSet::new();
            let mut out = Vec::with_capacity(plan.runs);
            while out.len() < plan.runs {
                let mut pick: Vec<RowId> = index::sample(&mut rng, items.len(), n)
                    .into_iter()
                    .map(|i| items[i])
                    .collect();
                pick.sort_unstable();
                if seen.insert(pick.clone()) {
                    out.push(pick);
                }
            }
            Ok(out)
        }
    }
}

/// Result of a multiple-row-deletion batch.
#[derive(Clone, Debug, PartialEq)]
pub struct MrdOutput {
    /// Implications of the full table.
    pub base: RuleSet,
    /// New rules across all runs, measured on the full table.
    pub aggregated_new: RuleSet,
    /// Sub-table support of each aggregated rule in its origin run.
    pub sub_support: BTreeMap<AttrSet, usize>,
    /// Per-run reports in sampled order.
    pub runs: Vec<NewRuleReport>,
}

/// Called once per completed run with the run's position in sampled order.
pub type Progress<'a> = &'a (dyn Fn(usize, &NewRuleReport) + Sync);

pub fn mrd_run(
    t: &BinaryTable,
    req: &SectorRequest,
    plan: &RunPlan,
    workers: usize,
    progress: Option<Progress<'_>>,
) -> Result<MrdOutput> {
    req.validate(t)?;
    let sets = sample_deletion_sets(plan)?;
    let base = mine_sector(t, req)?;
    let indexed: Vec<(usize, &Vec<RowId>)> = sets.iter().enumerate().collect();
    let runs: Vec<NewRuleReport> = par_map(workers, &indexed, |(i, rows)| {
        let rep = sub_sector(t, req, &base, rows)?;
        if let Some(p) = progress {
            p(*i, &rep);
        }
        Ok(rep)
    })?
    .into_iter()
    .collect::<Result<_>>()?;

    let mut acc = base.empty_like();
    let mut sub_support = BTreeMap::new();
    for rep in &runs {
        for r in rep.new_rules.iter() {
            let replace = match acc.get(&r.antecedent) {
                None => true,
                Some(prev) => matches!(&prev.origin, Origin::DeletedSet(o) if rep.deleted_rows < *o),
            };
            if replace {
                let mut r = r.clone();
                r.origin = Origin::DeletedSet(rep.deleted_rows.clone());
                sub_support.insert(r.antecedent.clone(), r.support);
                acc.insert(r)?;
            }
        }
    }

    let reference: Cow<'_, BinaryTable> = if req.negated {
        Cow::Owned(t.negate_column(req.target)?)
    } else {
        Cow::Borrowed(t)
    };
    Ok(MrdOutput {
        aggregated_new: annotate(&acc, &reference)?,
        base,
        sub_support,
        runs,
    })
}

/// Worst-case full-table confidence of an implication with sub-table support
/// `s` after `n` deleted rows all violate it.
pub fn confidence_floor(s: usize, n: usize) -> f64 {
    s as f64 / (s + n) as f64
}

/// Average-case confidence estimate `N / (N + n)` for `N` rows and `n` deleted.
pub fn estimate_confidence(n_rows: usize, n: usize) -> f64 {
    n_rows as f64 / (n_rows + n) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::tests::t1;

    fn rows(v: &[usize]) -> BTreeSet<RowId> {
        v.iter().map(|&i| RowId(i)).collect()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), Some(10));
        assert_eq!(binomial(5, 0), Some(1));
        assert_eq!(binomial(3, 4), Some(0));
        assert_eq!(binomial(291, 20), Some(binomial(291, 271).unwrap()));
        assert_eq!(binomial(100_000, 50_000), None);
    }

    #[test]
    fn ord_on_t1() {
        let t = t1();
        let req = SectorRequest::new(2, 1);
        let base = mine_sector(&t, &req).unwrap();
        let reps = ord_scan(&t, &req, &base, 1).unwrap();
        assert_eq!(reps.len(), 4);
        for rep in &reps[..3] {
            assert!(rep.new_rules.is_empty(), "{:?}", rep.deleted_rows);
        }
        let r4 = &reps[3];
        assert_eq!(r4.deleted_rows, vec![RowId(4)]);
        let ants: Vec<_> = r4.new_rules.antecedents().cloned().collect();
        assert_eq!(ants, vec![AttrSet::from([0])]);
        assert_eq!(r4.new_rules.get(&AttrSet::from([0])).unwrap().support, 2);
        assert_eq!(ord_scan(&t, &req, &base, 3).unwrap(), reps);
    }

    #[test]
    fn ord_rejects_single_row() {
        let t = BinaryTable::from_rows(2, &[[1, 0]]).unwrap();
        let req = SectorRequest::new(1, 1);
        let base = mine_sector(&t, &req).unwrap();
        assert!(ord_scan(&t, &req, &base, 1).is_err());
    }

    #[test]
    fn ord_constant_target_is_empty() {
        let t = BinaryTable::from_rows(2, &[[1, 1], [0, 1], [1, 1]]).unwrap();
        let req = SectorRequest::new(1, 1);
        let base = mine_sector(&t, &req).unwrap();
        assert!(ord_scan(&t, &req, &base, 1).unwrap().iter().all(|r| r.new_rules.is_empty()));
    }

    #[test]
    fn ord_duplicate_row_deletion_is_empty() {
        let t = BinaryTable::from_rows(3, &[[1, 0, 1], [1, 0, 1], [0, 1, 0], [1, 1, 1]]).unwrap();
        let req = SectorRequest::new(2, 1);
        let base = mine_sector(&t, &req).unwrap();
        let reps = ord_scan(&t, &req, &base, 1).unwrap();
        assert!(reps[0].new_rules.is_empty());
        assert!(reps[1].new_rules.is_empty());
    }

    #[test]
    fn scores_and_selection_on_t1() {
        let t = t1();
        let req = SectorRequest::new(2, 1);
        let base = mine_sector(&t, &req).unwrap();
        let scores = blocker_scores(&ord_scan(&t, &req, &base, 1).unwrap());
        assert_eq!(
            scores[0],
            BlockerScore {
                row_id: RowId(4),
                rule_count: 1,
                total_support: 2
            }
        );
        assert!(scores[1..].iter().all(|s| s.rule_count == 0 && s.total_support == 0));
        assert_eq!(scores[1..].iter().map(|s| s.row_id).collect::<Vec<_>>(), vec![RowId(1), RowId(2), RowId(3)]);
        assert_eq!(select_blockers(&scores, BlockerPolicy::TopK(1)), rows(&[4]));
        assert_eq!(select_blockers(&scores, BlockerPolicy::MinScore(1)), rows(&[4]));
        assert_eq!(select_blockers(&scores, BlockerPolicy::MinScore(0)), rows(&[1, 2, 3, 4]));
        assert_eq!(select_blockers(&scores, BlockerPolicy::TopK(10)).len(), 4);
    }

    #[test]
    fn scores_sort_by_support() {
        let mk = |row: usize, sup: usize| {
            let mut rs = RuleSet::new(0);
            rs.insert(crate::table::Rule {
                antecedent: AttrSet::from([1]),
                consequent: 0,
                support: sup,
                antecedent_support: sup,
                origin: Origin::FullTable,
            })
            .unwrap();
            NewRuleReport {
                deleted_rows: vec![RowId(row)],
                new_rules: rs,
            }
        };
        let s = blocker_scores(&[mk(1, 3), mk(2, 5)]);
        assert_eq!(s[0].row_id, RowId(2));
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("topk:3".parse::<BlockerPolicy>().unwrap(), BlockerPolicy::TopK(3));
        assert_eq!("minscore:2".parse::<BlockerPolicy>().unwrap(), BlockerPolicy::MinScore(2));
        assert!("top:3".parse::<BlockerPolicy>().is_err());
        assert!("topk".parse::<BlockerPolicy>().is_err());
        assert_eq!(BlockerPolicy::TopK(3).to_string(), "topk:3");
    }

    fn plan(s: usize, n: usize, k: usize, seed: u64) -> RunPlan {
        RunPlan {
            blockers: (1..=s).map(RowId).collect(),
            delete_count: n,
            runs: k,
            seed,
        }
    }

    #[test]
    fn systematic_enumeration() {
        let sets = sample_deletion_sets(&plan(5, 2, 10, 0)).unwrap();
        let expected: Vec<Vec<RowId>> = (1..=5)
            .flat_map(|a| (a + 1..=5).map(move |b| vec![RowId(a), RowId(b)]))
            .collect();
        assert_eq!(sets, expected);
        assert_eq!(sample_deletion_sets(&plan(3, 3, 1, 0)).unwrap(), vec![vec![RowId(1), RowId(2), RowId(3)]]);
        assert_eq!(sample_deletion_sets(&plan(3, 1, 3, 0)).unwrap().len(), 3);
    }

    #[test]
    fn random_sampling_is_seeded_and_distinct() {
        let a = sample_deletion_sets(&plan(5, 2, 3, 42)).unwrap();
        assert_eq!(a, sample_deletion_sets(&plan(5, 2, 3, 42)).unwrap());
        assert_eq!(a.len(), 3);
        assert_eq!(a.iter().collect::<BTreeSet<_>>().len(), 3);
        for s in &a {
            assert_eq!(s.len(), 2);
            assert!(s[0] < s[1]);
        }
        let big = sample_deletion_sets(&plan(291, 20, 25, 7)).unwrap();
        assert_eq!(big.len(), 25);
        assert_eq!(big.iter().collect::<BTreeSet<_>>().len(), 25);
        assert!(big.iter().all(|s| s.len() == 20));
    }

    #[test]
    fn nth_combination_matches_enumeration() {
        let items: Vec<RowId> = (1..=6).map(RowId).collect();
        let all = all_combinations(&items, 3);
        assert_eq!(all.len(), 20);
        for (i, c) in all.iter().enumerate() {
            assert_eq!(&nth_combination(&items, 3, i as u128), c);
        }
    }

    #[test]
    fn invalid_plans() {
        assert!(sample_deletion_sets(&plan(5, 0, 1, 0)).is_err());
        assert!(sample_deletion_sets(&plan(5, 2, 11, 0)).is_err());
        assert!(sample_deletion_sets(&plan(2, 3, 1, 0)).is_err());
        assert!(sample_deletion_sets(&plan(5, 2, 0, 0)).is_err());
    }

    #[test]
    fn mrd_single_run_on_t1() {
        let t = t1();
        let req = SectorRequest::new(2, 1);
        let p = RunPlan {
            blockers: rows(&[4]),
            delete_count: 1,
            runs: 1,
            seed: 0,
        };
        let out = mrd_run(&t, &req, &p, 1, None).unwrap();
        assert!(out.base.is_empty());
        assert_eq!(out.aggregated_new.len(), 1);
        let r = out.aggregated_new.get(&AttrSet::from([0])).unwrap();
        assert_eq!(r.support, 2);
        assert!((r.confidence().unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.origin, Origin::DeletedSet(vec![RowId(4)]));
        assert_eq!(out.sub_support[&AttrSet::from([0])], 2);
    }

    #[test]
    fn mrd_without_blockers_finds_nothing() {
        let t = t1();
        let req = SectorRequest::new(2, 1);
        let p = RunPlan {
            blockers: rows(&[1, 2, 3]),
            delete_count: 1,
            runs: 3,
            seed: 0,
        };
        assert!(mrd_run(&t, &req, &p, 2, None).unwrap().aggregated_new.is_empty());
    }

    #[test]
    fn mrd_origin_is_smallest_deletion_set() {
        let t = t1();
        let req = SectorRequest::new(2, 1);
        let p = RunPlan {
            blockers: rows(&[1, 2, 3, 4]),
            delete_count: 2,
            runs: 6,
            seed: 0,
        };
        let out = mrd_run(&t, &req, &p, 1, None).unwrap();
        let r = out.aggregated_new.get(&AttrSet::from([0])).unwrap();
        assert_eq!(r.origin, Origin::DeletedSet(vec![RowId(1), RowId(4)]));
        // sub-table without r1, r4: {1}->3 holds on r2 only
        assert_eq!(out.sub_support[&AttrSet::from([0])], 1);
    }

    #[test]
    fn mrd_rejects_emptying_plans() {
        let t = BinaryTable::from_rows(2, &[[1, 0], [0, 1]]).unwrap();
        let p = RunPlan {
            blockers: rows(&[1, 2]),
            delete_count: 2,
            runs: 1,
            seed: 0,
        };
        assert!(mrd_run(&t, &SectorRequest::new(1, 1), &p, 1, None).is_err());
    }

    #[test]
    fn mrd_progress_sees_every_run() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let t = t1();
        let seen = AtomicUsize::new(0);
        let hook = |_: usize, _: &NewRuleReport| {
            seen.fetch_add(1, Ordering::SeqCst);
        };
        let p = RunPlan {
            blockers: rows(&[1, 2, 3, 4]),
            delete_count: 1,
            runs: 4,
            seed: 0,
        };
        mrd_run(&t, &SectorRequest::new(2, 1), &p, 2, Some(&hook)).unwrap();
        assert_eq!(seen.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn bounds() {
        assert!((estimate_confidence(90, 10) - 0.9).abs() < 1e-12);
        assert!((confidence_floor(2, 1) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(confidence_floor(5, 0), 1.0);
        assert_eq!(estimate_confidence(5, 0), 1.0);
    }
}
