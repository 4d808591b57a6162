//! Total support and relevance of attributes with respect to a target.
//!
//! For a sector `D` with consequent `b`, the total support of `a` sums, over
//! rules `X -> b` of `D` with `a` in `X`, the antecedent support `sup(X)`
//! divided by `|X|` and weighted by the rule's confidence. The relevance of `a`
//! to `b` is `tsup_b(a) / (tsup_¬b(a) + 1)`.

use std::collections::BTreeSet;
use std::io::Write;

use serde::Serialize;

use crate::basis::{aggregate, union};
use crate::error::{Error, Result};
use crate::miner::{binary_part, mine_sector, RuleSet, SectorRequest};
use crate::perturb::{blocker_scores, mrd_run, ord_scan, select_blockers, BlockerPolicy, RunPlan};
use crate::table::{BinaryTable, RowId};

/// Where the MRD blocker set comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockerSource {
    AllRows,
    /// Score rows by one-row deletion and keep those selected by the policy.
    Scored(BlockerPolicy),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeletionConfig {
    pub delete_count: usize,
    pub runs: usize,
    pub blockers: BlockerSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MiningConfig {
    pub min_support: usize,
    /// `None` restricts each sector to the implications of the full table.
    pub deletion: Option<DeletionConfig>,
    pub seed: u64,
    pub workers: usize,
}

impl MiningConfig {
    pub fn implications_only(min_support: usize) -> Self {
        MiningConfig {
            min_support,
            deletion: None,
            seed: 0,
            workers: 1,
        }
    }
}

/// One sector of the basis before and after aggregation.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    /// Implications of the full table.
    pub base: RuleSet,
    /// Rules found only on sub-tables, measured on the full table.
    pub new_rules: RuleSet,
    /// `base ∪ new_rules`, aggregated against the binary part.
    pub delta: RuleSet,
}

/// Mines `base`, runs the configured deletions and aggregates the union.
pub fn build_sector(t: &BinaryTable, req: &SectorRequest, cfg: &MiningConfig) -> Result<SectorBasis> {
    let reference = if req.negated {
        t.negate_column(req.target)?
    } else {
        t.clone()
    };
    let (base, new_rules) = match cfg.deletion {
        None => {
            let base = mine_sector(t, req)?;
            let empty = base.empty_like();
            (base, empty)
        }
        Some(del) => {
            let blockers: BTreeSet<RowId> = match del.blockers {
                BlockerSource::AllRows => t.row_ids().iter().copied().collect(),
                BlockerSource::Scored(policy) => {
                    let base = mine_sector(t, req)?;
                    let reports = ord_scan(t, req, &base, cfg.workers)?;
                    select_blockers(&blocker_scores(&reports), policy)
                }
            };
            let plan = RunPlan {
                blockers,
                delete_count: del.delete_count,
                runs: del.runs,
                seed: cfg.seed,
            };
            let out = mrd_run(t, req, &plan, cfg.workers, None)?;
            (out.base, out.aggregated_new)
        }
    };
    let binary = binary_part(&reference, cfg.min_support);
    let delta = aggregate(&union(&base, &new_rules)?, &binary);
    Ok(SectorBasis {
        base,
        new_rules,
        delta,
    })
}

/// `Σ sup(X)/|X| · conf(X -> b)` over the rules of `delta` whose antecedent holds `a`.
pub fn total_support(delta: &RuleSet, a: usize) -> f64 {
    delta
        .iter()
        .filter(|r| r.antecedent.contains(a))
        .map(|r| r.antecedent_support as f64 / r.antecedent.len() as f64 * r.confidence().unwrap_or(0.0))
        .fold(0.0, |acc, v| acc + v)
}

pub fn relevance(tsup_b: f64, tsup_neg: f64) -> f64 {
    tsup_b / (tsup_neg + 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttributeRelevance {
    #[serde(skip)]
    pub column: usize,
    pub attribute: String,
    pub tsup_b: f64,
    pub tsup_neg: f64,
    pub rel: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelevanceReport {
    pub target: String,
    /// Records in ranking order: relevance descending, then `tsup_b`
    /// descending, then column position.
    pub records: Vec<AttributeRelevance>,
}

impl RelevanceReport {
    pub fn from_sectors(t: &BinaryTable, b: usize, delta_b: &RuleSet, delta_neg: &RuleSet) -> Self {
        let mut records: Vec<AttributeRelevance> = (0..t.n_cols())
            .filter(|&a| a != b)
            .map(|a| {
                let tsup_b = total_support(delta_b, a);
                let tsup_neg = total_support(delta_neg, a);
                AttributeRelevance {
                    column: a,
                    attribute: t.label(a).to_string(),
                    tsup_b,
                    tsup_neg,
                    rel: relevance(tsup_b, tsup_neg),
                }
            })
            .collect();
        records.sort_by(|x, y| {
            y.rel
                .total_cmp(&x.rel)
                .then(y.tsup_b.total_cmp(&x.tsup_b))
                .then(x.column.cmp(&y.column))
        });
        RelevanceReport {
            target: t.label(b).to_string(),
            records,
        }
    }

    pub fn ranking(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.column).collect()
    }

    pub fn get(&self, column: usize) -> Option<&AttributeRelevance> {
        self.records.iter().find(|r| r.column == column)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["attribute", "tsup_b", "tsup_neg", "rel"])?;
        for r in &self.records {
            w.serialize((&r.attribute, r.tsup_b, r.tsup_neg, r.rel))?;
        }
        w.flush().map_err(Error::from)
    }
}

/// Both sectors and the resulting report.
#[derive(Clone, Debug)]
pub struct RankOutcome {
    pub positive: SectorBasis,
    pub negative: SectorBasis,
    pub report: RelevanceReport,
}

pub fn rank_attributes_detailed(t: &BinaryTable, b: usize, cfg: &MiningConfig) -> Result<RankOutcome> {
    let req = SectorRequest::new(b, cfg.min_support);
    req.validate(t)?;
    let positive = build_sector(t, &req, cfg)?;
    let negative = build_sector(t, &req.negated(), cfg)?;
    let report = RelevanceReport::from_sectors(t, b, &positive.delta, &negative.delta);
    Ok(RankOutcome {
        positive,
        negative,
        report,
    })
}

pub fn rank_attributes(t: &BinaryTable, b: usize, cfg: &MiningConfig) -> Result<RelevanceReport> {
    Ok(rank_attributes_detailed(t, b, cfg)?.report)
}
