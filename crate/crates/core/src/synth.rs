//! Synthetic tables: random matrices, injected rules, consequent noise, and
//! the batch studies built on them.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{aggregate, union};
use crate::error::{Error, Result};
use crate::miner::{binary_part, mine_sector, SectorRequest};
use crate::parallel::par_map;
use crate::perturb::{mrd_run, RunPlan};
use crate::relevance::{rank_attributes, MiningConfig};
use crate::table::{AttrSet, BinaryTable, RowId};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    /// Each eligible row flips independently with this probability.
    Probability(f64),
    /// Exactly this many eligible rows flip.
    Exact(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Noise {
    pub level: NoiseLevel,
    /// Also flip 0 -> 1. Off by default: noise only blocks rules.
    pub symmetric: bool,
}

impl Noise {
    pub fn exact(k: usize) -> Self {
        Noise {
            level: NoiseLevel::Exact(k),
            symmetric: false,
        }
    }

    pub fn probability(p: f64) -> Self {
        Noise {
            level: NoiseLevel::Probability(p),
            symmetric: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InjectedRule {
    pub antecedent: AttrSet,
    pub target: usize,
    /// Rows forced to hold antecedent and target.
    pub coverage: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthSpec {
    pub rows: usize,
    pub cols: usize,
    pub density: f64,
    pub seed: u64,
    pub injected: Option<InjectedRule>,
    pub noise: Option<Noise>,
}

impl SynthSpec {
    pub fn random(rows: usize, cols: usize, density: f64, seed: u64) -> Self {
        SynthSpec {
            rows,
            cols,
            density,
            seed,
            injected: None,
            noise: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::InvalidArgument(format!("density {} outside [0, 1]", self.density)));
        }
        if let Some(inj) = &self.injected {
            if inj.coverage > self.rows {
                return Err(Error::InvalidArgument(format!(
                    "coverage {} exceeds {} rows",
                    inj.coverage, self.rows
                )));
            }
            if inj.target >= self.cols || inj.antecedent.last().is_some_and(|m| m >= self.cols) {
                return Err(Error::InvalidArgument("injected rule outside the columns".into()));
            }
        }
        if let Some(Noise {
            level: NoiseLevel::Probability(p),
            ..
        }) = self.noise
        {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("noise probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

// Independent streams for the generator stages, all derived from one seed.
fn stage_rng(seed: u64, stage: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage);
    rng
}

/// Each cell is 1 with probability `params.density`.
pub fn random_table(params: &SynthSpec) -> Result<BinaryTable> {
    params.validate()?;
    let mut rng = stage_rng(params.seed, 0);
    let rows: Vec<Vec<u8>> = (0..params.rows)
        .map(|_| (0..params.cols).map(|_| rng.gen_bool(params.density) as u8).collect())
        .collect();
    BinaryTable::from_rows(params.cols, &rows)
}

/// Forces `coverage` random rows to hold `x ∪ {b}`, then sets `b` on every
/// other row holding `x`, so `x -> b` is an implication.
pub fn inject_rule(t: &BinaryTable, x: &AttrSet, b: usize, coverage: usize, seed: u64) -> Result<BinaryTable> {
    t.check_column(b)?;
    if x.is_empty() || x.contains(b) {
        return Err(Error::InvalidArgument("injected antecedent must be nonempty and exclude the target".into()));
    }
    if x.last().is_some_and(|m| m >= t.n_cols()) {
        return Err(Error::InvalidArgument("injected antecedent outside the columns".into()));
    }
    if coverage > t.n_rows() {
        return Err(Error::InvalidArgument(format!("coverage {coverage} exceeds {} rows", t.n_rows())));
    }
    let mut rng = stage_rng(seed, 1);
    let mut order: Vec<usize> = (0..t.n_rows()).collect();
    order.shuffle(&mut rng);
    let mut out = t.clone();
    for &r in &order[..coverage] {
        for c in x.iter().chain([b]) {
            out.set(r, c, true);
        }
    }
    for r in out.rows_with(x)?.iter().collect::<Vec<_>>() {
        out.set(r, b, true);
    }
    Ok(out)
}

/// Flips column `b` on rows eligible for noise: rows holding `antecedent`
/// (all rows without one) where `b` is 1, plus those where `b` is 0 when the
/// noise is symmetric. Returns the flipped row ids.
pub fn flip_noise(
    t: &BinaryTable,
    b: usize,
    antecedent: Option<&AttrSet>,
    noise: Noise,
    seed: u64,
) -> Result<(BinaryTable, Vec<RowId>)> {
    t.check_column(b)?;
    let holders = match antecedent {
        Some(x) => t.rows_with(x)?,
        None => crate::bits::BitSet::full(t.n_rows()),
    };
    let eligible: Vec<usize> = holders
        .iter()
        .filter(|&r| noise.symmetric || t.get(r, b))
        .collect();
    let mut rng = stage_rng(seed, 2);
    let chosen: Vec<usize> = match noise.level {
        NoiseLevel::Exact(k) => {
            if k > eligible.len() {
                return Err(Error::InvalidArgument(format!(
                    "cannot flip {k} rows: only {} eligible",
                    eligible.len()
                )));
            }
            let mut picked: Vec<usize> = eligible.choose_multiple(&mut rng, k).copied().collect();
            picked.sort_unstable();
            picked
        }
        NoiseLevel::Probability(p) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("noise probability {p} outside [0, 1]")));
            }
            eligible.into_iter().filter(|_| rng.gen_bool(p)).collect()
        }
    };
    let mut out = t.clone();
    for &r in &chosen {
        let v = out.get(r, b);
        out.set(r, b, !v);
    }
    Ok((out, chosen.iter().map(|&r| t.row_ids()[r]).collect()))
}

/// Random table, injected rule and noise, as described by `params`.
pub fn generate(params: &SynthSpec) -> Result<(BinaryTable, Vec<RowId>)> {
    let mut t = random_table(params)?;
    let Some(inj) = &params.injected else {
        return Ok((t, Vec::new()));
    };
    t = inject_rule(&t, &inj.antecedent, inj.target, inj.coverage, params.seed)?;
    match params.noise {
        Some(noise) => flip_noise(&t, inj.target, Some(&inj.antecedent), noise, params.seed),
        None => Ok((t, Vec::new())),
    }
}

/// How deletion sets are chosen in a recovery experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryPlan {
    /// One run deleting exactly the flipped rows.
    FlippedRows,
    /// `runs` random `delete_count`-subsets of all rows.
    Random { delete_count: usize, runs: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveredRule {
    pub antecedent: Vec<usize>,
    pub support: usize,
    pub confidence: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub flipped_rows: Vec<RowId>,
    /// The injected rule (or a sub-antecedent of it) is an implication of the
    /// noisy table.
    pub found_on_full_table: bool,
    /// It appears among the rules kept after deletion and aggregation.
    pub recovered: bool,
    pub recovered_rule: Option<RecoveredRule>,
    /// Aggregated rules whose antecedent strictly contains the injected one.
    pub extended_variants_left: usize,
    pub new_rule_count: usize,
}

pub fn recovery_experiment(params: &SynthSpec, plan: RecoveryPlan, min_support: usize) -> Result<RecoveryReport> {
    let inj = params
        .injected
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("recovery needs an injected rule".into()))?;
    let (t, flipped) = generate(params)?;
    let req = SectorRequest::new(inj.target, min_support);

    let x = &inj.antecedent;
    let base = mine_sector(&t, &req)?;
    let found_on_full_table = base.antecedents().any(|a| a.is_subset(x));

    let run_plan = match plan {
        RecoveryPlan::FlippedRows if flipped.is_empty() => None,
        RecoveryPlan::FlippedRows => Some(RunPlan {
            delete_count: flipped.len(),
            blockers: flipped.iter().copied().collect(),
            runs: 1,
            seed: params.seed,
        }),
        RecoveryPlan::Random { delete_count, runs } => Some(RunPlan {
            blockers: t.row_ids().iter().copied().collect(),
            delete_count,
            runs,
            seed: params.seed,
        }),
    };
    let new_rules = match run_plan {
        Some(p) => mrd_run(&t, &req, &p, 1, None)?.aggregated_new,
        None => base.empty_like(),
    };
    let delta = aggregate(&union(&base, &new_rules)?, &binary_part(&t, min_support));

    let hit = delta.iter().find(|r| r.antecedent.is_subset(x));
    Ok(RecoveryReport {
        flipped_rows: flipped,
        found_on_full_table,
        recovered: hit.is_some(),
        recovered_rule: hit.map(|r| RecoveredRule {
            antecedent: r.antecedent.as_slice().to_vec(),
            support: r.support,
            confidence: r.confidence(),
        }),
        extended_variants_left: delta
            .antecedents()
            .filter(|a| x.is_subset(a) && *a != x)
            .count(),
        new_rule_count: new_rules.len(),
    })
}

/// Distribution summary in the layout Min, Max, Average, 50th/75th/90th percentile.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelevanceSummary {
    pub density: f64,
    pub tables: usize,
    pub values: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
}

/// Percentile by linear interpolation between closest ranks; `sorted` must be ascending.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(density: f64, tables: usize, mut values: Vec<f64>) -> RelevanceSummary {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    RelevanceSummary {
        density,
        tables,
        values: n,
        min: values.first().copied().unwrap_or(f64::NAN),
        max: values.last().copied().unwrap_or(f64::NAN),
        mean: values.iter().sum::<f64>() / n as f64,
        p50: percentile(&values, 0.5),
        p75: percentile(&values, 0.75),
        p90: percentile(&values, 0.9),
    }
}

/// `rel_b(a)` for every ordered pair `a != b` of one table.
pub fn pairwise_relevance(t: &BinaryTable, cfg: &MiningConfig) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(t.n_cols() * t.n_cols().saturating_sub(1));
    for b in 0..t.n_cols() {
        let report = rank_attributes(t, b, cfg)?;
        let mut recs = report.records;
        recs.sort_by_key(|r| r.column);
        out.extend(recs.iter().map(|r| r.rel));
    }
    Ok(out)
}

/// Seed of table `i` in a study seeded with `seed`.
pub fn table_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityStudy {
    pub rows: usize,
    pub cols: usize,
    pub tables: usize,
    pub seed: u64,
    pub mining: MiningConfig,
}

/// Relevance distribution of random tables at each density. Tables are spread
/// over `mining.workers` threads.
pub fn density_sweep(study: &DensityStudy, densities: &[f64]) -> Result<Vec<RelevanceSummary>> {
    let per_table = MiningConfig {
        workers: 1,
        ..study.mining
    };
    let mut out = Vec::with_capacity(densities.len());
    for (di, &density) in densities.iter().enumerate() {
        let idx: Vec<usize> = (0..study.tables).collect();
        let results = par_map(study.mining.workers, &idx, |&i| {
            let params = SynthSpec::random(
                study.rows,
                study.cols,
                density,
                table_seed(study.seed ^ ((di as u64) << 48), i),
            );
            pairwise_relevance(&random_table(&params)?, &per_table)
        })?;
        let mut values = Vec::new();
        for r in results {
            values.extend(r?);
        }
        out.push(summarize(density, study.tables, values));
    }
    Ok(out)
}

pub fn write_summary_csv<W: Write>(rows: &[RelevanceSummary], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "Density",
        "Min",
        "Max",
        "Average",
        "50th percentile",
        "75th percentile",
        "90th percentile",
    ])?;
    for s in rows {
        w.serialize((s.density, s.min, s.max, s.mean, s.p50, s.p75, s.p90))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseSummary {
    pub noise: f64,
    pub trials: usize,
    pub recovery_rate: f64,
    /// Mean relevance of the injected antecedent attributes to the target.
    pub mean_relevance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseStudy {
    pub rows: usize,
    pub cols: usize,
    pub density: f64,
    pub antecedent: AttrSet,
    pub target: usize,
    pub coverage: usize,
    pub trials: usize,
    pub seed: u64,
    pub plan: RecoveryPlan,
    pub mining: MiningConfig,
}

/// Recovery rate and relevance of the injected attributes at each noise probability.
pub fn noise_sweep(study: &NoiseStudy, levels: &[f64]) -> Result<Vec<NoiseSummary>> {
    let mut out = Vec::with_capacity(levels.len());
    for &p in levels {
        let idx: Vec<usize> = (0..study.trials).collect();
        let per_trial = MiningConfig {
            workers: 1,
            ..study.mining
        };
        let results = par_map(study.mining.workers, &idx, |&i| -> Result<(bool, f64)> {
            let params = SynthSpec {
                rows: study.rows,
                cols: study.cols,
                density: study.density,
                seed: table_seed(study.seed, i),
                injected: Some(InjectedRule {
                    antecedent: study.antecedent.clone(),
                    target: study.target,
                    coverage: study.coverage,
                }),
                noise: Some(Noise::probability(p)),
            };
            let rec = recovery_experiment(&params, study.plan, study.mining.min_support)?;
            let (t, _) = generate(&params)?;
            let report = rank_attributes(&t, study.target, &per_trial)?;
            let rel: f64 = study
                .antecedent
                .iter()
                .map(|a| report.get(a).map_or(0.0, |r| r.rel))
                .sum::<f64>()
                / study.antecedent.len() as f64;
            Ok((rec.recovered, rel))
        })?;
        let mut recovered = 0;
        let mut rel_sum = 0.0;
        for r in results {
            let (ok, rel) = r?;
            recovered += ok as usize;
            rel_sum += rel;
        }
        out.push(NoiseSummary {
            noise: p,
            trials: study.trials,
            recovery_rate: recovered as f64 / study.trials as f64,
            mean_relevance: rel_sum / study.trials as f64,
        });
    }
    Ok(out)
}

pub fn write_noise_csv<W: Write>(rows: &[NoiseSummary], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["Noise", "Trials", "Recovery rate", "Mean relevance"])?;
    for s in rows {
        w.serialize((s.noise, s.trials, s.recovery_rate, s.mean_relevance))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extreme_densities() {
        let t = random_table(&SynthSpec::random(5, 4, 0.0, 1)).unwrap();
        assert_eq!(t.ones(), 0);
        let t = random_table(&SynthSpec::random(5, 4, 1.0, 1)).unwrap();
        assert_eq!(t.ones(), 20);
        assert!(random_table(&SynthSpec::random(5, 4, 1.5, 1)).is_err());
    }

    #[test]
    fn random_tables_are_seeded() {
        let a = random_table(&SynthSpec::random(20, 32, 0.3, 9)).unwrap();
        assert_eq!(a, random_table(&SynthSpec::random(20, 32, 0.3, 9)).unwrap());
        assert_ne!(a, random_table(&SynthSpec::random(20, 32, 0.3, 10)).unwrap());
    }

    #[test]
    fn empirical_density() {
        // 16 tables of 20x32 = 10240 cells; sd of the mean ≈ 0.0045
        let ones: usize = (0..16)
            .map(|s| random_table(&SynthSpec::random(20, 32, 0.3, s)).unwrap().ones())
            .sum();
        let d = ones as f64 / (16.0 * 640.0);
        assert!((d - 0.3).abs() < 0.02, "{d}");
    }

    #[test]
    fn injection_makes_implication() {
        let t = random_table(&SynthSpec::random(20, 8, 0.3, 4)).unwrap();
        let x = AttrSet::from([1, 2]);
        let inj = inject_rule(&t, &x, 5, 6, 4).unwrap();
        assert_eq!(inj.confidence(&x, 5).unwrap(), Some(1.0));
        assert!(inj.support(&x.with(5)).unwrap() >= 6);

        let full = inject_rule(&t, &x, 5, 20, 4).unwrap();
        for c in [1, 2, 5] {
            assert_eq!(full.column(c).count(), 20);
        }
        assert!(inject_rule(&t, &x, 9, 3, 4).is_err());
        assert!(inject_rule(&t, &AttrSet::from([1, 12]), 5, 3, 4).is_err());
        assert!(inject_rule(&t, &x, 5, 21, 4).is_err());
    }

    #[test]
    fn exact_noise_lowers_confidence() {
        let t = random_table(&SynthSpec::random(20, 8, 0.3, 2)).unwrap();
        let x = AttrSet::from([0, 3]);
        let t = inject_rule(&t, &x, 6, 8, 2).unwrap();
        let s = t.support(&x).unwrap();
        let (noisy, flipped) = flip_noise(&t, 6, Some(&x), Noise::exact(2), 2).unwrap();
        assert_eq!(flipped.len(), 2);
        let c = noisy.confidence(&x, 6).unwrap().unwrap();
        assert!((c - (s - 2) as f64 / s as f64).abs() < 1e-12);
        assert_eq!(noisy.violating_rows(&x, 6).unwrap(), flipped.iter().copied().collect());
        assert!(flip_noise(&t, 6, Some(&x), Noise::exact(s + 1), 2).is_err());
    }

    #[test]
    fn zero_noise_is_identity() {
        let t = random_table(&SynthSpec::random(10, 5, 0.5, 3)).unwrap();
        let (same, flipped) = flip_noise(&t, 2, None, Noise::probability(0.0), 3).unwrap();
        assert_eq!(same, t);
        assert!(flipped.is_empty());
        let (_, all) = flip_noise(&t, 2, None, Noise::probability(1.0), 3).unwrap();
        assert_eq!(all.len(), t.column(2).count());
    }

    #[test]
    fn symmetric_noise_flips_both_ways() {
        let t = BinaryTable::from_rows(2, &[[1, 0], [1, 1], [0, 1]]).unwrap();
        let noise = Noise {
            level: NoiseLevel::Probability(1.0),
            symmetric: true,
        };
        let (n, flipped) = flip_noise(&t, 1, None, noise, 0).unwrap();
        assert_eq!(flipped.len(), 3);
        assert_eq!(n.column(1), t.negate_column(1).unwrap().column(1));
    }

    #[test]
    fn percentiles_interpolate() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.5), 2.0);
        assert_eq!(percentile(&v, 0.75), 3.0);
        assert!((percentile(&v, 0.9) - 3.6).abs() < 1e-12);
        let s = summarize(0.3, 1, vec![4.0, 0.0, 2.0, 1.0, 3.0]);
        assert_eq!((s.min, s.max, s.mean), (0.0, 4.0, 2.0));
    }

    #[test]
    fn summary_csv_layout() {
        let s = summarize(0.3, 1, vec![1.0, 2.0]);
        let mut buf = Vec::new();
        write_summary_csv(&[s], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("Density,Min,Max,Average,50th percentile,75th percentile,90th percentile\n0.3,1.0,2.0,1.5,"));
    }
}
