//! Command-line front end.
//!
//! Every command writes one JSON document (or CSV with a `.meta.json` sidecar)
//! holding the resolved configuration, table metadata and the result. Keys are
//! fixed; antecedents are lists of column labels in column order. Timing and
//! the worker count live in a separate `runtime` block that `--reproducible`
//! drops, so outputs can be compared byte for byte.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::miner::{mine_sector, RuleSet, SectorRequest};
use crate::oracle;
use crate::perturb::{
    blocker_scores, confidence_floor, estimate_confidence, mrd_run, ord_scan, select_blockers, BlockerPolicy,
    RunPlan,
};
use crate::relevance::{rank_attributes, BlockerSource, DeletionConfig, MiningConfig};
use crate::synth::{
    density_sweep, noise_sweep, random_table, write_noise_csv, write_summary_csv, DensityStudy, NoiseStudy,
    RecoveryPlan, SynthSpec,
};
use crate::table::{AttrSet, BinaryTable, Origin, Rule};

/// Exit status for bad flags, missing inputs and invalid plans.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for failures while running a valid configuration.
pub const EXIT_RUNTIME: i32 = 1;

#[derive(Debug)]
struct Failure {
    code: i32,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnknownColumn(_)
            | Error::UnknownRow(_)
            | Error::InvalidPlan(_)
            | Error::InvalidArgument(_)
            | Error::TooLarge(_) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        msg: msg.into(),
    }
}

#[derive(Parser, Debug)]
#[command(name = "rulebasis", version, about = "Implication and high-confidence rule mining by row deletion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimal implications X -> b of the full table.
    Mine(MineArgs),
    /// One-row deletion scan and blocker scores.
    Ord(OrdArgs),
    /// Multiple-row deletion batch.
    Mrd(MrdArgs),
    /// Rank attributes by relevance to the target.
    Rank(RankArgs),
    /// Synthetic batch studies and table generation.
    Synth(SynthArgs),
    /// Exhaustive reference enumeration (small tables only).
    #[command(hide = true)]
    Oracle(MineArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Fimi,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// CSV input has no header row; columns are labelled 1..m.
    #[arg(long)]
    no_header: bool,
    /// Read only the first N transactions or rows.
    #[arg(long)]
    max_rows: Option<usize>,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    out_format: OutFormat,
    /// Omit wall time and worker count from the output.
    #[arg(long)]
    reproducible: bool,
}

#[derive(Args, Debug)]
struct MineArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Consequent column label.
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 1)]
    min_support: usize,
    /// Mine the sector of the negated target.
    #[arg(long)]
    negated: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct OrdArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 1)]
    min_support: usize,
    #[arg(long)]
    negated: bool,
    #[arg(long)]
    seed: u64,
    #[arg(long, env = "RULEBASIS_WORKERS", default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct DeletionArgs {
    /// Rows deleted per run.
    #[arg(long)]
    delete_count: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    /// Blocker policy `topk:K` or `minscore:T`; all rows are eligible when absent.
    #[arg(long)]
    blockers: Option<BlockerPolicy>,
}

impl DeletionArgs {
    fn resolve(&self) -> CliResult<Option<DeletionConfig>> {
        let blockers = self.blockers.map_or(BlockerSource::AllRows, BlockerSource::Scored);
        match (self.delete_count, self.runs) {
            (Some(delete_count), Some(runs)) => Ok(Some(DeletionConfig {
                delete_count,
                runs,
                blockers,
            })),
            (None, None) if self.blockers.is_none() => Ok(None),
            _ => Err(usage("--delete-count and --runs must be given together")),
        }
    }
}

#[derive(Args, Debug)]
struct MrdArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 1)]
    min_support: usize,
    #[arg(long)]
    negated: bool,
    #[arg(long)]
    delete_count: usize,
    #[arg(long)]
    runs: usize,
    #[arg(long)]
    blockers: Option<BlockerPolicy>,
    #[arg(long)]
    seed: u64,
    #[arg(long, env = "RULEBASIS_WORKERS", default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct RankArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 1)]
    min_support: usize,
    #[command(flatten)]
    deletion: DeletionArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long, env = "RULEBASIS_WORKERS", default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Study {
    /// Relevance distribution of random tables per density.
    Density,
    /// Recovery of an injected rule under consequent noise.
    Noise,
    /// Write one random table as CSV.
    Table,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_enum)]
    study: Study,
    #[arg(long, default_value_t = 20)]
    rows: usize,
    #[arg(long, default_value_t = 32)]
    cols: usize,
    /// Tables per density, or trials per noise level.
    #[arg(long, default_value_t = 500)]
    tables: usize,
    /// Densities for the density study; the first one is used by the others.
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.5")]
    densities: Vec<f64>,
    /// Flip probabilities for the noise study.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2")]
    noise_levels: Vec<f64>,
    /// Injected antecedent as 1-based column numbers.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    antecedent: Vec<usize>,
    /// Injected target as a 1-based column number.
    #[arg(long, default_value_t = 3)]
    target: usize,
    #[arg(long, default_value_t = 10)]
    coverage: usize,
    #[arg(long, default_value_t = 1)]
    min_support: usize,
    #[command(flatten)]
    deletion: DeletionArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long, env = "RULEBASIS_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    out_format: OutFormat,
    #[arg(long)]
    reproducible: bool,
}

// ---- serialized shapes ----

#[derive(Serialize)]
struct TableMeta {
    rows: usize,
    cols: usize,
    density: f64,
    /// Column labels by position; for FIMI input these are the item ids.
    columns: Vec<String>,
}

#[derive(Serialize)]
struct Runtime {
    workers: usize,
    wall_time_s: f64,
}

#[derive(Serialize)]
struct Document<C: Serialize, R: Serialize> {
    command: &'static str,
    config: C,
    table: Option<TableMeta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime: Option<Runtime>,
    result: R,
}

#[derive(Serialize, Clone)]
struct InputConfig {
    input: String,
    format: Format,
    header: bool,
    max_rows: Option<usize>,
}

#[derive(Serialize)]
struct SectorConfig {
    #[serde(flatten)]
    input: InputConfig,
    target: String,
    negated: bool,
    min_support: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct RuleOut {
    antecedent: Vec<String>,
    consequent: String,
    support: usize,
    antecedent_support: usize,
    confidence: Option<f64>,
    origin: Option<Vec<usize>>,
}

impl RuleOut {
    fn new(t: &BinaryTable, negated: bool, r: &Rule) -> Self {
        let mut consequent = t.label(r.consequent).clone();
        consequent.negated = negated;
        RuleOut {
            antecedent: labels(t, &r.antecedent),
            consequent: consequent.to_string(),
            support: r.support,
            antecedent_support: r.antecedent_support,
            confidence: r.confidence(),
            origin: match &r.origin {
                Origin::FullTable => None,
                Origin::DeletedSet(rows) => Some(rows.iter().map(|r| r.0).collect()),
            },
        }
    }
}

#[derive(Serialize)]
struct SectorOut {
    consequent: String,
    constant_consequent: bool,
    rules: Vec<RuleOut>,
}

impl SectorOut {
    fn new(t: &BinaryTable, rs: &RuleSet) -> Self {
        let mut label = t.label(rs.consequent()).clone();
        label.negated = rs.is_negated();
        SectorOut {
            consequent: label.to_string(),
            constant_consequent: rs.is_constant_consequent(),
            rules: rs.iter().map(|r| RuleOut::new(t, rs.is_negated(), r)).collect(),
        }
    }
}

fn labels(t: &BinaryTable, xs: &AttrSet) -> Vec<String> {
    xs.iter().map(|c| t.label(c).name.clone()).collect()
}

// ---- plumbing ----

fn load(args: &InputArgs) -> CliResult<BinaryTable> {
    let file = File::open(&args.input).map_err(|e| usage(format!("cannot open {}: {e}", args.input.display())))?;
    let reader = BufReader::new(file);
    let t = match args.format {
        Format::Fimi => BinaryTable::load_fimi(reader, args.max_rows)?,
        Format::Csv => {
            let t = BinaryTable::load_csv(reader, !args.no_header)?;
            match args.max_rows {
                Some(m) if m < t.n_rows() => {
                    let drop = t.row_ids()[m..].iter().copied().collect();
                    t.delete_rows(&drop)?
                }
                _ => t,
            }
        }
    };
    Ok(t)
}

fn input_config(args: &InputArgs) -> InputConfig {
    InputConfig {
        input: args.input.display().to_string(),
        format: args.format,
        header: args.format == Format::Csv && !args.no_header,
        max_rows: args.max_rows,
    }
}

fn table_meta(t: &BinaryTable) -> TableMeta {
    TableMeta {
        rows: t.n_rows(),
        cols: t.n_cols(),
        density: t.density().unwrap_or(0.0),
        columns: t.col_labels().iter().map(|l| l.name.clone()).collect(),
    }
}

fn runtime(reproducible: bool, workers: usize, started: Instant) -> Option<Runtime> {
    (!reproducible).then(|| Runtime {
        workers,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

fn check_workers(workers: usize) -> CliResult<()> {
    if workers == 0 {
        return Err(usage("--workers must be at least 1"));
    }
    Ok(())
}

fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| usage(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, doc: &T) -> CliResult<()> {
    let mut w = open_out(path)?;
    serde_json::to_writer_pretty(&mut w, doc).map_err(|e| Failure {
        code: EXIT_RUNTIME,
        msg: e.to_string(),
    })?;
    writeln!(w).map_err(Error::from)?;
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes the CSV body and, when writing to a file, the document without its
/// result as a sidecar.
fn write_csv_with_meta<C: Serialize>(
    path: Option<&Path>,
    doc: &Document<C, ()>,
    body: impl FnOnce(&mut dyn Write) -> crate::Result<()>,
) -> CliResult<()> {
    let mut w = open_out(path)?;
    body(&mut w)?;
    w.flush().map_err(Error::from)?;
    if let Some(p) = path {
        write_json(Some(&sidecar(p)), doc)?;
    }
    Ok(())
}

fn write_rules_csv(w: &mut dyn Write, rules: &[RuleOut], extra: Option<&[f64]>) -> crate::Result<()> {
    let mut c = csv::Writer::from_writer(w);
    let mut header = vec!["antecedent", "consequent", "support", "antecedent_support", "confidence", "origin"];
    if extra.is_some() {
        header.push("confidence_floor");
    }
    c.write_record(&header)?;
    for (i, r) in rules.iter().enumerate() {
        let mut rec = vec![
            r.antecedent.join(" "),
            r.consequent.clone(),
            r.support.to_string(),
            r.antecedent_support.to_string(),
            r.confidence.map_or(String::new(), |v| v.to_string()),
            r.origin
                .as_ref()
                .map_or(String::new(), |o| o.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")),
        ];
        if let Some(fl) = extra {
            rec.push(fl[i].to_string());
        }
        c.write_record(&rec)?;
    }
    c.flush()?;
    Ok(())
}

fn request(t: &BinaryTable, target: &str, min_support: usize, negated: bool) -> CliResult<SectorRequest> {
    let b = t.column_index(target)?;
    let mut req = SectorRequest::new(b, min_support);
    if negated {
        req = req.negated();
    }
    req.validate(t)?;
    Ok(req)
}

// ---- commands ----

fn cmd_mine(a: &MineArgs, exhaustive: bool) -> CliResult<()> {
    let started = Instant::now();
    let t = load(&a.input)?;
    let req = request(&t, &a.target, a.min_support, a.negated)?;
    let sector = if exhaustive {
        let reference = if a.negated { t.negate_column(req.target)? } else { t.clone() };
        let rs = oracle::enumerate_antecedents(&reference, req.target, req.min_support)?;
        let mut out = RuleSet::new(req.target);
        if a.negated {
            out = out.with_negated(true);
        }
        if rs.is_constant_consequent() {
            out.mark_constant_consequent();
        }
        for r in rs.iter() {
            out.insert(r.clone())?;
        }
        out
    } else {
        mine_sector(&t, &req)?
    };
    let config = SectorConfig {
        input: input_config(&a.input),
        target: a.target.clone(),
        negated: a.negated,
        min_support: a.min_support,
        seed: None,
    };
    let command = if exhaustive { "oracle" } else { "mine" };
    let result = SectorOut::new(&t, &sector);
    let rt = runtime(a.output.reproducible, 1, started);
    match a.output.out_format {
        OutFormat::Json => write_json(
            a.output.out.as_deref(),
            &Document {
                command,
                config,
                table: Some(table_meta(&t)),
                runtime: rt,
                result,
            },
        ),
        OutFormat::Csv => write_csv_with_meta(
            a.output.out.as_deref(),
            &Document {
                command,
                config,
                table: Some(table_meta(&t)),
                runtime: rt,
                result: (),
            },
            |w| write_rules_csv(w, &result.rules, None),
        ),
    }
}

#[derive(Serialize)]
struct OrdReportOut {
    deleted_row: usize,
    new_rules: Vec<RuleOut>,
}

#[derive(Serialize)]
struct ScoreOut {
    row: usize,
    rule_count: usize,
    total_support: usize,
}

#[derive(Serialize)]
struct OrdOut {
    base: SectorOut,
    reports: Vec<OrdReportOut>,
    blocker_scores: Vec<ScoreOut>,
}

fn cmd_ord(a: &OrdArgs) -> CliResult<()> {
    let started = Instant::now();
    check_workers(a.workers)?;
    let t = load(&a.input)?;
    let req = request(&t, &a.target, a.min_support, a.negated)?;
    let base = mine_sector(&t, &req)?;
    let reports = ord_scan(&t, &req, &base, a.workers)?;
    let scores = blocker_scores(&reports);
    let result = OrdOut {
        base: SectorOut::new(&t, &base),
        reports: reports
            .iter()
            .map(|rep| OrdReportOut {
                deleted_row: rep.deleted_rows[0].0,
                new_rules: rep.new_rules.iter().map(|r| RuleOut::new(&t, req.negated, r)).collect(),
            })
            .collect(),
        blocker_scores: scores
            .iter()
            .map(|s| ScoreOut {
                row: s.row_id.0,
                rule_count: s.rule_count,
                total_support: s.total_support,
            })
            .collect(),
    };
    let config = SectorConfig {
        input: input_config(&a.input),
        target: a.target.clone(),
        negated: a.negated,
        min_support: a.min_support,
        seed: Some(a.seed),
    };
    let rt = runtime(a.output.reproducible, a.workers, started);
    match a.output.out_format {
        OutFormat::Json => write_json(
            a.output.out.as_deref(),
            &Document {
                command: "ord",
                config,
                table: Some(table_meta(&t)),
                runtime: rt,
                result,
            },
        ),
        OutFormat::Csv => write_csv_with_meta(
            a.output.out.as_deref(),
            &Document {
                command: "ord",
                config,
                table: Some(table_meta(&t)),
                runtime: rt,
                result: (),
            },
            |w| {
                let mut c = csv::Writer::from_writer(w);
                c.write_record(["row", "rule_count", "total_support"])?;
                for s in &result.blocker_scores {
                    c.serialize((s.row, s.rule_count, s.total_support))?;
                }
                c.flush()?;
                Ok(())
            },
        ),
    }
}

#[derive(Serialize)]
struct MrdConfig {
    #[serde(flatten)]
    sector: SectorConfig,
    delete_count: usize,
    runs: usize,
    blockers: String,
}

#[derive(Serialize)]
struct NewRuleOut {
    #[serde(flatten)]
    rule: RuleOut,
    sub_support: usize,
    confidence_floor: f64,
}

#[derive(Serialize)]
struct MrdOut {
    blocker_rows: Vec<usize>,
    deletion_sets: Vec<Vec<usize>>,
    base: SectorOut,
    new_rules: Vec<NewRuleOut>,
    estimate_confidence: f64,
}

fn cmd_mrd(a: &MrdArgs) -> CliResult<()> {
    let started = Instant::now();
    check_workers(a.workers)?;
    let t = load(&a.input)?;
    let req = request(&t, &a.target, a.min_support, a.negated)?;
    let blockers = match a.blockers {
        None => t.row_ids().iter().copied().collect(),
        Some(policy) => {
            let base = mine_sector(&t, &req)?;
            let reports = ord_scan(&t, &req, &base, a.workers)?;
            select_blockers(&blocker_scores(&reports), policy)
        }
    };
    let plan = RunPlan {
        blockers,
        delete_count: a.delete_count,
        runs: a.runs,
        seed: a.seed,
    };
    plan.validate()?;
    let out = mrd_run(&t, &req, &plan, a.workers, None)?;
    let new_rules: Vec<NewRuleOut> = out
        .aggregated_new
        .iter()
        .map(|r| {
            let s = out.sub_support.get(&r.antecedent).copied().unwrap_or(r.support);
            NewRuleOut {
                rule: RuleOut::new(&t, req.negated, r),
                sub_support: s,
                confidence_floor: confidence_floor(s, a.delete_count),
            }
        })
        .collect();
    let result = MrdOut {
        blocker_rows: plan.blockers.iter().map(|r| r.0).collect(),
        deletion_sets: out
            .runs
            .iter()
            .map(|rep| rep.deleted_rows.iter().map(|r| r.0).collect())
            .collect(),
        base: SectorOut::new(&t, &out.base),
        new_rules,
        estimate_confidence: estimate_confidence(t.n_rows(), a.delete_count),
    };
    let config = MrdConfig {
        sector: SectorConfig {
            input: input_config(&a.input),
            target: a.target.clone(),
            negated: a.negated,
            min_support: a.min_support,
            seed: Some(a.seed),
        },
        delete_count: a.delete_count,
        runs: a.runs,
        blockers: a.blockers.map_or("all".to_string(), |p| p.to_string()),
    };
    let rt = runtime(a.output.reproducible, a.workers, started);
    match a.output.out_format {
        OutFormat::Json => write_json(
            a.output.out.as_deref(),
            &Document {
                command: "mrd",
                config,
                table: Some(table_meta(&t)),
                runtime: rt,
                result,
            },
        ),
        OutFormat::Csv => {
            let floors: Vec<f64> = result.new_rules.iter().map(|r| r.confidence_floor).collect();
            let rules: Vec<RuleOut> = result.new_rules.into_iter().map(|r| r.rule).collect();
            write_csv_with_meta(
                a.output.out.as_deref(),
                &Document {
                    command: "mrd",
                    config,
                    table: Some(table_meta(&t)),
                    runtime: rt,
                    result: (),
                },
                |w| write_rules_csv(w, &rules, Some(&floors)),
            )
        }
    }
}

#[derive(Serialize)]
struct DeletionOut {
    delete_count: usize,
    runs: usize,
    blockers: String,
}

fn deletion_out(d: &Option<DeletionConfig>) -> Option<DeletionOut> {
    d.map(|d| DeletionOut {
        delete_count: d.delete_count,
        runs: d.runs,
        blockers: match d.blockers {
            BlockerSource::AllRows => "all".to_string(),
            BlockerSource::Scored(p) => p.to_string(),
        },
    })
}

#[derive(Serialize)]
struct RankConfig {
    #[serde(flatten)]
    input: InputConfig,
    target: String,
    min_support: usize,
    deletion: Option<DeletionOut>,
    seed: u64,
}

fn cmd_rank(a: &RankArgs) -> CliResult<()> {
    let started = Instant::now();
    check_workers(a.workers)?;
    let deletion = a.deletion.resolve()?;
    let t = load(&a.input)?;
    let req = request(&t, &a.target, a.min_support, false)?;
    let cfg = MiningConfig {
        min_support: a.min_support,
        deletion,
        seed: a.seed,
        workers: a.workers,
    };
    let report = rank_attributes(&t, req.target, &cfg)?;
    let config = RankConfig {
        input: input_config(&a.input),
        target: a.target.clone(),
        min_support: a.min_support,
        deletion: deletion_out(&deletion),
        seed: a.seed,
    };
    let rt = runtime(a.output.reproducible, a.workers, started);
    match a.output.out_format {
        OutFormat::Json => write_json(
            a.output.out.as_deref(),
            &Document {
                command: "rank",
                config,
                table: Some(table_meta(&t)),
                runtime: rt,
                result: report,
            },
        ),
        OutFormat::Csv => write_csv_with_meta(
            a.output.out.as_deref(),
            &Document {
                command: "rank",
                config,
                table: Some(table_meta(&t)),
                runtime: rt,
                result: (),
            },
            |w| report.write_csv(w),
        ),
    }
}

#[derive(Serialize)]
struct SynthConfig {
    study: Study,
    rows: usize,
    cols: usize,
    tables: usize,
    densities: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_levels: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    injected: Option<BTreeMap<&'static str, serde_json::Value>>,
    min_support: usize,
    deletion: Option<DeletionOut>,
    seed: u64,
}

fn one_based(cols: usize, c: usize, what: &str) -> CliResult<usize> {
    if c == 0 || c > cols {
        return Err(usage(format!("{what} {c} outside columns 1..{cols}")));
    }
    Ok(c - 1)
}

fn cmd_synth(a: &SynthArgs) -> CliResult<()> {
    let started = Instant::now();
    check_workers(a.workers)?;
    if a.densities.is_empty() {
        return Err(usage("--densities is empty"));
    }
    let deletion = a.deletion.resolve()?;
    let mining = MiningConfig {
        min_support: a.min_support,
        deletion,
        seed: a.seed,
        workers: a.workers,
    };
    let mut config = SynthConfig {
        study: a.study,
        rows: a.rows,
        cols: a.cols,
        tables: a.tables,
        densities: a.densities.clone(),
        noise_levels: None,
        injected: None,
        min_support: a.min_support,
        deletion: deletion_out(&deletion),
        seed: a.seed,
    };
    let path = a.out.as_deref();

    match a.study {
        Study::Table => {
            let params = SynthSpec::random(a.rows, a.cols, a.densities[0], a.seed);
            let t = random_table(&params)?;
            let mut w = open_out(path)?;
            t.write_csv(&mut w)?;
            w.flush().map_err(Error::from)?;
            Ok(())
        }
        Study::Density => {
            let study = DensityStudy {
                rows: a.rows,
                cols: a.cols,
                tables: a.tables,
                seed: a.seed,
                mining,
            };
            let summary = density_sweep(&study, &a.densities)?;
            let rt = runtime(a.reproducible, a.workers, started);
            match a.out_format {
                OutFormat::Json => write_json(
                    path,
                    &Document {
                        command: "synth",
                        config,
                        table: None,
                        runtime: rt,
                        result: summary,
                    },
                ),
                OutFormat::Csv => write_csv_with_meta(
                    path,
                    &Document {
                        command: "synth",
                        config,
                        table: None,
                        runtime: rt,
                        result: (),
                    },
                    |w| write_summary_csv(&summary, w),
                ),
            }
        }
        Study::Noise => {
            let antecedent: AttrSet = a
                .antecedent
                .iter()
                .map(|&c| one_based(a.cols, c, "antecedent column"))
                .collect::<CliResult<_>>()?;
            let target = one_based(a.cols, a.target, "target column")?;
            if antecedent.contains(target) {
                return Err(usage("target is part of the antecedent"));
            }
            let plan = match deletion {
                None => RecoveryPlan::FlippedRows,
                Some(d) => RecoveryPlan::Random {
                    delete_count: d.delete_count,
                    runs: d.runs,
                },
            };
            let study = NoiseStudy {
                rows: a.rows,
                cols: a.cols,
                density: a.densities[0],
                antecedent: antecedent.clone(),
                target,
                coverage: a.coverage,
                trials: a.tables,
                seed: a.seed,
                plan,
                mining: MiningConfig { deletion: None, ..mining },
            };
            config.noise_levels = Some(a.noise_levels.clone());
            config.injected = Some(BTreeMap::from([
                ("antecedent", serde_json::json!(a.antecedent)),
                ("target", serde_json::json!(a.target)),
                ("coverage", serde_json::json!(a.coverage)),
            ]));
            let summary = noise_sweep(&study, &a.noise_levels)?;
            let rt = runtime(a.reproducible, a.workers, started);
            match a.out_format {
                OutFormat::Json => write_json(
                    path,
                    &Document {
                        command: "synth",
                        config,
                        table: None,
                        runtime: rt,
                        result: summary,
                    },
                ),
                OutFormat::Csv => write_csv_with_meta(
                    path,
                    &Document {
                        command: "synth",
                        config,
                        table: None,
                        runtime: rt,
                        result: (),
                    },
                    |w| write_noise_csv(&summary, w),
                ),
            }
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let outcome = match &cli.command {
        Command::Mine(a) => cmd_mine(a, false),
        Command::Oracle(a) => cmd_mine(a, true),
        Command::Ord(a) => cmd_ord(a),
        Command::Mrd(a) => cmd_mrd(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("rulebasis: {}", f.msg);
            f.code
        }
    }
}
