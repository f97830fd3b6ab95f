//! Command-line front end.
//!
//! Every command is a pure function of its flags: no timestamps and no
//! unseeded randomness end up in the outputs.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use crate::analytics::{ablation_transform, precision_report, sampled_optimal_weight, AblationMode};
use crate::baselines::{run_baseline, Baseline, ReinforceConfig};
use crate::bench::{rank_by, synth_benchmark, BenchmarkTable, LoadOptions, MetricSignal, SynthSpec};
use crate::bo::{BoConfig, SearchTrace};
use crate::ensemble::{combine, spearman, WeightVector};
use crate::error::Error;
use crate::exploit::{hybrid_search, HybridConfig, ProposalResult};

#[derive(Debug, Parser)]
#[command(name = "nasbo", version, about = "Training-free metric ensembles + BO for tabular NAS")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// BO over ensemble weights followed by greedy exploitation.
    Search(RunArgs),
    /// Query-based baselines (rs, rea, reinforce).
    Baseline(RunArgs),
    /// Precision@T reports and greedy curves for metrics and learned weights.
    Analyze(RunArgs),
    /// Write a synthetic benchmark table.
    Synth(SynthArgs),
}

/// Flags shared by search, baseline and analyze. All are optional here so that a
/// config file can supply them; flags win on conflict.
#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunArgs {
    /// TOML file whose keys mirror these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Benchmark table (.csv or .json).
    #[arg(long, conflicts_with = "synth_spec")]
    pub benchmark: Option<PathBuf>,
    /// Synthetic benchmark spec (.toml or .json).
    #[arg(long)]
    pub synth_spec: Option<PathBuf>,
    /// Search budget T (distinct objective queries); Precision@T for analyze.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Seeds as `A..B` (inclusive), a comma list, or a mix.
    #[arg(long)]
    pub seeds: Option<String>,
    /// UCB exploration constant.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Baseline method: rs, rea or reinforce.
    #[arg(long)]
    pub method: Option<String>,
    /// Restrict the ensemble to these metric columns.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<String>>,
    /// Metric preprocessing: normalized (default), raw, rank_uniform, rank_normal.
    #[arg(long)]
    pub ablation: Option<String>,
    /// Run BO for exactly this many forced-fresh rounds before exploiting.
    #[arg(long)]
    pub fixed_t0: Option<usize>,
    /// Extend greedy search until T distinct queries are spent.
    #[arg(long)]
    pub spend_leftover: bool,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// The f_val column is a loss (lower is better).
    #[arg(long)]
    pub lower_is_better: bool,
    /// Metric columns that are not applicable for this task.
    #[arg(long, value_delimiter = ',')]
    pub unavailable: Option<Vec<String>>,
    /// REINFORCE learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Candidate weight vectors sampled per acquisition step.
    #[arg(long)]
    pub candidates: Option<usize>,
    /// Learned weights to analyze: `{"weights": [...]}` or a search trace.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Random weights sampled for the optimal-precision reference.
    #[arg(long)]
    pub ref_samples: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Spec file; `--seed`/`--n` override its values.
    #[arg(long)]
    pub synth_spec: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

pub fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Search(args) => cmd_search(&RunConfig::resolve(args)?),
        Command::Baseline(args) => cmd_baseline(&RunConfig::resolve(args)?),
        Command::Analyze(args) => cmd_analyze(&RunConfig::resolve(args)?),
        Command::Synth(args) => cmd_synth(&args),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BenchmarkSource {
    File(PathBuf),
    Synth(PathBuf),
}

/// Flags after merging the optional config file and applying defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: BenchmarkSource,
    pub budget: usize,
    pub seeds: Vec<u64>,
    pub kappa: f64,
    pub method: Option<String>,
    pub metrics: Option<Vec<String>>,
    pub ablation: AblationMode,
    pub fixed_t0: Option<usize>,
    pub spend_leftover: bool,
    pub out: PathBuf,
    pub lower_is_better: bool,
    pub unavailable: Vec<String>,
    pub lr: f64,
    pub candidates: usize,
    pub weights: Option<PathBuf>,
    pub ref_samples: usize,
}

impl RunConfig {
    pub fn resolve(flags: RunArgs) -> CliResult<Self> {
        let file = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                toml::from_str::<RunArgs>(&text)
                    .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?
            }
            None => RunArgs::default(),
        };
        let source = match (&flags.benchmark, &flags.synth_spec, &file.benchmark, &file.synth_spec) {
            (Some(_), Some(_), _, _) | (None, None, Some(_), Some(_)) => {
                return Err(CliError::Usage("give exactly one of --benchmark or --synth-spec".into()))
            }
            (Some(b), None, _, _) | (None, None, Some(b), None) => BenchmarkSource::File(b.clone()),
            (None, Some(s), _, _) | (None, None, None, Some(s)) => BenchmarkSource::Synth(s.clone()),
            (None, None, None, None) => {
                return Err(CliError::Usage("one of --benchmark or --synth-spec is required".into()))
            }
        };
        let budget = flags
            .budget
            .or(file.budget)
            .ok_or_else(|| CliError::Usage("--budget is required".into()))?;
        if budget == 0 {
            return Err(CliError::Usage("--budget must be at least 1".into()));
        }
        let seeds = parse_seeds(flags.seeds.as_deref().or(file.seeds.as_deref()).unwrap_or("0"))?;
        let ablation = parse_ablation(flags.ablation.as_deref().or(file.ablation.as_deref()).unwrap_or("normalized"), seeds[0])?;
        Ok(RunConfig {
            source,
            budget,
            seeds,
            kappa: flags.kappa.or(file.kappa).unwrap_or(2.0),
            method: flags.method.or(file.method),
            metrics: flags.metrics.or(file.metrics),
            ablation,
            fixed_t0: flags.fixed_t0.or(file.fixed_t0),
            spend_leftover: flags.spend_leftover || file.spend_leftover,
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            lower_is_better: flags.lower_is_better || file.lower_is_better,
            unavailable: flags.unavailable.or(file.unavailable).unwrap_or_default(),
            lr: flags.lr.or(file.lr).unwrap_or(0.01),
            candidates: flags.candidates.or(file.candidates).unwrap_or(4096),
            weights: flags.weights.or(file.weights),
            ref_samples: flags.ref_samples.or(file.ref_samples).unwrap_or(1000),
        })
    }

    /// Loads or generates the table, restricts metrics, and applies preprocessing.
    pub fn load_table(&self) -> CliResult<BenchmarkTable> {
        let raw = match &self.source {
            BenchmarkSource::File(path) => {
                let opts = LoadOptions {
                    objective_lower_is_better: self.lower_is_better,
                    unavailable_metrics: self.unavailable.clone(),
                    ..Default::default()
                };
                BenchmarkTable::load_path(path, &opts)?
            }
            BenchmarkSource::Synth(path) => SynthFile::read(path)?.generate(None, None)?,
        };
        let raw = match &self.metrics {
            Some(names) => raw.select_metrics(names)?,
            None => raw,
        };
        Ok(ablation_transform(&raw, self.ablation))
    }
}

/// Parses `A..B` (inclusive), comma lists, or both mixed.
pub fn parse_seeds(spec: &str) -> CliResult<Vec<u64>> {
    let bad = || CliError::Usage(format!("invalid --seeds {spec:?}"));
    let mut seeds = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if b < a {
                return Err(bad());
            }
            seeds.extend(a..=b);
        } else {
            seeds.push(part.parse().map_err(|_| bad())?);
        }
    }
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn parse_ablation(name: &str, seed: u64) -> CliResult<AblationMode> {
    match name {
        "normalized" | "none" => Ok(AblationMode::Normalized),
        "raw" => Ok(AblationMode::Raw),
        "rank_uniform" => Ok(AblationMode::RankUniform),
        "rank_normal" => Ok(AblationMode::RankNormal { seed }),
        other => Err(CliError::Usage(format!("unknown --ablation {other:?}"))),
    }
}

/// On-disk synthetic benchmark description.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthFile {
    pub seed: u64,
    pub n: usize,
    pub metrics: Vec<MetricSignal>,
    pub genes: Option<usize>,
    pub cardinality: Option<usize>,
    pub landscape_noise: Option<f64>,
}

impl SynthFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::Runtime(format!("synth spec {}: {e}", path.display())))
    }

    pub fn spec(&self) -> SynthSpec {
        let mut spec = SynthSpec::new(self.metrics.clone());
        if let Some(g) = self.genes {
            spec.genes = g;
        }
        if let Some(c) = self.cardinality {
            spec.cardinality = c;
        }
        if let Some(l) = self.landscape_noise {
            spec.landscape_noise = l;
        }
        spec
    }

    pub fn generate(&self, seed: Option<u64>, n: Option<usize>) -> CliResult<BenchmarkTable> {
        let spec = self.spec();
        Ok(synth_benchmark(seed.unwrap_or(self.seed), n.unwrap_or(self.n), spec.metrics.len(), &spec)?)
    }
}

/// Writes through a temp file and renames, so readers never see partial output.
fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        body(&mut w)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

pub const SUMMARY_HEADER: [&str; 14] = [
    "task",
    "method",
    "seed",
    "budget",
    "t0",
    "proposed_arch",
    "proposed_f",
    "proposed_f_std",
    "proposed_rank",
    "proposed_rank_std",
    "proposed_f_test",
    "f_test_available",
    "distinct_queries",
    "source",
];

fn write_summary(path: &Path, table: &BenchmarkTable, budget: usize, runs: &[(u64, ProposalResult)]) -> CliResult<()> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(SUMMARY_HEADER)?;
        for (seed, r) in runs {
            let test = table.test_objective(r.proposed_arch).filter(|v| v.is_finite());
            csv.write_record([
                table.name().to_string(),
                r.method.clone(),
                seed.to_string(),
                budget.to_string(),
                r.t0.to_string(),
                table.arch_id(r.proposed_arch).to_string(),
                table.reported_objective(r.proposed_arch).to_string(),
                String::new(),
                r.proposed_rank.to_string(),
                String::new(),
                test.map(|v| v.to_string()).unwrap_or_default(),
                test.is_some().to_string(),
                r.total_distinct_queries.to_string(),
                r.source.as_str().to_string(),
            ])?;
        }
        let f: Vec<f64> = runs.iter().map(|(_, r)| table.reported_objective(r.proposed_arch)).collect();
        let rank: Vec<f64> = runs.iter().map(|(_, r)| r.proposed_rank as f64).collect();
        let t0: Vec<f64> = runs.iter().map(|(_, r)| r.t0 as f64).collect();
        let q: Vec<f64> = runs.iter().map(|(_, r)| r.total_distinct_queries as f64).collect();
        let tests: Option<Vec<f64>> =
            runs.iter().map(|(_, r)| table.test_objective(r.proposed_arch).filter(|v| v.is_finite())).collect();
        let (fm, fs) = mean_std(&f);
        let (rm, rs) = mean_std(&rank);
        csv.write_record([
            table.name().to_string(),
            runs.first().map(|(_, r)| r.method.clone()).unwrap_or_default(),
            "aggregate".to_string(),
            budget.to_string(),
            mean_std(&t0).0.to_string(),
            String::new(),
            fm.to_string(),
            fs.to_string(),
            rm.to_string(),
            rs.to_string(),
            tests.as_deref().map(|t| mean_std(t).0.to_string()).unwrap_or_default(),
            tests.is_some().to_string(),
            mean_std(&q).0.to_string(),
            String::new(),
        ])?;
        csv.flush()?;
        Ok(())
    })
}

/// `(method, seed, incumbent (arch, f) per query)`.
type CurveRow = (String, String, Vec<(usize, f64)>);

fn write_curves(path: &Path, table: &BenchmarkTable, rows: &[CurveRow]) -> CliResult<()> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["method", "seed", "queries", "best_f", "best_rank"])?;
        for (method, seed, curve) in rows {
            for (i, &(arch, _)) in curve.iter().enumerate() {
                csv.write_record([
                    method.clone(),
                    seed.clone(),
                    (i + 1).to_string(),
                    table.reported_objective(arch).to_string(),
                    table.objective_rank(arch).to_string(),
                ])?;
            }
        }
        csv.flush()?;
        Ok(())
    })
}

fn write_trace(
    path: &Path,
    table: &BenchmarkTable,
    trace: Option<&SearchTrace>,
    result: &ProposalResult,
) -> CliResult<()> {
    write_atomic(path, |w| {
        match trace {
            Some(trace) => trace.write_jsonl(table, &mut *w)?,
            None => {
                for (t, &arch) in result.queries.iter().enumerate() {
                    let line = serde_json::json!({
                        "t": t + 1,
                        "arch_id": table.arch_id(arch),
                        "f": table.reported_objective(arch),
                        "fresh": true,
                    });
                    writeln!(w, "{line}")?;
                }
            }
        }
        writeln!(w, "{}", result.to_json(table))?;
        Ok(())
    })
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("output directory {}: {e}", dir.display())))
}

pub fn cmd_search(cfg: &RunConfig) -> CliResult<()> {
    let table = cfg.load_table()?;
    prepare_out(&cfg.out)?;
    let runs: Vec<(u64, ProposalResult, SearchTrace)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let bo = BoConfig { kappa: cfg.kappa, candidate_count: cfg.candidates, ..BoConfig::new(cfg.budget, seed) };
            let hybrid = HybridConfig { bo, spend_leftover: cfg.spend_leftover, fixed_t0: cfg.fixed_t0 };
            let (result, trace) = hybrid_search(&table, &hybrid)?;
            write_trace(&cfg.out.join(format!("trace_seed{seed}.jsonl")), &table, Some(&trace), &result)?;
            Ok((seed, result, trace))
        })
        .collect::<CliResult<_>>()?;
    let summary: Vec<(u64, ProposalResult)> = runs.iter().map(|(s, r, _)| (*s, r.clone())).collect();
    let curves: Vec<_> = runs.iter().map(|(s, r, _)| (r.method.clone(), s.to_string(), r.incumbent_curve.clone())).collect();
    write_curves(&cfg.out.join("curves.csv"), &table, &curves)?;
    write_summary(&cfg.out.join("summary.csv"), &table, cfg.budget, &summary)?;
    print_aggregate(&table, &summary);
    Ok(())
}

pub fn cmd_baseline(cfg: &RunConfig) -> CliResult<()> {
    let method: Baseline = cfg
        .method
        .as_deref()
        .ok_or_else(|| CliError::Usage("--method is required for baseline".into()))?
        .parse()
        .map_err(|e: Error| CliError::Usage(e.to_string()))?;
    if method == Baseline::Rea && cfg.budget < 3 {
        return Err(CliError::Runtime(format!("rea needs --budget >= 3 for its T/3 pool, got {}", cfg.budget)));
    }
    let table = cfg.load_table()?;
    prepare_out(&cfg.out)?;
    let reinforce = ReinforceConfig { lr: cfg.lr, ..Default::default() };
    let runs: Vec<(u64, ProposalResult)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let result = run_baseline(&table, method, cfg.budget, seed, reinforce)?;
            write_trace(&cfg.out.join(format!("trace_{}_seed{seed}.jsonl", method.name())), &table, None, &result)?;
            Ok((seed, result))
        })
        .collect::<CliResult<_>>()?;
    let curves: Vec<_> = runs.iter().map(|(s, r)| (r.method.clone(), s.to_string(), r.incumbent_curve.clone())).collect();
    write_curves(&cfg.out.join("curves.csv"), &table, &curves)?;
    write_summary(&cfg.out.join("summary.csv"), &table, cfg.budget, &runs)?;
    print_aggregate(&table, &runs);
    Ok(())
}

fn print_aggregate(table: &BenchmarkTable, runs: &[(u64, ProposalResult)]) {
    let f: Vec<f64> = runs.iter().map(|(_, r)| table.reported_objective(r.proposed_arch)).collect();
    let rank: Vec<f64> = runs.iter().map(|(_, r)| r.proposed_rank as f64).collect();
    let (fm, fs) = mean_std(&f);
    let (rm, rs) = mean_std(&rank);
    println!("{}: {} runs, f = {fm:.4} ± {fs:.4}, rank = {rm:.2} ± {rs:.2}", table.name(), runs.len());
}

fn read_weights(path: &Path) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let from_value = |v: &serde_json::Value| -> Option<Vec<f64>> {
        let arr = v.get("weights").or_else(|| v.get("best_weight"))?.as_array()?;
        arr.iter().map(|x| x.as_f64()).collect()
    };
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(&text) {
        if let Some(w) = from_value(&v) {
            return Ok(w);
        }
    }
    text.lines()
        .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .find_map(|v| from_value(&v))
        .ok_or_else(|| CliError::Runtime(format!("no weights found in {}", path.display())))
}

pub const PRECISION_HEADER: [&str; 7] = ["task", "metric_or_method", "T", "precision", "expected_rank", "spearman", "pearson"];

pub fn cmd_analyze(cfg: &RunConfig) -> CliResult<()> {
    let table = cfg.load_table()?;
    let learned = match &cfg.weights {
        Some(path) if !path.exists() => {
            return Err(CliError::Runtime(format!("weight file {} not found", path.display())));
        }
        Some(path) => Some(WeightVector::new(read_weights(path)?)),
        None => None,
    };
    let t = cfg.budget.min(table.arch_count());
    prepare_out(&cfg.out)?;
    let m = table.available_count();
    let names = table.available_names();
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    for (i, name) in names.iter().enumerate() {
        rows.push((name.to_string(), combine(&table, &WeightVector::one_hot(m, i, 1.0))?.scores));
    }
    rows.push(("average".into(), combine(&table, &WeightVector::uniform(m))?.scores));
    let (opt_w, _) = sampled_optimal_weight(&table, t, cfg.ref_samples, cfg.seeds[0])?;
    rows.push(("optimal_sampled".into(), combine(&table, &opt_w)?.scores));
    if let Some(w) = &learned {
        rows.push(("learned".into(), combine(&table, w)?.scores));
    }
    rows.push(("objective".into(), table.objective().to_vec()));

    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    write_atomic(&cfg.out.join("precision.csv"), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(PRECISION_HEADER)?;
        for (name, scores) in &rows {
            let rep = precision_report(&table, scores, t)?;
            csv.write_record([
                table.name().to_string(),
                name.clone(),
                t.to_string(),
                rep.precision.to_string(),
                opt(rep.expected_best_rank),
                opt(rep.spearman),
                opt(rep.pearson),
            ])?;
        }
        csv.flush()?;
        Ok(())
    })?;

    let mut curves = Vec::new();
    write_atomic(&cfg.out.join("table1.csv"), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["task", "metric_or_method", "T", "top1_arch", "top1_rank", "best_rank_in_top_T"])?;
        for (name, scores) in &rows {
            let ranking = rank_by(scores)?;
            let top = ranking.top(t);
            let best = top.iter().map(|&a| table.objective_rank(a)).min().expect("T >= 1");
            csv.write_record([
                table.name().to_string(),
                name.clone(),
                t.to_string(),
                table.arch_id(top[0]).to_string(),
                table.objective_rank(top[0]).to_string(),
                best.to_string(),
            ])?;
            let mut incumbent: Option<usize> = None;
            let curve: Vec<(usize, f64)> = top
                .iter()
                .map(|&a| {
                    if incumbent.is_none_or(|b| table.f(a) > table.f(b)) {
                        incumbent = Some(a);
                    }
                    let b = incumbent.expect("set above");
                    (b, table.f(b))
                })
                .collect();
            curves.push((name.clone(), String::new(), curve));
        }
        csv.flush()?;
        Ok(())
    })?;
    write_curves(&cfg.out.join("curves.csv"), &table, &curves)?;
    println!("{}: wrote precision.csv, table1.csv, curves.csv (T = {t})", table.name());
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let table = match &args.synth_spec {
        Some(path) => SynthFile::read(path)?.generate(args.seed, args.n)?,
        None => {
            let m = args.m.ok_or_else(|| CliError::Usage("--m or --synth-spec is required".into()))?;
            let n = args.n.unwrap_or(4096);
            synth_benchmark(args.seed.unwrap_or(0), n, m, &SynthSpec::graded(m))?
        }
    };
    prepare_out(&args.out)?;
    let path = args.out.join(format!("{}.csv", table.name()));
    write_atomic(&path, |w| Ok(table.write_csv(w)?))?;
    println!("wrote {} ({} architectures)", path.display(), table.arch_count());
    for j in table.available_columns() {
        let rho = spearman(table.metric_column(j), table.objective())
            .map(|r| format!("{r:.4}"))
            .unwrap_or_else(|_| "undefined".into());
        println!("{},{}", table.metric_names()[j], rho);
    }
    Ok(())
}
