//! Tabular benchmark data model.
//!
//! A [`BenchmarkTable`] holds a fixed pool of architectures together with
//! precomputed training-free metric scores and the objective value of each
//! architecture. Objectives are always stored so that larger is better; loss
//! style objectives are negated on load and restored on save.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

const ARCH_ID: &str = "arch_id";
const GENOME: &str = "genome";
const F_VAL: &str = "f_val";
const F_TEST: &str = "f_test";
const MISSING: &str = "na";

/// Fixed-length categorical encoding of an architecture.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Genome(pub Vec<u8>);

impl Genome {
    pub fn genes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of positions at which two genomes differ.
    pub fn hamming(&self, other: &Genome) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
            + self.0.len().abs_diff(other.0.len())
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

impl FromStr for Genome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .split('-')
            .map(|g| g.trim().parse::<u8>().map_err(|e| format!("bad gene {g:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Genome)
    }
}

/// Ranks of a score vector: `rank[a]` is 1 for the best architecture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ranking {
    rank: Vec<usize>,
    order: Vec<usize>,
}

impl Ranking {
    /// 1-based rank of every architecture.
    pub fn ranks(&self) -> &[usize] {
        &self.rank
    }

    pub fn rank_of(&self, arch: usize) -> usize {
        self.rank[arch]
    }

    /// Architecture indices sorted from rank 1 downwards.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn top(&self, k: usize) -> &[usize] {
        &self.order[..k.min(self.order.len())]
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    /// Builds a ranking from explicit 1-based ranks.
    pub fn from_ranks(rank: Vec<usize>) -> Result<Self> {
        let n = rank.len();
        let mut order = vec![usize::MAX; n];
        for (a, &r) in rank.iter().enumerate() {
            if r == 0 || r > n || order[r - 1] != usize::MAX {
                return Err(Error::OutOfRange("rank", format!("{rank:?} is not a permutation of 1..{n}")));
            }
            order[r - 1] = a;
        }
        Ok(Ranking { rank, order })
    }
}

/// Ranks scores with rank 1 for the largest value. Ties go to the lower index.
pub fn rank_by(scores: &[f64]) -> Result<Ranking> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::OutOfRange("score", format!("non-finite value at index {i}")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut rank = vec![0; scores.len()];
    for (pos, &a) in order.iter().enumerate() {
        rank[a] = pos + 1;
    }
    Ok(Ranking { rank, order })
}

/// Loader configuration.
#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// When false the objective is a loss and gets negated on load.
    pub objective_lower_is_better: bool,
    /// Metric columns to ignore; `na` cells are only legal in these.
    pub unavailable_metrics: Vec<String>,
    /// Shared gene cardinality; inferred per gene from the data when absent.
    pub gene_cardinality: Option<usize>,
    /// Task label; defaults to the file stem.
    pub name: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

/// Raw pieces of a table, validated by [`BenchmarkTable::from_parts`].
#[derive(Clone, Debug, Default)]
pub struct TableParts {
    pub name: String,
    pub arch_ids: Vec<String>,
    pub metric_names: Vec<String>,
    /// One column per metric, each of length N. Unavailable columns may hold NaN.
    pub metrics: Vec<Vec<f64>>,
    pub available: Vec<bool>,
    /// Objective in larger-is-better orientation.
    pub objective: Vec<f64>,
    pub objective_higher_is_better: bool,
    pub genomes: Option<Vec<Genome>>,
    pub gene_cardinality: Option<Vec<usize>>,
    pub test_objective: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkTable {
    name: String,
    arch_ids: Vec<String>,
    metric_names: Vec<String>,
    metrics: Vec<Vec<f64>>,
    available: Vec<bool>,
    objective: Vec<f64>,
    objective_higher_is_better: bool,
    genomes: Option<Vec<Genome>>,
    gene_cardinality: Option<Vec<usize>>,
    test_objective: Option<Vec<f64>>,
    objective_ranking: Ranking,
}

impl BenchmarkTable {
    pub fn from_parts(parts: TableParts) -> Result<Self> {
        let TableParts {
            name,
            arch_ids,
            metric_names,
            metrics,
            available,
            objective,
            objective_higher_is_better,
            genomes,
            gene_cardinality,
            test_objective,
        } = parts;
        let n = arch_ids.len();
        if n == 0 {
            return Err(Error::InvalidTable("no architectures".into()));
        }
        if objective.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: objective.len() });
        }
        if metric_names.len() != metrics.len() || available.len() != metrics.len() {
            return Err(Error::InvalidTable("metric names, columns and availability disagree".into()));
        }
        let mut seen = HashSet::new();
        for name in &metric_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidTable(format!("duplicate metric name {name:?}")));
            }
        }
        let mut seen = HashSet::new();
        for id in &arch_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateArch(id.clone()));
            }
        }
        for (j, col) in metrics.iter().enumerate() {
            if col.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: col.len() });
            }
            if available[j] {
                if let Some(a) = col.iter().position(|v| !v.is_finite()) {
                    return Err(Error::InvalidTable(format!(
                        "missing value in available metric {:?} for arch {:?}",
                        metric_names[j], arch_ids[a]
                    )));
                }
            }
        }
        if !available.iter().any(|&a| a) {
            return Err(Error::NoMetrics);
        }
        if let Some(a) = objective.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonNumericObjective { arch: arch_ids[a].clone(), value: objective[a].to_string() });
        }
        if let Some(t) = &test_objective {
            if t.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: t.len() });
            }
        }
        let gene_cardinality = match &genomes {
            None => None,
            Some(gs) => {
                if gs.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: gs.len() });
                }
                let len = gs[0].len();
                if gs.iter().any(|g| g.len() != len) {
                    return Err(Error::InvalidTable("genomes differ in length".into()));
                }
                let inferred: Vec<usize> = (0..len)
                    .map(|i| gs.iter().map(|g| g.0[i] as usize + 1).max().unwrap_or(1))
                    .collect();
                let card = gene_cardinality.unwrap_or_else(|| inferred.clone());
                if card.len() != len || card.iter().zip(&inferred).any(|(c, i)| i > c) {
                    return Err(Error::InvalidTable("gene value exceeds declared cardinality".into()));
                }
                Some(card)
            }
        };
        let objective_ranking = rank_by(&objective)?;
        Ok(BenchmarkTable {
            name,
            arch_ids,
            metric_names,
            metrics,
            available,
            objective,
            objective_higher_is_better,
            genomes,
            gene_cardinality,
            test_objective,
            objective_ranking,
        })
    }

    pub fn into_parts(self) -> TableParts {
        TableParts {
            name: self.name,
            arch_ids: self.arch_ids,
            metric_names: self.metric_names,
            metrics: self.metrics,
            available: self.available,
            objective: self.objective,
            objective_higher_is_better: self.objective_higher_is_better,
            genomes: self.genomes,
            gene_cardinality: self.gene_cardinality,
            test_objective: self.test_objective,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arch_count(&self) -> usize {
        self.arch_ids.len()
    }

    pub fn arch_id(&self, arch: usize) -> &str {
        &self.arch_ids[arch]
    }

    pub fn arch_ids(&self) -> &[String] {
        &self.arch_ids
    }

    pub fn metric_names(&self) -> &[String] {
        &self.metric_names
    }

    pub fn metric_column(&self, j: usize) -> &[f64] {
        &self.metrics[j]
    }

    pub fn is_available(&self, j: usize) -> bool {
        self.available[j]
    }

    /// Indices of the metric columns that take part in combinations.
    pub fn available_columns(&self) -> Vec<usize> {
        (0..self.metrics.len()).filter(|&j| self.available[j]).collect()
    }

    pub fn available_count(&self) -> usize {
        self.available.iter().filter(|&&a| a).count()
    }

    pub fn available_names(&self) -> Vec<&str> {
        self.available_columns().into_iter().map(|j| self.metric_names[j].as_str()).collect()
    }

    /// Objective values, larger is better.
    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn f(&self, arch: usize) -> f64 {
        self.objective[arch]
    }

    pub fn objective_higher_is_better(&self) -> bool {
        self.objective_higher_is_better
    }

    pub fn objective_ranking(&self) -> &Ranking {
        &self.objective_ranking
    }

    /// Rank of an architecture under the objective (1 = global optimum).
    pub fn objective_rank(&self, arch: usize) -> usize {
        self.objective_ranking.rank_of(arch)
    }

    /// Test objective in the file's original orientation.
    pub fn test_objective(&self, arch: usize) -> Option<f64> {
        self.test_objective.as_ref().map(|t| t[arch])
    }

    /// Objective in the file's original orientation.
    pub fn reported_objective(&self, arch: usize) -> f64 {
        if self.objective_higher_is_better {
            self.objective[arch]
        } else {
            -self.objective[arch]
        }
    }

    pub fn genomes(&self) -> Option<&[Genome]> {
        self.genomes.as_deref()
    }

    pub fn gene_cardinality(&self) -> Option<&[usize]> {
        self.gene_cardinality.as_deref()
    }

    /// Restricts the available metrics to the named subset.
    pub fn select_metrics<S: AsRef<str>>(mut self, names: &[S]) -> Result<Self> {
        let mut keep = vec![false; self.metric_names.len()];
        for name in names {
            let name = name.as_ref();
            let j = self
                .metric_names
                .iter()
                .position(|m| m == name)
                .ok_or_else(|| Error::UnknownMetric(name.to_string()))?;
            if !self.available[j] {
                return Err(Error::UnknownMetric(format!("{name} (unavailable in this table)")));
            }
            keep[j] = true;
        }
        if !keep.iter().any(|&k| k) {
            return Err(Error::NoMetrics);
        }
        self.available = keep;
        Ok(self)
    }

    /// Replaces the available metric columns through `f`, leaving the rest untouched.
    pub fn map_available_columns(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let mut out = self.clone();
        for j in self.available_columns() {
            out.metrics[j] = f(&self.metrics[j]);
        }
        out
    }

    pub fn load(path: &Path, format: Format, options: &LoadOptions) -> Result<Self> {
        match format {
            Format::Csv => load_csv(path, options),
            Format::Json => load_json(path, options),
        }
    }

    /// Loads a table, picking the format from the file extension.
    pub fn load_path(path: &Path, options: &LoadOptions) -> Result<Self> {
        let format = Format::from_path(path).ok_or_else(|| Error::Malformed {
            path: path.to_path_buf(),
            reason: "unknown extension, expected .csv or .json".into(),
        })?;
        Self::load(path, format, options)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = BufWriter::new(File::create(path)?);
        self.write_csv(file)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![ARCH_ID.to_string(), GENOME.to_string()];
        header.extend(self.metric_names.iter().cloned());
        header.push(F_VAL.into());
        if self.test_objective.is_some() {
            header.push(F_TEST.into());
        }
        w.write_record(&header)?;
        for a in 0..self.arch_count() {
            let mut row = vec![self.arch_ids[a].clone()];
            row.push(self.genomes.as_ref().map(|g| g[a].to_string()).unwrap_or_default());
            for col in &self.metrics {
                row.push(fmt_cell(col[a]));
            }
            row.push(self.reported_objective(a).to_string());
            if let Some(t) = &self.test_objective {
                row.push(fmt_cell(t[a]));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let mut obj = Map::new();
        obj.insert(ARCH_ID.into(), Value::from(self.arch_ids.clone()));
        if let Some(g) = &self.genomes {
            obj.insert(GENOME.into(), Value::from(g.iter().map(|g| g.to_string()).collect::<Vec<_>>()));
        }
        for (name, col) in self.metric_names.iter().zip(&self.metrics) {
            obj.insert(name.clone(), Value::Array(col.iter().map(|&v| json_cell(v)).collect()));
        }
        let f: Vec<Value> = (0..self.arch_count()).map(|a| json_cell(self.reported_objective(a))).collect();
        obj.insert(F_VAL.into(), Value::Array(f));
        if let Some(t) = &self.test_objective {
            obj.insert(F_TEST.into(), Value::Array(t.iter().map(|&v| json_cell(v)).collect()));
        }
        let file = BufWriter::new(File::create(path)?);
        serde_json::to_writer(file, &Value::Object(obj))?;
        Ok(())
    }
}

fn fmt_cell(v: f64) -> String {
    if v.is_nan() {
        MISSING.to_string()
    } else {
        v.to_string()
    }
}

fn json_cell(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or_else(|| Value::String(MISSING.into()))
}

/// Column-oriented intermediate shared by both file formats.
struct RawColumns {
    arch_ids: Vec<String>,
    genomes: Option<Vec<String>>,
    metrics: Vec<(String, Vec<String>)>,
    f_val: Vec<String>,
    f_test: Option<Vec<String>>,
}

fn build_table(path: &Path, raw: RawColumns, options: &LoadOptions) -> Result<BenchmarkTable> {
    let malformed = |reason: String| Error::Malformed { path: path.to_path_buf(), reason };
    let n = raw.arch_ids.len();
    for name in &options.unavailable_metrics {
        if !raw.metrics.iter().any(|(m, _)| m == name) {
            return Err(Error::UnknownMetric(name.clone()));
        }
    }
    let mut metric_names = Vec::with_capacity(raw.metrics.len());
    let mut metrics = Vec::with_capacity(raw.metrics.len());
    let mut available = Vec::with_capacity(raw.metrics.len());
    for (name, cells) in raw.metrics {
        let avail = !options.unavailable_metrics.contains(&name);
        let mut col = Vec::with_capacity(n);
        for (a, cell) in cells.iter().enumerate() {
            let cell = cell.trim();
            let v = if cell.eq_ignore_ascii_case(MISSING) || cell.is_empty() {
                if avail {
                    return Err(Error::InvalidTable(format!(
                        "missing value in available metric {name:?} for arch {:?}",
                        raw.arch_ids[a]
                    )));
                }
                f64::NAN
            } else {
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() || !avail => v,
                    _ if !avail => f64::NAN,
                    _ => return Err(malformed(format!("bad value {cell:?} in metric {name:?}"))),
                }
            };
            col.push(v);
        }
        metric_names.push(name);
        metrics.push(col);
        available.push(avail);
    }
    let sign = if options.objective_lower_is_better { -1.0 } else { 1.0 };
    let mut objective = Vec::with_capacity(n);
    for (a, cell) in raw.f_val.iter().enumerate() {
        match cell.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => objective.push(sign * v),
            _ => return Err(Error::NonNumericObjective { arch: raw.arch_ids[a].clone(), value: cell.clone() }),
        }
    }
    let test_objective = match raw.f_test {
        None => None,
        Some(cells) => Some(
            cells
                .iter()
                .map(|c| {
                    let c = c.trim();
                    if c.eq_ignore_ascii_case(MISSING) || c.is_empty() {
                        Ok(f64::NAN)
                    } else {
                        c.parse::<f64>().map_err(|_| malformed(format!("bad f_test value {c:?}")))
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    let genomes = match raw.genomes {
        Some(cells) if cells.iter().all(|c| !c.trim().is_empty()) => Some(
            cells
                .iter()
                .map(|c| c.parse::<Genome>().map_err(malformed))
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => None,
    };
    let gene_cardinality = match (&genomes, options.gene_cardinality) {
        (Some(g), Some(k)) => Some(vec![k; g[0].len()]),
        _ => None,
    };
    let name = options
        .name
        .clone()
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_default();
    BenchmarkTable::from_parts(TableParts {
        name,
        arch_ids: raw.arch_ids,
        metric_names,
        metrics,
        available,
        objective,
        objective_higher_is_better: !options.objective_lower_is_better,
        genomes,
        gene_cardinality,
        test_objective,
    })
}

fn load_csv(path: &Path, options: &LoadOptions) -> Result<BenchmarkTable> {
    let malformed = |reason: String| Error::Malformed { path: path.to_path_buf(), reason };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| header.iter().position(|h| h == name);
    let id_col = find(ARCH_ID).ok_or_else(|| malformed("arch_id column absent".into()))?;
    let f_col = find(F_VAL).ok_or(Error::ObjectiveAbsent)?;
    let genome_col = find(GENOME);
    let test_col = find(F_TEST);
    let metric_cols: Vec<usize> = (0..header.len())
        .filter(|&c| c != id_col && c != f_col && Some(c) != genome_col && Some(c) != test_col)
        .collect();
    if metric_cols.is_empty() {
        return Err(Error::NoMetrics);
    }
    let mut raw = RawColumns {
        arch_ids: Vec::new(),
        genomes: genome_col.map(|_| Vec::new()),
        metrics: metric_cols.iter().map(|&c| (header[c].clone(), Vec::new())).collect(),
        f_val: Vec::new(),
        f_test: test_col.map(|_| Vec::new()),
    };
    for record in reader.records() {
        let record = record?;
        let cell = |c: usize| record.get(c).unwrap_or("").to_string();
        raw.arch_ids.push(cell(id_col));
        if let (Some(g), Some(c)) = (raw.genomes.as_mut(), genome_col) {
            g.push(cell(c));
        }
        for (slot, &c) in raw.metrics.iter_mut().zip(&metric_cols) {
            slot.1.push(cell(c));
        }
        raw.f_val.push(cell(f_col));
        if let (Some(t), Some(c)) = (raw.f_test.as_mut(), test_col) {
            t.push(cell(c));
        }
    }
    build_table(path, raw, options)
}

fn load_json(path: &Path, options: &LoadOptions) -> Result<BenchmarkTable> {
    let malformed = |reason: String| Error::Malformed { path: path.to_path_buf(), reason };
    let value: Value = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    let Value::Object(obj) = value else {
        return Err(malformed("top level must be an object of parallel arrays".into()));
    };
    let column = |name: &str, cells: &Value| -> Result<Vec<String>> {
        let arr = cells.as_array().ok_or_else(|| malformed(format!("field {name:?} is not an array")))?;
        Ok(arr
            .iter()
            .map(|v| match v {
                Value::String(s) => s.clone(),
                Value::Null => MISSING.to_string(),
                other => other.to_string(),
            })
            .collect())
    };
    let ids = obj.get(ARCH_ID).ok_or_else(|| malformed("arch_id field absent".into()))?;
    let f = obj.get(F_VAL).ok_or(Error::ObjectiveAbsent)?;
    let mut raw = RawColumns {
        arch_ids: column(ARCH_ID, ids)?,
        genomes: obj.get(GENOME).map(|g| column(GENOME, g)).transpose()?,
        metrics: Vec::new(),
        f_val: column(F_VAL, f)?,
        f_test: obj.get(F_TEST).map(|t| column(F_TEST, t)).transpose()?,
    };
    for (name, cells) in &obj {
        if [ARCH_ID, GENOME, F_VAL, F_TEST].contains(&name.as_str()) {
            continue;
        }
        raw.metrics.push((name.clone(), column(name, cells)?));
    }
    if raw.metrics.is_empty() {
        return Err(Error::NoMetrics);
    }
    let n = raw.arch_ids.len();
    let lens_ok = raw.f_val.len() == n
        && raw.metrics.iter().all(|(_, c)| c.len() == n)
        && raw.genomes.as_ref().is_none_or(|g| g.len() == n)
        && raw.f_test.as_ref().is_none_or(|t| t.len() == n);
    if !lens_ok {
        return Err(malformed("arrays have different lengths".into()));
    }
    build_table(path, raw, options)
}

/// Min-max scales every available metric column to [0, 1].
///
/// Constant columns become 0.5 everywhere.
pub fn normalize_metrics(table: &BenchmarkTable) -> BenchmarkTable {
    table.map_available_columns(|col| {
        let (lo, hi) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        if span > 0.0 && span.is_finite() {
            col.iter().map(|&v| ((v - lo) / span).clamp(0.0, 1.0)).collect()
        } else {
            vec![0.5; col.len()]
        }
    })
}

/// Monotone shape applied to a synthetic metric's latent signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MetricShape {
    #[default]
    Identity,
    Exp,
    Cubic,
}

impl MetricShape {
    fn apply(self, u: f64) -> f64 {
        match self {
            MetricShape::Identity => u,
            MetricShape::Exp => u.exp(),
            MetricShape::Cubic => u * u * u + u,
        }
    }
}

/// How one synthetic metric relates to the latent objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSignal {
    #[serde(default)]
    pub name: Option<String>,
    /// Weight of the standardized objective in the metric, in [0, 1].
    pub signal: f64,
    /// Standard deviation of the independent Gaussian noise term.
    pub noise: f64,
    /// Weight of a nuisance factor shared by all metrics and unrelated to the objective.
    #[serde(default)]
    pub confound: f64,
    #[serde(default)]
    pub shape: MetricShape,
}

fn default_genes() -> usize {
    6
}

fn default_cardinality() -> usize {
    4
}

fn default_landscape_noise() -> f64 {
    0.5
}

/// Generator settings for [`synth_benchmark`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub metrics: Vec<MetricSignal>,
    #[serde(default = "default_genes")]
    pub genes: usize,
    #[serde(default = "default_cardinality")]
    pub cardinality: usize,
    /// Scale of the per-architecture term of the objective that is not explained by genes.
    #[serde(default = "default_landscape_noise")]
    pub landscape_noise: f64,
}

impl SynthSpec {
    pub fn new(metrics: Vec<MetricSignal>) -> Self {
        SynthSpec {
            metrics,
            genes: default_genes(),
            cardinality: default_cardinality(),
            landscape_noise: default_landscape_noise(),
        }
    }

    /// Every metric shares the same signal weight and noise scale.
    pub fn uniform(m: usize, signal: f64, noise: f64) -> Self {
        Self::new((0..m).map(|_| MetricSignal { name: None, signal, noise, confound: 0.0, shape: MetricShape::Identity }).collect())
    }

    /// Default spec for `m` metrics: signal decays from 0.9 to 0.3 and shapes cycle.
    pub fn graded(m: usize) -> Self {
        let shapes = [MetricShape::Identity, MetricShape::Exp, MetricShape::Cubic];
        Self::new(
            (0..m)
                .map(|i| {
                    let frac = if m > 1 { i as f64 / (m - 1) as f64 } else { 0.0 };
                    MetricSignal { name: None, signal: 0.9 - 0.6 * frac, noise: 0.5, confound: 0.0, shape: shapes[i % shapes.len()] }
                })
                .collect(),
        )
    }

    pub fn metric_name(&self, i: usize) -> String {
        self.metrics[i].name.clone().unwrap_or_else(|| format!("m{i}"))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::InvalidSpec(format!("need at least 2 architectures, got {n}")));
        }
        if self.metrics.is_empty() {
            return Err(Error::InvalidSpec("need at least one metric".into()));
        }
        for (i, m) in self.metrics.iter().enumerate() {
            if !(0.0..=1.0).contains(&m.signal) {
                return Err(Error::InvalidSpec(format!("metric {i}: signal {} outside [0, 1]", m.signal)));
            }
            if !(m.noise >= 0.0 && m.noise.is_finite()) {
                return Err(Error::InvalidSpec(format!("metric {i}: noise {} must be finite and >= 0", m.noise)));
            }
            if !m.confound.is_finite() {
                return Err(Error::InvalidSpec(format!("metric {i}: confound {} must be finite", m.confound)));
            }
        }
        if self.genes == 0 || self.cardinality < 2 || self.cardinality > 256 {
            return Err(Error::InvalidSpec("genome needs >= 1 gene of cardinality 2..=256".into()));
        }
        if !(self.landscape_noise >= 0.0 && self.landscape_noise.is_finite()) {
            return Err(Error::InvalidSpec("landscape_noise must be finite and >= 0".into()));
        }
        let space = (self.cardinality as f64).powi(self.genes as i32);
        if n as f64 > space {
            return Err(Error::InvalidSpec(format!("{n} architectures exceed the genome space of {space}")));
        }
        let mut names = HashSet::new();
        for i in 0..self.metrics.len() {
            if !names.insert(self.metric_name(i)) {
                return Err(Error::InvalidSpec(format!("duplicate metric name {}", self.metric_name(i))));
            }
        }
        Ok(())
    }
}

fn standardize(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    for x in v.iter_mut() {
        *x = (*x - mean) / sd;
    }
}

/// Generates a seeded synthetic benchmark with `m` metrics over `n` architectures.
///
/// The objective is an additive-plus-neighbour-interaction landscape over the
/// genome, so single-gene mutations mostly move to similar objective values.
/// Metric `i` is `shape(signal * z + noise * eps)` where `z` is the standardized
/// objective. A non-zero `confound` adds a shared nuisance factor drawn from a
/// separate RNG stream, so tables without it are unaffected.
pub fn synth_benchmark(seed: u64, n: usize, m: usize, spec: &SynthSpec) -> Result<BenchmarkTable> {
    if spec.metrics.len() != m {
        return Err(Error::InvalidSpec(format!("spec describes {} metrics, asked for {m}", spec.metrics.len())));
    }
    spec.validate(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let genes = spec.genes;
    let card = spec.cardinality;
    let space = card.pow(genes as u32);
    let mut codes: Vec<usize> = if n == space {
        (0..space).collect()
    } else {
        index::sample(&mut rng, space, n).into_vec()
    };
    codes.sort_unstable();
    let genomes: Vec<Genome> = codes
        .iter()
        .map(|&code| {
            let mut g = vec![0u8; genes];
            let mut c = code;
            for slot in g.iter_mut().rev() {
                *slot = (c % card) as u8;
                c /= card;
            }
            Genome(g)
        })
        .collect();

    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let main: Vec<Vec<f64>> = (0..genes).map(|_| (0..card).map(|_| normal()).collect()).collect();
    let pair: Vec<Vec<f64>> = (0..genes.saturating_sub(1)).map(|_| (0..card * card).map(|_| 0.5 * normal()).collect()).collect();
    let mut z: Vec<f64> = genomes
        .iter()
        .map(|g| {
            let gs = g.genes();
            let additive: f64 = gs.iter().enumerate().map(|(i, &o)| main[i][o as usize]).sum();
            let interact: f64 = (0..gs.len().saturating_sub(1))
                .map(|i| pair[i][gs[i] as usize * card + gs[i + 1] as usize])
                .sum();
            additive + interact
        })
        .collect();
    standardize(&mut z);
    for v in z.iter_mut() {
        *v += spec.landscape_noise * normal();
    }
    standardize(&mut z);

    let nuisance: Vec<f64> = if spec.metrics.iter().any(|ms| ms.confound != 0.0) {
        let mut side = ChaCha8Rng::seed_from_u64(seed);
        side.set_stream(1);
        (0..n).map(|_| StandardNormal.sample(&mut side)).collect()
    } else {
        vec![0.0; n]
    };
    let metrics: Vec<Vec<f64>> = spec
        .metrics
        .iter()
        .map(|ms| {
            z.iter()
                .zip(&nuisance)
                .map(|(&zi, &ci)| ms.shape.apply(ms.signal * zi + ms.confound * ci + ms.noise * normal()))
                .collect()
        })
        .collect();
    let test_objective: Vec<f64> = z.iter().map(|&zi| zi + 0.1 * normal()).collect();

    BenchmarkTable::from_parts(TableParts {
        name: format!("synth_seed{seed}"),
        arch_ids: (0..n).map(|a| a.to_string()).collect(),
        metric_names: (0..m).map(|i| spec.metric_name(i)).collect(),
        metrics,
        available: vec![true; m],
        objective: z,
        objective_higher_is_better: true,
        genomes: Some(genomes),
        gene_cardinality: Some(vec![card; genes]),
        test_objective: Some(test_objective),
    })
}

/// Lookup from genome to architecture index.
pub fn genome_index(genomes: &[Genome]) -> HashMap<&Genome, usize> {
    let mut map = HashMap::with_capacity(genomes.len());
    for (a, g) in genomes.iter().enumerate() {
        map.entry(g).or_insert(a);
    }
    map
}
