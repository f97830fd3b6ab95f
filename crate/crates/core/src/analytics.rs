//! Ranking quality measures, expected-rank formulas, regret tracking, and
//! the metric transforms used by the ensemble ablations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bench::{normalize_metrics, rank_by, BenchmarkTable, Ranking};
use crate::bo::SearchTrace;
use crate::ensemble::{combine, pearson, spearman, WeightVector};
use crate::error::{Error, Result};

/// Fraction of the top-`t` of `rank_m` that is also top-`t` under `rank_f`.
pub fn precision_at_t(rank_m: &Ranking, rank_f: &Ranking, t: usize) -> Result<f64> {
    if rank_m.len() != rank_f.len() {
        return Err(Error::DimensionMismatch { expected: rank_f.len(), got: rank_m.len() });
    }
    if t == 0 || t > rank_f.len() {
        return Err(Error::OutOfRange("T", format!("{t} not in 1..={}", rank_f.len())));
    }
    let hits = rank_m.top(t).iter().filter(|&&a| rank_f.rank_of(a) <= t).count();
    Ok(hits as f64 / t as f64)
}

/// `(T + 1) / (precision * T + 1)`: expected best objective rank among the
/// top-`T` of a metric when its relevant hits sit uniformly in ranks `1..=T`.
pub fn expected_best_rank(t: usize, precision: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::OutOfRange("T", "0".into()));
    }
    let hits = precision * t as f64;
    if !(0.0..=t as f64 + 1e-9).contains(&hits) || (hits - hits.round()).abs() > 1e-9 {
        return Err(Error::OutOfRange("precision", format!("{precision} is not a multiple of 1/{t} in [0, 1]")));
    }
    let hits = hits.round();
    if hits == 0.0 {
        return Err(Error::UndefinedExpectation);
    }
    Ok((t as f64 + 1.0) / (hits + 1.0))
}

/// Expected minimum rank of `m` items drawn without replacement from ranks `1..=n`.
pub fn min_rank_expectation(n: usize, m: usize) -> Result<f64> {
    if m < 1 || m > n {
        return Err(Error::OutOfRange("m", format!("{m} not in 1..={n}")));
    }
    Ok((n as f64 + 1.0) / (m as f64 + 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub t: usize,
    pub precision: f64,
    pub expected_best_rank: Option<f64>,
    pub spearman: Option<f64>,
    pub pearson: Option<f64>,
}

/// Precision@T plus correlations of `scores` against the table objective.
pub fn precision_report(table: &BenchmarkTable, scores: &[f64], t: usize) -> Result<PrecisionReport> {
    let rank_m = rank_by(scores)?;
    let precision = precision_at_t(&rank_m, table.objective_ranking(), t)?;
    Ok(PrecisionReport {
        t,
        precision,
        expected_best_rank: expected_best_rank(t, precision).ok(),
        spearman: spearman(scores, table.objective()).ok(),
        pearson: pearson(scores, table.objective()).ok(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretCurve {
    /// Cumulative regret after each iteration.
    pub values: Vec<f64>,
    /// Approximation of the best achievable Precision@T.
    pub reference: f64,
    /// How `reference` was obtained.
    pub reference_method: String,
}

/// Cumulative shortfall of each iteration's Precision@T against a sampled
/// reference maximum over random weights, the trace's weights, and one-hots.
pub fn empirical_regret(trace: &SearchTrace, table: &BenchmarkTable, t: usize, ref_samples: usize, seed: u64) -> Result<RegretCurve> {
    let step_precision: Vec<f64> = trace
        .steps
        .iter()
        .map(|s| precision_of(table, &s.weight, t))
        .collect::<Result<_>>()?;
    let sampled = sampled_optimal_precision(table, t, ref_samples, seed)?;
    let reference = step_precision.iter().copied().fold(sampled, f64::max);
    Ok(RegretCurve {
        values: regret_curve(&step_precision, reference),
        reference,
        reference_method: format!("max over {ref_samples} uniform weights (seed {seed}) + trace weights + one-hots"),
    })
}

/// Running sum of `reference - p_t`.
pub fn regret_curve(step_precision: &[f64], reference: f64) -> Vec<f64> {
    let mut acc = 0.0;
    step_precision
        .iter()
        .map(|p| {
            acc += (reference - p).max(0.0);
            acc
        })
        .collect()
}

fn precision_of(table: &BenchmarkTable, w: &WeightVector, t: usize) -> Result<f64> {
    let cm = combine(table, w)?;
    precision_at_t(&cm.ranking, table.objective_ranking(), t)
}

/// Best Precision@T over signed one-hots and `samples` uniform weight draws.
pub fn sampled_optimal_precision(table: &BenchmarkTable, t: usize, samples: usize, seed: u64) -> Result<f64> {
    Ok(sampled_optimal_weight(table, t, samples, seed)?.1)
}

/// Weight attaining [`sampled_optimal_precision`]; the first one wins ties.
pub fn sampled_optimal_weight(table: &BenchmarkTable, t: usize, samples: usize, seed: u64) -> Result<(WeightVector, f64)> {
    let m = table.available_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(WeightVector, f64)> = None;
    let one_hots = (0..m).flat_map(|i| [WeightVector::one_hot(m, i, 1.0), WeightVector::one_hot(m, i, -1.0)]);
    let random: Vec<WeightVector> =
        (0..samples).map(|_| WeightVector::new((0..m).map(|_| rng.random_range(-1.0..=1.0)).collect())).collect();
    for w in one_hots.chain(random) {
        let p = precision_of(table, &w, t)?;
        if best.as_ref().is_none_or(|(_, b)| p > *b) {
            best = Some((w, p));
        }
    }
    Ok(best.expect("at least one metric"))
}

/// Metric preprocessing applied before searching.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    /// Min-max normalization (the default pipeline).
    #[default]
    Normalized,
    /// Raw metric values.
    Raw,
    /// Rank values, best = N - 1.
    RankUniform,
    /// Sorted standard-normal draws assigned by rank.
    RankNormal { seed: u64 },
}

impl AblationMode {
    pub fn name(&self) -> &'static str {
        match self {
            AblationMode::Normalized => "normalized",
            AblationMode::Raw => "raw",
            AblationMode::RankUniform => "rank_uniform",
            AblationMode::RankNormal { .. } => "rank_normal",
        }
    }
}

pub fn ablation_transform(table: &BenchmarkTable, mode: AblationMode) -> BenchmarkTable {
    match mode {
        AblationMode::Normalized => normalize_metrics(table),
        AblationMode::Raw => table.clone(),
        AblationMode::RankUniform => table.map_available_columns(|col| {
            let n = col.len();
            let r = rank_by(col).expect("available columns are finite and non-empty");
            r.ranks().iter().map(|&k| (n - k) as f64).collect()
        }),
        AblationMode::RankNormal { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            table.map_available_columns(|col| {
                let mut draws: Vec<f64> = (0..col.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
                draws.sort_by(|a, b| b.total_cmp(a));
                let r = rank_by(col).expect("available columns are finite and non-empty");
                r.ranks().iter().map(|&k| draws[k - 1]).collect()
            })
        }
    }
}
