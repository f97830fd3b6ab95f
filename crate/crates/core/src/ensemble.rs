//! Weighted linear ensembles of training-free metrics and correlation measures.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::bench::{rank_by, BenchmarkTable, Ranking};
use crate::error::{Error, Result};

/// Point in the weight box `[-1, 1]^M`. Components are clamped on construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Self {
        WeightVector(w.into_iter().map(|x| if x.is_nan() { 0.0 } else { x.clamp(-1.0, 1.0) }).collect())
    }

    pub fn zeros(m: usize) -> Self {
        WeightVector(vec![0.0; m])
    }

    /// `sign` times the i-th unit vector.
    pub fn one_hot(m: usize, i: usize, sign: f64) -> Self {
        let mut w = vec![0.0; m];
        w[i] = sign.signum();
        WeightVector(w)
    }

    pub fn uniform(m: usize) -> Self {
        WeightVector(vec![1.0 / m as f64; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for WeightVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for WeightVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Scores and ranking of `M(.; w)` over a table.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinedMetric {
    pub weights: WeightVector,
    pub scores: Vec<f64>,
    pub ranking: Ranking,
}

/// `scores[a] = sum_i w_i * metric_i[a]` over the available metric columns.
pub fn combine(table: &BenchmarkTable, weights: &WeightVector) -> Result<CombinedMetric> {
    let cols = table.available_columns();
    if cols.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: cols.len(), got: weights.len() });
    }
    let mut scores = vec![0.0; table.arch_count()];
    for (&j, &w) in cols.iter().zip(weights.iter()) {
        if w == 0.0 {
            continue;
        }
        for (s, &v) in scores.iter_mut().zip(table.metric_column(j)) {
            *s += w * v;
        }
    }
    let ranking = rank_by(&scores)?;
    Ok(CombinedMetric { weights: weights.clone(), scores, ranking })
}

/// Architecture ranked first by the combined metric.
pub fn argmax_arch(cm: &CombinedMetric) -> usize {
    cm.ranking.order()[0]
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population (1/N) covariance.
pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation);
    }
    let (vx, vy) = (covariance(x, x), covariance(y, y));
    if vx <= 0.0 || vy <= 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((covariance(x, y) / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of the two rank vectors (index tie-break).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 2 || is_constant(x) || is_constant(y) {
        return Err(Error::UndefinedCorrelation);
    }
    let rx: Vec<f64> = rank_by(x)?.ranks().iter().map(|&r| r as f64).collect();
    let ry: Vec<f64> = rank_by(y)?.ranks().iter().map(|&r| r as f64).collect();
    pearson(&rx, &ry)
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// Which arrangement of the pair attains the best correlation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairArrangement {
    /// `a * m1 + m2`
    Positive,
    /// `-(a * m1 + m2)`
    Negated,
    /// `m1` on its own
    FirstOnly,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairwiseOptimum {
    /// Stationary ratio `a` of the combination `a * m1 + m2`.
    pub ratio: f64,
    pub arrangement: PairArrangement,
    /// Weights on `(m1, m2)` of the winning arrangement.
    pub weights: (f64, f64),
    pub pearson: f64,
}

/// Closed-form ratio `a` maximizing the Pearson correlation of `a*m1 + m2` with `f`.
///
/// Both signs of the combination and `m1` alone are evaluated; the best one is
/// returned.
pub fn optimal_pairwise_weight(m1: &[f64], m2: &[f64], f: &[f64]) -> Result<PairwiseOptimum> {
    let n = f.len();
    if m1.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m1.len() });
    }
    if m2.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m2.len() });
    }
    let c1f = covariance(m1, f);
    let c2f = covariance(m2, f);
    let c12 = covariance(m1, m2);
    let v1 = covariance(m1, m1);
    let v2 = covariance(m2, m2);
    if v1 <= 0.0 || v2 <= 0.0 || covariance(f, f) <= 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    let num = c2f * c12 - c1f * v2;
    let den = c1f * c12 - c2f * v1;
    let tol = 1e-12;
    if num.abs() <= tol * ((c2f * c12).abs() + (c1f * v2).abs()) {
        return Err(Error::DegenerateCombination("Cov[m2,f]Cov[m1,m2] equals Cov[m1,f]Var[m2]"));
    }
    if den.abs() <= tol * ((c1f * c12).abs() + (c2f * v1).abs()) {
        return Err(Error::DegenerateCombination("Cov[m1,f]Cov[m1,m2] equals Cov[m2,f]Var[m1]"));
    }
    let a = num / den;
    let combo: Vec<f64> = m1.iter().zip(m2).map(|(x, y)| a * x + y).collect();
    let rho = pearson(&combo, f).map_err(|_| Error::DegenerateCombination("combination is constant"))?;
    let first = pearson(m1, f)?;
    let candidates = [
        (PairArrangement::Positive, (a, 1.0), rho),
        (PairArrangement::Negated, (-a, -1.0), -rho),
        (PairArrangement::FirstOnly, (1.0, 0.0), first),
    ];
    let (arrangement, weights, pearson) = candidates
        .into_iter()
        .fold(None::<(PairArrangement, (f64, f64), f64)>, |best, c| match best {
            Some(b) if b.2 >= c.2 => Some(b),
            _ => Some(c),
        })
        .expect("non-empty");
    Ok(PairwiseOptimum { ratio: a, arrangement, weights, pearson })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::TableParts;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table(cols: Vec<Vec<f64>>, f: Vec<f64>) -> BenchmarkTable {
        let n = f.len();
        BenchmarkTable::from_parts(TableParts {
            name: "t".into(),
            arch_ids: (0..n).map(|i| i.to_string()).collect(),
            metric_names: (0..cols.len()).map(|i| format!("m{i}")).collect(),
            available: vec![true; cols.len()],
            metrics: cols,
            objective: f,
            objective_higher_is_better: true,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn weights_are_clamped() {
        assert_eq!(WeightVector::new(vec![2.0, -3.0, 0.25]).as_slice(), [1.0, -1.0, 0.25]);
    }

    #[test]
    fn combine_examples() {
        let t = table(vec![vec![0.2, 0.1, 0.9], vec![0.8, 0.3, 0.0]], vec![1.0, 2.0, 3.0]);
        let cm = combine(&t, &WeightVector::new(vec![0.5, 0.5])).unwrap();
        assert!((cm.scores[0] - 0.5).abs() < 1e-15);
        let zero = combine(&t, &WeightVector::zeros(2)).unwrap();
        assert_eq!(zero.scores, [0.0; 3]);
        assert_eq!(zero.ranking.ranks(), [1, 2, 3]);
        let hot = combine(&t, &WeightVector::one_hot(2, 1, 1.0)).unwrap();
        assert_eq!(hot.ranking, rank_by(t.metric_column(1)).unwrap());
        assert_eq!(argmax_arch(&hot), 0);
        assert!(matches!(combine(&t, &WeightVector::zeros(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn argmax_examples() {
        let t = table(vec![vec![0.1, 0.9, 0.3]], vec![1.0, 2.0, 3.0]);
        assert_eq!(argmax_arch(&combine(&t, &WeightVector::one_hot(1, 0, 1.0)).unwrap()), 1);
        let t = table(vec![vec![0.7, 0.2, 0.7]], vec![1.0, 2.0, 3.0]);
        assert_eq!(argmax_arch(&combine(&t, &WeightVector::one_hot(1, 0, 1.0)).unwrap()), 0);
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        // Direct sums: mean 2.5 for both, cross deviations sum to 4, squared deviations sum to 5.
        let y = [1.0, 3.0, 2.0, 4.0];
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for i in 0..4 {
            sxy += (x[i] - 2.5) * (y[i] - 2.5);
            sxx += (x[i] - 2.5) * (x[i] - 2.5);
            syy += (y[i] - 2.5) * (y[i] - 2.5);
        }
        let oracle = sxy / (sxx * syy).sqrt();
        assert!((oracle - 0.8).abs() < 1e-15);
        assert!((pearson(&x, &y).unwrap() - oracle).abs() < 1e-15);
        assert!(matches!(pearson(&x, &[1.0; 4]), Err(Error::UndefinedCorrelation)));
    }

    #[test]
    fn spearman_examples() {
        let x = [0.3, 1.0, 2.5, 7.0];
        let inc = [1.0, 5.0, 6.0, 100.0];
        let dec = [9.0, 3.0, 2.0, -1.0];
        assert!((spearman(&x, &inc).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &dec).unwrap() + 1.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a: Vec<f64> = (0..10).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..10).map(|_| rng.random()).collect();
        let ra: Vec<f64> = rank_by(&a).unwrap().ranks().iter().map(|&r| r as f64).collect();
        let rb: Vec<f64> = rank_by(&b).unwrap().ranks().iter().map(|&r| r as f64).collect();
        assert_eq!(spearman(&a, &b).unwrap(), pearson(&ra, &rb).unwrap());
    }

    #[test]
    fn pairwise_uncorrelated_standardized() {
        // m1 and m2 orthogonal with unit population variance.
        let m1 = [1.0, -1.0, 1.0, -1.0];
        let m2 = [1.0, 1.0, -1.0, -1.0];
        let f = [3.0, 0.5, 1.0, -2.0];
        let a = optimal_pairwise_weight(&m1, &m2, &f).unwrap();
        let expected = covariance(&m1, &f) / covariance(&m2, &f);
        assert!((a.ratio - expected).abs() < 1e-12);
    }

    #[test]
    fn pairwise_rejects_metric_equal_to_objective() {
        let f = [0.1, 0.5, 0.2, 0.9, 0.4];
        let m2 = [1.0, 0.0, 2.0, 1.0, 3.0];
        assert!(matches!(optimal_pairwise_weight(&f, &m2, &f), Err(Error::DegenerateCombination(_))));
    }

    #[test]
    fn pairwise_beats_dense_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut draw = || -> Vec<f64> { (0..20).map(|_| rng.random::<f64>()).collect() };
        let (m1, m2, f) = (draw(), draw(), draw());
        let opt = optimal_pairwise_weight(&m1, &m2, &f).unwrap();
        let mut grid_best = pearson(&m1, &f).unwrap();
        for k in 0..10_000 {
            let a = -100.0 + 200.0 * k as f64 / 9_999.0;
            let combo: Vec<f64> = m1.iter().zip(&m2).map(|(x, y)| a * x + y).collect();
            let r = pearson(&combo, &f).unwrap();
            grid_best = grid_best.max(r).max(-r);
        }
        assert!(opt.pearson >= grid_best - 1e-6, "{} < {}", opt.pearson, grid_best);
    }

    proptest! {
        #[test]
        fn pearson_symmetric_and_bounded(xs in prop::collection::vec(-1e3f64..1e3, 2..30), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ys: Vec<f64> = xs.iter().map(|_| rng.random_range(-5.0..5.0)).collect();
            if let (Ok(a), Ok(b)) = (pearson(&xs, &ys), pearson(&ys, &xs)) {
                prop_assert_eq!(a, b);
                prop_assert!(a.abs() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn combine_is_linear(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cols: Vec<Vec<f64>> = (0..3).map(|_| (0..12).map(|_| rng.random()).collect()).collect();
            let f: Vec<f64> = (0..12).map(|_| rng.random()).collect();
            let t = table(cols, f);
            let w1: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.5)).collect();
            let w2: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.5)).collect();
            let sum: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| a + b).collect();
            let s1 = combine(&t, &WeightVector::new(w1)).unwrap().scores;
            let s2 = combine(&t, &WeightVector::new(w2)).unwrap().scores;
            let s12 = combine(&t, &WeightVector::new(sum)).unwrap().scores;
            for i in 0..12 {
                prop_assert!((s12[i] - s1[i] - s2[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn argmax_is_scale_invariant(seed in 0u64..500, c in 0.01f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..30).map(|_| rng.random()).collect()).collect();
            let t = table(cols, (0..30).map(|i| i as f64).collect());
            let w: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let scaled: Vec<f64> = w.iter().map(|x| c * x).collect();
            let a = argmax_arch(&combine(&t, &WeightVector::new(w)).unwrap());
            let b = argmax_arch(&combine(&t, &WeightVector::new(scaled)).unwrap());
            prop_assert_eq!(a, b);
        }
    }
}
