//! Gaussian-process regression over weight vectors.
//!
//! Zero prior mean in standardized target space, Matérn-5/2 kernel, and
//! hyperparameters picked from a finite grid by log marginal likelihood.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    pub signal_variance: f64,
    pub lengthscale: f64,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(signal_variance: f64, lengthscale: f64, noise_variance: f64) -> Result<Self> {
        if !(signal_variance > 0.0 && lengthscale > 0.0 && noise_variance >= 0.0) {
            return Err(Error::Config(format!(
                "kernel params need signal_variance > 0, lengthscale > 0, noise_variance >= 0; got {signal_variance}, {lengthscale}, {noise_variance}"
            )));
        }
        Ok(KernelParams { signal_variance, lengthscale, noise_variance })
    }
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams { signal_variance: 1.0, lengthscale: 1.0, noise_variance: 1e-6 }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn matern52_r(p: &KernelParams, r: f64) -> f64 {
    let s = 5f64.sqrt() * r / p.lengthscale;
    p.signal_variance * (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Matérn-5/2 covariance between two points.
pub fn kernel_eval(p: &KernelParams, a: &[f64], b: &[f64]) -> f64 {
    matern52_r(p, distance(a, b))
}

/// Finite hyperparameter grid searched by [`GaussianProcess::fit`].
#[derive(Clone, Debug, PartialEq)]
pub struct HyperGrid {
    pub lengthscales: Vec<f64>,
    pub signal_variances: Vec<f64>,
    pub noise_variances: Vec<f64>,
}

impl HyperGrid {
    /// Lengthscales {0.1, 0.2, 0.5, 1, 2, 5} * sqrt(dim), signal {0.5, 1, 2}, noise {1e-6, 1e-4, 1e-2}.
    pub fn default_for(dim: usize) -> Self {
        let root = (dim.max(1) as f64).sqrt();
        HyperGrid {
            lengthscales: [0.1, 0.2, 0.5, 1.0, 2.0, 5.0].iter().map(|l| l * root).collect(),
            signal_variances: vec![0.5, 1.0, 2.0],
            noise_variances: vec![1e-6, 1e-4, 1e-2],
        }
    }

    pub fn fixed(p: KernelParams) -> Self {
        HyperGrid {
            lengthscales: vec![p.lengthscale],
            signal_variances: vec![p.signal_variance],
            noise_variances: vec![p.noise_variance],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl Prediction {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Fitted GP posterior. Immutable once built.
#[derive(Clone, Debug)]
pub struct GaussianProcess {
    dim: usize,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    params: KernelParams,
    jitter: f64,
    chol: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
    log_marginal_likelihood: f64,
}

struct Factorized {
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
    lml: f64,
}

fn gram(inputs: &[Vec<f64>], p: &KernelParams) -> DMatrix<f64> {
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = p.signal_variance;
        for j in 0..i {
            let v = kernel_eval(p, &inputs[i], &inputs[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cholesky of `k + (noise + jitter) I`. The first attempt adds no jitter; on
/// failure jitter starts at 1e-8 and grows 10x up to the cap.
fn factorize(k: &DMatrix<f64>, noise: f64, y: &DVector<f64>) -> Option<Factorized> {
    let n = k.nrows();
    let ladder = std::iter::once(0.0)
        .chain(std::iter::successors(Some(JITTER_START), |j| Some(j * 10.0)).take_while(|&j| j <= JITTER_MAX * (1.0 + 1e-9)));
    for jitter in ladder {
        let mut kn = k.clone();
        for i in 0..n {
            kn[(i, i)] += noise + jitter;
        }
        if let Some(chol) = Cholesky::new(kn) {
            let alpha = chol.solve(y);
            let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let lml = -0.5 * y.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * PI).ln();
            if lml.is_finite() {
                return Some(Factorized { chol, alpha, jitter, lml });
            }
        }
    }
    None
}

impl GaussianProcess {
    /// Posterior with no observations.
    pub fn prior(params: KernelParams, dim: usize) -> Self {
        GaussianProcess {
            dim,
            inputs: Vec::new(),
            targets: Vec::new(),
            y_mean: 0.0,
            y_scale: 1.0,
            params,
            jitter: 0.0,
            chol: None,
            alpha: DVector::zeros(0),
            log_marginal_likelihood: 0.0,
        }
    }

    /// Standardizes targets, picks the grid point with the highest log marginal
    /// likelihood (first wins on ties), and caches the factorization.
    pub fn fit(inputs: &[Vec<f64>], targets: &[f64], grid: &HyperGrid) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::NoObservations);
        }
        if inputs.len() != targets.len() {
            return Err(Error::DimensionMismatch { expected: inputs.len(), got: targets.len() });
        }
        let dim = inputs[0].len();
        if let Some(bad) = inputs.iter().find(|x| x.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        let n = targets.len() as f64;
        let y_mean = targets.iter().sum::<f64>() / n;
        let sd = (targets.iter().map(|t| (t - y_mean).powi(2)).sum::<f64>() / n).sqrt();
        let y_scale = if sd > 1e-12 * y_mean.abs().max(1.0) { sd } else { 1.0 };
        let y = DVector::from_iterator(targets.len(), targets.iter().map(|t| (t - y_mean) / y_scale));

        let mut best: Option<(KernelParams, Factorized)> = None;
        for &lengthscale in &grid.lengthscales {
            for &signal_variance in &grid.signal_variances {
                let base = KernelParams { signal_variance, lengthscale, noise_variance: 0.0 };
                let k = gram(inputs, &base);
                for &noise_variance in &grid.noise_variances {
                    if let Some(fac) = factorize(&k, noise_variance, &y) {
                        if best.as_ref().is_none_or(|(_, b)| fac.lml > b.lml) {
                            best = Some((KernelParams { noise_variance, ..base }, fac));
                        }
                    }
                }
            }
        }
        let (params, fac) = best.ok_or(Error::Factorization(JITTER_MAX))?;
        Ok(GaussianProcess {
            dim,
            inputs: inputs.to_vec(),
            targets: targets.to_vec(),
            y_mean,
            y_scale,
            params,
            jitter: fac.jitter,
            chol: Some(fac.chol),
            alpha: fac.alpha,
            log_marginal_likelihood: fac.lml,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Diagonal jitter that made the Gram matrix factorizable.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Log marginal likelihood of the standardized targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    /// Multiplier that maps standardized targets back to the original scale.
    pub fn target_scale(&self) -> f64 {
        self.y_scale
    }

    /// Prior variance in original target units.
    pub fn prior_variance(&self) -> f64 {
        self.params.signal_variance * self.y_scale * self.y_scale
    }

    /// Posterior mean and variance, both in original target units.
    pub fn predict(&self, q: &[f64]) -> Result<Prediction> {
        Ok(self.predict_many(&[q])?[0])
    }

    /// Batched [`predict`](Self::predict).
    pub fn predict_many<Q: AsRef<[f64]>>(&self, queries: &[Q]) -> Result<Vec<Prediction>> {
        for q in queries {
            let len = q.as_ref().len();
            if len != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: len });
            }
        }
        let prior_var = self.params.signal_variance;
        let scale2 = self.y_scale * self.y_scale;
        let Some(chol) = &self.chol else {
            return Ok(queries
                .iter()
                .map(|_| Prediction { mean: self.y_mean, variance: prior_var * scale2 })
                .collect());
        };
        let n = self.inputs.len();
        let c = queries.len();
        let mut kstar = DMatrix::zeros(n, c);
        for (j, q) in queries.iter().enumerate() {
            for (i, x) in self.inputs.iter().enumerate() {
                kstar[(i, j)] = kernel_eval(&self.params, x, q.as_ref());
            }
        }
        let means = kstar.tr_mul(&self.alpha);
        let v = chol.l_dirty().solve_lower_triangular(&kstar).expect("cholesky factor is non-singular");
        Ok((0..c)
            .map(|j| {
                let explained = v.column(j).norm_squared();
                Prediction {
                    mean: self.y_mean + self.y_scale * means[j],
                    variance: (prior_var - explained).max(0.0) * scale2,
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fixed(s: f64, l: f64, n: f64) -> HyperGrid {
        HyperGrid::fixed(KernelParams::new(s, l, n).unwrap())
    }

    #[test]
    fn kernel_examples() {
        let p = KernelParams::new(1.7, 0.8, 0.0).unwrap();
        let a = [0.3, -0.2];
        let b = [-0.5, 0.9];
        assert_eq!(kernel_eval(&p, &a, &a), 1.7);
        assert_eq!(kernel_eval(&p, &a, &b), kernel_eval(&p, &b, &a));
        // sigma_f^2 = 1, l = 1, r = 1: (1 + sqrt5 + 5/3) exp(-sqrt5)
        let unit = KernelParams::new(1.0, 1.0, 0.0).unwrap();
        let r5 = 5f64.sqrt();
        let expected = (1.0 + r5 + 5.0 / 3.0) * (-r5).exp();
        assert!((kernel_eval(&unit, &[0.0, 0.0], &[0.6, 0.8]) - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(KernelParams::new(0.0, 1.0, 0.0).is_err());
        assert!(KernelParams::new(1.0, -1.0, 0.0).is_err());
        assert!(KernelParams::new(1.0, 1.0, -1e-3).is_err());
    }

    #[test]
    fn single_observation_interpolates() {
        let gp = GaussianProcess::fit(&[vec![0.2, 0.4]], &[3.5], &fixed(1.0, 1.0, 0.0)).unwrap();
        let p = gp.predict(&[0.2, 0.4]).unwrap();
        assert!((p.mean - 3.5).abs() < 1e-9);
    }

    #[test]
    fn duplicate_inputs_with_noise_fit() {
        let x = vec![vec![0.1, 0.1], vec![0.1, 0.1], vec![0.9, -0.3]];
        let gp = GaussianProcess::fit(&x, &[1.0, 2.0, 0.0], &fixed(1.0, 1.0, 1e-2)).unwrap();
        let p = gp.predict(&[0.1, 0.1]).unwrap();
        assert!(p.mean > 1.0 && p.mean < 2.0);
        // noise-free duplicates still factorize through jitter
        let gp = GaussianProcess::fit(&x, &[1.0, 2.0, 0.0], &fixed(1.0, 1.0, 0.0)).unwrap();
        assert!(gp.jitter() >= 1e-8);
    }

    #[test]
    fn empty_is_prior() {
        let gp = GaussianProcess::prior(KernelParams::new(2.0, 1.0, 0.0).unwrap(), 3);
        let p = gp.predict(&[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(p, Prediction { mean: 0.0, variance: 2.0 });
        assert!(gp.predict(&[0.1]).is_err());
        assert!(matches!(GaussianProcess::fit(&[], &[], &HyperGrid::default_for(2)), Err(Error::NoObservations)));
    }

    #[test]
    fn far_query_reverts_to_prior() {
        let x = vec![vec![0.0, 0.0], vec![0.1, 0.0]];
        let gp = GaussianProcess::fit(&x, &[1.0, -1.0], &fixed(1.0, 0.1, 1e-6)).unwrap();
        let p = gp.predict(&[50.0, 50.0]).unwrap();
        assert!((p.variance - gp.prior_variance()).abs() < 1e-6);
    }

    #[test]
    fn two_point_closed_form() {
        // Targets +-1 standardize to themselves.
        let s = 1.3;
        let noise = 0.05;
        let params = KernelParams::new(s, 0.7, noise).unwrap();
        let x = vec![vec![0.0], vec![0.5]];
        let gp = GaussianProcess::fit(&x, &[1.0, -1.0], &HyperGrid::fixed(params)).unwrap();
        let d = s + noise + gp.jitter();
        let c = kernel_eval(&params, &x[0], &x[1]);
        let det = d * d - c * c;
        let inv = [[d / det, -c / det], [-c / det, d / det]];
        let q = [0.2];
        let k = [kernel_eval(&params, &x[0], &q), kernel_eval(&params, &x[1], &q)];
        let y = [1.0, -1.0];
        let mut mean = 0.0;
        let mut quad = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                mean += k[i] * inv[i][j] * y[j];
                quad += k[i] * inv[i][j] * k[j];
            }
        }
        let p = gp.predict(&q).unwrap();
        assert!((p.mean - mean).abs() < 1e-12);
        assert!((p.variance - (s - quad)).abs() < 1e-12);
    }

    #[test]
    fn grid_prefers_noise_for_inconsistent_duplicates() {
        let x = vec![vec![0.3], vec![0.3], vec![0.3], vec![0.3]];
        let gp = GaussianProcess::fit(&x, &[1.0, -1.0, 1.0, -1.0], &HyperGrid::default_for(1)).unwrap();
        assert_eq!(gp.params().noise_variance, 1e-2);
    }

    fn random_gp(seed: u64, n: usize, noise: f64) -> (GaussianProcess, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        (GaussianProcess::fit(&x, &y, &fixed(1.5, 0.9, noise)).unwrap(), rng)
    }

    proptest! {
        #[test]
        fn variance_bounded_by_prior(seed in 0u64..200) {
            let (gp, mut rng) = random_gp(seed, 8, 1e-4);
            let q: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
            let p = gp.predict(&q).unwrap();
            prop_assert!(p.variance >= 0.0);
            prop_assert!(p.variance <= gp.prior_variance() + 1e-9);
        }

        #[test]
        fn permutation_invariant(seed in 0u64..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<Vec<f64>> = (0..6).map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let y: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
            let grid = fixed(1.0, 0.8, 1e-3);
            let a = GaussianProcess::fit(&x, &y, &grid).unwrap();
            let (xr, yr): (Vec<_>, Vec<_>) = x.iter().cloned().zip(y.iter().cloned()).rev().unzip();
            let b = GaussianProcess::fit(&xr, &yr, &grid).unwrap();
            let q = [0.1, -0.4];
            let (pa, pb) = (a.predict(&q).unwrap(), b.predict(&q).unwrap());
            prop_assert!((pa.mean - pb.mean).abs() < 1e-9);
            prop_assert!((pa.variance - pb.variance).abs() < 1e-9);
        }

        #[test]
        fn noise_never_shrinks_variance(seed in 0u64..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<Vec<f64>> = (0..5).map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let y: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let q: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut prev = 0.0;
            for noise in [1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
                let v = GaussianProcess::fit(&x, &y, &fixed(1.0, 0.5, noise)).unwrap().predict(&q).unwrap().variance;
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}
