//! Bayesian optimization over ensemble weight vectors.
//!
//! Each iteration refits the GP on every `(w, f(A(w)))` pair seen so far, picks
//! the next weight by UCB over a sampled candidate set, and queries the
//! objective only when `A(w)` has not been queried before.

use std::io::Write;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bench::BenchmarkTable;
use crate::ensemble::{argmax_arch, combine, CombinedMetric, WeightVector};
use crate::error::{Error, Result};
use crate::gp::{GaussianProcess, HyperGrid};

/// Objective values queried so far, in query order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QueryCache {
    values: IndexMap<usize, f64>,
}

impl QueryCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `f(arch)` and whether this call paid for a fresh query.
    pub fn query(&mut self, table: &BenchmarkTable, arch: usize) -> (f64, bool) {
        if let Some(&f) = self.values.get(&arch) {
            return (f, false);
        }
        let f = table.f(arch);
        self.values.insert(arch, f);
        (f, true)
    }

    pub fn get(&self, arch: usize) -> Option<f64> {
        self.values.get(&arch).copied()
    }

    pub fn contains(&self, arch: usize) -> bool {
        self.values.contains_key(&arch)
    }

    /// Number of distinct architectures queried.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(arch, f)` pairs in query order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().map(|(&a, &f)| (a, f))
    }

    /// Best queried architecture; the earliest query wins ties.
    pub fn best(&self) -> Option<(usize, f64)> {
        self.iter().fold(None, |best, (a, f)| match best {
            Some((_, bf)) if bf >= f => best,
            _ => Some((a, f)),
        })
    }

    /// Incumbent `(arch, f)` after each fresh query.
    pub fn incumbent_curve(&self) -> Vec<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.iter()
            .map(|(a, f)| {
                if best.is_none_or(|(_, bf)| f > bf) {
                    best = Some((a, f));
                }
                best.expect("set above")
            })
            .collect()
    }

    /// Architectures in query order.
    pub fn archs(&self) -> Vec<usize> {
        self.values.keys().copied().collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitDesign {
    /// The first `min(M, T)` iterations try each positive one-hot weight.
    #[default]
    OneHotFirst,
    /// The first `min(M, T)` iterations draw weights uniformly from the box.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoConfig {
    pub budget: usize,
    pub kappa: f64,
    pub candidate_count: usize,
    pub seed: u64,
    pub init_design: InitDesign,
}

impl BoConfig {
    pub fn new(budget: usize, seed: u64) -> Self {
        BoConfig { budget, kappa: 2.0, candidate_count: 4096, seed, init_design: InitDesign::OneHotFirst }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if self.candidate_count == 0 {
            return Err(Error::Config("candidate_count must be at least 1".into()));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::Config(format!("kappa must be finite and >= 0, got {}", self.kappa)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    /// 1-based iteration.
    pub t: usize,
    pub weight: WeightVector,
    pub arch: usize,
    pub f: f64,
    pub fresh: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchTrace {
    pub steps: Vec<TraceStep>,
    /// Distinct architectures queried during the BO phase.
    pub t0: usize,
    pub best_weight: WeightVector,
    pub best_arch: usize,
    pub gp_fits: usize,
}

impl SearchTrace {
    /// Index of the step with the highest `f`; earliest wins ties.
    pub fn best_step(&self) -> Option<&TraceStep> {
        self.steps.iter().fold(None, |best: Option<&TraceStep>, s| match best {
            Some(b) if b.f >= s.f => Some(b),
            _ => Some(s),
        })
    }

    /// One JSON object per iteration followed by the `{T0, best_weight, best_arch}` footer.
    pub fn write_jsonl<W: Write>(&self, table: &BenchmarkTable, mut out: W) -> Result<()> {
        for s in &self.steps {
            let line = json!({
                "t": s.t,
                "w": s.weight.as_slice(),
                "arch_id": table.arch_id(s.arch),
                "f": table.reported_objective(s.arch),
                "fresh": s.fresh,
            });
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        let footer = json!({
            "T0": self.t0,
            "best_weight": self.best_weight.as_slice(),
            "best_arch": table.arch_id(self.best_arch),
        });
        serde_json::to_writer(&mut out, &footer)?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

/// Candidate maximizing `mean + kappa * sd`; earlier candidates win ties.
pub fn ucb_select(gp: &GaussianProcess, candidates: &[WeightVector], kappa: f64) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let preds = gp.predict_many(candidates)?;
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, p) in preds.iter().enumerate() {
        let score = p.mean + kappa * p.std_dev();
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    Ok(best)
}

/// Signed one-hots, the uniform vector, then the incumbent if given.
pub fn default_anchors(m: usize, incumbent: Option<&WeightVector>) -> Vec<WeightVector> {
    let mut anchors = Vec::with_capacity(2 * m + 2);
    for i in 0..m {
        anchors.push(WeightVector::one_hot(m, i, 1.0));
        anchors.push(WeightVector::one_hot(m, i, -1.0));
    }
    anchors.push(WeightVector::uniform(m));
    if let Some(w) = incumbent {
        anchors.push(w.clone());
    }
    anchors
}

/// Anchors first, then uniform draws from `[-1, 1]^m` until `count` vectors exist.
///
/// Anchors are always emitted in full, so the result is longer than `count`
/// when there are more anchors than that.
pub fn gen_candidates<R: Rng>(rng: &mut R, m: usize, count: usize, anchors: &[WeightVector]) -> Vec<WeightVector> {
    let mut out = Vec::with_capacity(count.max(anchors.len()));
    out.extend(anchors.iter().cloned());
    while out.len() < count {
        out.push(WeightVector::new((0..m).map(|_| rng.random_range(-1.0..=1.0)).collect()));
    }
    out
}

/// GP surrogate for the current observations, or the prior when there are none.
pub(crate) fn surrogate(obs_w: &[Vec<f64>], obs_f: &[f64], grid: &HyperGrid, m: usize) -> Result<GaussianProcess> {
    if obs_w.is_empty() {
        Ok(GaussianProcess::prior(crate::gp::KernelParams::default(), m))
    } else {
        GaussianProcess::fit(obs_w, obs_f, grid)
    }
}

/// Stateful pieces of the weight proposal shared by the BO variants.
pub(crate) struct Proposer {
    m: usize,
    grid: HyperGrid,
    rng: ChaCha8Rng,
    pub(crate) obs_w: Vec<Vec<f64>>,
    pub(crate) obs_f: Vec<f64>,
    pub(crate) gp_fits: usize,
    incumbent: Option<(WeightVector, f64)>,
}

impl Proposer {
    pub(crate) fn new(m: usize, seed: u64) -> Self {
        Proposer {
            m,
            grid: HyperGrid::default_for(m),
            rng: ChaCha8Rng::seed_from_u64(seed),
            obs_w: Vec::new(),
            obs_f: Vec::new(),
            gp_fits: 0,
            incumbent: None,
        }
    }

    /// Weight for 1-based iteration `t`.
    pub(crate) fn next(&mut self, t: usize, cfg: &BoConfig) -> Result<WeightVector> {
        let gp = surrogate(&self.obs_w, &self.obs_f, &self.grid, self.m)?;
        self.gp_fits += 1;
        if t <= self.m {
            match cfg.init_design {
                InitDesign::OneHotFirst => return Ok(WeightVector::one_hot(self.m, t - 1, 1.0)),
                InitDesign::Random => {
                    return Ok(WeightVector::new((0..self.m).map(|_| self.rng.random_range(-1.0..=1.0)).collect()))
                }
            }
        }
        let anchors = default_anchors(self.m, self.incumbent.as_ref().map(|(w, _)| w));
        let candidates = gen_candidates(&mut self.rng, self.m, cfg.candidate_count, &anchors);
        let pick = ucb_select(&gp, &candidates, cfg.kappa)?;
        Ok(candidates.into_iter().nth(pick).expect("index from ucb_select"))
    }

    pub(crate) fn observe(&mut self, w: &WeightVector, f: f64) {
        self.obs_w.push(w.to_vec());
        self.obs_f.push(f);
        if self.incumbent.as_ref().is_none_or(|(_, bf)| f > *bf) {
            self.incumbent = Some((w.clone(), f));
        }
    }
}

/// Runs exactly `cfg.budget` BO iterations over the table's available metrics.
pub fn run_bo(table: &BenchmarkTable, cfg: &BoConfig) -> Result<(SearchTrace, QueryCache)> {
    cfg.validate()?;
    let m = table.available_count();
    let mut proposer = Proposer::new(m, cfg.seed);
    let mut cache = QueryCache::new();
    let mut steps = Vec::with_capacity(cfg.budget);
    for t in 1..=cfg.budget {
        let w = proposer.next(t, cfg)?;
        let cm: CombinedMetric = combine(table, &w)?;
        let arch = argmax_arch(&cm);
        let (f, fresh) = cache.query(table, arch);
        proposer.observe(&w, f);
        steps.push(TraceStep { t, weight: w, arch, f, fresh });
    }
    let best = steps.iter().fold(&steps[0], |b, s| if s.f > b.f { s } else { b });
    let trace = SearchTrace {
        t0: cache.len(),
        best_weight: best.weight.clone(),
        best_arch: best.arch,
        gp_fits: proposer.gp_fits,
        steps,
    };
    Ok((trace, cache))
}
