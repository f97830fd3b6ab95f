//! Query-based baseline searchers: random search, regularized evolution and
//! REINFORCE with an EMA reward baseline.
//!
//! Budgets count distinct objective queries. Re-visiting an architecture is
//! a free cache hit.

use std::collections::HashMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bench::{genome_index, BenchmarkTable, Genome};
use crate::bo::QueryCache;
use crate::error::{Error, Result};
use crate::exploit::{ProposalResult, Source};

/// Resampling cap per unit of budget before falling back to unqueried draws.
const STEP_CAP: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Rs,
    Rea,
    Reinforce,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::Rs => "rs",
            Baseline::Rea => "rea",
            Baseline::Reinforce => "reinforce",
        }
    }
}

impl std::str::FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rs" => Ok(Baseline::Rs),
            "rea" => Ok(Baseline::Rea),
            "reinforce" => Ok(Baseline::Reinforce),
            other => Err(Error::Config(format!("unknown method {other:?}, expected rs, rea or reinforce"))),
        }
    }
}

/// Best of `min(T, N)` architectures drawn uniformly without replacement.
pub fn random_search(table: &BenchmarkTable, budget: usize, seed: u64) -> Result<ProposalResult> {
    if budget == 0 {
        return Err(Error::Config("budget must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = table.arch_count();
    let mut cache = QueryCache::new();
    for a in index::sample(&mut rng, n, budget.min(n)) {
        cache.query(table, a);
    }
    Ok(ProposalResult::from_cache(table, Baseline::Rs.name(), &cache, Source::Search))
}

/// Changes one uniformly chosen gene to a different value.
pub fn mutate<R: Rng>(genome: &Genome, cardinality: &[usize], rng: &mut R) -> Genome {
    let mutable: Vec<usize> = (0..genome.len()).filter(|&i| cardinality[i] >= 2).collect();
    let mut genes = genome.genes().to_vec();
    if mutable.is_empty() {
        return Genome(genes);
    }
    let i = mutable[rng.random_range(0..mutable.len())];
    let shift = rng.random_range(1..cardinality[i]);
    genes[i] = ((genes[i] as usize + shift) % cardinality[i]) as u8;
    Genome(genes)
}

/// Maps genomes onto table rows, falling back to the nearest genome by Hamming
/// distance (lowest index on ties) when the table is not fully enumerated.
struct GenomeLookup<'a> {
    genomes: &'a [Genome],
    index: HashMap<&'a Genome, usize>,
}

impl<'a> GenomeLookup<'a> {
    fn new(table: &'a BenchmarkTable) -> Result<Self> {
        let genomes = table.genomes().ok_or(Error::MissingGenomes)?;
        Ok(GenomeLookup { genomes, index: genome_index(genomes) })
    }

    fn arch(&self, g: &Genome) -> usize {
        if let Some(&a) = self.index.get(g) {
            return a;
        }
        (0..self.genomes.len())
            .min_by_key(|&a| (self.genomes[a].hamming(g), a))
            .expect("table is non-empty")
    }
}

fn fill_unqueried(table: &BenchmarkTable, cache: &mut QueryCache, target: usize, rng: &mut ChaCha8Rng) {
    let mut rest: Vec<usize> = (0..table.arch_count()).filter(|&a| !cache.contains(a)).collect();
    while cache.len() < target && !rest.is_empty() {
        let a = rest.swap_remove(rng.random_range(0..rest.len()));
        cache.query(table, a);
    }
}

/// Regularized evolution: a pool of `floor(T/3)` random architectures, then
/// repeatedly remove the pool's best, mutate one gene, query the child and add
/// it back, until `T` distinct queries are spent.
pub fn regularized_evolution(table: &BenchmarkTable, budget: usize, seed: u64) -> Result<ProposalResult> {
    if budget < 3 {
        return Err(Error::Config(format!("REA needs a budget of at least 3, got {budget}")));
    }
    let lookup = GenomeLookup::new(table)?;
    let cardinality = table.gene_cardinality().ok_or(Error::MissingGenomes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = table.arch_count();
    let target = budget.min(n);
    let mut cache = QueryCache::new();
    let mut pool: Vec<(usize, f64)> = index::sample(&mut rng, n, (budget / 3).min(n))
        .into_iter()
        .map(|a| (a, cache.query(table, a).0))
        .collect();
    let mut steps = 0;
    while cache.len() < target && steps < STEP_CAP * budget {
        steps += 1;
        let best = pool
            .iter()
            .enumerate()
            .fold(0, |b, (i, p)| if p.1 > pool[b].1 { i } else { b });
        let (parent, _) = pool.remove(best);
        let child = lookup.arch(&mutate(&lookup.genomes[parent], cardinality, &mut rng));
        let (f, _) = cache.query(table, child);
        pool.push((child, f));
    }
    fill_unqueried(table, &mut cache, target, &mut rng);
    Ok(ProposalResult::from_cache(table, Baseline::Rea.name(), &cache, Source::Search))
}

/// Per-gene categorical policy with Adam moments and an EMA reward baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyState {
    pub logits: Vec<Vec<f64>>,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
    pub step: u32,
    pub baseline: f64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl PolicyState {
    pub fn uniform(cardinality: &[usize]) -> Self {
        let zeros: Vec<Vec<f64>> = cardinality.iter().map(|&k| vec![0.0; k]).collect();
        PolicyState {
            logits: zeros.clone(),
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
            baseline: 0.0,
        }
    }

    pub fn probabilities(&self, gene: usize) -> Vec<f64> {
        let logits = &self.logits[gene];
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / total).collect()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Genome {
        Genome(
            (0..self.logits.len())
                .map(|g| {
                    let probs = self.probabilities(g);
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = probs.len() - 1;
                    for (k, p) in probs.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            pick = k;
                            break;
                        }
                    }
                    pick as u8
                })
                .collect(),
        )
    }

    /// Advantage against the current baseline, then `b <- m*b + (1-m)*reward`.
    pub fn update_baseline(&mut self, reward: f64, momentum: f64) -> f64 {
        let advantage = reward - self.baseline;
        self.baseline = momentum * self.baseline + (1.0 - momentum) * reward;
        advantage
    }

    /// One Adam step on `-advantage * log p(genome)`.
    pub fn reinforce_step(&mut self, genome: &Genome, advantage: f64, lr: f64) {
        self.step += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.step as i32);
        for (g, &choice) in genome.genes().iter().enumerate() {
            let probs = self.probabilities(g);
            for (k, p) in probs.iter().enumerate() {
                let indicator = if k == choice as usize { 1.0 } else { 0.0 };
                let grad = -advantage * (indicator - p);
                let m = &mut self.first_moment[g][k];
                let v = &mut self.second_moment[g][k];
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * grad;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * grad * grad;
                self.logits[g][k] -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReinforceConfig {
    pub lr: f64,
    pub baseline_momentum: f64,
}

impl Default for ReinforceConfig {
    fn default() -> Self {
        ReinforceConfig { lr: 0.01, baseline_momentum: 0.9 }
    }
}

/// REINFORCE over per-gene categoricals; every sample updates the policy,
/// including repeats served from the cache.
pub fn reinforce_search(table: &BenchmarkTable, budget: usize, seed: u64, cfg: ReinforceConfig) -> Result<ProposalResult> {
    if budget == 0 {
        return Err(Error::Config("budget must be at least 1".into()));
    }
    if !(cfg.lr >= 0.0 && cfg.lr.is_finite()) || !(0.0..=1.0).contains(&cfg.baseline_momentum) {
        return Err(Error::Config(format!("invalid REINFORCE settings {cfg:?}")));
    }
    let lookup = GenomeLookup::new(table)?;
    let cardinality = table.gene_cardinality().ok_or(Error::MissingGenomes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = PolicyState::uniform(cardinality);
    let target = budget.min(table.arch_count());
    let mut cache = QueryCache::new();
    let mut steps = 0;
    while cache.len() < target && steps < STEP_CAP * budget {
        steps += 1;
        let genome = policy.sample(&mut rng);
        let arch = lookup.arch(&genome);
        let (reward, _) = cache.query(table, arch);
        let advantage = policy.update_baseline(reward, cfg.baseline_momentum);
        policy.reinforce_step(&genome, advantage, cfg.lr);
    }
    fill_unqueried(table, &mut cache, target, &mut rng);
    Ok(ProposalResult::from_cache(table, Baseline::Reinforce.name(), &cache, Source::Search))
}

/// Runs a baseline with its default settings.
pub fn run_baseline(table: &BenchmarkTable, method: Baseline, budget: usize, seed: u64, reinforce: ReinforceConfig) -> Result<ProposalResult> {
    match method {
        Baseline::Rs => random_search(table, budget, seed),
        Baseline::Rea => regularized_evolution(table, budget, seed),
        Baseline::Reinforce => reinforce_search(table, budget, seed, reinforce),
    }
}
