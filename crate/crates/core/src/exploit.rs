//! Greedy exploitation of the learned ensemble and the final architecture proposal.

use serde::{Deserialize, Serialize};

use crate::bench::{BenchmarkTable, Ranking};
use crate::bo::{run_bo, BoConfig, Proposer, QueryCache, SearchTrace, TraceStep};
use crate::ensemble::combine;
use crate::error::{Error, Result};

/// Which phase first queried the proposed architecture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    BoPhase,
    GreedyPhase,
    /// Proposals from the query-based baseline searchers.
    Search,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::BoPhase => "bo_phase",
            Source::GreedyPhase => "greedy_phase",
            Source::Search => "search",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposalResult {
    pub method: String,
    pub proposed_arch: usize,
    pub proposed_f: f64,
    /// Rank of the proposal under the table's objective (1 = optimum).
    pub proposed_rank: usize,
    pub total_distinct_queries: usize,
    pub t0: usize,
    pub greedy_set: Vec<usize>,
    pub source: Source,
    pub best_weight: Option<Vec<f64>>,
    /// Every distinct architecture queried, in order, across both phases.
    pub queries: Vec<usize>,
    /// Incumbent `(arch, f)` after each fresh query.
    pub incumbent_curve: Vec<(usize, f64)>,
}

impl ProposalResult {
    /// Builds the proposal as the best architecture in `cache`.
    pub(crate) fn from_cache(table: &BenchmarkTable, method: &str, cache: &QueryCache, source: Source) -> Self {
        let (arch, f) = cache.best().expect("at least one query");
        ProposalResult {
            method: method.to_string(),
            proposed_arch: arch,
            proposed_f: f,
            proposed_rank: table.objective_rank(arch),
            total_distinct_queries: cache.len(),
            t0: 0,
            greedy_set: Vec::new(),
            source,
            best_weight: None,
            queries: cache.archs(),
            incumbent_curve: cache.incumbent_curve(),
        }
    }

    /// JSON footer line for the run's trace file.
    pub fn to_json(&self, table: &BenchmarkTable) -> serde_json::Value {
        serde_json::json!({
            "method": self.method,
            "proposed_arch": table.arch_id(self.proposed_arch),
            "proposed_f": table.reported_objective(self.proposed_arch),
            "proposed_rank": self.proposed_rank,
            "proposed_f_test": table.test_objective(self.proposed_arch).filter(|v| v.is_finite()),
            "total_distinct_queries": self.total_distinct_queries,
            "T0": self.t0,
            "greedy_set": self.greedy_set.iter().map(|&a| table.arch_id(a)).collect::<Vec<_>>(),
            "source": self.source.as_str(),
        })
    }
}

/// Outcome of a greedy pass over a ranking prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyOutcome {
    /// Architectures examined, in rank order.
    pub examined: Vec<usize>,
    /// How many of those required a fresh query.
    pub fresh: usize,
    /// Best `(arch, f)` over the cache after the pass.
    pub best: Option<(usize, f64)>,
}

/// Queries every architecture with rank `<= k`; cache hits cost nothing.
pub fn greedy_search(table: &BenchmarkTable, ranking: &Ranking, k: usize, cache: &mut QueryCache) -> GreedyOutcome {
    let mut fresh = 0;
    let examined: Vec<usize> = ranking.top(k).to_vec();
    for &a in &examined {
        if cache.query(table, a).1 {
            fresh += 1;
        }
    }
    GreedyOutcome { examined, fresh, best: cache.best() }
}

/// Walks down the ranking until the cache holds `target` distinct architectures.
pub fn greedy_fill(table: &BenchmarkTable, ranking: &Ranking, target: usize, cache: &mut QueryCache) -> GreedyOutcome {
    let mut fresh = 0;
    let mut examined = Vec::new();
    for &a in ranking.order() {
        if cache.len() >= target {
            break;
        }
        examined.push(a);
        if cache.query(table, a).1 {
            fresh += 1;
        }
    }
    GreedyOutcome { examined, fresh, best: cache.best() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub bo: BoConfig,
    /// Keep walking the robust metric's ranking until `T` distinct queries are spent.
    pub spend_leftover: bool,
    /// Run BO for exactly this many rounds, each forced to query a new architecture.
    pub fixed_t0: Option<usize>,
}

impl HybridConfig {
    pub fn new(bo: BoConfig) -> Self {
        HybridConfig { bo, spend_leftover: false, fixed_t0: None }
    }
}

fn finish(
    table: &BenchmarkTable,
    method: &str,
    trace: &SearchTrace,
    mut cache: QueryCache,
    budget: usize,
    spend_leftover: bool,
) -> Result<ProposalResult> {
    let t0 = cache.len();
    let robust = combine(table, &trace.best_weight)?;
    let outcome = if spend_leftover {
        greedy_fill(table, &robust.ranking, budget.min(table.arch_count()), &mut cache)
    } else {
        greedy_search(table, &robust.ranking, budget.saturating_sub(t0), &mut cache)
    };
    let (arch, f) = outcome.best.expect("BO queried at least once");
    let first_query = cache.iter().position(|(a, _)| a == arch).expect("proposal is cached");
    let source = if first_query < t0 { Source::BoPhase } else { Source::GreedyPhase };
    Ok(ProposalResult {
        method: method.to_string(),
        proposed_arch: arch,
        proposed_f: f,
        proposed_rank: table.objective_rank(arch),
        total_distinct_queries: cache.len(),
        t0,
        greedy_set: outcome.examined,
        source,
        best_weight: Some(trace.best_weight.to_vec()),
        queries: cache.archs(),
        incumbent_curve: cache.incumbent_curve(),
    })
}

/// BO over ensemble weights, then greedy search over the top `T - T0` of the
/// best weight's ranking; proposes the best architecture queried in either phase.
pub fn hybrid_search(table: &BenchmarkTable, cfg: &HybridConfig) -> Result<(ProposalResult, SearchTrace)> {
    if let Some(t0) = cfg.fixed_t0 {
        return fixed_t0_search(table, cfg, t0);
    }
    let (trace, cache) = run_bo(table, &cfg.bo)?;
    let result = finish(table, "hybrid", &trace, cache, cfg.bo.budget, cfg.spend_leftover)?;
    Ok((result, trace))
}

/// Ablation schedule: exactly `t0` BO rounds, each querying the best-ranked
/// not-yet-queried architecture of `M(.; w_t)`, then greedy over `T - t0`.
pub fn fixed_t0_search(table: &BenchmarkTable, cfg: &HybridConfig, t0: usize) -> Result<(ProposalResult, SearchTrace)> {
    cfg.bo.validate()?;
    if t0 == 0 || t0 > cfg.bo.budget {
        return Err(Error::Config(format!("fixed T0 must be in 1..={}, got {t0}", cfg.bo.budget)));
    }
    let rounds = t0.min(table.arch_count());
    let m = table.available_count();
    let mut proposer = Proposer::new(m, cfg.bo.seed);
    let mut cache = QueryCache::new();
    let mut steps = Vec::with_capacity(rounds);
    for t in 1..=rounds {
        let w = proposer.next(t, &cfg.bo)?;
        let cm = combine(table, &w)?;
        let arch = *cm.ranking.order().iter().find(|&&a| !cache.contains(a)).expect("rounds <= N");
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
    let result = finish(table, "hybrid_fixed_t0", &trace, cache, cfg.bo.budget, cfg.spend_leftover)?;
    Ok((result, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{normalize_metrics, rank_by, synth_benchmark, SynthSpec};

    fn table() -> BenchmarkTable {
        normalize_metrics(&synth_benchmark(8, 300, 3, &SynthSpec::graded(3)).unwrap())
    }

    #[test]
    fn greedy_examples() {
        let t = table();
        let mut cache = QueryCache::new();
        cache.query(&t, 5);
        cache.query(&t, 9);
        let ranking = rank_by(t.metric_column(0)).unwrap();
        let zero = greedy_search(&t, &ranking, 0, &mut cache.clone());
        assert_eq!(zero.best, cache.best());
        assert!(zero.examined.is_empty());

        let mut all = cache.clone();
        let out = greedy_search(&t, &ranking, t.arch_count(), &mut all);
        let opt = t.objective_ranking().order()[0];
        assert_eq!(out.best.unwrap().0, opt);
        assert_eq!(out.fresh, t.arch_count() - 2);

        let mut empty = QueryCache::new();
        let out = greedy_search(&t, t.objective_ranking(), 1, &mut empty);
        assert_eq!(out.best.unwrap().0, opt);
        assert_eq!(empty.len(), 1);
    }

    #[test]
    fn proposal_invariants() {
        let t = table();
        let cfg = HybridConfig::new(BoConfig { candidate_count: 256, ..BoConfig::new(30, 4) });
        let (res, trace) = hybrid_search(&t, &cfg).unwrap();
        assert!(res.total_distinct_queries <= 30);
        assert_eq!(res.t0, trace.t0);
        assert_eq!(res.greedy_set.len(), 30 - trace.t0);
        assert!(res.proposed_f >= t.f(trace.best_arch));
        assert_eq!(res.proposed_rank, t.objective_rank(res.proposed_arch));
        let fresh_greedy = res.greedy_set.iter().filter(|&&a| !trace.steps.iter().any(|s| s.arch == a)).count();
        assert_eq!(res.total_distinct_queries, trace.t0 + fresh_greedy);
        assert!(res.incumbent_curve.windows(2).all(|w| w[0].1 <= w[1].1));
        assert_eq!(res.incumbent_curve.last().unwrap().1, res.proposed_f);
        assert_eq!(res.queries.len(), res.total_distinct_queries);
        for j in 0..3 {
            let top = rank_by(t.metric_column(j)).unwrap().order()[0];
            assert!(res.proposed_f >= t.f(top));
        }
        assert_eq!(hybrid_search(&t, &cfg).unwrap().0, res);
    }

    #[test]
    fn spend_leftover_uses_whole_budget() {
        let t = table();
        let mut cfg = HybridConfig::new(BoConfig { candidate_count: 128, ..BoConfig::new(20, 1) });
        cfg.spend_leftover = true;
        let (res, _) = hybrid_search(&t, &cfg).unwrap();
        assert_eq!(res.total_distinct_queries, 20);
    }

    #[test]
    fn covers_whole_table() {
        let t = normalize_metrics(&synth_benchmark(3, 40, 2, &SynthSpec::graded(2)).unwrap());
        let mut cfg = HybridConfig::new(BoConfig { candidate_count: 64, ..BoConfig::new(40, 0) });
        cfg.spend_leftover = true;
        let (res, _) = hybrid_search(&t, &cfg).unwrap();
        assert_eq!(res.proposed_rank, 1);
    }

    #[test]
    fn fixed_t0_queries_fresh_every_round() {
        let t = table();
        let mut cfg = HybridConfig::new(BoConfig { candidate_count: 128, ..BoConfig::new(30, 2) });
        cfg.fixed_t0 = Some(10);
        let (res, trace) = hybrid_search(&t, &cfg).unwrap();
        assert!(trace.steps.iter().all(|s| s.fresh));
        assert_eq!(res.t0, 10);
        assert!(res.total_distinct_queries <= 30);
        cfg.fixed_t0 = Some(31);
        assert!(hybrid_search(&t, &cfg).is_err());
    }

    #[test]
    fn perfect_metric_proposal() {
        let mut spec = SynthSpec::graded(4);
        spec.metrics[2].signal = 1.0;
        spec.metrics[2].noise = 0.0;
        let t = normalize_metrics(&synth_benchmark(21, 1000, 4, &spec).unwrap());
        for seed in 0..10 {
            let (res, trace) = hybrid_search(&t, &HybridConfig::new(BoConfig { candidate_count: 256, ..BoConfig::new(25, seed) })).unwrap();
            assert!(res.proposed_rank <= (25 - trace.t0).max(1));
            assert_eq!(res.proposed_rank, 1);
        }
    }

    #[test]
    fn larger_budget_rarely_hurts() {
        let t = table();
        let mut worse = 0;
        for seed in 0..10 {
            let run = |b| hybrid_search(&t, &HybridConfig::new(BoConfig { candidate_count: 256, ..BoConfig::new(b, seed) })).unwrap().0;
            let (small, large) = (run(20), run(40));
            if large.proposed_f < small.proposed_f {
                worse += 1;
            }
        }
        assert!(worse <= 1, "{worse} of 10 seeds got worse with a larger budget");
    }
}
