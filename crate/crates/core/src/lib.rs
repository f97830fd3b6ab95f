//! Bayesian optimization of weighted training-free metric ensembles for
//! neural architecture search over tabular benchmarks.
//!
//! The pipeline learns a weight vector `w` for the linear combination of
//! normalized training-free metrics by running BO on the objective of each
//! combination's top architecture ([`bo`]), then spends the leftover query
//! budget greedily down the learned combination's ranking ([`exploit`]).
//! [`analytics`] measures ranking quality and [`baselines`] provides
//! query-based searchers for comparison.

pub mod analytics;
pub mod baselines;
pub mod bench;
pub mod bo;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod exploit;
pub mod gp;

pub use bench::{normalize_metrics, rank_by, synth_benchmark, BenchmarkTable, Genome, Ranking, SynthSpec};
pub use bo::{run_bo, BoConfig, InitDesign, QueryCache, SearchTrace};
pub use ensemble::{argmax_arch, combine, CombinedMetric, WeightVector};
pub use error::{Error, Result};
pub use exploit::{hybrid_search, HybridConfig, ProposalResult, Source};
