//! Synthetic ground truth: linear non-Gaussian structural causal models,
//! their event-stream renderings, and the evaluators that score recovered
//! sources, signatures and attributions against them.

pub mod assign;
pub mod render;
pub mod scm;

pub use assign::{abs_correlations, amari_distance, hungarian, match_sources, SourceMatch};
pub use render::{render_events, RenderParams, RenderedCorpus};
pub use scm::{
    generate_scm, mixing_from_edges, sample_dataset, true_ite, FamilyChoice, OutcomeSpec, ScmParams,
    SourceFamily, SyntheticDataset, SyntheticScm,
};
