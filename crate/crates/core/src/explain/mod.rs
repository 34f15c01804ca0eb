//! Outcome models on source expressions (or, as a baseline, on the raw
//! cross sections) and per-instance Shapley attribution of their
//! predictions.
//!
//! Trained on independent sources, a model's interventional Shapley values
//! read as per-instance effects of each source on the outcome, measured
//! against the base value of a reference background.

pub mod logistic;
pub mod shap;
pub mod trees;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ColumnRef;
use crate::stats::seeded_rng;

pub use logistic::{train_logistic, LogisticModel, LogisticParams, LogisticReport};
pub use shap::{
    coalition_value, shap_enumerate, shap_exact, shap_sampled, shapley_from_table, Estimator,
    ExactShapley, ShapExplanation, MAX_EXACT_FEATURES,
};
pub use trees::{train_boosted, BoostParams, BoostTrace, Node, Tree, TreeEnsemble};

/// A model with a real-valued log-odds output.
pub trait Margin {
    fn n_features(&self) -> usize;
    fn margin(&self, x: &[f64]) -> f64;

    fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }
}

pub fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

/// Log loss of a 0/1 label given a margin, computed without overflow.
pub(crate) fn logistic_loss(y: f64, m: f64) -> f64 {
    // log(1 + e^m) - y m
    let softplus = if m > 0.0 { m + (-m).exp().ln_1p() } else { m.exp().ln_1p() };
    softplus - y * m
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCohort {
    /// `n_features × n_columns`.
    pub features: DMatrix<f64>,
    pub labels: Vec<u8>,
    pub provenance: Vec<ColumnRef>,
}

impl LabeledCohort {
    pub fn new(features: DMatrix<f64>, labels: Vec<u8>, provenance: Vec<ColumnRef>) -> Result<Self> {
        if labels.len() != features.ncols() {
            return Err(Error::shape(format!("{} labels", features.ncols()), labels.len()));
        }
        if !provenance.is_empty() && provenance.len() != labels.len() {
            return Err(Error::shape(format!("{} provenance rows", labels.len()), provenance.len()));
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::invalid(format!("label {l} is not 0 or 1")));
        }
        Ok(LabeledCohort { features, labels, provenance })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn instance(&self, i: usize) -> Vec<f64> {
        self.features.column(i).iter().copied().collect()
    }

    fn has_both_classes(&self) -> bool {
        self.labels.contains(&0) && self.labels.contains(&1)
    }

    /// Columns picked by index, in the given order.
    pub fn select(&self, idx: &[usize]) -> LabeledCohort {
        LabeledCohort {
            features: self.features.select_columns(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            provenance: if self.provenance.is_empty() {
                Vec::new()
            } else {
                idx.iter().map(|&i| self.provenance[i].clone()).collect()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    BoostedTrees,
    Logistic,
}

impl ModelKind {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "boosted_trees" => Some(ModelKind::BoostedTrees),
            "logistic" => Some(ModelKind::Logistic),
            _ => None,
        }
    }
}

/// Whether a model reads source expressions (the causal model) or raw
/// cross sections (the correlational baseline).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSpace {
    Sources,
    Raw,
}

impl FeatureSpace {
    pub fn name(self) -> &'static str {
        match self {
            FeatureSpace::Sources => "sources",
            FeatureSpace::Raw => "raw",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "sources" => Some(FeatureSpace::Sources),
            "raw" => Some(FeatureSpace::Raw),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub kind: ModelKind,
    pub boost: BoostParams,
    pub logistic: LogisticParams,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            kind: ModelKind::BoostedTrees,
            boost: BoostParams::default(),
            logistic: LogisticParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Learned {
    BoostedTrees(TreeEnsemble),
    Logistic(LogisticModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalModel {
    pub learned: Learned,
    pub feature_space: FeatureSpace,
    pub hyperparams: Hyperparams,
    /// Training loss per boosting round, or the final logistic loss.
    pub training_losses: Vec<f64>,
}

impl Margin for CausalModel {
    fn n_features(&self) -> usize {
        match &self.learned {
            Learned::BoostedTrees(t) => t.n_features(),
            Learned::Logistic(l) => l.n_features(),
        }
    }

    fn margin(&self, x: &[f64]) -> f64 {
        match &self.learned {
            Learned::BoostedTrees(t) => t.margin(x),
            Learned::Logistic(l) => l.margin(x),
        }
    }
}

impl ExactShapley for CausalModel {
    fn exact_shapley(&self, instance: &[f64], background: &DMatrix<f64>) -> Option<(f64, Vec<f64>)> {
        match &self.learned {
            Learned::BoostedTrees(t) => t.exact_shapley(instance, background),
            Learned::Logistic(l) => l.exact_shapley(instance, background),
        }
    }
}

impl CausalModel {
    /// Probability of the positive class; checks the feature count.
    pub fn predict_checked(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::shape(self.n_features(), x.len()));
        }
        Ok(self.predict(x))
    }

    pub fn predict_all(&self, features: &DMatrix<f64>) -> Result<Vec<f64>> {
        if features.nrows() != self.n_features() {
            return Err(Error::shape(self.n_features(), features.nrows()));
        }
        Ok(features.column_iter().map(|c| self.predict(c.as_slice())).collect())
    }
}

pub fn train_model(cohort: &LabeledCohort, hyper: &Hyperparams, space: FeatureSpace) -> Result<CausalModel> {
    if cohort.len() < 2 {
        return Err(Error::invalid("training needs at least two columns"));
    }
    if !cohort.has_both_classes() {
        return Err(Error::SingleClass);
    }
    if cohort.features.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite feature value"));
    }
    let (learned, training_losses) = match hyper.kind {
        ModelKind::BoostedTrees => {
            let (ens, trace) = train_boosted(&cohort.features, &cohort.labels, &hyper.boost);
            (Learned::BoostedTrees(ens), trace.losses)
        }
        ModelKind::Logistic => {
            let (m, _report) = train_logistic(&cohort.features, &cohort.labels, &hyper.logistic);
            let loss = cohort
                .features
                .column_iter()
                .zip(&cohort.labels)
                .map(|(c, &y)| logistic_loss(f64::from(y), m.margin(c.as_slice())))
                .sum::<f64>()
                / cohort.len() as f64;
            (Learned::Logistic(m), vec![loss])
        }
    };
    Ok(CausalModel { learned, feature_space: space, hyperparams: *hyper, training_losses })
}

/// Area under the ROC curve: the fraction of positive/negative pairs ranked
/// correctly, ties counting one half.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::shape(labels.len(), scores.len()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Mann-Whitney: sum of midranks of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += idx[i..=j].iter().filter(|&&t| labels[t] == 1).count() as f64 * midrank;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auroc: f64,
    pub accuracy: f64,
    pub log_loss: f64,
}

/// Held-out AUROC, accuracy at the 0.5 cut, and mean log loss.
pub fn evaluate(model: &CausalModel, cohort: &LabeledCohort) -> Result<Metrics> {
    if !cohort.has_both_classes() {
        return Err(Error::SingleClass);
    }
    let probs = model.predict_all(&cohort.features)?;
    let auroc = auroc(&probs, &cohort.labels)?;
    let n = cohort.len() as f64;
    let accuracy = probs
        .iter()
        .zip(&cohort.labels)
        .filter(|(&p, &y)| (p >= 0.5) == (y == 1))
        .count() as f64
        / n;
    let log_loss = cohort
        .features
        .column_iter()
        .zip(&cohort.labels)
        .map(|(c, &y)| logistic_loss(f64::from(y), model.margin(c.as_slice())))
        .sum::<f64>()
        / n;
    Ok(Metrics { auroc, accuracy, log_loss })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRanking {
    /// Mean `|φ|` per source.
    pub importance: Vec<f64>,
    /// Source indices, most important first; ties broken by index.
    pub order: Vec<usize>,
}

pub fn rank_sources(explanations: &[ShapExplanation]) -> Result<SourceRanking> {
    let Some(first) = explanations.first() else {
        return Err(Error::invalid("no explanations to rank"));
    };
    let k = first.phi.len();
    let mut importance = vec![0.0; k];
    for e in explanations {
        if e.phi.len() != k {
            return Err(Error::shape(k, e.phi.len()));
        }
        for (acc, p) in importance.iter_mut().zip(&e.phi) {
            *acc += p.abs();
        }
    }
    importance.iter_mut().for_each(|v| *v /= explanations.len() as f64);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    Ok(SourceRanking { importance, order })
}

/// Up to `size` background columns drawn without replacement, optionally
/// restricted to label-negative columns as a "healthy" reference.
pub fn select_background(cohort: &LabeledCohort, size: usize, negatives_only: bool, seed: u64) -> Result<DMatrix<f64>> {
    let pool: Vec<usize> = (0..cohort.len())
        .filter(|&i| !negatives_only || cohort.labels[i] == 0)
        .collect();
    if pool.is_empty() || size == 0 {
        return Err(Error::invalid("background would be empty"));
    }
    let mut rng = seeded_rng(seed);
    let mut picked: Vec<usize> = if size >= pool.len() {
        pool
    } else {
        sample(&mut rng, pool.len(), size).into_iter().map(|i| pool[i]).collect()
    };
    picked.sort_unstable();
    Ok(cohort.features.select_columns(&picked))
}
