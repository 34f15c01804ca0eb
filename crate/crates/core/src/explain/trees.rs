//! Gradient boosting on the logistic loss with depth-limited regression trees.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{logistic_loss, sigmoid, Margin};
use crate::stats::seeded_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Samples with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

/// Binary tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Tree { nodes: vec![Node::Leaf { value }] }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    fn predict_col(&self, x: &DMatrix<f64>, col: usize) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[(feature, col)] <= threshold { left } else { right };
                }
            }
        }
    }

    fn scale_leaves(&mut self, factor: f64) {
        for n in &mut self.nodes {
            if let Node::Leaf { value } = n {
                *value *= factor;
            }
        }
    }

    pub fn features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub n_features: usize,
    /// Initial log-odds.
    pub base_score: f64,
    /// Leaf values already include the learning rate.
    pub trees: Vec<Tree>,
}

impl Margin for TreeEnsemble {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn margin(&self, x: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Row fraction drawn (without replacement) per round; 1 uses every row.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            n_rounds: 200,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 10,
            subsample: 1.0,
            seed: 0,
        }
    }
}

/// Per-round training diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoostTrace {
    /// Mean training log loss before round 1, then after every round.
    pub losses: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

#[derive(Clone, Copy, Default)]
struct Acc {
    sum: f64,
    count: usize,
    last: f64,
}

const NO_NODE: u32 = u32::MAX;

/// Grow one regression tree on `residual` by greedy variance reduction,
/// level by level over presorted feature orders. Leaves hold Newton steps
/// `Σ residual / Σ hessian`.
fn grow_tree(
    x: &DMatrix<f64>,
    sorted: &[Vec<u32>],
    residual: &[f64],
    hessian: &[f64],
    rows: &[bool],
    params: &BoostParams,
) -> Tree {
    let n = residual.len();
    let k = x.nrows();
    let mut nodes: Vec<Node> = vec![Node::Leaf { value: 0.0 }];
    let mut node_of: Vec<u32> = (0..n).map(|i| if rows[i] { 0 } else { NO_NODE }).collect();
    // (sum residual, count) per node
    let mut totals: Vec<(f64, usize)> = vec![(0.0, 0)];
    for i in 0..n {
        if rows[i] {
            totals[0].0 += residual[i];
            totals[0].1 += 1;
        }
    }
    let mut frontier: Vec<usize> = vec![0];
    let min_leaf = params.min_samples_leaf.max(1);
    for _depth in 0..params.max_depth {
        if frontier.is_empty() {
            break;
        }
        let mut slot = vec![usize::MAX; nodes.len()];
        for (s, &node) in frontier.iter().enumerate() {
            slot[node] = s;
        }
        let mut best: Vec<Option<Candidate>> = vec![None; frontier.len()];
        let mut acc = vec![Acc::default(); frontier.len()];
        for (f, order) in sorted.iter().enumerate().take(k) {
            acc.iter_mut().for_each(|a| *a = Acc::default());
            for &i in order {
                let i = i as usize;
                let node = node_of[i];
                if node == NO_NODE || slot[node as usize] == usize::MAX {
                    continue;
                }
                let s = slot[node as usize];
                let v = x[(f, i)];
                let a = &mut acc[s];
                if a.count >= min_leaf && v > a.last {
                    let (tot_sum, tot_n) = totals[frontier[s]];
                    let n_right = tot_n - a.count;
                    if n_right >= min_leaf {
                        let s_right = tot_sum - a.sum;
                        let gain = a.sum * a.sum / a.count as f64
                            + s_right * s_right / n_right as f64
                            - tot_sum * tot_sum / tot_n as f64;
                        if gain > 0.0 && best[s].is_none_or(|b| gain > b.gain) {
                            let mut threshold = a.last + (v - a.last) / 2.0;
                            if !(threshold >= a.last && threshold < v) {
                                threshold = a.last;
                            }
                            best[s] = Some(Candidate { gain, feature: f, threshold });
                        }
                    }
                }
                a.sum += residual[i];
                a.count += 1;
                a.last = v;
            }
        }
        let mut next = Vec::new();
        let mut child_of: Vec<Option<(usize, usize, usize, f64)>> = vec![None; nodes.len()];
        for (s, &node) in frontier.iter().enumerate() {
            if let Some(c) = best[s] {
                let left = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                totals.push((0.0, 0));
                totals.push((0.0, 0));
                nodes[node] = Node::Split { feature: c.feature, threshold: c.threshold, left, right: left + 1 };
                child_of[node] = Some((left, left + 1, c.feature, c.threshold));
                next.push(left);
                next.push(left + 1);
            }
        }
        for i in 0..n {
            let node = node_of[i];
            if node == NO_NODE {
                continue;
            }
            if let Some((l, r, f, t)) = child_of.get(node as usize).copied().flatten() {
                let child = if x[(f, i)] <= t { l } else { r };
                node_of[i] = child as u32;
                totals[child].0 += residual[i];
                totals[child].1 += 1;
            }
        }
        frontier = next;
    }
    let mut hsum = vec![0.0; nodes.len()];
    for i in 0..n {
        if node_of[i] != NO_NODE {
            hsum[node_of[i] as usize] += hessian[i];
        }
    }
    for (j, node) in nodes.iter_mut().enumerate() {
        if let Node::Leaf { value } = node {
            *value = if totals[j].1 == 0 {
                0.0
            } else {
                totals[j].0 / hsum[j].max(1e-12)
            };
        }
    }
    Tree { nodes }
}

/// Fit the ensemble. `x` is `n_features × n_samples`; labels are 0/1.
///
/// Each round's tree is scaled by the learning rate; if the step would raise
/// the training loss it is halved until it does not.
pub fn train_boosted(x: &DMatrix<f64>, labels: &[u8], params: &BoostParams) -> (TreeEnsemble, BoostTrace) {
    let (k, n) = x.shape();
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let pos = y.iter().sum::<f64>() / n as f64;
    let base_score = (pos / (1.0 - pos)).ln();
    let sorted: Vec<Vec<u32>> = (0..k)
        .map(|f| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| x[(f, a as usize)].total_cmp(&x[(f, b as usize)]).then(a.cmp(&b)));
            idx
        })
        .collect();
    let mut rng = seeded_rng(params.seed);
    let mut margin = vec![base_score; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut trace = BoostTrace { losses: vec![mean_loss(&y, &margin)] };
    let mut residual = vec![0.0; n];
    let mut hessian = vec![0.0; n];
    let mut rows = vec![true; n];
    let mut step = vec![0.0; n];
    for _ in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(margin[i]);
            residual[i] = y[i] - p;
            hessian[i] = p * (1.0 - p);
        }
        if params.subsample < 1.0 {
            for r in rows.iter_mut() {
                *r = rng.random::<f64>() < params.subsample;
            }
        }
        let mut tree = grow_tree(x, &sorted, &residual, &hessian, &rows, params);
        tree.scale_leaves(params.learning_rate);
        for (i, s) in step.iter_mut().enumerate() {
            *s = tree.predict_col(x, i);
        }
        let before = *trace.losses.last().unwrap();
        let mut factor = 1.0;
        let mut after = loss_with_step(&y, &margin, &step, factor);
        let mut halvings = 0;
        while after > before && halvings < 40 {
            factor *= 0.5;
            halvings += 1;
            after = loss_with_step(&y, &margin, &step, factor);
        }
        if after > before {
            factor = 0.0;
            after = before;
        }
        if factor != 1.0 {
            tree.scale_leaves(factor);
        }
        for (m, s) in margin.iter_mut().zip(&step) {
            *m += s * factor;
        }
        trace.losses.push(after);
        trees.push(tree);
    }
    (TreeEnsemble { n_features: k, base_score, trees }, trace)
}

fn mean_loss(y: &[f64], margin: &[f64]) -> f64 {
    y.iter().zip(margin).map(|(&y, &m)| logistic_loss(y, m)).sum::<f64>() / y.len() as f64
}

fn loss_with_step(y: &[f64], margin: &[f64], step: &[f64], factor: f64) -> f64 {
    y.iter()
        .zip(margin.iter().zip(step))
        .map(|(&y, (&m, &s))| logistic_loss(y, m + factor * s))
        .sum::<f64>()
        / y.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_split_separates_threshold_data() {
        let x = DMatrix::from_row_slice(1, 6, &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        let labels = [0, 0, 0, 1, 1, 1];
        let params = BoostParams { n_rounds: 50, learning_rate: 0.5, min_samples_leaf: 1, ..Default::default() };
        let (model, trace) = train_boosted(&x, &labels, &params);
        let root = &model.trees[0].nodes[0];
        match root {
            Node::Split { feature: 0, threshold, .. } => assert_eq!(*threshold, 6.0),
            other => panic!("unexpected root {other:?}"),
        }
        assert!(model.margin(&[1.0]) < 0.0 && model.margin(&[11.0]) > 0.0);
        for w in trace.losses.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn empty_ensemble_margin_is_base_score() {
        let m = TreeEnsemble { n_features: 2, base_score: 0.0, trees: vec![] };
        assert_eq!(sigmoid(m.margin(&[1.0, 2.0])), 0.5);
        let t = Tree::leaf(0.25);
        assert_eq!(t.predict(&[0.0]), 0.25);
    }
}
