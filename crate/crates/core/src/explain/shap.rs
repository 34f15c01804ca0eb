//! Interventional Shapley values on the margin (log-odds) scale.
//!
//! For an instance `x` and background columns `b`, the value of a coalition
//! `T` is `v(T) = mean_b margin(x on T, b elsewhere)`. The base value is
//! `v(∅)`, and by efficiency `base + Σ φ = margin(x)`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::logistic::LogisticModel;
use super::trees::{Node, Tree, TreeEnsemble};
use super::Margin;
use crate::error::{Error, Result};
use crate::matrix::ColumnRef;
use crate::stats::{mean, std_dev};

/// Largest feature count the exact estimator accepts.
pub const MAX_EXACT_FEATURES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Exact,
    Permutation,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Exact => "exact",
            Estimator::Permutation => "permutation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    pub column: Option<ColumnRef>,
    pub base_value: f64,
    pub phi: Vec<f64>,
    pub estimator: Estimator,
    pub n_permutations: Option<usize>,
    /// Monte-Carlo standard errors, sampled estimator only.
    pub std_errors: Option<Vec<f64>>,
}

impl ShapExplanation {
    /// `base + Σ φ`, which equals the instance margin.
    pub fn total(&self) -> f64 {
        self.base_value + self.phi.iter().sum::<f64>()
    }
}

/// Models whose Shapley values can be computed exactly without enumerating
/// coalitions. Returns `(base_value, phi)`.
pub trait ExactShapley: Margin {
    fn exact_shapley(&self, instance: &[f64], background: &DMatrix<f64>) -> Option<(f64, Vec<f64>)> {
        let _ = (instance, background);
        None
    }
}

fn check_inputs(n_features: usize, instance: &[f64], background: &DMatrix<f64>) -> Result<()> {
    if instance.len() != n_features {
        return Err(Error::shape(n_features, instance.len()));
    }
    if background.nrows() != n_features {
        return Err(Error::shape(format!("{n_features}-row background"), format!("{} rows", background.nrows())));
    }
    if background.ncols() == 0 {
        return Err(Error::invalid("background is empty"));
    }
    Ok(())
}

/// Coalition value `v(T)` for a bitmask `T` over features.
pub fn coalition_value(model: &impl Margin, instance: &[f64], background: &DMatrix<f64>, mask: u64) -> f64 {
    let k = instance.len();
    let mut z = vec![0.0; k];
    let mut total = 0.0;
    for b in background.column_iter() {
        for f in 0..k {
            z[f] = if mask >> f & 1 == 1 { instance[f] } else { b[f] };
        }
        total += model.margin(&z);
    }
    total / background.ncols() as f64
}

/// Shapley values of an arbitrary `k`-player game given as a value table
/// indexed by coalition bitmask (length `2^k`). Returns `(v(∅), phi)`.
pub fn shapley_from_table(k: usize, values: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(values.len(), 1 << k);
    // weight for a coalition of size s not containing i: s!(k-s-1)!/k!
    let mut weight = vec![0.0; k.max(1)];
    for (s, w) in weight.iter_mut().enumerate().take(k) {
        let mut binom = 1.0;
        for j in 0..s {
            binom = binom * (k - 1 - j) as f64 / (j + 1) as f64;
        }
        *w = 1.0 / (k as f64 * binom);
    }
    let mut phi = vec![0.0; k];
    for mask in 0..(1u64 << k) {
        let s = mask.count_ones() as usize;
        for (i, p) in phi.iter_mut().enumerate() {
            if mask >> i & 1 == 0 {
                *p += weight[s] * (values[(mask | 1 << i) as usize] - values[mask as usize]);
            }
        }
    }
    (values[0], phi)
}

/// Exact values by evaluating `v` on all `2^k` coalitions.
pub fn shap_enumerate(model: &impl Margin, instance: &[f64], background: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    let k = model.n_features();
    check_inputs(k, instance, background)?;
    if k > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeatures { k, max: MAX_EXACT_FEATURES });
    }
    let values: Vec<f64> = (0..(1u64 << k))
        .map(|mask| coalition_value(model, instance, background, mask))
        .collect();
    Ok(shapley_from_table(k, &values))
}

/// Exact interventional Shapley values. Uses the model's closed form when it
/// has one, otherwise enumerates every coalition.
pub fn shap_exact(
    model: &impl ExactShapley,
    instance: &[f64],
    background: &DMatrix<f64>,
) -> Result<ShapExplanation> {
    let k = model.n_features();
    check_inputs(k, instance, background)?;
    if k > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeatures { k, max: MAX_EXACT_FEATURES });
    }
    let (base_value, phi) = match model.exact_shapley(instance, background) {
        Some(r) => r,
        None => shap_enumerate(model, instance, background)?,
    };
    Ok(ShapExplanation {
        column: None,
        base_value,
        phi,
        estimator: Estimator::Exact,
        n_permutations: None,
        std_errors: None,
    })
}

/// Marginal contributions along one permutation, added into `out`.
fn walk_permutation(
    model: &impl Margin,
    instance: &[f64],
    background: &DMatrix<f64>,
    order: &[usize],
    scratch: &mut [Vec<f64>],
    out: &mut [f64],
) -> f64 {
    for (z, b) in scratch.iter_mut().zip(background.column_iter()) {
        z.copy_from_slice(b.as_slice());
    }
    let m = scratch.len() as f64;
    let mut prev = scratch.iter().map(|z| model.margin(z)).sum::<f64>() / m;
    let base = prev;
    for &f in order {
        let mut total = 0.0;
        for z in scratch.iter_mut() {
            z[f] = instance[f];
            total += model.margin(z);
        }
        let cur = total / m;
        out[f] = cur - prev;
        prev = cur;
    }
    base
}

/// Permutation-sampling estimator with antithetic pairs: every sampled
/// permutation is followed by its reverse, and the pair average is one
/// Monte-Carlo sample. An odd `n_permutations` leaves one unpaired sample.
pub fn shap_sampled(
    model: &impl Margin,
    instance: &[f64],
    background: &DMatrix<f64>,
    n_permutations: usize,
    rng: &mut impl Rng,
) -> Result<ShapExplanation> {
    let k = model.n_features();
    check_inputs(k, instance, background)?;
    if n_permutations == 0 {
        return Err(Error::invalid("n_permutations must be at least 1"));
    }
    let mut scratch = vec![vec![0.0; k]; background.ncols()];
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut order: Vec<usize> = (0..k).collect();
    let mut a = vec![0.0; k];
    let mut b = vec![0.0; k];
    let mut base = 0.0;
    let mut remaining = n_permutations;
    while remaining > 0 {
        order.shuffle(rng);
        base = walk_permutation(model, instance, background, &order, &mut scratch, &mut a);
        if remaining >= 2 {
            order.reverse();
            walk_permutation(model, instance, background, &order, &mut scratch, &mut b);
            for f in 0..k {
                samples[f].push(0.5 * (a[f] + b[f]));
            }
            remaining -= 2;
        } else {
            for f in 0..k {
                samples[f].push(a[f]);
            }
            remaining -= 1;
        }
    }
    let phi: Vec<f64> = samples.iter().map(|s| mean(s)).collect();
    let std_errors = samples
        .iter()
        .map(|s| if s.len() < 2 { 0.0 } else { std_dev(s) / (s.len() as f64).sqrt() })
        .collect();
    Ok(ShapExplanation {
        column: None,
        base_value: base,
        phi,
        estimator: Estimator::Permutation,
        n_permutations: Some(n_permutations),
        std_errors: Some(std_errors),
    })
}

impl ExactShapley for LogisticModel {
    /// `φ_i = w_i (x_i − mean_b b_i)`.
    fn exact_shapley(&self, instance: &[f64], background: &DMatrix<f64>) -> Option<(f64, Vec<f64>)> {
        let means: Vec<f64> = background.row_iter().map(|r| r.mean()).collect();
        let base = background.column_iter().map(|b| self.margin(b.as_slice())).sum::<f64>()
            / background.ncols() as f64;
        let phi = self
            .weights
            .iter()
            .zip(instance.iter().zip(&means))
            .map(|(w, (x, m))| w * (x - m))
            .collect();
        Some((base, phi))
    }
}

/// Leaf-path attribution of one tree for one `(instance, reference)` pair.
///
/// A leaf is reached by the hybrid input of coalition `U` exactly when `U`
/// contains every feature whose split sent the instance (but not the
/// reference) toward it, set `X`, and no feature whose split sent the
/// reference (but not the instance) toward it, set `B`. With `a = |X|` and
/// `c = |B|`, a leaf value `v` gives each feature in `X` the share
/// `v (a−1)! c! / (a+c)!` and takes `v a! (c−1)! / (a+c)!` from each in `B`.
fn tree_path_shapley(
    tree: &Tree,
    node: usize,
    instance: &[f64],
    reference: &[f64],
    from_x: u64,
    from_b: u64,
    coef: &[Vec<f64>],
    phi: &mut [f64],
) {
    match tree.nodes[node] {
        Node::Leaf { value } => {
            let a = from_x.count_ones() as usize;
            let c = from_b.count_ones() as usize;
            if a + c == 0 || value == 0.0 {
                return;
            }
            if a > 0 {
                let share = value * coef[a - 1][c];
                let mut m = from_x;
                while m != 0 {
                    let f = m.trailing_zeros() as usize;
                    phi[f] += share;
                    m &= m - 1;
                }
            }
            if c > 0 {
                let share = value * coef[c - 1][a];
                let mut m = from_b;
                while m != 0 {
                    let f = m.trailing_zeros() as usize;
                    phi[f] -= share;
                    m &= m - 1;
                }
            }
        }
        Node::Split { feature, threshold, left, right } => {
            let bit = 1u64 << feature;
            let x_dir = if instance[feature] <= threshold { left } else { right };
            let b_dir = if reference[feature] <= threshold { left } else { right };
            if x_dir == b_dir {
                tree_path_shapley(tree, x_dir, instance, reference, from_x, from_b, coef, phi);
                return;
            }
            if from_b & bit == 0 {
                tree_path_shapley(tree, x_dir, instance, reference, from_x | bit, from_b, coef, phi);
            }
            if from_x & bit == 0 {
                tree_path_shapley(tree, b_dir, instance, reference, from_x, from_b | bit, coef, phi);
            }
        }
    }
}

/// `coef[p][q] = p! q! / (p+q+1)!`.
fn path_coefficients(k: usize) -> Vec<Vec<f64>> {
    let mut fact = vec![1.0f64; 2 * k + 2];
    for i in 1..fact.len() {
        fact[i] = fact[i - 1] * i as f64;
    }
    (0..=k)
        .map(|p| (0..=k).map(|q| fact[p] * fact[q] / fact[p + q + 1]).collect())
        .collect()
}

impl ExactShapley for TreeEnsemble {
    fn exact_shapley(&self, instance: &[f64], background: &DMatrix<f64>) -> Option<(f64, Vec<f64>)> {
        let k = self.n_features;
        if k > 64 {
            return None;
        }
        let coef = path_coefficients(k);
        let mut phi = vec![0.0; k];
        let mut base = 0.0;
        for b in background.column_iter() {
            let reference = b.as_slice();
            base += self.margin(reference);
            for tree in &self.trees {
                tree_path_shapley(tree, 0, instance, reference, 0, 0, &coef, &mut phi);
            }
        }
        let m = background.ncols() as f64;
        phi.iter_mut().for_each(|p| *p /= m);
        Some((base / m, phi))
    }
}
