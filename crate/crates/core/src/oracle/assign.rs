//! Source matching under ICA's permutation/sign indeterminacy, and the
//! Amari distance.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::pearson;

/// Minimum-cost assignment of every row to a distinct column (`rows ≤ cols`),
/// by the shortest augmenting path method with potentials. Returns the
/// column chosen for each row.
pub fn hungarian(cost: &DMatrix<f64>) -> Result<Vec<usize>> {
    let (n, m) = cost.shape();
    if n > m {
        return Err(Error::invalid(format!("cannot assign {n} rows to {m} columns")));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("non-finite assignment cost"));
    }
    // 1-based arrays; index 0 is the virtual start column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0usize; n];
    for j in 1..=m {
        if owner[j] != 0 {
            out[owner[j] - 1] = j - 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceMatch {
    /// For each true source, the index of its estimated counterpart.
    pub permutation: Vec<usize>,
    /// Sign of the matched correlation (+1 or −1).
    pub signs: Vec<f64>,
    /// `|ρ|` of each matched pair.
    pub correlations: Vec<f64>,
}

impl SourceMatch {
    pub fn mean_correlation(&self) -> f64 {
        crate::stats::mean(&self.correlations)
    }
}

/// |Pearson| correlation matrix between rows of `a` and rows of `b`.
pub fn abs_correlations(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() != b.ncols() {
        return Err(Error::shape(format!("{} columns", a.ncols()), format!("{} columns", b.ncols())));
    }
    let rows_a: Vec<Vec<f64>> = a.row_iter().map(|r| r.iter().copied().collect()).collect();
    let rows_b: Vec<Vec<f64>> = b.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut out = DMatrix::zeros(a.nrows(), b.nrows());
    for (i, ra) in rows_a.iter().enumerate() {
        for (j, rb) in rows_b.iter().enumerate() {
            out[(i, j)] = pearson(ra, rb)
                .ok_or_else(|| Error::invalid("zero-variance row in source matching"))?;
        }
    }
    Ok(out)
}

/// Maximum-weight matching of true sources (rows of `s_true`) to estimated
/// sources (rows of `s_est`, at least as many) on |Pearson correlation|.
pub fn match_sources(s_est: &DMatrix<f64>, s_true: &DMatrix<f64>) -> Result<SourceMatch> {
    let corr = abs_correlations(s_true, s_est)?;
    let cost = corr.map(|c| 1.0 - c.abs());
    let permutation = hungarian(&cost)?;
    let signs = permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| if corr[(i, j)] < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let correlations = permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| corr[(i, j)].abs())
        .collect();
    Ok(SourceMatch { permutation, signs, correlations })
}

/// `1/(2k) Σ_i (Σ_j |p_ij| / max_j |p_ij| − 1) + 1/(2k) Σ_j (Σ_i |p_ij| / max_i |p_ij| − 1)`.
/// Zero exactly for scaled signed permutation matrices.
pub fn amari_distance(p: &DMatrix<f64>) -> Result<f64> {
    let k = p.nrows();
    if k == 0 || p.ncols() != k {
        return Err(Error::invalid("amari distance needs a non-empty square matrix"));
    }
    let a = p.abs();
    let mut rows = 0.0;
    for r in a.row_iter() {
        let max = r.max();
        if max == 0.0 {
            return Err(Error::invalid("zero row in amari distance"));
        }
        rows += r.sum() / max - 1.0;
    }
    let mut cols = 0.0;
    for c in a.column_iter() {
        let max = c.max();
        if max == 0.0 {
            return Err(Error::invalid("zero column in amari distance"));
        }
        cols += c.sum() / max - 1.0;
    }
    Ok((rows + cols) / (2.0 * k as f64))
}
