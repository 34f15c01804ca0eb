//! Independent component analysis: eigen-whitening followed by symmetric
//! fixed-point FastICA.
//!
//! The fitted model realizes `X = A S` on centered data. Columns of the
//! mixing matrix `A` are source signatures (the change one unit of a source
//! imprints on every observed variable); rows of `S` are source expressions.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ColumnRef, CrossSectionMatrix};
use crate::stats::seeded_rng;

/// Eigenvalues at or below this are treated as numerically zero.
pub const EIGEN_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhiteningTransform {
    pub mean: DVector<f64>,
    /// `k × n_variables`.
    pub projection: DMatrix<f64>,
    /// `n_variables × k`.
    pub inverse_projection: DMatrix<f64>,
    pub k: usize,
    /// Full covariance spectrum, descending.
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Whitened {
    pub transform: WhiteningTransform,
    /// `k × n_columns`, identity covariance.
    pub data: DMatrix<f64>,
    /// Set when `k` had to be lowered to the numerical rank.
    pub reduced_from: Option<usize>,
}

fn center(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let mean = x.column_mean();
    let mut xc = x.clone();
    for mut col in xc.column_iter_mut() {
        col -= &mean;
    }
    (mean, xc)
}

/// Project onto the top-`k` covariance eigenvectors scaled to unit variance.
/// Covariance uses the `1/n` normalization. With `strict` unset, a `k` above
/// the numerical rank is lowered and reported in [`Whitened::reduced_from`].
pub fn whiten(x: &DMatrix<f64>, k: usize, strict: bool) -> Result<Whitened> {
    let (p, n) = x.shape();
    if k == 0 || k > p || n < 2 || k > n - 1 {
        return Err(Error::invalid(format!(
            "k = {k} must lie in [1, min(n_variables = {p}, n_columns - 1 = {})]",
            n.saturating_sub(1)
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in input matrix"));
    }
    let (mean, xc) = center(x);
    let cov = (&xc * xc.transpose()) / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let rank = eigenvalues.iter().filter(|&&l| l > EIGEN_FLOOR).count();
    let (k, reduced_from) = if k > rank {
        if strict || rank == 0 {
            return Err(Error::RankDeficient { requested: k, rank });
        }
        (rank, Some(k))
    } else {
        (k, None)
    };
    let mut projection = DMatrix::zeros(k, p);
    let mut inverse_projection = DMatrix::zeros(p, k);
    for (j, &i) in order.iter().take(k).enumerate() {
        let v = eig.eigenvectors.column(i);
        let s = eig.eigenvalues[i].sqrt();
        projection.row_mut(j).copy_from(&(v.transpose() / s));
        inverse_projection.column_mut(j).copy_from(&(v * s));
    }
    let data = &projection * &xc;
    Ok(Whitened {
        transform: WhiteningTransform { mean, projection, inverse_projection, k, eigenvalues },
        data,
        reduced_from,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Contrast {
    /// `G(u) = log cosh u`, so `g = tanh`.
    #[default]
    Logcosh,
    /// `G(u) = -exp(-u²/2)`, so `g(u) = u exp(-u²/2)`.
    Exp,
}

impl Contrast {
    pub fn name(self) -> &'static str {
        match self {
            Contrast::Logcosh => "logcosh",
            Contrast::Exp => "exp",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "logcosh" => Some(Contrast::Logcosh),
            "exp" => Some(Contrast::Exp),
            _ => None,
        }
    }

    /// `(g(u), g'(u))`.
    #[inline]
    fn eval(self, u: f64) -> (f64, f64) {
        match self {
            Contrast::Logcosh => {
                let t = u.tanh();
                (t, 1.0 - t * t)
            }
            Contrast::Exp => {
                let e = (-0.5 * u * u).exp();
                (u * e, (1.0 - u * u) * e)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FastIcaParams {
    pub contrast: Contrast,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FastIcaParams {
    fn default() -> Self {
        FastIcaParams { contrast: Contrast::Logcosh, tol: 1e-4, max_iter: 500, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub iterations: usize,
    pub final_delta: f64,
}

#[derive(Debug, Clone)]
pub struct FastIcaResult {
    /// Orthogonal `k × k` rotation of the whitened data.
    pub rotation: DMatrix<f64>,
    pub report: ConvergenceReport,
}

/// `W ← (W Wᵀ)^{-1/2} W`.
pub fn symmetric_decorrelation(w: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(w * w.transpose());
    let inv_sqrt = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt()),
    );
    let e = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(e.nrows(), e.ncols(), |r, c| e[(r, c)] * inv_sqrt[c]);
    scaled * e.transpose() * w
}

/// Symmetric (parallel) fixed-point FastICA on whitened `k × n` data.
///
/// Each step sets `W ← E[g(WZ) Zᵀ] − diag(E[g'(WZ)]) W` and re-orthogonalizes
/// symmetrically. Stops once every row's `|⟨w_new, w_old⟩|` is within `tol`
/// of 1. Running out of iterations is reported, not an error.
pub fn fastica(z: &DMatrix<f64>, params: &FastIcaParams) -> Result<FastIcaResult> {
    let (k, n) = z.shape();
    if k == 0 || n == 0 {
        return Err(Error::invalid("fastica needs non-empty whitened data"));
    }
    if !(params.tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    let mut rng = seeded_rng(params.seed);
    let init = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut w = symmetric_decorrelation(&init);
    let zt = z.transpose();
    let inv_n = 1.0 / n as f64;
    let mut report = ConvergenceReport { converged: false, iterations: 0, final_delta: f64::INFINITY };
    let mut gx = DMatrix::zeros(k, n);
    for it in 1..=params.max_iter {
        let wx = &w * z;
        let mut mean_gp = vec![0.0; k];
        for c in 0..n {
            for r in 0..k {
                let (g, gp) = params.contrast.eval(wx[(r, c)]);
                gx[(r, c)] = g;
                mean_gp[r] += gp;
            }
        }
        let mut w_new = (&gx * &zt) * inv_n;
        for r in 0..k {
            let d = mean_gp[r] * inv_n;
            for c in 0..k {
                w_new[(r, c)] -= d * w[(r, c)];
            }
        }
        let w_new = symmetric_decorrelation(&w_new);
        let delta = (0..k)
            .map(|r| (1.0 - w_new.row(r).dot(&w.row(r)).abs()).abs())
            .fold(0.0, f64::max);
        w = w_new;
        report.iterations = it;
        report.final_delta = delta;
        if delta < params.tol {
            report.converged = true;
            break;
        }
    }
    Ok(FastIcaResult { rotation: w, report })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcaModel {
    /// `n_variables × k`; column `i` is the signature of source `i`.
    pub mixing: DMatrix<f64>,
    /// `k × n_variables`.
    pub unmixing: DMatrix<f64>,
    pub whitening: WhiteningTransform,
    pub contrast: Contrast,
    pub report: ConvergenceReport,
    pub vocab_hash: String,
}

/// Unmixing = rotation · projection and `A` = inverse projection · rotationᵀ.
/// Each source's sign is flipped so its largest-magnitude loading is positive.
pub fn compose_model(
    whitening: WhiteningTransform,
    rotation: &DMatrix<f64>,
    contrast: Contrast,
    report: ConvergenceReport,
    vocab_hash: &str,
) -> Result<IcaModel> {
    if rotation.nrows() != whitening.k || rotation.ncols() != whitening.k {
        return Err(Error::shape(
            format!("{0}x{0} rotation", whitening.k),
            format!("{}x{}", rotation.nrows(), rotation.ncols()),
        ));
    }
    let mut unmixing = rotation * &whitening.projection;
    let mut mixing = &whitening.inverse_projection * rotation.transpose();
    for j in 0..mixing.ncols() {
        let col = mixing.column(j);
        let peak = col.iter().copied().fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m });
        if peak < 0.0 {
            mixing.column_mut(j).neg_mut();
            unmixing.row_mut(j).neg_mut();
        }
    }
    Ok(IcaModel { mixing, unmixing, whitening, contrast, report, vocab_hash: vocab_hash.to_string() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcaParams {
    pub k: usize,
    pub fastica: FastIcaParams,
    /// Fail instead of lowering `k` to the numerical rank.
    pub strict: bool,
}

#[derive(Debug, Clone)]
pub struct IcaFit {
    pub model: IcaModel,
    pub reduced_from: Option<usize>,
}

/// Whiten, run FastICA and compose the model.
pub fn fit(x: &DMatrix<f64>, params: &IcaParams, vocab_hash: &str) -> Result<IcaFit> {
    let white = whiten(x, params.k, params.strict)?;
    let rot = fastica(&white.data, &params.fastica)?;
    let model = compose_model(white.transform, &rot.rotation, params.fastica.contrast, rot.report, vocab_hash)?;
    Ok(IcaFit { model, reduced_from: white.reduced_from })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceMatrix {
    /// `k × n_columns`.
    pub values: DMatrix<f64>,
    pub provenance: Vec<ColumnRef>,
}

impl IcaModel {
    pub fn k(&self) -> usize {
        self.mixing.ncols()
    }

    pub fn n_variables(&self) -> usize {
        self.mixing.nrows()
    }

    /// `S = unmixing · (X − mean)`.
    pub fn transform_values(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.n_variables() {
            return Err(Error::shape(format!("{} rows", self.n_variables()), format!("{} rows", x.nrows())));
        }
        let mut xc = x.clone();
        for mut col in xc.column_iter_mut() {
            col -= &self.whitening.mean;
        }
        Ok(&self.unmixing * xc)
    }

    pub fn transform(&self, x: &CrossSectionMatrix) -> Result<SourceMatrix> {
        Ok(SourceMatrix {
            values: self.transform_values(&x.values)?,
            provenance: x.provenance.clone(),
        })
    }

    /// The source's column of `A`, sorted by descending `|loading|`, top `top_m`.
    pub fn signature(&self, source: usize, top_m: usize, labels: &[String]) -> Result<Vec<(String, f64)>> {
        if source >= self.k() {
            return Err(Error::invalid(format!("source {source} out of range (k = {})", self.k())));
        }
        if labels.len() != self.n_variables() {
            return Err(Error::shape(self.n_variables(), labels.len()));
        }
        let col = self.mixing.column(source);
        let mut idx: Vec<usize> = (0..col.len()).collect();
        idx.sort_by(|&a, &b| col[b].abs().total_cmp(&col[a].abs()).then(a.cmp(&b)));
        Ok(idx
            .into_iter()
            .take(top_m)
            .map(|i| (labels[i].clone(), col[i]))
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl SourceMatrix {
    pub fn write(&self, mut out: impl std::io::Write) -> Result<()> {
        crate::matrix::write_dense(&self.values, "sources", &mut out)
    }
}
