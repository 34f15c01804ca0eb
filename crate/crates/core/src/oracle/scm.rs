//! Linear acyclic structural causal models with non-Gaussian exogenous
//! sources and a logistic outcome that is a sink.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{sigmoid, LogisticModel};

/// Smallest edge-weight magnitude, keeping every edge detectable.
pub const MIN_EDGE_WEIGHT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFamily {
    Laplace,
    Uniform,
    /// Symmetric two-component Gaussian mixture at ±0.9 with variance 0.19.
    Mixture,
    Gaussian,
}

impl SourceFamily {
    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "laplace" => SourceFamily::Laplace,
            "uniform" => SourceFamily::Uniform,
            "mixture" => SourceFamily::Mixture,
            "gaussian" => SourceFamily::Gaussian,
            _ => return None,
        })
    }

    /// One zero-mean, unit-variance draw.
    pub fn sample(self, rng: &mut impl Rng) -> f64 {
        match self {
            SourceFamily::Laplace => {
                let u: f64 = rng.random::<f64>() - 0.5;
                let b = std::f64::consts::FRAC_1_SQRT_2;
                -b * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
            }
            SourceFamily::Uniform => {
                let h = 3f64.sqrt();
                rng.random_range(-h..h)
            }
            SourceFamily::Mixture => {
                let mu = if rng.random::<bool>() { 0.9 } else { -0.9 };
                let z: f64 = StandardNormal.sample(rng);
                mu + 0.19f64.sqrt() * z
            }
            SourceFamily::Gaussian => StandardNormal.sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyChoice {
    All(SourceFamily),
    /// Each source drawn from {laplace, uniform, mixture}.
    RandomNonGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScmParams {
    pub n_vars: usize,
    pub edge_density: f64,
    /// Edge magnitudes are uniform on `[MIN_EDGE_WEIGHT, max_weight]`, random sign.
    pub max_weight: f64,
    pub families: FamilyChoice,
    pub outcome_intercept: f64,
}

impl Default for ScmParams {
    fn default() -> Self {
        ScmParams {
            n_vars: 12,
            edge_density: 0.3,
            max_weight: 1.0,
            families: FamilyChoice::All(SourceFamily::Laplace),
            outcome_intercept: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpec {
    /// Outcome parents among the sources, ascending.
    pub sources: Vec<usize>,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScm {
    pub n_vars: usize,
    /// Strictly lower-triangular edge weights: `x = B x + s`.
    pub edges: DMatrix<f64>,
    pub families: Vec<SourceFamily>,
    pub scales: Vec<f64>,
    /// `(I − B)⁻¹`.
    pub mixing: DMatrix<f64>,
    pub outcome: OutcomeSpec,
    pub seed: u64,
}

impl SyntheticScm {
    /// Log-odds of the outcome given the sources.
    pub fn outcome_margin(&self, s: &[f64]) -> f64 {
        self.outcome.intercept
            + self
                .outcome
                .sources
                .iter()
                .zip(&self.outcome.weights)
                .map(|(&i, w)| w * s[i])
                .sum::<f64>()
    }

    /// The outcome mechanism as a dense logistic model over all sources.
    pub fn outcome_model(&self) -> LogisticModel {
        let mut weights = vec![0.0; self.n_vars];
        for (&i, &w) in self.outcome.sources.iter().zip(&self.outcome.weights) {
            weights[i] = w;
        }
        LogisticModel { weights, intercept: self.outcome.intercept }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn mixing_from_edges(edges: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = edges.nrows();
    let i_minus_b = DMatrix::<f64>::identity(n, n) - edges;
    i_minus_b
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::invalid("I − B is singular"))
}

pub fn generate_scm(params: &ScmParams, seed: u64) -> Result<SyntheticScm> {
    let n = params.n_vars;
    if n < 2 {
        return Err(Error::invalid("n_vars must be at least 2"));
    }
    if !(0.0..=1.0).contains(&params.edge_density) {
        return Err(Error::invalid("edge_density must lie in [0, 1]"));
    }
    if params.max_weight < MIN_EDGE_WEIGHT {
        return Err(Error::invalid(format!("max_weight must be at least {MIN_EDGE_WEIGHT}")));
    }
    let mut rng = crate::stats::seeded_rng(seed);
    let mut edges = DMatrix::zeros(n, n);
    for r in 1..n {
        for c in 0..r {
            if rng.random::<f64>() < params.edge_density {
                let mag = rng.random_range(MIN_EDGE_WEIGHT..=params.max_weight);
                edges[(r, c)] = if rng.random::<bool>() { mag } else { -mag };
            }
        }
    }
    let families: Vec<SourceFamily> = match params.families {
        FamilyChoice::All(f) => {
            if f == SourceFamily::Gaussian {
                return Err(Error::invalid("at most one source may be Gaussian"));
            }
            vec![f; n]
        }
        FamilyChoice::RandomNonGaussian => {
            let pool = [SourceFamily::Laplace, SourceFamily::Uniform, SourceFamily::Mixture];
            (0..n).map(|_| pool[rng.random_range(0..pool.len())]).collect()
        }
    };
    let n_out = (n / 5).max(2).min(n);
    let mut sources: Vec<usize> = sample(&mut rng, n, n_out).into_vec();
    sources.sort_unstable();
    let weights = sources
        .iter()
        .map(|_| {
            let mag = rng.random_range(0.5..=2.0);
            if rng.random::<bool>() { mag } else { -mag }
        })
        .collect();
    let mixing = mixing_from_edges(&edges)?;
    Ok(SyntheticScm {
        n_vars: n,
        edges,
        families,
        scales: vec![1.0; n],
        mixing,
        outcome: OutcomeSpec { sources, weights, intercept: params.outcome_intercept },
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    /// `n_vars × n`.
    pub x_true: DMatrix<f64>,
    /// `n_vars × n`.
    pub s_true: DMatrix<f64>,
    pub y: Vec<u8>,
    pub seed: u64,
}

/// Draw `n` columns: sources per family, `X = A S`, and
/// `Y ~ Bernoulli(σ(w·S + intercept))`.
pub fn sample_dataset(scm: &SyntheticScm, n: usize, seed: u64) -> Result<SyntheticDataset> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let mut rng = crate::stats::seeded_rng(seed);
    let k = scm.n_vars;
    let mut s_true = DMatrix::zeros(k, n);
    for c in 0..n {
        for r in 0..k {
            s_true[(r, c)] = scm.scales[r] * scm.families[r].sample(&mut rng);
        }
    }
    let x_true = &scm.mixing * &s_true;
    let y = s_true
        .column_iter()
        .map(|s| u8::from(rng.random::<f64>() < sigmoid(scm.outcome_margin(s.as_slice()))))
        .collect();
    Ok(SyntheticDataset { x_true, s_true, y, seed })
}

/// Ground-truth per-source attribution on the log-odds scale:
/// `w_i (s_i − m_i)` for outcome parents, 0 elsewhere.
pub fn true_ite(scm: &SyntheticScm, s_instance: &[f64], background_mean: &[f64]) -> Result<Vec<f64>> {
    if s_instance.len() != scm.n_vars || background_mean.len() != scm.n_vars {
        return Err(Error::shape(scm.n_vars, s_instance.len().min(background_mean.len())));
    }
    let mut out = vec![0.0; scm.n_vars];
    for (&i, &w) in scm.outcome.sources.iter().zip(&scm.outcome.weights) {
        out[i] = w * (s_instance[i] - background_mean[i]);
    }
    Ok(out)
}
