//! Turn synthetic dataset columns into episodic event records so the whole
//! curve/matrix machinery can be run against known ground truth.
//!
//! Each column becomes one patient. Measurement variables follow a smooth
//! trajectory `v + a sin(2π (t − t₀) / P)` that passes through the column
//! value `v` at the patient's index day `t₀`, observed on a random subset of
//! days. Code variables emit Poisson event counts per day at rate
//! `base · exp(gain · v)`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::scm::SyntheticDataset;
use crate::error::{Error, Result};
use crate::ingest::{Demographics, EventRecord, Modality, PatientRecord};
use crate::stats::seeded_rng;
use crate::DAYS_PER_YEAR;

pub const SEX_CATEGORIES: [&str; 2] = ["F", "M"];
pub const RACE_CATEGORIES: [&str; 3] = ["A", "B", "C"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderParams {
    pub span_days: i64,
    /// Probability that a measurement is observed on a given day.
    pub obs_rate: f64,
    /// Fraction of variables rendered as condition codes.
    pub code_fraction: f64,
    /// Codes per day at value 0.
    pub code_base_rate: f64,
    pub code_gain: f64,
    /// Largest trajectory amplitude; each variable/patient draws `a` uniformly in `[0, drift]`.
    pub drift: f64,
    /// Standard deviation of additive measurement noise.
    pub noise_sd: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams {
            span_days: 365,
            obs_rate: 0.05,
            code_fraction: 0.25,
            code_base_rate: 1.0,
            code_gain: 0.3,
            drift: 0.3,
            noise_sd: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedCorpus {
    pub records: Vec<PatientRecord>,
    /// Index day per patient (dataset column order).
    pub index_days: Vec<i64>,
    /// Vocabulary id of each dataset variable.
    pub variable_ids: Vec<String>,
    /// Modality each dataset variable was rendered as.
    pub modalities: Vec<Modality>,
}

pub fn patient_id(column: usize) -> String {
    format!("P{column:06}")
}

/// Which variables become codes: the last `round(code_fraction · n)` ones.
pub fn code_variables(n_vars: usize, code_fraction: f64) -> Vec<bool> {
    let n_codes = ((n_vars as f64 * code_fraction).round() as usize).min(n_vars);
    (0..n_vars).map(|i| i >= n_vars - n_codes).collect()
}

pub fn render_events(dataset: &SyntheticDataset, params: &RenderParams, seed: u64) -> Result<RenderedCorpus> {
    if params.span_days < 30 {
        return Err(Error::invalid("span must be at least 30 days"));
    }
    if !(params.obs_rate > 0.0 && params.obs_rate <= 1.0) {
        return Err(Error::invalid("obs_rate must lie in (0, 1]"));
    }
    let (n_vars, n) = dataset.x_true.shape();
    let is_code = code_variables(n_vars, params.code_fraction);
    let variable_ids: Vec<String> = (0..n_vars)
        .map(|i| if is_code[i] { format!("code{i:02}") } else { format!("lab{i:02}") })
        .collect();
    let modalities = is_code
        .iter()
        .map(|&c| if c { Modality::ConditionCode } else { Modality::Measurement })
        .collect();
    let mut rng = seeded_rng(seed);
    let last = params.span_days - 1;
    let period = params.span_days as f64;
    let mut records = Vec::with_capacity(n);
    let mut index_days = Vec::with_capacity(n);
    for j in 0..n {
        let pid = patient_id(j);
        let t0 = rng.random_range(0..=last);
        index_days.push(t0);
        let mut events = Vec::new();
        for i in 0..n_vars {
            let v = dataset.x_true[(i, j)];
            if is_code[i] {
                let rate = params.code_base_rate * (params.code_gain * v).exp();
                let poisson = Poisson::new(rate).map_err(|e| Error::invalid(e.to_string()))?;
                for day in 0..=last {
                    let count = poisson.sample(&mut rng) as usize;
                    for _ in 0..count {
                        events.push(EventRecord {
                            patient_id: pid.clone(),
                            day,
                            modality: Modality::ConditionCode,
                            variable_id: variable_ids[i].clone(),
                            value: None,
                        });
                    }
                }
            } else {
                let amp = rng.random_range(0.0..=params.drift.max(0.0));
                let mut observed = false;
                for day in 0..=last {
                    if rng.random::<f64>() < params.obs_rate {
                        let phase = 2.0 * std::f64::consts::PI * (day - t0) as f64 / period;
                        let noise = if params.noise_sd > 0.0 {
                            params.noise_sd * rng.sample::<f64, _>(rand_distr::StandardNormal)
                        } else {
                            0.0
                        };
                        let value = if day == t0 { v + noise } else { v + amp * phase.sin() + noise };
                        events.push(EventRecord {
                            patient_id: pid.clone(),
                            day,
                            modality: Modality::Measurement,
                            variable_id: variable_ids[i].clone(),
                            value: Some(value),
                        });
                        observed = true;
                    }
                }
                if !observed {
                    events.push(EventRecord {
                        patient_id: pid.clone(),
                        day: t0,
                        modality: Modality::Measurement,
                        variable_id: variable_ids[i].clone(),
                        value: Some(v),
                    });
                }
            }
        }
        let mut rec = PatientRecord::new(pid.clone(), events);
        let birth_years = rng.random_range(20.0..80.0);
        rec.demographics = Some(Demographics {
            patient_id: pid,
            sex: SEX_CATEGORIES[rng.random_range(0..SEX_CATEGORIES.len())].to_string(),
            race: RACE_CATEGORIES[rng.random_range(0..RACE_CATEGORIES.len())].to_string(),
            birth_day: -(birth_years * DAYS_PER_YEAR).round() as i64,
        });
        records.push(rec);
    }
    Ok(RenderedCorpus { records, index_days, variable_ids, modalities })
}
