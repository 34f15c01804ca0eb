//! Daily-resolution trajectories for every vocabulary row of a patient.
//!
//! Each modality has its own inference rule:
//!
//! * measurements: monotone piecewise-cubic Hermite interpolation
//!   (Fritsch–Carlson slopes), held constant outside the observed range;
//! * condition codes: averaged randomly shifted histograms of the code days,
//!   in codes per day;
//! * medications: a binary on-interval stretched toward the nearest
//!   reconciliation dates;
//! * demographics: constant one-hot rows plus an age row in years.
//!
//! Variables absent from a record are imputed: the population median for
//! measurements, one code per 20 years for condition codes, and 0 for
//! medications.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    DemographicCategories, Demographics, Modality, PatientRecord, PopulationStats, RowKind,
    VariableVocabulary,
};
use crate::stats::{derive_seed, seeded_rng};
use crate::DAYS_PER_YEAR;

/// Imputed intensity for a condition code never seen in a record:
/// one code per 20 years, in codes per day.
pub const BASELINE_CODE_INTENSITY: f64 = 1.0 / (20.0 * DAYS_PER_YEAR);

/// Closed day interval `[first, last]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub first: i64,
    pub last: i64,
}

impl Grid {
    pub fn new(first: i64, last: i64) -> Result<Self> {
        if last < first {
            return Err(Error::invalid(format!("empty grid [{first}, {last}]")));
        }
        Ok(Grid { first, last })
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, day: i64) -> bool {
        day >= self.first && day <= self.last
    }

    pub fn days(&self) -> impl Iterator<Item = i64> {
        self.first..=self.last
    }

    fn check(&self, day: i64) -> Result<()> {
        if !self.contains(day) {
            return Err(Error::invalid(format!(
                "day {day} outside grid [{}, {}]",
                self.first, self.last
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Observed,
    Imputed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub grid: Grid,
    /// One value per grid day.
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl Curve {
    fn constant(grid: Grid, value: f64, provenance: Provenance) -> Self {
        Curve {
            grid,
            values: vec![value; grid.len()],
            provenance,
        }
    }

    pub fn at(&self, day: i64) -> Option<f64> {
        if !self.grid.contains(day) {
            return None;
        }
        self.values.get((day - self.grid.first) as usize).copied()
    }
}

/// Sign with a true zero, unlike `f64::signum`.
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Monotone piecewise cubic Hermite interpolant.
#[derive(Debug, Clone)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    /// `xs` must be strictly increasing and every value finite.
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::invalid("pchip needs matching non-empty x and y"));
        }
        if let Some(w) = xs.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(if w[1] == w[0] {
                format!("duplicate observation day {}", w[0])
            } else {
                "observation days not increasing".to_string()
            }));
        }
        if xs.iter().chain(ys).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite observation"));
        }
        Ok(Pchip {
            slopes: fritsch_carlson_slopes(xs, ys),
            xs: xs.to_vec(),
            ys: ys.to_vec(),
        })
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Evaluate, holding the boundary values outside `[x_0, x_{n-1}]`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        // first index with xs[i] > x, so x lies in [xs[i-1], xs[i])
        let i = self.xs.partition_point(|&xi| xi <= x);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (y0, y1) = (self.ys[i - 1], self.ys[i]);
        let (d0, d1) = (self.slopes[i - 1], self.slopes[i]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }
}

/// Node derivatives: weighted harmonic mean of adjacent secants at interior
/// nodes (zero where the secants change sign or vanish), and the
/// shape-preserving three-point formula at the ends.
fn fritsch_carlson_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n == 1 {
        return vec![0.0];
    }
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        if sign(a) * sign(b) > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if sign(d) != sign(m0) {
        0.0
    } else if sign(m0) != sign(m1) && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

/// Interpolate `(day, value)` observations onto every day of `grid`.
pub fn interpolate_measurement(obs: &[(i64, f64)], grid: Grid) -> Result<Curve> {
    if obs.is_empty() {
        return Err(Error::invalid("no observations to interpolate"));
    }
    for &(day, _) in obs {
        grid.check(day)?;
    }
    let xs: Vec<f64> = obs.iter().map(|&(d, _)| d as f64).collect();
    let ys: Vec<f64> = obs.iter().map(|&(_, v)| v).collect();
    let pchip = Pchip::new(&xs, &ys)?;
    Ok(Curve {
        grid,
        values: grid.days().map(|d| pchip.eval(d as f64)).collect(),
        provenance: Provenance::Observed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RashParams {
    pub n_histograms: usize,
    /// Bin width as a fraction of the span length (floored at one day).
    pub bandwidth_fraction: f64,
    pub seed: u64,
}

impl Default for RashParams {
    fn default() -> Self {
        RashParams {
            n_histograms: 64,
            bandwidth_fraction: 0.1,
            seed: 0,
        }
    }
}

/// Code intensity in codes per day from averaged randomly shifted histograms.
///
/// Every histogram is laid over the patient's own span only. Bins are
/// clipped to the span and each bin count is divided by the number of grid
/// days the bin covers, so a histogram's daily sum equals the event count
/// regardless of where the span boundaries cut the bins.
pub fn code_intensity(event_days: &[i64], grid: Grid, params: &RashParams) -> Result<Curve> {
    if params.n_histograms == 0 {
        return Err(Error::invalid("n_histograms must be at least 1"));
    }
    if !(params.bandwidth_fraction > 0.0) {
        return Err(Error::invalid("bandwidth_fraction must be positive"));
    }
    for &d in event_days {
        grid.check(d)?;
    }
    let len = grid.len();
    let width = (params.bandwidth_fraction * len as f64).max(1.0);
    let mut rng = seeded_rng(params.seed);
    let mut acc = vec![0.0; len];
    let mut bin_of = vec![0usize; len];
    for _ in 0..params.n_histograms {
        let shift: f64 = rng.random_range(0.0..width);
        // offset 0 (the first grid day) lands in bin floor(shift / width) = 0
        for (i, b) in bin_of.iter_mut().enumerate() {
            *b = ((i as f64 + shift) / width).floor() as usize;
        }
        let n_bins = bin_of[len - 1] + 1;
        let mut days = vec![0usize; n_bins];
        let mut counts = vec![0usize; n_bins];
        for &b in &bin_of {
            days[b] += 1;
        }
        for &d in event_days {
            counts[bin_of[(d - grid.first) as usize]] += 1;
        }
        for (a, &b) in acc.iter_mut().zip(&bin_of) {
            *a += counts[b] as f64 / days[b] as f64;
        }
    }
    let scale = 1.0 / params.n_histograms as f64;
    Ok(Curve {
        grid,
        values: acc.into_iter().map(|a| a * scale).collect(),
        provenance: Provenance::Observed,
    })
}

/// Binary taking/not-taking curve. The on-interval runs from the first to
/// the last mention, stretched back to the day after the nearest earlier
/// reconciliation and forward to the day before the nearest later one.
pub fn medication_curve(mention_days: &[i64], reconciliation_days: &[i64], grid: Grid) -> Result<Curve> {
    let (Some(&first), Some(&last)) = (mention_days.iter().min(), mention_days.iter().max()) else {
        return Err(Error::invalid("medication curve needs at least one mention"));
    };
    for &d in mention_days.iter().chain(reconciliation_days) {
        grid.check(d)?;
    }
    let start = reconciliation_days
        .iter()
        .filter(|&&r| r < first)
        .max()
        .map_or(first, |&r| r + 1);
    let end = reconciliation_days
        .iter()
        .filter(|&&r| r > last)
        .min()
        .map_or(last, |&r| r - 1);
    Ok(Curve {
        grid,
        values: grid
            .days()
            .map(|d| if d >= start && d <= end { 1.0 } else { 0.0 })
            .collect(),
        provenance: Provenance::Observed,
    })
}

/// One-hot sex rows, one-hot race rows (category order as declared, sorted),
/// then age in years.
pub fn demographic_curves(
    d: &Demographics,
    categories: &DemographicCategories,
    grid: Grid,
) -> Result<Vec<Curve>> {
    if !categories.sex.contains(&d.sex) {
        return Err(Error::UnknownCategory { field: "sex", value: d.sex.clone() });
    }
    if !categories.race.contains(&d.race) {
        return Err(Error::UnknownCategory { field: "race", value: d.race.clone() });
    }
    let one_hot = |cats: &[String], value: &str| -> Vec<Curve> {
        cats.iter()
            .map(|c| Curve::constant(grid, if c == value { 1.0 } else { 0.0 }, Provenance::Observed))
            .collect()
    };
    let mut out = one_hot(&categories.sex, &d.sex);
    out.extend(one_hot(&categories.race, &d.race));
    out.push(age_curve(d.birth_day, grid));
    Ok(out)
}

pub fn age_curve(birth_day: i64, grid: Grid) -> Curve {
    Curve {
        grid,
        values: grid.days().map(|d| (d - birth_day) as f64 / DAYS_PER_YEAR).collect(),
        provenance: Provenance::Observed,
    }
}

/// Curve for a variable with no events in the record.
pub fn impute_missing(
    variable_id: &str,
    modality: Modality,
    grid: Grid,
    stats: &PopulationStats,
) -> Result<Curve> {
    let value = match modality {
        Modality::Measurement => stats
            .median(variable_id)
            .ok_or_else(|| Error::NoStatistics(variable_id.to_string()))?,
        Modality::ConditionCode => BASELINE_CODE_INTENSITY,
        Modality::Medication => 0.0,
        Modality::Reconciliation => {
            return Err(Error::invalid("reconciliation dates are not a curve"));
        }
    };
    Ok(Curve::constant(grid, value, Provenance::Imputed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    pub n_histograms: usize,
    pub bandwidth_fraction: f64,
    /// Master seed; each (patient, code) pair gets a derived sub-seed.
    pub seed: u64,
}

impl Default for CurveParams {
    fn default() -> Self {
        let r = RashParams::default();
        CurveParams {
            n_histograms: r.n_histograms,
            bandwidth_fraction: r.bandwidth_fraction,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curveset {
    pub patient_id: String,
    pub grid: Grid,
    /// One curve per vocabulary row, in vocabulary order.
    pub curves: Vec<Curve>,
}

impl Curveset {
    /// Every curve's value at `day`, in vocabulary order.
    pub fn cross_section(&self, day: i64) -> Result<Vec<f64>> {
        self.grid.check(day)?;
        let i = (day - self.grid.first) as usize;
        Ok(self.curves.iter().map(|c| c.values[i]).collect())
    }

    pub fn imputed_count(&self) -> usize {
        self.curves
            .iter()
            .filter(|c| c.provenance == Provenance::Imputed)
            .count()
    }

    /// Debug dump: one line per vocabulary row, one column per grid day.
    pub fn write_dump(&self, mut out: impl Write) -> Result<()> {
        for c in &self.curves {
            let line: Vec<String> = c.values.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Inverse of [`Curveset::write_dump`]; provenance is supplied by the caller.
    pub fn read_dump(
        patient_id: &str,
        grid: Grid,
        provenance: &[Provenance],
        input: impl BufRead,
    ) -> Result<Self> {
        let mut curves = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let values = line
                .split(',')
                .map(|s| {
                    s.parse::<f64>().map_err(|_| Error::Parse {
                        line: i + 1,
                        message: format!("bad curve value `{s}`"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != grid.len() {
                return Err(Error::shape(grid.len(), values.len()));
            }
            let provenance = *provenance.get(i).ok_or_else(|| Error::shape(provenance.len(), i + 1))?;
            curves.push(Curve { grid, values, provenance });
        }
        if curves.len() != provenance.len() {
            return Err(Error::shape(provenance.len(), curves.len()));
        }
        Ok(Curveset {
            patient_id: patient_id.to_string(),
            grid,
            curves,
        })
    }
}

/// Build the aligned curveset of one record over its own span.
///
/// Several measurements of the same variable on the same day are averaged
/// before interpolation.
pub fn build_curveset(
    record: &PatientRecord,
    stats: &PopulationStats,
    vocab: &VariableVocabulary,
    categories: &DemographicCategories,
    params: &CurveParams,
) -> Result<Curveset> {
    let grid = Grid::new(record.span.0, record.span.1)?;
    let groups = record.grouped();
    let mut curves = Vec::with_capacity(vocab.len());
    let mut demo: Option<std::vec::IntoIter<Curve>> = None;
    for row in vocab.rows() {
        let curve = match row.kind {
            RowKind::Measurement => match groups.get(&(Modality::Measurement, row.id.as_str())) {
                Some(events) => {
                    let mut by_day: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
                    for e in events {
                        let v = e.value.ok_or_else(|| {
                            Error::invalid(format!("measurement `{}` without value", row.id))
                        })?;
                        let slot = by_day.entry(e.day).or_default();
                        slot.0 += v;
                        slot.1 += 1;
                    }
                    let obs: Vec<(i64, f64)> =
                        by_day.into_iter().map(|(d, (s, n))| (d, s / n as f64)).collect();
                    interpolate_measurement(&obs, grid)?
                }
                None => impute_missing(&row.id, Modality::Measurement, grid, stats)?,
            },
            RowKind::ConditionCode => match groups.get(&(Modality::ConditionCode, row.id.as_str())) {
                Some(events) => {
                    let days: Vec<i64> = events.iter().map(|e| e.day).collect();
                    let rash = RashParams {
                        n_histograms: params.n_histograms,
                        bandwidth_fraction: params.bandwidth_fraction,
                        seed: derive_seed(params.seed, &format!("rash/{}/{}", record.patient_id, row.id)),
                    };
                    code_intensity(&days, grid, &rash)?
                }
                None => impute_missing(&row.id, Modality::ConditionCode, grid, stats)?,
            },
            RowKind::Medication => match groups.get(&(Modality::Medication, row.id.as_str())) {
                Some(events) => {
                    let mentions: Vec<i64> = events.iter().map(|e| e.day).collect();
                    let recs: Vec<i64> = groups
                        .get(&(Modality::Reconciliation, row.id.as_str()))
                        .map(|rs| rs.iter().map(|e| e.day).collect())
                        .unwrap_or_default();
                    medication_curve(&mentions, &recs, grid)?
                }
                None => impute_missing(&row.id, Modality::Medication, grid, stats)?,
            },
            RowKind::Sex | RowKind::Race | RowKind::Age => {
                if demo.is_none() {
                    let d = record.demographics.as_ref().ok_or_else(|| {
                        Error::invalid(format!("patient `{}` has no demographics", record.patient_id))
                    })?;
                    demo = Some(demographic_curves(d, categories, grid)?.into_iter());
                }
                demo.as_mut()
                    .and_then(Iterator::next)
                    .ok_or_else(|| Error::invalid("vocabulary and demographic categories disagree"))?
            }
        };
        curves.push(curve);
    }
    Ok(Curveset {
        patient_id: record.patient_id.clone(),
        grid,
        curves,
    })
}
