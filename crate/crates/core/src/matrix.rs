//! Random cross sections of curvesets stacked into a dense matrix, plus
//! robust per-row standardization.
//!
//! Rows follow the vocabulary order, columns are `(patient, day)` cross
//! sections.

use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curves::{Curveset, Grid};
use crate::error::{Error, Result};
use crate::stats::{derive_seed, quantile_sorted, seeded_rng, std_dev};
use crate::DAYS_PER_YEAR;

/// Provenance of one column: the patient and the sampled day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRef {
    pub patient_id: String,
    pub day: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectionMatrix {
    /// `n_variables × n_columns`.
    pub values: DMatrix<f64>,
    pub provenance: Vec<ColumnRef>,
    pub vocab_hash: String,
}

impl CrossSectionMatrix {
    pub fn n_variables(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_columns(&self) -> usize {
        self.values.ncols()
    }

    /// Same provenance and vocabulary, new values.
    pub fn with_values(&self, values: DMatrix<f64>) -> Self {
        CrossSectionMatrix {
            values,
            provenance: self.provenance.clone(),
            vocab_hash: self.vocab_hash.clone(),
        }
    }

    /// Header `# rows=R cols=C vocab=HASH`, then one comma-separated line per
    /// row with shortest round-trip decimal values.
    pub fn write_values(&self, mut out: impl Write) -> Result<()> {
        write_dense(&self.values, &self.vocab_hash, &mut out)
    }

    pub fn write_provenance(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["patient_id", "day"]).map_err(csv_io)?;
        for c in &self.provenance {
            w.write_record([c.patient_id.as_str(), &c.day.to_string()])
                .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(values: impl BufRead, provenance: impl Read) -> Result<Self> {
        let (values, vocab_hash) = read_dense(values)?;
        let mut rdr = csv::Reader::from_reader(provenance);
        let mut prov = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row.map_err(csv_io)?;
            let day = row
                .get(1)
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| Error::Parse { line: i + 2, message: "bad provenance row".into() })?;
            prov.push(ColumnRef { patient_id: row[0].to_string(), day });
        }
        if prov.len() != values.ncols() {
            return Err(Error::shape(values.ncols(), prov.len()));
        }
        Ok(CrossSectionMatrix { values, provenance: prov, vocab_hash })
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub(crate) fn write_dense(m: &DMatrix<f64>, tag: &str, out: &mut impl Write) -> Result<()> {
    writeln!(out, "# rows={} cols={} vocab={}", m.nrows(), m.ncols(), tag)?;
    let mut line = String::new();
    for r in 0..m.nrows() {
        line.clear();
        for c in 0..m.ncols() {
            if c > 0 {
                line.push(',');
            }
            line.push_str(&m[(r, c)].to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub(crate) fn read_dense(input: impl BufRead) -> Result<(DMatrix<f64>, String)> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, message: "missing header".into() })??;
    let mut rows = None;
    let mut cols = None;
    let mut tag = String::new();
    for field in header.trim_start_matches('#').split_whitespace() {
        match field.split_once('=') {
            Some(("rows", v)) => rows = v.parse::<usize>().ok(),
            Some(("cols", v)) => cols = v.parse::<usize>().ok(),
            Some(("vocab", v)) => tag = v.to_string(),
            _ => {}
        }
    }
    let (Some(rows), Some(cols)) = (rows, cols) else {
        return Err(Error::Parse { line: 1, message: format!("bad header `{header}`") });
    };
    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() && cols == 0 {
            continue;
        }
        let before = data.len();
        for s in line.split(',') {
            data.push(s.parse::<f64>().map_err(|_| Error::Parse {
                line: i + 2,
                message: format!("bad value `{s}`"),
            })?);
        }
        if data.len() - before != cols {
            return Err(Error::Parse { line: i + 2, message: format!("expected {cols} values") });
        }
    }
    if data.len() != rows * cols {
        return Err(Error::shape(rows * cols, data.len()));
    }
    Ok((DMatrix::from_row_slice(rows, cols, &data), tag))
}

/// Number of cross sections for a span: `max(1, round(years × density))`.
pub fn sample_count(span_days: f64, density: f64) -> usize {
    ((span_days / DAYS_PER_YEAR * density).round() as usize).max(1)
}

/// Uniform sample days, with replacement, sorted.
pub fn sample_times(grid: Grid, density: f64, rng: &mut impl Rng) -> Result<Vec<i64>> {
    if !(density > 0.0) {
        return Err(Error::invalid("density must be positive"));
    }
    let n = sample_count(grid.len() as f64, density);
    let mut days: Vec<i64> = (0..n).map(|_| rng.random_range(grid.first..=grid.last)).collect();
    days.sort_unstable();
    Ok(days)
}

/// Columns in patient order, then day order. Each patient samples with its
/// own sub-seed derived from `(seed, patient_id)`.
pub fn assemble_matrix(
    curvesets: &[Curveset],
    vocab_hash: &str,
    density: f64,
    seed: u64,
) -> Result<CrossSectionMatrix> {
    let Some(first) = curvesets.first() else {
        return Err(Error::invalid("no curvesets to sample"));
    };
    let n_rows = first.curves.len();
    let mut columns: Vec<f64> = Vec::new();
    let mut provenance = Vec::new();
    for cs in curvesets {
        if cs.curves.len() != n_rows {
            return Err(Error::shape(n_rows, cs.curves.len()));
        }
        let mut rng = seeded_rng(derive_seed(seed, &format!("sample/{}", cs.patient_id)));
        for day in sample_times(cs.grid, density, &mut rng)? {
            columns.extend(cs.cross_section(day)?);
            provenance.push(ColumnRef { patient_id: cs.patient_id.clone(), day });
        }
    }
    let values = DMatrix::from_column_slice(n_rows, provenance.len(), &columns);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in cross-section matrix"));
    }
    Ok(CrossSectionMatrix { values, provenance, vocab_hash: vocab_hash.to_string() })
}

/// Per-row center and positive scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

/// Median center; interquartile-range scale, falling back to the standard
/// deviation and then to 1 for constant rows.
pub fn fit_standardizer(x: &DMatrix<f64>) -> Result<Standardizer> {
    if x.ncols() < 2 {
        return Err(Error::invalid("standardizer needs at least two columns"));
    }
    let mut center = Vec::with_capacity(x.nrows());
    let mut scale = Vec::with_capacity(x.nrows());
    for row in x.row_iter() {
        let mut v: Vec<f64> = row.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        let med = quantile_sorted(&v, 0.5).expect("non-empty row");
        let iqr = quantile_sorted(&v, 0.75).unwrap() - quantile_sorted(&v, 0.25).unwrap();
        let s = if iqr > 0.0 {
            iqr
        } else {
            let sd = std_dev(&v);
            if sd > 0.0 { sd } else { 1.0 }
        };
        center.push(med);
        scale.push(s);
    }
    Ok(Standardizer { center, scale })
}

impl Standardizer {
    fn check(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.nrows() != self.center.len() {
            return Err(Error::shape(format!("{} rows", self.center.len()), format!("{} rows", x.nrows())));
        }
        Ok(())
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| {
            (x[(r, c)] - self.center[r]) / self.scale[r]
        }))
    }

    pub fn invert(&self, x_std: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(x_std)?;
        Ok(DMatrix::from_fn(x_std.nrows(), x_std.ncols(), |r, c| {
            x_std[(r, c)] * self.scale[r] + self.center[r]
        }))
    }

    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.center.len() {
            return Err(Error::shape(self.center.len(), x.len()));
        }
        Ok(x.iter()
            .zip(self.center.iter().zip(&self.scale))
            .map(|(v, (c, s))| (v - c) / s)
            .collect())
    }
}
