//! Event and demographics tables to per-patient records.
//!
//! Event table header: `patient_id,day,modality,variable_id,value`. The
//! `value` column is filled only for measurements. Demographics table header:
//! `patient_id,sex,race,birth_day`. Days are integers counted from a
//! patient-local epoch.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

pub const EVENT_HEADER: [&str; 5] = ["patient_id", "day", "modality", "variable_id", "value"];
pub const DEMOGRAPHICS_HEADER: [&str; 4] = ["patient_id", "sex", "race", "birth_day"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Measurement,
    ConditionCode,
    Medication,
    /// Medication reconciliation date; scoped to the drug named in `variable_id`.
    Reconciliation,
}

impl Modality {
    pub fn token(self) -> &'static str {
        match self {
            Modality::Measurement => "measurement",
            Modality::ConditionCode => "condition_code",
            Modality::Medication => "medication",
            Modality::Reconciliation => "reconciliation",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "measurement" => Modality::Measurement,
            "condition_code" => Modality::ConditionCode,
            "medication" => Modality::Medication,
            "reconciliation" => Modality::Reconciliation,
            _ => return None,
        })
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub patient_id: String,
    pub day: i64,
    pub modality: Modality,
    pub variable_id: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demographics {
    pub patient_id: String,
    pub sex: String,
    pub race: String,
    /// May be negative: birth usually precedes the first recorded event.
    pub birth_day: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub patient_id: String,
    /// All events, sorted by day; ties keep input order.
    pub events: Vec<EventRecord>,
    pub demographics: Option<Demographics>,
    /// Closed interval `[first_day, last_day]`.
    pub span: (i64, i64),
}

impl PatientRecord {
    pub fn new(patient_id: impl Into<String>, mut events: Vec<EventRecord>) -> Self {
        events.sort_by_key(|e| e.day);
        let span = match (events.first(), events.iter().map(|e| e.day).max()) {
            (Some(first), Some(last)) => (first.day, last),
            _ => (0, 0),
        };
        PatientRecord {
            patient_id: patient_id.into(),
            events,
            demographics: None,
            span,
        }
    }

    /// Number of days on the closed span.
    pub fn span_days(&self) -> usize {
        (self.span.1 - self.span.0 + 1).max(0) as usize
    }

    pub fn events_of(&self, modality: Modality) -> impl Iterator<Item = &EventRecord> {
        self.events.iter().filter(move |e| e.modality == modality)
    }

    /// Events grouped by `(modality, variable_id)`, day order preserved.
    pub fn grouped(&self) -> BTreeMap<(Modality, &str), Vec<&EventRecord>> {
        let mut out: BTreeMap<(Modality, &str), Vec<&EventRecord>> = BTreeMap::new();
        for e in &self.events {
            out.entry((e.modality, e.variable_id.as_str())).or_default().push(e);
        }
        out
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<bool> {
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if header.is_empty() {
        return Ok(false);
    }
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(parse_err(
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        ));
    }
    Ok(true)
}

fn reader(input: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input)
}

/// Parse an event table into one record per patient, ordered by patient id.
/// Records carry no demographics; see [`join_demographics`].
pub fn parse_events(input: impl Read) -> Result<Vec<PatientRecord>> {
    let mut rdr = reader(input);
    if !check_header(&mut rdr, &EVENT_HEADER)? {
        return Ok(Vec::new());
    }
    let mut by_patient: BTreeMap<String, Vec<EventRecord>> = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.len() != EVENT_HEADER.len() {
            return Err(parse_err(line, format!("expected 5 fields, found {}", row.len())));
        }
        let patient_id = row[0].trim();
        if patient_id.is_empty() {
            return Err(parse_err(line, "empty patient_id"));
        }
        let day: i64 = row[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("invalid day `{}`", &row[1])))?;
        if day < 0 {
            return Err(parse_err(line, format!("negative day {day}")));
        }
        let modality = Modality::from_token(row[2].trim())
            .ok_or_else(|| parse_err(line, format!("unknown modality `{}`", &row[2])))?;
        let variable_id = row[3].trim();
        if variable_id.is_empty() {
            return Err(parse_err(line, "empty variable_id"));
        }
        let raw_value = row[4].trim();
        let value = match (modality, raw_value.is_empty()) {
            (Modality::Measurement, true) => {
                return Err(parse_err(line, "measurement without value"));
            }
            (Modality::Measurement, false) => {
                let v: f64 = raw_value
                    .parse()
                    .map_err(|_| parse_err(line, format!("invalid value `{raw_value}`")))?;
                if !v.is_finite() {
                    return Err(parse_err(line, format!("non-finite value `{raw_value}`")));
                }
                Some(v)
            }
            (_, true) => None,
            (m, false) => {
                return Err(parse_err(line, format!("{m} event carries a value")));
            }
        };
        by_patient
            .entry(patient_id.to_string())
            .or_default()
            .push(EventRecord {
                patient_id: patient_id.to_string(),
                day,
                modality,
                variable_id: variable_id.to_string(),
                value,
            });
    }
    Ok(by_patient
        .into_iter()
        .map(|(id, events)| PatientRecord::new(id, events))
        .collect())
}

pub fn parse_demographics(input: impl Read) -> Result<Vec<Demographics>> {
    let mut rdr = reader(input);
    if !check_header(&mut rdr, &DEMOGRAPHICS_HEADER)? {
        return Ok(Vec::new());
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.len() != DEMOGRAPHICS_HEADER.len() {
            return Err(parse_err(line, format!("expected 4 fields, found {}", row.len())));
        }
        let patient_id = row[0].trim().to_string();
        if patient_id.is_empty() {
            return Err(parse_err(line, "empty patient_id"));
        }
        if !seen.insert(patient_id.clone()) {
            return Err(parse_err(line, format!("duplicate demographics for `{patient_id}`")));
        }
        let birth_day: i64 = row[3]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("invalid birth_day `{}`", &row[3])))?;
        out.push(Demographics {
            patient_id,
            sex: row[1].trim().to_string(),
            race: row[2].trim().to_string(),
            birth_day,
        });
    }
    out.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));
    Ok(out)
}

/// Attach demographics to records. Patients present only in the
/// demographics table are kept with an empty event list and span `[0, 0]`.
/// A patient with events but no demographics row is an error.
pub fn join_demographics(
    records: Vec<PatientRecord>,
    demographics: Vec<Demographics>,
) -> Result<Vec<PatientRecord>> {
    let mut by_id: BTreeMap<String, PatientRecord> = records
        .into_iter()
        .map(|r| (r.patient_id.clone(), r))
        .collect();
    let mut demo_ids = BTreeSet::new();
    for d in demographics {
        if !demo_ids.insert(d.patient_id.clone()) {
            return Err(Error::invalid(format!(
                "duplicate demographics for `{}`",
                d.patient_id
            )));
        }
        let id = d.patient_id.clone();
        by_id
            .entry(id.clone())
            .or_insert_with(|| PatientRecord::new(id, Vec::new()))
            .demographics = Some(d);
    }
    if let Some(r) = by_id.values().find(|r| r.demographics.is_none()) {
        return Err(Error::invalid(format!(
            "patient `{}` has no demographics row",
            r.patient_id
        )));
    }
    Ok(by_id.into_values().collect())
}

/// Write records back out in the event-table format, patient by patient.
pub fn write_events(records: &[PatientRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVENT_HEADER).map_err(csv_io)?;
    for r in records {
        for e in &r.events {
            let value = e.value.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([
                e.patient_id.as_str(),
                &e.day.to_string(),
                e.modality.token(),
                &e.variable_id,
                &value,
            ])
            .map_err(csv_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_demographics(records: &[PatientRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DEMOGRAPHICS_HEADER).map_err(csv_io)?;
    for d in records.iter().filter_map(|r| r.demographics.as_ref()) {
        w.write_record([
            d.patient_id.as_str(),
            &d.sex,
            &d.race,
            &d.birth_day.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// A violated record invariant, with the offending event index where one applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finding {
    PatientMismatch { index: usize },
    NegativeDay { index: usize },
    MissingValue { index: usize },
    NonFiniteValue { index: usize },
    UnexpectedValue { index: usize },
    OutsideSpan { index: usize },
    Unsorted { index: usize },
    EmptySpan,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::PatientMismatch { index } => write!(f, "event {index}: belongs to another patient"),
            Finding::NegativeDay { index } => write!(f, "event {index}: negative day"),
            Finding::MissingValue { index } => write!(f, "event {index}: measurement without value"),
            Finding::NonFiniteValue { index } => write!(f, "event {index}: non-finite value"),
            Finding::UnexpectedValue { index } => write!(f, "event {index}: non-measurement carries a value"),
            Finding::OutsideSpan { index } => write!(f, "event {index}: day outside span"),
            Finding::Unsorted { index } => write!(f, "event {index}: out of day order"),
            Finding::EmptySpan => write!(f, "span is empty"),
        }
    }
}

pub fn validate_record(r: &PatientRecord) -> Vec<Finding> {
    let mut findings = Vec::new();
    if r.span.1 < r.span.0 {
        findings.push(Finding::EmptySpan);
    }
    for (index, e) in r.events.iter().enumerate() {
        if e.patient_id != r.patient_id {
            findings.push(Finding::PatientMismatch { index });
        }
        if e.day < 0 {
            findings.push(Finding::NegativeDay { index });
        }
        match (e.modality, e.value) {
            (Modality::Measurement, None) => findings.push(Finding::MissingValue { index }),
            (Modality::Measurement, Some(v)) if !v.is_finite() => {
                findings.push(Finding::NonFiniteValue { index })
            }
            (Modality::Measurement, Some(_)) | (_, None) => {}
            (_, Some(_)) => findings.push(Finding::UnexpectedValue { index }),
        }
        if e.day < r.span.0 || e.day > r.span.1 {
            findings.push(Finding::OutsideSpan { index });
        }
        if index > 0 && r.events[index - 1].day > e.day {
            findings.push(Finding::Unsorted { index });
        }
    }
    findings
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    /// Median of all observed values, per measurement variable.
    pub medians: BTreeMap<String, f64>,
    /// Observation counts per modality and variable.
    pub counts: BTreeMap<Modality, BTreeMap<String, usize>>,
}

impl PopulationStats {
    pub fn median(&self, variable_id: &str) -> Option<f64> {
        self.medians.get(variable_id).copied()
    }

    pub fn count(&self, modality: Modality, variable_id: &str) -> usize {
        self.counts
            .get(&modality)
            .and_then(|m| m.get(variable_id))
            .copied()
            .unwrap_or(0)
    }
}

pub fn population_statistics(records: &[PatientRecord]) -> PopulationStats {
    let mut values: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut stats = PopulationStats::default();
    for e in records.iter().flat_map(|r| &r.events) {
        *stats
            .counts
            .entry(e.modality)
            .or_default()
            .entry(e.variable_id.clone())
            .or_default() += 1;
        if let (Modality::Measurement, Some(v)) = (e.modality, e.value) {
            values.entry(&e.variable_id).or_default().push(v);
        }
    }
    for (id, v) in values {
        if let Some(m) = stats::median(&v) {
            stats.medians.insert(id.to_string(), m);
        }
    }
    stats
}

/// Closed category sets for the categorical demographics.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemographicCategories {
    pub sex: Vec<String>,
    pub race: Vec<String>,
}

impl DemographicCategories {
    pub fn new(
        sex: impl IntoIterator<Item = impl Into<String>>,
        race: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        let norm = |it: Vec<String>| {
            let set: BTreeSet<String> = it.into_iter().collect();
            set.into_iter().collect::<Vec<_>>()
        };
        DemographicCategories {
            sex: norm(sex.into_iter().map(Into::into).collect()),
            race: norm(race.into_iter().map(Into::into).collect()),
        }
    }

    /// Categories observed in the records' demographics.
    pub fn observed(records: &[PatientRecord]) -> Self {
        let demos = records.iter().filter_map(|r| r.demographics.as_ref());
        let (sex, race): (Vec<_>, Vec<_>) = demos.map(|d| (d.sex.clone(), d.race.clone())).unzip();
        Self::new(sex, race)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Measurement,
    ConditionCode,
    Medication,
    Sex,
    Race,
    Age,
}

impl RowKind {
    pub fn modality(self) -> Option<Modality> {
        match self {
            RowKind::Measurement => Some(Modality::Measurement),
            RowKind::ConditionCode => Some(Modality::ConditionCode),
            RowKind::Medication => Some(Modality::Medication),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabRow {
    pub kind: RowKind,
    /// Variable id; the category for sex/race rows; `age` for the age row.
    pub id: String,
}

impl VocabRow {
    pub fn label(&self) -> String {
        match self.kind {
            RowKind::Sex => format!("sex={}", self.id),
            RowKind::Race => format!("race={}", self.id),
            _ => self.id.clone(),
        }
    }
}

/// Row order of every downstream matrix. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableVocabulary {
    rows: Vec<VocabRow>,
}

impl VariableVocabulary {
    pub fn rows(&self) -> &[VocabRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.rows.iter().map(VocabRow::label).collect()
    }

    /// Content hash used to tie matrices and models to this row order.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(&self.rows).expect("vocabulary serializes");
        stats::sha256_hex(&canonical)
    }
}

/// Measurements, condition codes and medications (each lexicographic by id),
/// then one row per sex category, one per race category, then age.
pub fn freeze_vocabulary(
    records: &[PatientRecord],
    categories: &DemographicCategories,
) -> VariableVocabulary {
    let mut ids: BTreeMap<RowKind, BTreeSet<&str>> = BTreeMap::new();
    for e in records.iter().flat_map(|r| &r.events) {
        let kind = match e.modality {
            Modality::Measurement => RowKind::Measurement,
            Modality::ConditionCode => RowKind::ConditionCode,
            Modality::Medication => RowKind::Medication,
            Modality::Reconciliation => continue,
        };
        ids.entry(kind).or_default().insert(&e.variable_id);
    }
    let mut rows = Vec::new();
    for kind in [RowKind::Measurement, RowKind::ConditionCode, RowKind::Medication] {
        for id in ids.get(&kind).into_iter().flatten() {
            rows.push(VocabRow { kind, id: id.to_string() });
        }
    }
    let sex: BTreeSet<&String> = categories.sex.iter().collect();
    let race: BTreeSet<&String> = categories.race.iter().collect();
    rows.extend(sex.into_iter().map(|c| VocabRow { kind: RowKind::Sex, id: c.clone() }));
    rows.extend(race.into_iter().map(|c| VocabRow { kind: RowKind::Race, id: c.clone() }));
    rows.push(VocabRow { kind: RowKind::Age, id: "age".to_string() });
    VariableVocabulary { rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(pid: &str, day: i64, m: Modality, id: &str, value: Option<f64>) -> EventRecord {
        EventRecord {
            patient_id: pid.into(),
            day,
            modality: m,
            variable_id: id.into(),
            value,
        }
    }

    #[test]
    fn parses_single_patient() {
        let text = "patient_id,day,modality,variable_id,value\n\
                    p1,0,measurement,hb,5.0\n\
                    p1,10,condition_code,I10,\n\
                    p1,10,medication,statin,\n";
        let recs = parse_events(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].span, (0, 10));
        assert_eq!(recs[0].events.len(), 3);
        assert_eq!(recs[0].events[0].value, Some(5.0));
        assert!(validate_record(&recs[0]).is_empty());
    }

    #[test]
    fn empty_stream_is_empty() {
        assert!(parse_events(&b""[..]).unwrap().is_empty());
        assert!(parse_events(&b"patient_id,day,modality,variable_id,value\n"[..])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let missing = "patient_id,day,modality,variable_id,value\np1,0,measurement,hb,1\np1,1,measurement,hb,\n";
        match parse_events(missing.as_bytes()) {
            Err(Error::Parse { line: 3, message }) => assert!(message.contains("without value")),
            other => panic!("unexpected {other:?}"),
        }
        let unknown = "patient_id,day,modality,variable_id,value\np1,0,lab,hb,1\n";
        assert!(matches!(parse_events(unknown.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let short = "patient_id,day,modality,variable_id,value\np1,0\n";
        assert!(matches!(parse_events(short.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let bad_header = "id,day,modality,variable_id,value\n";
        assert!(matches!(parse_events(bad_header.as_bytes()), Err(Error::Parse { line: 1, .. })));
        let coded_value = "patient_id,day,modality,variable_id,value\np1,0,condition_code,I10,2\n";
        assert!(parse_events(coded_value.as_bytes()).is_err());
    }

    #[test]
    fn validation_findings() {
        let mut r = PatientRecord::new(
            "p",
            vec![ev("p", 0, Modality::Measurement, "hb", Some(1.0)), ev("p", 4, Modality::Measurement, "hb", Some(f64::NAN))],
        );
        assert_eq!(validate_record(&r), vec![Finding::NonFiniteValue { index: 1 }]);
        r.events[1].value = Some(2.0);
        r.span = (0, 3);
        assert_eq!(validate_record(&r), vec![Finding::OutsideSpan { index: 1 }]);
    }

    #[test]
    fn medians_follow_tie_rule() {
        let r = PatientRecord::new(
            "p",
            vec![
                ev("p", 0, Modality::Measurement, "v", Some(1.0)),
                ev("p", 1, Modality::Measurement, "v", Some(3.0)),
                ev("p", 2, Modality::Measurement, "w", Some(1.0)),
                ev("p", 3, Modality::Measurement, "w", Some(3.0)),
                ev("p", 4, Modality::Measurement, "w", Some(5.0)),
                ev("p", 4, Modality::ConditionCode, "c", None),
            ],
        );
        let s = population_statistics(&[r]);
        assert_eq!(s.median("v"), Some(2.0));
        assert_eq!(s.median("w"), Some(3.0));
        assert_eq!(s.median("c"), None);
        assert_eq!(s.count(Modality::ConditionCode, "c"), 1);
    }

    #[test]
    fn vocabulary_ordering() {
        let r = PatientRecord::new(
            "p",
            vec![
                ev("p", 0, Modality::Measurement, "b", Some(1.0)),
                ev("p", 0, Modality::Measurement, "a", Some(1.0)),
            ],
        );
        let cats = DemographicCategories::new(["M", "F"], ["X"]);
        let v = freeze_vocabulary(&[r.clone()], &cats);
        assert_eq!(v.labels(), ["a", "b", "sex=F", "sex=M", "race=X", "age"]);
        assert_eq!(v, freeze_vocabulary(&[r], &cats));
    }

    #[test]
    fn demographics_only_patients_are_kept() {
        let recs = parse_events("patient_id,day,modality,variable_id,value\np1,3,condition_code,c,\n".as_bytes()).unwrap();
        let demos = parse_demographics("patient_id,sex,race,birth_day\np2,F,X,-100\np1,M,Y,-5\n".as_bytes()).unwrap();
        let joined = join_demographics(recs, demos).unwrap();
        assert_eq!(joined.len(), 2);
        assert_eq!(joined[1].patient_id, "p2");
        assert_eq!(joined[1].span, (0, 0));
        assert!(joined[1].events.is_empty());

        let recs = parse_events("patient_id,day,modality,variable_id,value\np1,3,condition_code,c,\n".as_bytes()).unwrap();
        assert!(join_demographics(recs, Vec::new()).is_err());
    }
}
