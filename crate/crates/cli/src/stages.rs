//! Pipeline stages. Each reads its upstream artifacts through the manifest,
//! so a missing or modified input names the stage to rerun.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use anyhow::{Context, Result};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use latent_cause::curves::{build_curveset, CurveParams, Curveset, Grid, Provenance};
use latent_cause::explain::{
    evaluate, rank_sources, select_background, shap_exact, shap_sampled, train_model, BoostParams, CausalModel,
    FeatureSpace, Hyperparams, LabeledCohort, LogisticParams, Metrics, ModelKind, ShapExplanation, SourceRanking,
};
use latent_cause::ica::{fit, Contrast, FastIcaParams, IcaModel, IcaParams};
use latent_cause::ingest::{
    freeze_vocabulary, join_demographics, parse_demographics, parse_events, population_statistics,
    validate_record, write_demographics, write_events, DemographicCategories, Modality, PatientRecord,
    PopulationStats, VariableVocabulary,
};
use latent_cause::matrix::{assemble_matrix, fit_standardizer, ColumnRef, CrossSectionMatrix, Standardizer};
use latent_cause::oracle::{
    generate_scm, render_events, sample_dataset, FamilyChoice, RenderParams, ScmParams, SourceFamily,
};
use latent_cause::stats::{derive_seed, seeded_rng};

use crate::config::Config;
use crate::manifest::{sha256, StageRun};
use crate::usage;

pub const EVENTS: &str = "corpus/events.csv";
pub const DEMOGRAPHICS: &str = "corpus/demographics.csv";
pub const LABELS: &str = "corpus/labels.csv";
pub const TRUTH_DIR: &str = "truth";

/// Ground truth kept out of the corpus directory.
#[derive(Debug, Serialize, Deserialize)]
pub struct Truth {
    pub patient_ids: Vec<String>,
    pub index_days: Vec<i64>,
    /// Per patient, the true source vector.
    pub s_true: Vec<Vec<f64>>,
    /// Per patient, the latent variable vector at the index day.
    pub x_true: Vec<Vec<f64>>,
    pub variable_ids: Vec<String>,
    pub modalities: Vec<Modality>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CurveIndexEntry {
    patient_id: String,
    file: String,
    first: i64,
    last: i64,
    provenance: Vec<Provenance>,
}

/// A trained model plus the hashes tying it to its inputs.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub vocab_hash: String,
    pub ica_hash: String,
    pub model: CausalModel,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<(String, u8)>,
    pub holdout: Vec<(String, u8)>,
}

impl Split {
    pub fn labels(&self) -> BTreeMap<&str, u8> {
        self.train.iter().chain(&self.holdout).map(|(p, y)| (p.as_str(), *y)).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RankingFile {
    pub ranking: SourceRanking,
    pub signatures: Vec<Vec<(String, f64)>>,
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> latent_cause::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

pub fn synth(cfg: &Config) -> Result<()> {
    let mut run = StageRun::begin("synth", cfg, &["corpus", TRUTH_DIR])?;
    let seed = cfg.seed()?;
    let families = match cfg.raw("families") {
        "random" => FamilyChoice::RandomNonGaussian,
        name => FamilyChoice::All(
            SourceFamily::from_name(name).ok_or_else(|| usage(format!("unknown source family `{name}`")))?,
        ),
    };
    let params = ScmParams {
        n_vars: cfg.get("n_vars")?,
        edge_density: cfg.get("edge_density")?,
        max_weight: cfg.get("max_weight")?,
        families,
        outcome_intercept: cfg.get("outcome_intercept")?,
    };
    let scm = generate_scm(&params, derive_seed(seed, "scm"))?;
    let data = sample_dataset(&scm, cfg.get("n_patients")?, derive_seed(seed, "dataset"))?;
    let render = RenderParams {
        span_days: cfg.get("span_days")?,
        obs_rate: cfg.get("obs_rate")?,
        code_fraction: cfg.get("code_fraction")?,
        code_base_rate: cfg.get("code_base_rate")?,
        code_gain: cfg.get("code_gain")?,
        drift: cfg.get("drift")?,
        noise_sd: cfg.get("noise_sd")?,
    };
    let corpus = render_events(&data, &render, derive_seed(seed, "render"))?;

    run.write(EVENTS, &to_bytes(|b| write_events(&corpus.records, b))?)?;
    run.write(DEMOGRAPHICS, &to_bytes(|b| write_demographics(&corpus.records, b))?)?;
    let mut labels = String::from("patient_id,label\n");
    for (r, y) in corpus.records.iter().zip(&data.y) {
        writeln!(labels, "{},{y}", r.patient_id)?;
    }
    run.write(LABELS, labels.as_bytes())?;

    let truth = Truth {
        patient_ids: corpus.records.iter().map(|r| r.patient_id.clone()).collect(),
        index_days: corpus.index_days.clone(),
        s_true: data.s_true.column_iter().map(|c| c.iter().copied().collect()).collect(),
        x_true: data.x_true.column_iter().map(|c| c.iter().copied().collect()).collect(),
        variable_ids: corpus.variable_ids.clone(),
        modalities: corpus.modalities.clone(),
    };
    run.write(&format!("{TRUTH_DIR}/scm.json"), (scm.to_json()? + "\n").as_bytes())?;
    run.write_json(&format!("{TRUTH_DIR}/truth.json"), &truth)?;
    let events: usize = corpus.records.iter().map(|r| r.events.len()).sum();
    println!("synthesized {} patients, {} events, {} variables", corpus.records.len(), events, scm.n_vars);
    run.finish()
}

pub fn ingest(cfg: &Config) -> Result<()> {
    let mut run = StageRun::begin("ingest", cfg, &["ingest"])?;
    let events_path = cfg.input_path("events", EVENTS);
    let demo_path = cfg.input_path("demographics", DEMOGRAPHICS);
    let bytes = run.read_path(&events_path)?;
    let records = parse_events(&bytes[..]).with_context(|| events_path.display().to_string())?;
    let bytes = run.read_path(&demo_path)?;
    let demographics = parse_demographics(&bytes[..]).with_context(|| demo_path.display().to_string())?;
    let records = join_demographics(records, demographics)?;
    for r in &records {
        if let Some(f) = validate_record(r).first() {
            return Err(usage(format!("patient `{}`: {f:?}", r.patient_id)));
        }
    }
    let stats = population_statistics(&records);
    let categories = DemographicCategories::observed(&records);
    let vocab = freeze_vocabulary(&records, &categories);

    run.write_json("ingest/records.json", &records)?;
    run.write_json("ingest/stats.json", &stats)?;
    run.write_json("ingest/categories.json", &categories)?;
    run.write_json("ingest/vocab.json", &vocab)?;
    let events: usize = records.iter().map(|r| r.events.len()).sum();
    println!("ingested {} patient records, {events} events, {} vocabulary rows", records.len(), vocab.len());
    run.finish()
}

pub fn curves(cfg: &Config) -> Result<()> {
    let mut run = StageRun::begin("curves", cfg, &["curves"])?;
    run.require("ingest")?;
    let records: Vec<PatientRecord> = run.read_json("ingest/records.json")?;
    let stats: PopulationStats = run.read_json("ingest/stats.json")?;
    let categories: DemographicCategories = run.read_json("ingest/categories.json")?;
    let vocab: VariableVocabulary = run.read_json("ingest/vocab.json")?;
    let params = CurveParams {
        n_histograms: cfg.get("n_histograms")?,
        bandwidth_fraction: cfg.get("bandwidth_fraction")?,
        seed: derive_seed(cfg.seed()?, "curves"),
    };
    let mut index = Vec::with_capacity(records.len());
    let mut imputed = 0;
    for (i, r) in records.iter().enumerate() {
        let cs = build_curveset(r, &stats, &vocab, &categories, &params)
            .with_context(|| format!("patient `{}`", r.patient_id))?;
        let file = format!("curves/{i:06}.csv");
        run.write(&file, &to_bytes(|b| cs.write_dump(b))?)?;
        imputed += cs.imputed_count();
        index.push(CurveIndexEntry {
            patient_id: cs.patient_id.clone(),
            file,
            first: cs.grid.first,
            last: cs.grid.last,
            provenance: cs.curves.iter().map(|c| c.provenance).collect(),
        });
    }
    run.write_json("curves/index.json", &index)?;
    let total = records.len() * vocab.len();
    println!("built {} curvesets, {imputed}/{total} curves imputed", records.len());
    run.finish()
}

fn load_curvesets(run: &mut StageRun) -> Result<Vec<Curveset>> {
    let index: Vec<CurveIndexEntry> = run.read_json("curves/index.json")?;
    index
        .iter()
        .map(|e| {
            let bytes = run.read(&e.file)?;
            let grid = Grid::new(e.first, e.last)?;
            Curveset::read_dump(&e.patient_id, grid, &e.provenance, &bytes[..])
                .with_context(|| e.file.clone())
        })
        .collect()
}

fn read_matrix(run: &mut StageRun, values: &str) -> Result<CrossSectionMatrix> {
    let v = run.read(values)?;
    let p = run.read("matrix/provenance.csv")?;
    CrossSectionMatrix::read(&v[..], &p[..]).with_context(|| values.to_string())
}

pub fn matrix(cfg: &Config) -> Result<()> {
    let mut run = StageRun::begin("matrix", cfg, &["matrix"])?;
    run.require("ingest")?;
    run.require("curves")?;
    let vocab: VariableVocabulary = run.read_json("ingest/vocab.json")?;
    let curvesets = load_curvesets(&mut run)?;
    let density: f64 = cfg.get("density")?;
    let m = assemble_matrix(&curvesets, &vocab.hash(), density, derive_seed(cfg.seed()?, "matrix"))?;
    let st = fit_standardizer(&m.values)?;
    let x_std = m.with_values(st.apply(&m.values)?);
    run.write("matrix/raw.csv", &to_bytes(|b| m.write_values(b))?)?;
    run.write("matrix/x_std.csv", &to_bytes(|b| x_std.write_values(b))?)?;
    run.write("matrix/provenance.csv", &to_bytes(|b| m.write_provenance(b))?)?;
    run.write_json("matrix/standardizer.json", &st)?;
    println!("assembled {} x {} cross-section matrix", m.n_variables(), m.n_columns());
    run.finish()
}

pub fn ica(cfg: &Config) -> Result<()> {
    let mut run = StageRun::begin("ica", cfg, &["ica"])?;
    run.require("matrix")?;
    let x = read_matrix(&mut run, "matrix/x_std.csv")?;
    let contrast_name = cfg.raw("contrast");
    let contrast =
        Contrast::from_name(contrast_name).ok_or_else(|| usage(format!("unknown contrast `{contrast_name}`")))?;
    let params = IcaParams {
        k: cfg.get("k")?,
        fastica: FastIcaParams {
            contrast,
            tol: cfg.get("tol")?,
            max_iter: cfg.get("max_iter")?,
            seed: derive_seed(cfg.seed()?, "ica"),
        },
        strict: cfg.get("strict_rank")?,
    };
    let fitted = fit(&x.values, &params, &x.vocab_hash)?;
    if let Some(k) = fitted.reduced_from {
        eprintln!("warning: k lowered from {k} to the numerical rank {}", fitted.model.k());
    }
    let report = fitted.model.report;
    if !report.converged {
        eprintln!(
            "warning: FastICA did not converge in {} iterations (final delta {:.3e})",
            report.iterations, report.final_delta
        );
    }
    let sources = fitted.model.transform(&x)?;
    run.write("ica/model.json", (fitted.model.to_json()? + "\n").as_bytes())?;
    run.write("ica/sources.csv", &to_bytes(|b| sources.write(b))?)?;
    println!(
        "fitted {} sources in {} iterations (converged: {})",
        fitted.model.k(),
        report.iterations,
        report.converged
    );
    run.finish()
}

fn parse_labels(text: &str, source: &str) -> Result<BTreeMap<String, u8>> {
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("patient_id,label") => {}
        other => return Err(usage(format!("{source}: line 1: expected header `patient_id,label`, found {other:?}"))),
    }
    let mut out = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let Some((pid, y)) = line.split_once(',') else {
            return Err(usage(format!("{source}: line {n}: expected `patient_id,label`")));
        };
        let y = match y.trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(usage(format!("{source}: line {n}: label must be 0 or 1, found `{other}`"))),
        };
        if out.insert(pid.trim().to_string(), y).is_some() {
            return Err(usage(format!("{source}: line {n}: duplicate label for `{}`", pid.trim())));
        }
    }
    Ok(out)
}

fn cohort_for(
    features: &DMatrix<f64>,
    provenance: &[ColumnRef],
    labels: &BTreeMap<&str, u8>,
    patients: &BTreeSet<&str>,
) -> Result<LabeledCohort> {
    let idx: Vec<usize> = (0..provenance.len())
        .filter(|&i| patients.contains(provenance[i].patient_id.as_str()))
        .collect();
    LabeledCohort::new(
        features.select_columns(&idx),
        idx.iter().map(|&i| labels[provenance[i].patient_id.as_str()]).collect(),
        idx.iter().map(|&i| provenance[i].clone()).collect(),
    )
    .map_err(Into::into)
}

fn feature_spaces(cfg: &Config) -> Result<Vec<FeatureSpace>> {
    cfg.raw("features")
        .split(',')
        .map(|s| FeatureSpace::from_name(s.trim()).ok_or_else(|| usage(format!("unknown feature space `{s}`"))))
        .collect()
}

fn hyperparams(cfg: &Config) -> Result<Hyperparams> {
    let kind_name = cfg.raw("model");
    Ok(Hyperparams {
        kind: ModelKind::from_name(kind_name).ok_or_else(|| usage(format!("unknown model `{kind_name}`")))?,
        boost: BoostParams {
            n_rounds: cfg.get("n_rounds")?,
            learning_rate: cfg.get("learning_rate")?,
            max_depth: cfg.get("max_depth")?,
            min_samples_leaf: cfg.get("min_samples_leaf")?,
            subsample: cfg.get("subsample")?,
            seed: derive_seed(cfg.seed()?, "boost"),
        },
        logistic: LogisticParams { l2: cfg.get("l2")?, ..Default::default() },
    })
}

fn features_file(space: FeatureSpace) -> &'static str {
    match space {
        FeatureSpace::Sources => "ica/sources.csv",
        FeatureSpace::Raw => "matrix/x_std.csv",
    }
}

pub fn model_file(space: FeatureSpace) -> String {
    format!("train/model_{}.json", space.name())
}

pub fn train(cfg: &Config) -> Result<()> {
    let mut run = StageRun::begin("train", cfg, &["train"])?;
    run.require("ingest")?;
    run.require("matrix")?;
    run.require("ica")?;
    let labels_path = cfg.input_path("labels", LABELS);
    let text = String::from_utf8(run.read_path(&labels_path)?).context("labels file is not UTF-8")?;
    let labels = parse_labels(&text, &labels_path.display().to_string())?;
    let vocab: VariableVocabulary = run.read_json("ingest/vocab.json")?;
    let ica_hash = sha256(&run.read("ica/model.json")?);

    let provenance = read_matrix(&mut run, "matrix/x_std.csv")?.provenance;
    let mut patients: Vec<&str> = provenance
        .iter()
        .map(|c| c.patient_id.as_str())
        .filter(|p| labels.contains_key(*p))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if patients.len() < 2 {
        return Err(usage("fewer than two labeled patients in the matrix"));
    }
    patients.shuffle(&mut seeded_rng(derive_seed(cfg.seed()?, "split")));
    let frac: f64 = cfg.get("holdout_fraction")?;
    if !(0.0..1.0).contains(&frac) {
        return Err(usage("holdout_fraction must lie in [0, 1)"));
    }
    let n_hold = ((patients.len() as f64 * frac).round() as usize).min(patients.len() - 1);
    let holdout: BTreeSet<&str> = patients[..n_hold].iter().copied().collect();
    let train_set: BTreeSet<&str> = patients[n_hold..].iter().copied().collect();
    let label_of: BTreeMap<&str, u8> = labels.iter().map(|(p, y)| (p.as_str(), *y)).collect();
    let split = Split {
        train: train_set.iter().map(|p| (p.to_string(), label_of[p])).collect(),
        holdout: holdout.iter().map(|p| (p.to_string(), label_of[p])).collect(),
    };

    let hyper = hyperparams(cfg)?;
    for space in feature_spaces(cfg)? {
        let features = read_matrix(&mut run, features_file(space))?.values;
        let train_cohort = cohort_for(&features, &provenance, &label_of, &train_set)?;
        let model = train_model(&train_cohort, &hyper, space)?;
        let metrics: Option<Metrics> = if holdout.is_empty() {
            None
        } else {
            let hold = cohort_for(&features, &provenance, &label_of, &holdout)?;
            evaluate(&model, &hold).ok()
        };
        match &metrics {
            Some(m) => println!(
                "{} model: held-out AUROC {:.4}, accuracy {:.4}, log loss {:.4}",
                space.name(),
                m.auroc,
                m.accuracy,
                m.log_loss
            ),
            None => println!("{} model trained (no two-class holdout to evaluate)", space.name()),
        }
        let file = ModelFile { vocab_hash: vocab.hash(), ica_hash: ica_hash.clone(), model };
        run.write_json(&model_file(space), &file)?;
        run.write_json(&format!("train/metrics_{}.json", space.name()), &metrics)?;
    }
    run.write_json("train/split.json", &split)?;
    run.finish()
}

/// Exact or sampled explanation of one column, per the config.
pub fn explain_one(
    cfg: &Config,
    model: &CausalModel,
    instance: &[f64],
    background: &DMatrix<f64>,
    column: &ColumnRef,
) -> Result<ShapExplanation> {
    let mut e = match cfg.raw("estimator") {
        "exact" => shap_exact(model, instance, background)?,
        "sampled" => {
            let label = format!("shap/{}/{}", column.patient_id, column.day);
            let mut rng = seeded_rng(derive_seed(cfg.seed()?, &label));
            shap_sampled(model, instance, background, cfg.get("n_permutations")?, &mut rng)?
        }
        other => return Err(usage(format!("unknown estimator `{other}`"))),
    };
    e.column = Some(column.clone());
    Ok(e)
}

pub fn explain(cfg: &Config) -> Result<()> {
    let mut run = StageRun::begin("explain", cfg, &["explain"])?;
    run.require("ingest")?;
    run.require("matrix")?;
    run.require("ica")?;
    run.require("train")?;
    let vocab: VariableVocabulary = run.read_json("ingest/vocab.json")?;
    let ica: IcaModel = IcaModel::from_json(&run.read_string("ica/model.json")?)?;
    let file: ModelFile = run.read_json(&model_file(FeatureSpace::Sources))?;
    let split: Split = run.read_json("train/split.json")?;
    let sources = read_matrix(&mut run, "ica/sources.csv")?;
    let labels = split.labels();

    let train_set: BTreeSet<&str> = split.train.iter().map(|(p, _)| p.as_str()).collect();
    let train_cohort = cohort_for(&sources.values, &sources.provenance, &labels, &train_set)?;
    let background = select_background(
        &train_cohort,
        cfg.get("background_size")?,
        cfg.get("background_negatives")?,
        derive_seed(cfg.seed()?, "background"),
    )?;

    let labeled: Vec<usize> = (0..sources.provenance.len())
        .filter(|&i| labels.contains_key(sources.provenance[i].patient_id.as_str()))
        .collect();
    let columns: Vec<usize> = match cfg.raw("explain_at") {
        "all" => labeled,
        "last" => {
            let mut last: BTreeMap<&str, usize> = BTreeMap::new();
            for i in labeled {
                last.insert(sources.provenance[i].patient_id.as_str(), i);
            }
            last.into_values().collect()
        }
        other => return Err(usage(format!("explain_at must be `all` or `last`, found `{other}`"))),
    };

    let k = sources.values.nrows();
    let sampled = cfg.raw("estimator") == "sampled";
    let mut header = String::from("patient_id,day,base_value");
    for j in 0..k {
        write!(header, ",phi_{j}")?;
    }
    header.push_str(",estimator");
    if sampled {
        for j in 0..k {
            write!(header, ",se_{j}")?;
        }
    }
    let mut table = header + "\n";
    let mut explanations = Vec::with_capacity(columns.len());
    for &i in &columns {
        let instance: Vec<f64> = sources.values.column(i).iter().copied().collect();
        let e = explain_one(cfg, &file.model, &instance, &background, &sources.provenance[i])?;
        let c = &sources.provenance[i];
        write!(table, "{},{},{}", c.patient_id, c.day, e.base_value)?;
        for p in &e.phi {
            write!(table, ",{p}")?;
        }
        write!(table, ",{}", e.estimator.name())?;
        for s in e.std_errors.iter().flatten() {
            write!(table, ",{s}")?;
        }
        table.push('\n');
        explanations.push(e);
    }
    if explanations.is_empty() {
        return Err(usage("no labeled columns to explain"));
    }
    let ranking = rank_sources(&explanations)?;
    let top_m: usize = cfg.get("top_m")?;
    let var_labels = vocab.labels();
    let signatures: Vec<Vec<(String, f64)>> = (0..k)
        .map(|j| ica.signature(j, top_m, &var_labels))
        .collect::<latent_cause::Result<_>>()?;
    let mut report = String::from("rank,source,mean_abs_phi,signature\n");
    for (rank, &j) in ranking.order.iter().enumerate() {
        let sig: Vec<String> = signatures[j].iter().map(|(id, w)| format!("{id}({w:+.3})")).collect();
        writeln!(report, "{},{j},{:.6},{}", rank + 1, ranking.importance[j], sig.join(" "))?;
    }

    run.write("explain/phi.csv", table.as_bytes())?;
    run.write("explain/background.csv", &to_bytes(|b| write_plain(&background, b))?)?;
    run.write("explain/ranking.txt", report.as_bytes())?;
    run.write_json("explain/ranking.json", &RankingFile { ranking: ranking.clone(), signatures })?;
    println!("explained {} columns; top sources {:?}", explanations.len(), &ranking.order[..k.min(5)]);
    run.finish()
}

fn write_plain(m: &DMatrix<f64>, out: &mut Vec<u8>) -> latent_cause::Result<()> {
    let cols = m.ncols();
    let mut text = format!("# rows={} cols={cols} vocab=background\n", m.nrows());
    for r in m.row_iter() {
        let line: Vec<String> = r.iter().map(f64::to_string).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    out.extend_from_slice(text.as_bytes());
    Ok(())
}

pub fn read_plain(bytes: &[u8]) -> Result<DMatrix<f64>> {
    let text = std::str::from_utf8(bytes)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| usage("empty matrix file"))?;
    let cols: usize = header
        .split_whitespace()
        .find_map(|f| f.strip_prefix("cols="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| usage(format!("bad matrix header `{header}`")))?;
    let mut data = Vec::new();
    let mut rows = 0;
    for line in lines {
        for v in line.split(',') {
            data.push(v.parse::<f64>().map_err(|_| usage(format!("bad value `{v}`")))?);
        }
        rows += 1;
    }
    if data.len() != rows * cols {
        return Err(usage("ragged matrix file"));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

/// Per-patient curvesets keyed by id, for stages that need cross sections
/// at arbitrary days.
pub fn curvesets_by_patient(run: &mut StageRun) -> Result<BTreeMap<String, Curveset>> {
    Ok(load_curvesets(run)?.into_iter().map(|c| (c.patient_id.clone(), c)).collect())
}

pub fn read_sources_standardizer(run: &mut StageRun) -> Result<(IcaModel, Standardizer)> {
    let ica = IcaModel::from_json(&run.read_string("ica/model.json")?)?;
    let st: Standardizer = run.read_json("matrix/standardizer.json")?;
    Ok((ica, st))
}
