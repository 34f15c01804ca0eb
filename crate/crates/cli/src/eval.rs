//! Evaluation against the synthetic ground truth bundle.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::Serialize;

use latent_cause::explain::{FeatureSpace, Metrics};
use latent_cause::matrix::ColumnRef;
use latent_cause::oracle::{amari_distance, match_sources, true_ite, SyntheticScm};
use latent_cause::stats::{derive_seed, mean, pearson, seeded_rng};

use crate::config::Config;
use crate::manifest::StageRun;
use crate::stages::{
    curvesets_by_patient, explain_one, model_file, read_plain, read_sources_standardizer, ModelFile, RankingFile,
    Split, Truth, TRUTH_DIR,
};
use crate::usage;

#[derive(Debug, Serialize)]
struct SourceRecovery {
    /// `(true source, estimated source, |ρ|)` for every matched pair.
    pairs: Vec<(usize, usize, f64)>,
    mean_abs_correlation: f64,
    /// Only defined when k equals the number of true sources.
    amari_distance: Option<f64>,
}

#[derive(Debug, Serialize)]
struct IteAgreement {
    n_instances: usize,
    pooled_correlation: Option<f64>,
    mean_instance_correlation: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ParentRecovery {
    true_parents: Vec<usize>,
    matched_parents: Vec<Option<usize>>,
    precision_at_p: f64,
    all_within_top_2p: bool,
    chance_precision: f64,
    random_control_precision: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    n_patients: usize,
    source_recovery: SourceRecovery,
    ite: IteAgreement,
    auroc_causal: Option<f64>,
    auroc_raw: Option<f64>,
    parent_recovery: ParentRecovery,
}

/// Match true sources to estimated ones on |ρ|, whichever side is larger.
fn pair_sources(s_est: &DMatrix<f64>, s_true: &DMatrix<f64>) -> Result<Vec<(usize, usize, f64)>> {
    if s_est.nrows() >= s_true.nrows() {
        let m = match_sources(s_est, s_true)?;
        Ok((0..s_true.nrows()).map(|i| (i, m.permutation[i], m.correlations[i])).collect())
    } else {
        let m = match_sources(s_true, s_est)?;
        let mut pairs: Vec<_> = (0..s_est.nrows()).map(|j| (m.permutation[j], j, m.correlations[j])).collect();
        pairs.sort_unstable_by_key(|p| p.0);
        Ok(pairs)
    }
}

fn precision(order: &[usize], parents: &[usize], p: usize) -> f64 {
    order[..p.min(order.len())].iter().filter(|j| parents.contains(j)).count() as f64 / p as f64
}

pub fn eval(cfg: &Config) -> Result<()> {
    let mut run = StageRun::begin("eval", cfg, &["eval"])?;
    for stage in ["ingest", "curves", "matrix", "ica", "train", "explain"] {
        run.require(stage)?;
    }
    let truth_dir = cfg.input_path("truth", TRUTH_DIR);
    if !truth_dir.join("truth.json").exists() {
        return Err(usage(format!("truth bundle missing at {}; run `latent-cause synth`", truth_dir.display())));
    }
    let scm = SyntheticScm::from_json(std::str::from_utf8(&run.read_path(&truth_dir.join("scm.json"))?)?)?;
    let truth: Truth = serde_json::from_slice(&run.read_path(&truth_dir.join("truth.json"))?)?;
    let (ica, standardizer) = read_sources_standardizer(&mut run)?;
    let curvesets = curvesets_by_patient(&mut run)?;
    let vocab: latent_cause::ingest::VariableVocabulary = run.read_json("ingest/vocab.json")?;
    let split: Split = run.read_json("train/split.json")?;
    let model: ModelFile = run.read_json(&model_file(FeatureSpace::Sources))?;
    let ranking: RankingFile = run.read_json("explain/ranking.json")?;
    let background = read_plain(&run.read("explain/background.csv")?)?;

    // Estimated sources at each patient's index day.
    let n = truth.patient_ids.len();
    let mut x_index = DMatrix::zeros(ica.n_variables(), n);
    let mut columns = Vec::with_capacity(n);
    for (j, pid) in truth.patient_ids.iter().enumerate() {
        let cs = curvesets.get(pid).with_context(|| format!("no curveset for `{pid}`"))?;
        let day = truth.index_days[j].clamp(cs.grid.first, cs.grid.last);
        let x = standardizer.apply_vec(&cs.cross_section(day)?)?;
        x_index.column_mut(j).copy_from_slice(&x);
        columns.push(ColumnRef { patient_id: pid.clone(), day });
    }
    let s_est = ica.transform_values(&x_index)?;
    let s_true = DMatrix::from_fn(scm.n_vars, n, |r, c| truth.s_true[c][r]);
    let pairs = pair_sources(&s_est, &s_true)?;
    let est_of: BTreeMap<usize, usize> = pairs.iter().map(|&(i, j, _)| (i, j)).collect();

    let amari = if ica.k() == scm.n_vars {
        let labels = vocab.labels();
        let rows: Option<Vec<usize>> =
            truth.variable_ids.iter().map(|id| labels.iter().position(|l| l == id)).collect();
        match rows {
            Some(rows) => {
                let unmix = DMatrix::from_fn(ica.k(), rows.len(), |r, c| {
                    ica.unmixing[(r, rows[c])] / standardizer.scale[rows[c]]
                });
                Some(amari_distance(&(unmix * &scm.mixing))?)
            }
            None => None,
        }
    } else {
        None
    };

    // ITE agreement on held-out patients at the index day.
    let patient_index: BTreeMap<&str, usize> =
        truth.patient_ids.iter().enumerate().map(|(j, p)| (p.as_str(), j)).collect();
    let train_cols: Vec<usize> = split.train.iter().filter_map(|(p, _)| patient_index.get(p.as_str()).copied()).collect();
    let bg_true_mean: Vec<f64> =
        (0..scm.n_vars).map(|r| mean(&train_cols.iter().map(|&c| s_true[(r, c)]).collect::<Vec<_>>())).collect();
    let mut pooled_phi = Vec::new();
    let mut pooled_true = Vec::new();
    let mut per_instance = Vec::new();
    let mut n_instances = 0;
    for (pid, _) in &split.holdout {
        let Some(&j) = patient_index.get(pid.as_str()) else { continue };
        let inst: Vec<f64> = s_est.column(j).iter().copied().collect();
        let e = explain_one(cfg, &model.model, &inst, &background, &columns[j])?;
        let truth_ite = true_ite(&scm, &truth.s_true[j], &bg_true_mean)?;
        let (phi, ite): (Vec<f64>, Vec<f64>) = pairs.iter().map(|&(i, jj, _)| (e.phi[jj], truth_ite[i])).unzip();
        if let Some(r) = pearson(&phi, &ite) {
            per_instance.push(r);
        }
        pooled_phi.extend(phi);
        pooled_true.extend(ite);
        n_instances += 1;
    }
    let ite = IteAgreement {
        n_instances,
        pooled_correlation: pearson(&pooled_phi, &pooled_true),
        mean_instance_correlation: (!per_instance.is_empty()).then(|| mean(&per_instance)),
    };

    // Parent recovery from the explain ranking, with a random-ranking control.
    let parents = &scm.outcome.sources;
    let matched: Vec<Option<usize>> = parents.iter().map(|i| est_of.get(i).copied()).collect();
    let parents_est: Vec<usize> = matched.iter().flatten().copied().collect();
    let p = parents.len();
    let order = &ranking.ranking.order;
    let top2 = &order[..(2 * p).min(order.len())];
    let mut rng = seeded_rng(derive_seed(cfg.seed()?, "eval/control"));
    let mut shuffled = order.clone();
    let control: Vec<f64> = (0..1000)
        .map(|_| {
            shuffled.shuffle(&mut rng);
            precision(&shuffled, &parents_est, p)
        })
        .collect();
    let parent_recovery = ParentRecovery {
        true_parents: parents.clone(),
        precision_at_p: precision(order, &parents_est, p),
        all_within_top_2p: parents_est.len() == p && parents_est.iter().all(|j| top2.contains(j)),
        matched_parents: matched,
        chance_precision: p.min(order.len()) as f64 / order.len() as f64,
        random_control_precision: mean(&control),
    };

    let mut auroc = |space: FeatureSpace| -> Result<Option<f64>> {
        let rel = format!("train/metrics_{}.json", space.name());
        if !run.path(&rel).exists() {
            return Ok(None);
        }
        let m: Option<Metrics> = run.read_json(&rel)?;
        Ok(m.map(|m| m.auroc))
    };
    let auroc_causal = auroc(FeatureSpace::Sources)?;
    let auroc_raw = auroc(FeatureSpace::Raw)?;

    let report = Report {
        n_patients: n,
        source_recovery: SourceRecovery {
            mean_abs_correlation: mean(&pairs.iter().map(|p| p.2).collect::<Vec<_>>()),
            pairs,
            amari_distance: amari,
        },
        ite,
        auroc_causal,
        auroc_raw,
        parent_recovery,
    };
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    println!(
        "source recovery: mean |rho| {:.4}, Amari {}",
        report.source_recovery.mean_abs_correlation,
        fmt(report.source_recovery.amari_distance)
    );
    println!("ITE agreement: pooled r {} over {} instances", fmt(report.ite.pooled_correlation), report.ite.n_instances);
    println!("AUROC: H_c {} vs H_a {}", fmt(report.auroc_causal), fmt(report.auroc_raw));
    println!(
        "parent recovery: precision@{p} {:.3} (random control {:.3})",
        report.parent_recovery.precision_at_p, report.parent_recovery.random_control_precision
    );
    run.write_json("eval/report.json", &report)?;
    run.finish()
}
