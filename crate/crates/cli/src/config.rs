//! Flat `key = value` pipeline configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Result;

use crate::usage;

/// Every recognised key with its default. An empty default means "unset".
const KEYS: &[(&str, &str)] = &[
    // inputs; empty paths resolve to the synth corpus under the artifact directory
    ("events", ""),
    ("demographics", ""),
    ("labels", ""),
    ("truth", ""),
    ("seed", ""),
    // curves
    ("n_histograms", "64"),
    ("bandwidth_fraction", "0.1"),
    // matrix
    ("density", "4"),
    // ica
    ("k", "16"),
    ("contrast", "logcosh"),
    ("tol", "1e-4"),
    ("max_iter", "500"),
    ("strict_rank", "false"),
    // train
    ("model", "boosted_trees"),
    ("features", "sources,raw"),
    ("holdout_fraction", "0.2"),
    ("n_rounds", "200"),
    ("learning_rate", "0.1"),
    ("max_depth", "3"),
    ("min_samples_leaf", "10"),
    ("subsample", "1.0"),
    ("l2", "1e-4"),
    // explain
    ("estimator", "exact"),
    ("n_permutations", "1000"),
    ("background_size", "256"),
    ("background_negatives", "false"),
    ("explain_at", "all"),
    ("top_m", "5"),
    // synth
    ("n_patients", "500"),
    ("n_vars", "12"),
    ("edge_density", "0.3"),
    ("max_weight", "1.0"),
    ("families", "laplace"),
    ("outcome_intercept", "0"),
    ("span_days", "365"),
    ("obs_rate", "0.05"),
    ("code_fraction", "0.25"),
    ("code_base_rate", "1.0"),
    ("code_gain", "0.3"),
    ("drift", "0.3"),
    ("noise_sd", "0"),
];

#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
    pub artifacts: PathBuf,
    /// Directory relative input paths are resolved against.
    base: PathBuf,
}

impl Config {
    pub fn load(path: Option<&Path>, seed: Option<u64>, artifacts: &Path) -> Result<Self> {
        let mut values: BTreeMap<String, String> =
            KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let mut base = PathBuf::from(".");
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            for (i, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    return Err(usage(format!("{}:{}: expected `key = value`", path.display(), i + 1)));
                };
                let k = k.trim();
                if !values.contains_key(k) {
                    return Err(usage(format!("{}:{}: unknown key `{k}`", path.display(), i + 1)));
                }
                values.insert(k.to_string(), v.trim().to_string());
            }
        }
        if let Some(seed) = seed {
            values.insert("seed".into(), seed.to_string());
        }
        let cfg = Config { values, artifacts: artifacts.to_path_buf(), base };
        cfg.seed()?;
        Ok(cfg)
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).expect("known config key")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key);
        raw.parse()
            .map_err(|_| usage(format!("config key `{key}`: cannot parse `{raw}`")))
    }

    pub fn seed(&self) -> Result<u64> {
        if self.raw("seed").is_empty() {
            return Err(usage("a seed is required (--seed or `seed =` in the config)"));
        }
        self.get("seed")
    }

    /// Configured input path, or `default` under the artifact directory.
    pub fn input_path(&self, key: &str, default: &str) -> PathBuf {
        match self.raw(key) {
            "" => self.artifacts.join(default),
            p if Path::new(p).is_absolute() => PathBuf::from(p),
            p => self.base.join(p),
        }
    }

    pub fn snapshot(&self) -> BTreeMap<String, String> {
        self.values.clone()
    }
}
