//! Flat key=value configuration files and their merge with command-line
//! flags. Flags always win over file values; file values win over preset
//! defaults.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gopred_core::ontology::Branch;
use gopred_core::pipeline::PipelineConfig;

/// Parsed `key = value` settings, one per line. `#` starts a comment and
/// blank lines are ignored. Unknown keys are rejected when applied, so
/// typos fail loudly instead of silently using defaults.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Settings> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected 'key = value', got {raw:?}", lineno + 1);
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                bail!("line {}: empty key or value in {raw:?}", lineno + 1);
            }
            if values.insert(key.clone(), value).is_some() {
                bail!("line {}: duplicate key {key:?}", lineno + 1);
            }
        }
        Ok(Settings { values })
    }

    pub fn load(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        Settings::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn take<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key {key}: bad value {raw:?}: {e}")),
        }
    }

    fn take_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.values.get(key).map(String::as_str) {
            None => Ok(None),
            Some("true") | Some("1") | Some("yes") => Ok(Some(true)),
            Some("false") | Some("0") | Some("no") => Ok(Some(false)),
            Some(other) => bail!("config key {key}: expected a boolean, got {other:?}"),
        }
    }

    /// The branch named in the file, if any.
    pub fn branch(&self) -> Result<Option<Branch>> {
        match self.values.get("branch") {
            None => Ok(None),
            Some(raw) => Branch::parse(raw)
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key branch: {e}")),
        }
    }

    /// The master seed named in the file, if any.
    pub fn seed(&self) -> Result<Option<u64>> {
        self.take("seed")
    }

    /// The preset named in the file (`paper` or `quick`), if any.
    pub fn preset(&self) -> Result<Option<Preset>> {
        match self.values.get("preset").map(String::as_str) {
            None => Ok(None),
            Some("paper") => Ok(Some(Preset::Paper)),
            Some("quick") => Ok(Some(Preset::Quick)),
            Some(other) => bail!("config key preset: expected paper or quick, got {other:?}"),
        }
    }

    /// Prediction score threshold, if configured.
    pub fn score_threshold(&self) -> Result<Option<f64>> {
        self.take("score-threshold")
    }

    /// Apply every recognized hyperparameter key onto the config in place;
    /// reject unrecognized keys.
    pub fn apply(&self, cfg: &mut PipelineConfig) -> Result<()> {
        const KNOWN: &[&str] = &[
            "preset",
            "seed",
            "branch",
            "score-threshold",
            "contact-threshold",
            "sequence-dim",
            "label-layers",
            "phi.bpo",
            "phi.mfo",
            "phi.cco",
            "walk.p",
            "walk.q",
            "walk.length",
            "walk.per-node",
            "embed.dim",
            "embed.window",
            "embed.negatives",
            "embed.epochs",
            "embed.lr",
            "struct.hidden",
            "struct.conv-layers",
            "struct.modules",
            "struct.pool-rate",
            "struct.dropout",
            "struct.lr",
            "struct.epochs",
            "struct.batch",
            "prop.hidden",
            "prop.layers",
            "prop.dropout",
            "prop.lr",
            "prop.epochs",
            "no-struct",
            "no-struct-model",
            "no-propagation",
            "no-label-prop",
        ];
        for key in self.values.keys() {
            if !KNOWN.contains(&key.as_str()) {
                bail!("unknown config key {key:?}");
            }
        }

        macro_rules! set {
            ($key:expr, $slot:expr) => {
                if let Some(v) = self.take($key)? {
                    $slot = v;
                }
            };
        }
        set!("contact-threshold", cfg.contact_threshold);
        set!("sequence-dim", cfg.sequence_dim);
        set!("label-layers", cfg.label_layers);
        set!("phi.bpo", cfg.fusion.bpo);
        set!("phi.mfo", cfg.fusion.mfo);
        set!("phi.cco", cfg.fusion.cco);
        set!("walk.p", cfg.walk.p);
        set!("walk.q", cfg.walk.q);
        set!("walk.length", cfg.walk.walk_length);
        set!("walk.per-node", cfg.walk.walks_per_node);
        set!("embed.dim", cfg.embedding.dim);
        set!("embed.window", cfg.embedding.window);
        set!("embed.negatives", cfg.embedding.negatives);
        set!("embed.epochs", cfg.embedding.epochs);
        set!("embed.lr", cfg.embedding.learning_rate);
        set!("struct.hidden", cfg.structural.d2);
        set!("struct.conv-layers", cfg.structural.conv_layers);
        set!("struct.modules", cfg.structural.modules);
        set!("struct.pool-rate", cfg.structural.pool_rate);
        set!("struct.dropout", cfg.structural.dropout);
        set!("struct.lr", cfg.structural.learning_rate);
        set!("struct.epochs", cfg.structural.epochs);
        set!("struct.batch", cfg.structural.batch_size);
        set!("prop.hidden", cfg.propagation.d3);
        set!("prop.layers", cfg.propagation.layers);
        set!("prop.dropout", cfg.propagation.dropout);
        set!("prop.lr", cfg.propagation.learning_rate);
        set!("prop.epochs", cfg.propagation.epochs);
        if let Some(v) = self.take_bool("no-struct")? {
            cfg.ablation.skip_structure = v;
        }
        if let Some(v) = self.take_bool("no-struct-model")? {
            cfg.ablation.skip_structure_model = v;
        }
        if let Some(v) = self.take_bool("no-propagation")? {
            cfg.ablation.skip_propagation = v;
        }
        if let Some(v) = self.take_bool("no-label-prop")? {
            cfg.ablation.skip_label_diffusion = v;
        }
        Ok(())
    }

    /// Warn when an explicitly configured value falls outside the
    /// documented search ranges (dropout 0.3–0.7, hidden width 128–1024,
    /// propagation depth 1–4). Values outside the ranges still run — the
    /// small-scale preset deliberately sits below them — but the warning
    /// makes the departure visible in logs.
    pub fn warn_outside_search_ranges(&self) {
        let check_range = |key: &str, lo: f64, hi: f64| {
            if let Some(raw) = self.values.get(key) {
                if let Ok(v) = raw.parse::<f64>() {
                    if v < lo || v > hi {
                        log::warn!(
                            "{key} = {v} is outside the documented search range [{lo}, {hi}]"
                        );
                    }
                }
            }
        };
        check_range("struct.dropout", 0.3, 0.7);
        check_range("prop.dropout", 0.3, 0.7);
        check_range("struct.hidden", 128.0, 1024.0);
        check_range("prop.hidden", 128.0, 1024.0);
        check_range("prop.layers", 1.0, 4.0);
    }
}

/// Which defaults a run starts from before file and flag overrides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Full-scale defaults.
    Paper,
    /// Minutes-scale defaults for synthetic data.
    Quick,
}

impl Preset {
    pub fn build(self, branch: Branch, seed: u64) -> PipelineConfig {
        match self {
            Preset::Paper => PipelineConfig::new(branch).with_master_seed(seed),
            Preset::Quick => PipelineConfig::quick(branch, seed),
        }
    }
}
