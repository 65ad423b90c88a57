//! Experiment configuration: one JSON document drives corpus generation,
//! every training stage, and evaluation. Every section has working
//! defaults, so `{}` is a valid config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::GeneratorConfig;
use crate::error::{Error, Result};
use crate::labels::ClickModelConfig;
use crate::vertical_search::RankerHyper;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpertiseConfig {
    /// Latent factor dimension.
    pub k: usize,
    pub lambda: f64,
    /// Supervised scores at least this far from 0.5 become observed cells.
    pub confidence_threshold: f64,
    pub damping: f64,
    pub supervised_l2: f64,
    pub als_tol: f64,
    pub als_max_sweeps: usize,
}

impl Default for ExpertiseConfig {
    fn default() -> Self {
        ExpertiseConfig {
            k: 8,
            lambda: 0.1,
            confidence_threshold: 0.8,
            damping: 0.85,
            supervised_l2: 1e-3,
            als_tol: 1e-6,
            als_max_sweeps: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntentConfig {
    /// Activity lookback, in corpus time units.
    pub window: u64,
    pub threshold: f64,
    pub l2: f64,
}

impl Default for IntentConfig {
    fn default() -> Self {
        IntentConfig {
            window: 30,
            threshold: 0.5,
            l2: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankerConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Candidate depth per vertical.
    pub retrieval_k: usize,
    /// Distance scale for the Jobs location feature.
    pub location_scale: f64,
}

impl Default for RankerConfig {
    fn default() -> Self {
        RankerConfig {
            learning_rate: 0.5,
            epochs: 400,
            retrieval_k: 100,
            location_scale: 35.0,
        }
    }
}

impl RankerConfig {
    pub fn hyper(&self, seed: u64) -> RankerHyper {
        RankerHyper {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClickConfig {
    pub examination_decay: f64,
    /// Utility cut points; grade = number of thresholds at or below utility.
    pub grade_thresholds: Vec<f64>,
    /// Click probability per grade; one entry more than the thresholds.
    pub relevance_click_prob: Vec<f64>,
    pub sessions_per_query: u32,
    pub randomize_top: usize,
    pub organic_display_depth: usize,
    /// Weight of the nearest-first boost in the legacy ranking that organic
    /// impressions are logged under. The boost is relevance-blind, which is
    /// what makes organic labels position-confounded.
    pub organic_location_boost: f64,
    /// First rank eligible as an easy negative.
    pub tail_start: usize,
    pub easy_negative_rate: f64,
}

impl Default for ClickConfig {
    fn default() -> Self {
        ClickConfig {
            examination_decay: 0.7,
            grade_thresholds: vec![1.15, 1.35],
            relevance_click_prob: vec![0.05, 0.35, 0.75],
            sessions_per_query: 8,
            randomize_top: 4,
            organic_display_depth: 10,
            organic_location_boost: 1.0,
            tail_start: 25,
            easy_negative_rate: 1.0,
        }
    }
}

impl ClickConfig {
    /// Click model with the simulation seed filled in.
    pub fn model(&self, seed: u64) -> ClickModelConfig {
        ClickModelConfig {
            examination_decay: self.examination_decay,
            grade_thresholds: self.grade_thresholds.clone(),
            relevance_click_prob: self.relevance_click_prob.clone(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FederationConfig {
    pub block_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for FederationConfig {
    fn default() -> Self {
        FederationConfig {
            block_size: 3,
            learning_rate: 0.5,
            epochs: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub data_dir: PathBuf,
    pub models_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            data_dir: PathBuf::from("data"),
            models_dir: PathBuf::from("models"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub corpus: GeneratorConfig,
    pub expertise: ExpertiseConfig,
    pub intent: IntentConfig,
    pub ranker: RankerConfig,
    pub click: ClickConfig,
    pub federation: FederationConfig,
    pub paths: PathsConfig,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            corpus: GeneratorConfig::default(),
            expertise: ExpertiseConfig::default(),
            intent: IntentConfig::default(),
            ranker: RankerConfig::default(),
            click: ClickConfig::default(),
            federation: FederationConfig::default(),
            paths: PathsConfig::default(),
            seed: 42,
        }
    }
}

fn check(ok: bool, key: &str, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config {
            key: key.into(),
            message: message.into(),
        })
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.corpus.validate()?;

        let e = &self.expertise;
        check(e.k >= 1, "expertise.k", "must be at least 1")?;
        check(e.lambda >= 0.0, "expertise.lambda", "must be non-negative")?;
        check(
            e.confidence_threshold > 0.0 && e.confidence_threshold < 1.0,
            "expertise.confidence_threshold",
            "must lie strictly between 0 and 1",
        )?;
        check(
            e.damping > 0.0 && e.damping < 1.0,
            "expertise.damping",
            "must lie strictly between 0 and 1",
        )?;
        check(e.supervised_l2 >= 0.0, "expertise.supervised_l2", "must be non-negative")?;
        check(e.als_tol > 0.0, "expertise.als_tol", "must be positive")?;
        check(e.als_max_sweeps >= 1, "expertise.als_max_sweeps", "must be at least 1")?;

        let i = &self.intent;
        check(i.window >= 1, "intent.window", "must be at least 1")?;
        check(
            i.threshold > 0.0 && i.threshold < 1.0,
            "intent.threshold",
            "must lie strictly between 0 and 1",
        )?;
        check(i.l2 >= 0.0, "intent.l2", "must be non-negative")?;

        let r = &self.ranker;
        check(r.learning_rate > 0.0, "ranker.learning_rate", "must be positive")?;
        check(r.epochs >= 1, "ranker.epochs", "must be at least 1")?;
        check(r.retrieval_k >= 1, "ranker.retrieval_k", "must be at least 1")?;
        check(r.location_scale > 0.0, "ranker.location_scale", "must be positive")?;

        let c = &self.click;
        check(
            c.examination_decay > 0.0 && c.examination_decay <= 1.0,
            "click.examination_decay",
            "must lie in (0, 1]",
        )?;
        check(
            !c.grade_thresholds.is_empty(),
            "click.grade_thresholds",
            "must contain at least one cut point",
        )?;
        check(
            c.grade_thresholds.windows(2).all(|w| w[0] < w[1]),
            "click.grade_thresholds",
            "must be strictly increasing",
        )?;
        check(
            c.relevance_click_prob.len() == c.grade_thresholds.len() + 1,
            "click.relevance_click_prob",
            "must have one entry more than grade_thresholds",
        )?;
        check(
            c.relevance_click_prob.iter().all(|p| (0.0..=1.0).contains(p)),
            "click.relevance_click_prob",
            "entries must lie in [0, 1]",
        )?;
        check(
            c.sessions_per_query >= 1,
            "click.sessions_per_query",
            "must be at least 1",
        )?;
        check(c.randomize_top >= 2, "click.randomize_top", "must be at least 2")?;
        check(
            c.organic_display_depth >= 1,
            "click.organic_display_depth",
            "must be at least 1",
        )?;
        check(
            c.organic_location_boost.is_finite() && c.organic_location_boost >= 0.0,
            "click.organic_location_boost",
            "must be finite and non-negative",
        )?;
        check(c.tail_start >= 1, "click.tail_start", "must be at least 1")?;
        check(
            (0.0..=1.0).contains(&c.easy_negative_rate),
            "click.easy_negative_rate",
            "must lie in [0, 1]",
        )?;

        let f = &self.federation;
        check(f.block_size >= 1, "federation.block_size", "must be at least 1")?;
        check(
            f.learning_rate > 0.0,
            "federation.learning_rate",
            "must be positive",
        )?;
        check(f.epochs >= 1, "federation.epochs", "must be at least 1")?;

        check(
            !self.paths.data_dir.as_os_str().is_empty(),
            "paths.data_dir",
            "must not be empty",
        )?;
        check(
            !self.paths.models_dir.as_os_str().is_empty(),
            "paths.models_dir",
            "must not be empty",
        )?;
        Ok(())
    }
}

/// Reads and validates a config file; `{}` yields the defaults.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::ParseJson {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

pub fn save_config(config: &ExperimentConfig, path: &Path) -> Result<()> {
    crate::model_io::save_json(config, path)
}
