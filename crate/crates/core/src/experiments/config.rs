use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::{Engine, TrainConfig};
use crate::meanfield::{AnnealSchedule, FixedPointSettings};
use crate::mixture::MixtureSettings;
use crate::model::ENUMERATION_LIMIT;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    InferenceBench,
    ToyLearn,
    ImageLearn,
    GenData,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 4] = [
        ExperimentId::InferenceBench,
        ExperimentId::ToyLearn,
        ExperimentId::ImageLearn,
        ExperimentId::GenData,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::InferenceBench => "inference-bench",
            ExperimentId::ToyLearn => "toy-learn",
            ExperimentId::ImageLearn => "image-learn",
            ExperimentId::GenData => "gen-data",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown experiment `{s}`")))
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn check_range(name: &str, r: [f64; 2]) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
        return Err(invalid(format!("{name} must be a finite [low, high] pair")));
    }
    Ok(())
}

fn check_flip(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid("flip_prob must lie in [0, 1]"));
    }
    Ok(())
}

/// Random fully connected nets compared against enumeration for a sweep of
/// mixture sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceBenchConfig {
    pub n_nets: usize,
    pub n_nodes: usize,
    /// Weights and biases are drawn uniformly from [low, high).
    pub param_range: [f64; 2],
    pub components: Vec<usize>,
    pub anneal: AnnealSchedule,
    pub mixture: MixtureSettings,
}

impl Default for InferenceBenchConfig {
    fn default() -> Self {
        Self {
            n_nets: 100,
            n_nodes: 10,
            param_range: [-1.0, 1.0],
            components: (1..=10).collect(),
            anneal: AnnealSchedule::geometric(60.0, 8).unwrap(),
            mixture: MixtureSettings::default(),
        }
    }
}

impl InferenceBenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nets == 0 || self.n_nodes == 0 {
            return Err(invalid("n_nets and n_nodes must be >= 1"));
        }
        if self.n_nodes > ENUMERATION_LIMIT {
            return Err(Error::EnumerationLimit {
                n: self.n_nodes,
                limit: ENUMERATION_LIMIT,
            });
        }
        check_range("param_range", self.param_range)?;
        if self.components.is_empty() || self.components.contains(&0) {
            return Err(invalid("components must be a non-empty list of counts >= 1"));
        }
        if self.mixture.order.is_empty() {
            return Err(invalid("empty mixture update order"));
        }
        self.mixture.fixed_point.validate()
    }
}

/// Two visible nodes trained on {(1,1), (1,1), (-1,-1)} with each engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyLearnConfig {
    pub engines: Vec<Engine>,
    pub learning_rate: f64,
    pub n_iterations: usize,
    pub init_weight_std: f64,
    pub fixed_point: FixedPointSettings,
    pub carry_over_free: bool,
}

impl Default for ToyLearnConfig {
    fn default() -> Self {
        Self {
            engines: vec![Engine::Exact, Engine::MeanField, Engine::Mixture { n_components: 2 }],
            learning_rate: 0.25,
            n_iterations: 200,
            init_weight_std: 0.1,
            fixed_point: FixedPointSettings::default(),
            carry_over_free: true,
        }
    }
}

impl ToyLearnConfig {
    pub fn train_config(&self, engine: Engine, seed: u64) -> TrainConfig {
        TrainConfig {
            engine,
            learning_rate: self.learning_rate,
            n_iterations: self.n_iterations,
            anneal: AnnealSchedule::unit(),
            init_weight_std: self.init_weight_std,
            fixed_point: self.fixed_point,
            seed,
            anneal_clamped: false,
            carry_over_free: self.carry_over_free,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.engines.is_empty() {
            return Err(invalid("engines must not be empty"));
        }
        for &e in &self.engines {
            self.train_config(e, 0).validate()?;
        }
        Ok(())
    }
}

/// Synthetic 8x8 images learned by a grid-plus-hidden-layer network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageLearnConfig {
    pub count_per_class: usize,
    pub classes: usize,
    pub flip_prob: f64,
    pub n_hidden: usize,
    pub engines: Vec<Engine>,
    pub anneal: AnnealSchedule,
    pub n_iterations: usize,
    pub learning_rate: f64,
    pub init_weight_std: f64,
    pub fixed_point: FixedPointSettings,
    pub anneal_clamped: bool,
    pub carry_over_free: bool,
}

impl Default for ImageLearnConfig {
    fn default() -> Self {
        Self {
            count_per_class: 20,
            classes: 10,
            flip_prob: 0.05,
            n_hidden: 10,
            engines: vec![Engine::MeanField, Engine::Mixture { n_components: 10 }],
            anneal: AnnealSchedule::geometric(100.0, 7).unwrap(),
            n_iterations: 30,
            learning_rate: 0.1,
            init_weight_std: 0.1,
            fixed_point: FixedPointSettings::default(),
            anneal_clamped: false,
            carry_over_free: false,
        }
    }
}

impl ImageLearnConfig {
    pub fn train_config(&self, engine: Engine, seed: u64) -> TrainConfig {
        TrainConfig {
            engine,
            learning_rate: self.learning_rate,
            n_iterations: self.n_iterations,
            anneal: self.anneal.clone(),
            init_weight_std: self.init_weight_std,
            fixed_point: self.fixed_point,
            seed,
            anneal_clamped: self.anneal_clamped,
            carry_over_free: self.carry_over_free,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count_per_class == 0 {
            return Err(invalid("count_per_class must be >= 1"));
        }
        if self.classes == 0 || self.classes > super::data::N_PROTOTYPES {
            return Err(invalid(format!("classes must lie in 1..={}", super::data::N_PROTOTYPES)));
        }
        check_flip(self.flip_prob)?;
        if self.engines.is_empty() {
            return Err(invalid("engines must not be empty"));
        }
        if self.engines.contains(&Engine::Exact) {
            return Err(invalid("the exact engine cannot enumerate the image network"));
        }
        for &e in &self.engines {
            self.train_config(e, 0).validate()?;
        }
        Ok(())
    }
}

/// Standalone data generation: synthetic images and, optionally, random nets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenDataConfig {
    pub count_per_class: usize,
    pub classes: usize,
    pub flip_prob: f64,
    pub n_nets: usize,
    pub n_nodes: usize,
    pub param_range: [f64; 2],
}

impl Default for GenDataConfig {
    fn default() -> Self {
        Self {
            count_per_class: 20,
            classes: 10,
            flip_prob: 0.05,
            n_nets: 0,
            n_nodes: 10,
            param_range: [-1.0, 1.0],
        }
    }
}

impl GenDataConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.classes > super::data::N_PROTOTYPES {
            return Err(invalid(format!("classes must lie in 1..={}", super::data::N_PROTOTYPES)));
        }
        check_flip(self.flip_prob)?;
        check_range("param_range", self.param_range)
    }
}

/// Declarative input for every experiment. Each experiment reads its own
/// section; absent keys take the documented defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// When set, the config may only be used for this experiment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentId>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub inference_bench: InferenceBenchConfig,
    pub toy_learn: ToyLearnConfig,
    pub image_learn: ImageLearnConfig,
    pub gen_data: GenDataConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: None,
            seed: 0,
            output_dir: None,
            inference_bench: InferenceBenchConfig::default(),
            toy_learn: ToyLearnConfig::default(),
            image_learn: ImageLearnConfig::default(),
            gen_data: GenDataConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s)?;
        if c.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                c.schema_version
            )));
        }
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid(e.to_string()))
    }

    /// Validate the section used by `id` and any experiment pin.
    pub fn validate_for(&self, id: ExperimentId) -> Result<()> {
        if let Some(pinned) = self.experiment {
            if pinned != id {
                return Err(invalid(format!("config is for `{pinned}`, not `{id}`")));
            }
        }
        match id {
            ExperimentId::InferenceBench => self.inference_bench.validate(),
            ExperimentId::ToyLearn => self.toy_learn.validate(),
            ExperimentId::ImageLearn => self.image_learn.validate(),
            ExperimentId::GenData => self.gen_data.validate(),
        }
    }
}
