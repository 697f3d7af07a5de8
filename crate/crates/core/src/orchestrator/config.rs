use std::fmt;
use std::str::FromStr;

use crate::embedding::TrainConfig;
use crate::error::{Error, Result};
use crate::reasoner::{InitParams, ReasonerConfig};

/// Which outputs of the embedding module flow back into the reasoner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeedbackMode {
    /// Predicted mappings seed the reasoner and similarities are blended in.
    #[default]
    Both,
    /// Only predicted mappings; no similarity blending.
    MappingsOnly,
    /// Only similarity blending; predictions never seed the reasoner.
    EmbeddingsOnly,
}

impl FeedbackMode {
    pub fn uses_mappings(self) -> bool {
        self != FeedbackMode::EmbeddingsOnly
    }

    pub fn uses_embeddings(self) -> bool {
        self != FeedbackMode::MappingsOnly
    }
}

impl fmt::Display for FeedbackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedbackMode::Both => "both",
            FeedbackMode::MappingsOnly => "mappings_only",
            FeedbackMode::EmbeddingsOnly => "embeddings_only",
        })
    }
}

impl FromStr for FeedbackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(FeedbackMode::Both),
            "mappings_only" | "M" => Ok(FeedbackMode::MappingsOnly),
            "embeddings_only" | "E" => Ok(FeedbackMode::EmbeddingsOnly),
            _ => Err(Error::Config(format!(
                "feedback_mode {s:?} is not one of both, mappings_only, embeddings_only"
            ))),
        }
    }
}

/// Settings of a full alignment run. The defaults are α₁ = α₂ = 1,
/// β = 0.8, δ₁ = δ₂ = δ_f = 0.1, K = 1 with cosine similarity.
#[derive(Debug, Clone)]
pub struct PraseConfig {
    /// Number of embedding/reasoning rounds after the initial reasoning pass.
    pub k: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta_f: f64,
    pub feedback_mode: FeedbackMode,
    pub reasoner: ReasonerConfig,
    pub trainer: TrainConfig,
    pub mutual_nn: bool,
}

impl Default for PraseConfig {
    fn default() -> Self {
        Self {
            k: 1,
            alpha1: 1.0,
            alpha2: 1.0,
            delta1: 0.1,
            delta2: 0.1,
            delta_f: 0.1,
            feedback_mode: FeedbackMode::Both,
            reasoner: ReasonerConfig::default(),
            trainer: TrainConfig::default(),
            mutual_nn: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: {value:?} is not a boolean"))),
    }
}

impl PraseConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::Config(format!("{name} = {a} must lie in (0, 1]")));
            }
        }
        for (name, d) in [
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("delta_f", self.delta_f),
        ] {
            if !(0.0..1.0).contains(&d) {
                return Err(Error::Config(format!("{name} = {d} must lie in [0, 1)")));
            }
        }
        self.reasoner.validate()?;
        self.trainer.validate()
    }

    pub fn init_params(&self) -> InitParams {
        InitParams {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            delta1: self.delta1,
            delta_f: self.delta_f,
            use_predictions: self.feedback_mode.uses_mappings(),
        }
    }

    /// Applies one `key=value` setting. Nested settings use dotted keys such
    /// as `reasoner.top_k` or `trainer.epochs`; `beta` is shorthand for
    /// `reasoner.beta`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let r = &mut self.reasoner;
        let t = &mut self.trainer;
        match key {
            "K" | "k" => self.k = parse(key, value)?,
            "alpha1" => self.alpha1 = parse(key, value)?,
            "alpha2" => self.alpha2 = parse(key, value)?,
            "delta1" => self.delta1 = parse(key, value)?,
            "delta2" => self.delta2 = parse(key, value)?,
            "delta_f" => self.delta_f = parse(key, value)?,
            "feedback_mode" => self.feedback_mode = value.trim().parse()?,
            "beta" | "reasoner.beta" => r.beta = parse(key, value)?,
            "reasoner.theta_init_subrel" => r.theta_init_subrel = parse(key, value)?,
            "reasoner.max_self_iterations" => r.max_self_iterations = parse(key, value)?,
            "reasoner.convergence_epsilon" => r.convergence_epsilon = parse(key, value)?,
            "reasoner.top_k" => r.top_k = parse(key, value)?,
            "reasoner.case_fold" => r.case_fold = parse_bool(key, value)?,
            "trainer.dim" => t.dim = parse(key, value)?,
            "trainer.margin" => t.margin = parse(key, value)?,
            "trainer.learning_rate" => t.learning_rate = parse(key, value)?,
            "trainer.epochs" => t.epochs = parse(key, value)?,
            "trainer.negatives" => t.negatives = parse(key, value)?,
            "trainer.batch_size" => t.batch_size = parse(key, value)?,
            "trainer.seed" => t.seed = parse(key, value)?,
            "se.mutual_nn" => self.mutual_nn = parse_bool(key, value)?,
            _ => return Err(Error::Config(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
        self.set(k, v)
    }

    /// Applies a config file: `key=value` lines, `#` comments, blank lines ignored.
    pub fn apply_file_contents(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.apply_override(line)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    /// Every setting with its resolved value, in a stable order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let r = &self.reasoner;
        let t = &self.trainer;
        vec![
            ("K", self.k.to_string()),
            ("alpha1", self.alpha1.to_string()),
            ("alpha2", self.alpha2.to_string()),
            ("delta1", self.delta1.to_string()),
            ("delta2", self.delta2.to_string()),
            ("delta_f", self.delta_f.to_string()),
            ("feedback_mode", self.feedback_mode.to_string()),
            ("reasoner.beta", r.beta.to_string()),
            (
                "reasoner.theta_init_subrel",
                r.theta_init_subrel.to_string(),
            ),
            (
                "reasoner.max_self_iterations",
                r.max_self_iterations.to_string(),
            ),
            (
                "reasoner.convergence_epsilon",
                r.convergence_epsilon.to_string(),
            ),
            ("reasoner.top_k", r.top_k.to_string()),
            ("reasoner.case_fold", r.case_fold.to_string()),
            ("reasoner.similarity", "cosine".to_string()),
            ("trainer.dim", t.dim.to_string()),
            ("trainer.margin", t.margin.to_string()),
            ("trainer.learning_rate", t.learning_rate.to_string()),
            ("trainer.epochs", t.epochs.to_string()),
            ("trainer.negatives", t.negatives.to_string()),
            ("trainer.batch_size", t.batch_size.to_string()),
            ("trainer.seed", t.seed.to_string()),
            ("se.mutual_nn", self.mutual_nn.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_settings() {
        let c = PraseConfig::default();
        assert_eq!((c.k, c.alpha1, c.alpha2), (1, 1.0, 1.0));
        assert_eq!((c.delta1, c.delta2, c.delta_f), (0.1, 0.1, 0.1));
        assert_eq!(c.reasoner.beta, 0.8);
        assert_eq!(c.reasoner.theta_init_subrel, 0.1);
        assert_eq!(c.feedback_mode, FeedbackMode::Both);
        c.validate().unwrap();
    }

    #[test]
    fn overrides_and_file() {
        let mut c = PraseConfig::default();
        c.apply_file_contents(
            "# comment\nK=2\n\nreasoner.beta = 0.5 # trailing\ntrainer.epochs=3\n",
        )
        .unwrap();
        c.apply_override("K=3").unwrap();
        c.apply_override("feedback_mode=embeddings_only").unwrap();
        assert_eq!(c.k, 3);
        assert_eq!(c.reasoner.beta, 0.5);
        assert_eq!(c.trainer.epochs, 3);
        assert_eq!(c.feedback_mode, FeedbackMode::EmbeddingsOnly);
        assert!(c.entries().contains(&("K", "3".to_string())));
    }

    #[test]
    fn bad_settings_are_config_errors() {
        let mut c = PraseConfig::default();
        assert!(c.apply_override("nonsense=1").unwrap_err().is_config());
        assert!(c.apply_override("K").unwrap_err().is_config());
        assert!(c.apply_override("K=-1").unwrap_err().is_config());
        assert!(c
            .apply_override("feedback_mode=sometimes")
            .unwrap_err()
            .is_config());
        c.set("delta_f", "1.0").unwrap();
        assert!(c.validate().unwrap_err().is_config());
    }
}
