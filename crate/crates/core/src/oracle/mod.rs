//! Semantic reasoning backends.
//!
//! An [`Oracle`] answers the three questions the agents ask of a language
//! model: how relevant an observed object is to a partner's request, how
//! confident the agent can be about a question given its current view, and
//! how promising a frontier looks for a question. [`SimulatedOracle`] derives
//! these from ground truth with seeded miscalibration; [`ExternalOracle`]
//! sends the prompt templates to a text-completion endpoint.

mod affinity;
mod external;
mod simulated;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{Cell, GridScene, ObjectInstance, Observation};
use crate::tasks::{Label, Question, TargetDescriptor};

pub use affinity::{AffinityTable, AFFINITY};
pub use external::{
    CompletionBackend, CompletionResponse, ExternalOracle, PromptTemplates, TokenProb,
};
#[cfg(feature = "http")]
pub use external::HttpBackend;
pub use simulated::SimulatedOracle;

/// Relevance of an observed object to a partner's requested target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelOption {
    /// The observed object is the requested target.
    A,
    /// Highly relevant; the target should be close by.
    B,
    /// Not strongly related.
    C,
    /// A common household feature.
    D,
}

impl RelOption {
    pub const ALL: [RelOption; 4] = [RelOption::A, RelOption::B, RelOption::C, RelOption::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        (b'A' + self as u8) as char
    }

    pub fn from_letter(c: char) -> Option<RelOption> {
        RelOption::ALL.into_iter().find(|o| o.letter() == c)
    }

    /// Only A and B carry information worth sending.
    pub fn communicable(self) -> bool {
        matches!(self, RelOption::A | RelOption::B)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionProbPair {
    pub object_id: String,
    pub option: RelOption,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerJudgment {
    /// Distribution over the question's own choice labels.
    pub dist: BTreeMap<Label, f64>,
    /// Probability that the current view suffices to answer.
    pub relevance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    Simulated,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub mode: OracleMode,
    /// Miscalibration magnitude.
    pub noise: f64,
    /// Logit margin of the ground-truth option. `ln 57` puts 0.95 on the
    /// true option out of four when noise is zero.
    pub sharpness: f64,
    pub seed: u64,
    /// Logit noise standard deviation per unit of `noise`.
    pub logit_noise_gain: f64,
    /// Question-image relevance when a target is / is not in view.
    pub rel_hi: f64,
    pub rel_lo: f64,
    /// Non-truth answer mass at zero noise; grows by `gamma_gain * noise`.
    pub gamma0: f64,
    pub gamma_gain: f64,
    /// Frontier value in a room holding a target instance.
    pub sv_max: f64,
    /// Frontier value in a room whose category usually holds the target.
    pub sv_prior: f64,
    /// Frontier value noise, in units of `sv_max * noise`.
    pub sv_noise_gain: f64,
    /// External mode: at most this many outstanding endpoint requests.
    pub max_in_flight: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            mode: OracleMode::Simulated,
            noise: 0.15,
            sharpness: 57f64.ln(),
            seed: 0,
            logit_noise_gain: 8.0,
            rel_hi: 0.9,
            rel_lo: 0.1,
            gamma0: 0.05,
            gamma_gain: 0.5,
            sv_max: 3.0,
            sv_prior: 1.0,
            sv_noise_gain: 0.5,
            max_in_flight: 4,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        if !(self.noise >= 0.0) {
            return Err(OracleError::Config(format!("noise must be >= 0, got {}", self.noise)));
        }
        if !(self.sharpness > 0.0) {
            return Err(OracleError::Config(format!(
                "sharpness must be > 0, got {}",
                self.sharpness
            )));
        }
        if self.max_in_flight == 0 {
            return Err(OracleError::Config("max_in_flight must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("external backend error: {0}")]
    ExternalBackend(String),
    #[error("oracle config error: {0}")]
    Config(String),
}

pub trait Oracle: Send + Sync {
    fn relevance_options(
        &self,
        observed: &ObjectInstance,
        request: &[TargetDescriptor],
        scene: &GridScene,
    ) -> Result<OptionProbPair, OracleError>;

    fn answer_judgment(
        &self,
        question: &Question,
        observation: &Observation,
        scene: &GridScene,
    ) -> Result<AnswerJudgment, OracleError>;

    /// Non-negative score of `frontier` for `question` from the agent's own
    /// view, ignoring communication.
    fn local_semantic_value(
        &self,
        question: &Question,
        frontier: Cell,
        observation: &Observation,
        scene: &GridScene,
    ) -> f64;
}

/// Ground-truth relevance option of `observed` against a request.
///
/// A: identity match. D: common feature. B: shares a room with a matching
/// instance or is affinity-related to a requested name. C: otherwise.
pub fn ground_truth_option(
    observed: &ObjectInstance,
    request: &[TargetDescriptor],
    scene: &GridScene,
) -> RelOption {
    if request.iter().any(|d| d.matches(observed)) {
        return RelOption::A;
    }
    if AFFINITY.is_common_feature(&observed.name) {
        return RelOption::D;
    }
    let co_located = scene
        .objects()
        .iter()
        .any(|o| o.room_id == observed.room_id && request.iter().any(|d| d.matches(o)));
    if co_located || request.iter().any(|d| AFFINITY.related(&d.name, &observed.name)) {
        RelOption::B
    } else {
        RelOption::C
    }
}
