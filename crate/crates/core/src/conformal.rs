//! Split conformal calibration of option-probability pairs and the filter
//! that decides which observed objects are worth mentioning to a partner.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{OptionProbPair, RelOption};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    /// Option class the score belongs to (A or B).
    pub option: RelOption,
    pub prob: f64,
    pub true_option: RelOption,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSet {
    pub option_class: RelOption,
    pub scores: Vec<f64>,
    /// Scenario names the scores were drawn from.
    pub provenance: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Threshold at the high `1 - eps` quantile; keep scores at or above it.
    PaperUpper,
    /// Threshold at the low `eps` quantile, the usual split-conformal cut.
    StandardLower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub a: f64,
    pub b: f64,
}

impl Thresholds {
    /// Lets every pair through.
    pub const PASS_ALL: Thresholds = Thresholds { a: 0.0, b: 0.0 };

    pub fn for_option(&self, o: RelOption) -> Option<f64> {
        match o {
            RelOption::A => Some(self.a),
            RelOption::B => Some(self.b),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpConfig {
    /// Miscoverage rate for the A class.
    pub epsilon1_a: f64,
    /// Miscoverage rate for the B class.
    pub epsilon1_b: f64,
    pub direction: Direction,
    /// Fixed thresholds that bypass calibration.
    pub thresholds: Option<Thresholds>,
}

impl Default for CpConfig {
    fn default() -> Self {
        // 0.6 and 0.82 quantile levels
        CpConfig {
            epsilon1_a: 0.4,
            epsilon1_b: 0.18,
            direction: Direction::PaperUpper,
            thresholds: None,
        }
    }
}

impl CpConfig {
    pub fn validate(&self) -> Result<(), CpError> {
        for e in [self.epsilon1_a, self.epsilon1_b] {
            if !(e > 0.0 && e < 1.0) {
                return Err(CpError::Epsilon(e));
            }
        }
        Ok(())
    }

    /// Thresholds from calibration sets unless fixed ones are configured.
    pub fn thresholds(&self, cal_a: &CalibrationSet, cal_b: &CalibrationSet) -> Result<Thresholds, CpError> {
        if let Some(t) = self.thresholds {
            return Ok(t);
        }
        self.validate()?;
        Ok(Thresholds {
            a: conformal_threshold(&cal_a.scores, self.epsilon1_a, self.direction)?,
            b: conformal_threshold(&cal_b.scores, self.epsilon1_b, self.direction)?,
        })
    }
}

#[derive(Debug, Error)]
pub enum CpError {
    #[error("calibration set is empty")]
    EmptyCalibration,
    #[error("epsilon1 must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("calibration artifact: {0}")]
    Artifact(String),
}

/// 1-based rank of the threshold order statistic among `n` ascending scores.
pub fn conformal_rank(n: usize, epsilon1: f64, direction: Direction) -> usize {
    let level = match direction {
        Direction::PaperUpper => 1.0 - epsilon1,
        Direction::StandardLower => epsilon1,
    };
    let r = ((n as f64 + 1.0) * level).ceil();
    (r.max(1.0) as usize).min(n)
}

pub fn conformal_threshold(scores: &[f64], epsilon1: f64, direction: Direction) -> Result<f64, CpError> {
    if scores.is_empty() {
        return Err(CpError::EmptyCalibration);
    }
    if !(epsilon1 > 0.0 && epsilon1 < 1.0) {
        return Err(CpError::Epsilon(epsilon1));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[conformal_rank(sorted.len(), epsilon1, direction) - 1])
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filtered {
    pub targets: Vec<String>,
    pub relevants: Vec<String>,
}

impl Filtered {
    pub fn is_empty(&self) -> bool {
        self.targets.is_empty() && self.relevants.is_empty()
    }

    pub fn len(&self) -> usize {
        self.targets.len() + self.relevants.len()
    }
}

/// Keeps A pairs scoring at least `thres_a` and B pairs scoring at least
/// `thres_b`; C and D never pass.
pub fn filter_pairs(pairs: &[OptionProbPair], thres_a: f64, thres_b: f64) -> Filtered {
    let mut out = Filtered::default();
    for p in pairs {
        match p.option {
            RelOption::A if p.prob >= thres_a => out.targets.push(p.object_id.clone()),
            RelOption::B if p.prob >= thres_b => out.relevants.push(p.object_id.clone()),
            _ => {}
        }
    }
    out
}

/// Fraction of samples whose true-class score clears that class's threshold.
pub fn empirical_coverage(samples: &[CalibrationSample], thresholds: Thresholds) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let hits = samples
        .iter()
        .filter(|s| {
            s.option == s.true_option
                && thresholds.for_option(s.option).is_some_and(|t| s.prob >= t)
        })
        .count();
    hits as f64 / samples.len() as f64
}

/// On-disk calibration record, one per option class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationArtifact {
    pub option_class: RelOption,
    pub epsilon1: f64,
    pub direction: Direction,
    pub scores: Vec<f64>,
    pub threshold: f64,
    pub provenance: Vec<String>,
}

impl CalibrationArtifact {
    pub fn build(set: &CalibrationSet, epsilon1: f64, direction: Direction) -> Result<Self, CpError> {
        Ok(CalibrationArtifact {
            option_class: set.option_class,
            epsilon1,
            direction,
            threshold: conformal_threshold(&set.scores, epsilon1, direction)?,
            scores: set.scores.clone(),
            provenance: set.provenance.clone(),
        })
    }
}

pub fn write_artifacts(path: impl AsRef<Path>, arts: &[CalibrationArtifact]) -> Result<(), CpError> {
    let text = serde_json::to_string_pretty(arts).map_err(|e| CpError::Artifact(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| CpError::Artifact(e.to_string()))
}

/// Reads an artifact file and returns the stored A and B thresholds.
pub fn read_thresholds(path: impl AsRef<Path>) -> Result<Thresholds, CpError> {
    let text = std::fs::read_to_string(path).map_err(|e| CpError::Artifact(e.to_string()))?;
    let arts: Vec<CalibrationArtifact> =
        serde_json::from_str(&text).map_err(|e| CpError::Artifact(e.to_string()))?;
    let find = |o: RelOption| {
        arts.iter()
            .find(|a| a.option_class == o)
            .map(|a| a.threshold)
            .ok_or_else(|| CpError::Artifact(format!("no artifact for option {}", o.letter())))
    };
    Ok(Thresholds {
        a: find(RelOption::A)?,
        b: find(RelOption::B)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(id: &str, option: RelOption, prob: f64) -> OptionProbPair {
        OptionProbPair {
            object_id: id.into(),
            option,
            prob,
        }
    }

    #[test]
    fn upper_rank_example() {
        let s = [0.9, 0.2, 0.7, 0.4, 0.5];
        assert_eq!(conformal_threshold(&s, 0.4, Direction::PaperUpper).unwrap(), 0.7);
    }

    #[test]
    fn single_score_is_its_own_threshold() {
        for d in [Direction::PaperUpper, Direction::StandardLower] {
            for e in [0.01, 0.5, 0.99] {
                assert_eq!(conformal_threshold(&[0.3], e, d).unwrap(), 0.3);
            }
        }
    }

    #[test]
    fn empty_set_errors() {
        assert!(matches!(
            conformal_threshold(&[], 0.1, Direction::PaperUpper),
            Err(CpError::EmptyCalibration)
        ));
        assert!(matches!(
            conformal_threshold(&[0.1], 1.0, Direction::PaperUpper),
            Err(CpError::Epsilon(_))
        ));
    }

    #[test]
    fn filter_boundaries() {
        let f = filter_pairs(&[pair("x", RelOption::A, 0.91)], 0.9, 0.9);
        assert_eq!(f.targets, vec!["x"]);
        let f = filter_pairs(&[pair("x", RelOption::B, 0.5)], 0.6, 0.82);
        assert!(f.is_empty());
        let f = filter_pairs(
            &[
                pair("a", RelOption::A, 0.95),
                pair("b", RelOption::B, 0.85),
                pair("c", RelOption::C, 0.99),
                pair("d", RelOption::D, 0.9),
            ],
            0.6,
            0.82,
        );
        assert_eq!(f.targets, vec!["a"]);
        assert_eq!(f.relevants, vec!["b"]);
    }

    #[test]
    fn coverage_extremes() {
        let s: Vec<_> = (0..10)
            .map(|i| CalibrationSample {
                option: RelOption::A,
                prob: i as f64 / 10.0,
                true_option: RelOption::A,
            })
            .collect();
        assert_eq!(empirical_coverage(&s, Thresholds::PASS_ALL), 1.0);
        assert_eq!(empirical_coverage(&s, Thresholds { a: 1.01, b: 1.01 }), 0.0);
    }

    #[test]
    fn artifacts_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cal.json");
        let a = CalibrationSet {
            option_class: RelOption::A,
            scores: vec![0.2, 0.4, 0.5, 0.7, 0.9],
            provenance: vec!["s0".into()],
        };
        let b = CalibrationSet {
            option_class: RelOption::B,
            scores: vec![0.3],
            provenance: vec!["s0".into()],
        };
        let arts = [
            CalibrationArtifact::build(&a, 0.4, Direction::PaperUpper).unwrap(),
            CalibrationArtifact::build(&b, 0.18, Direction::PaperUpper).unwrap(),
        ];
        write_artifacts(&path, &arts).unwrap();
        assert_eq!(read_thresholds(&path).unwrap(), Thresholds { a: 0.7, b: 0.3 });
    }

    proptest! {
        #[test]
        fn upper_threshold_weakly_decreases_in_epsilon(
            scores in prop::collection::vec(0.0f64..=1.0, 1..60),
            e1 in 0.01f64..0.99,
            e2 in 0.01f64..0.99,
        ) {
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let t_lo = conformal_threshold(&scores, lo, Direction::PaperUpper).unwrap();
            let t_hi = conformal_threshold(&scores, hi, Direction::PaperUpper).unwrap();
            prop_assert!(t_hi <= t_lo);
        }

        #[test]
        fn filter_is_monotone_in_thresholds(
            raw in prop::collection::vec((0usize..4, 0.0f64..=1.0), 0..30),
            ta in 0.0f64..=1.0, tb in 0.0f64..=1.0, da in 0.0f64..0.5, db in 0.0f64..0.5,
        ) {
            let pairs: Vec<_> = raw.iter().enumerate()
                .map(|(i, &(o, p))| pair(&i.to_string(), RelOption::ALL[o], p))
                .collect();
            let loose = filter_pairs(&pairs, ta, tb);
            let strict = filter_pairs(&pairs, ta + da, tb + db);
            prop_assert!(strict.targets.iter().all(|t| loose.targets.contains(t)));
            prop_assert!(strict.relevants.iter().all(|t| loose.relevants.contains(t)));
        }
    }
}
