use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::episode::EpisodeResult;
use super::generator::size_class;
use super::policy::Policy;
use super::stats::{mean, std_dev};

/// NTC checkpoints 0.1, 0.2, ..., 1.0.
pub fn checkpoints() -> [f64; 10] {
    std::array::from_fn(|i| (i + 1) as f64 / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub policy: String,
    pub ntc: f64,
    pub sr_mean: f64,
    pub sr_std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrNtcCurve {
    pub policy: String,
    pub points: Vec<CurvePoint>,
}

impl SrNtcCurve {
    pub fn sr_at(&self, ntc: f64) -> Option<f64> {
        self.points.iter().find(|p| (p.ntc - ntc).abs() < 1e-9).map(|p| p.sr_mean)
    }
}

/// Groups results under their policy name.
pub fn group_by_policy(results: &[EpisodeResult]) -> BTreeMap<String, Vec<EpisodeResult>> {
    let mut g: BTreeMap<String, Vec<EpisodeResult>> = BTreeMap::new();
    for r in results {
        g.entry(r.policy.name().to_string()).or_default().push(r.clone());
    }
    g
}

/// One curve per group, sampled at [`checkpoints`]. Empty groups are skipped.
pub fn compute_curves(groups: &BTreeMap<String, Vec<EpisodeResult>>) -> Vec<SrNtcCurve> {
    groups
        .iter()
        .filter(|(_, rs)| !rs.is_empty())
        .map(|(name, rs)| SrNtcCurve {
            policy: name.clone(),
            points: checkpoints()
                .into_iter()
                .map(|c| {
                    let srs: Vec<f64> = rs
                        .iter()
                        .map(|r| if c >= 1.0 { r.sr } else { r.sr_at(c) })
                        .collect();
                    CurvePoint {
                        policy: name.clone(),
                        ntc: c,
                        sr_mean: mean(&srs),
                        sr_std: std_dev(&srs),
                        n: srs.len(),
                    }
                })
                .collect(),
        })
        .collect()
}

pub fn write_curves_csv<W: Write>(w: W, curves: &[SrNtcCurve]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in curves.iter().flat_map(|c| &c.points) {
        out.serialize(p)?;
    }
    out.flush()?;
    Ok(())
}

/// Per-episode time measure used for comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMetric {
    /// `EpisodeResult::ntc`.
    Completion,
    /// Normalized time to reach the given success rate.
    ToSr(f64),
}

impl TimeMetric {
    pub fn eval(self, r: &EpisodeResult) -> f64 {
        match self {
            TimeMetric::Completion => r.ntc,
            TimeMetric::ToSr(level) => r.ntc_to_sr(level),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeAdvantage {
    pub size_class: u8,
    /// Mean of commcp minus mmfbe over paired episodes; negative favours commcp.
    pub advantage: f64,
    pub std: f64,
    pub n: usize,
}

/// Advantage of commcp over mmfbe per size class, pairing episodes by
/// scenario and seed.
pub fn size_advantage(results: &[EpisodeResult], metric: TimeMetric) -> Result<Vec<SizeAdvantage>, MetricsError> {
    let key = |r: &EpisodeResult| (r.scenario.clone(), r.seed);
    let mmfbe: BTreeMap<_, &EpisodeResult> = results
        .iter()
        .filter(|r| r.policy == Policy::Mmfbe)
        .map(|r| (key(r), r))
        .collect();
    let mut diffs: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    for r in results.iter().filter(|r| r.policy == Policy::Commcp) {
        if let Some(b) = mmfbe.get(&key(r)) {
            diffs
                .entry(size_class(r.area_m2))
                .or_default()
                .push(metric.eval(r) - metric.eval(b));
        }
    }
    if diffs.len() < 2 {
        return Err(MetricsError::InsufficientData(format!(
            "paired commcp/mmfbe results span {} size class(es), need at least 2",
            diffs.len()
        )));
    }
    Ok(diffs
        .into_iter()
        .map(|(c, d)| SizeAdvantage {
            size_class: c,
            advantage: mean(&d),
            std: std_dev(&d),
            n: d.len(),
        })
        .collect())
}

pub fn write_advantage_csv<W: Write>(w: W, rows: &[SizeAdvantage]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{AnswerRecord, Label, Outcome, Via};

    fn result(policy: Policy, scenario: &str, seed: u64, area: f64, times: &[Option<f64>], ntc: f64) -> EpisodeResult {
        let tmax = 100.0;
        let mut outcomes = BTreeMap::new();
        let mut answers = Vec::new();
        for (i, t) in times.iter().enumerate() {
            let id = format!("q{i}");
            match t {
                Some(t) => {
                    outcomes.insert(id.clone(), Outcome::Correct);
                    answers.push(AnswerRecord {
                        question_id: id,
                        label: Label::A,
                        sim_time: t * tmax,
                        answered_by: 0,
                        via: Via::SelfAnswered,
                    });
                }
                None => {
                    outcomes.insert(id, Outcome::Unanswered);
                }
            }
        }
        let correct = times.iter().filter(|t| t.is_some()).count();
        EpisodeResult {
            scenario: scenario.into(),
            area_m2: area,
            n_agents: 2,
            policy,
            seed,
            sr: correct as f64 / times.len() as f64,
            outcomes,
            answers,
            total_sim_time: ntc * tmax,
            tmax,
            ntc,
            messages_sent: 0,
            payloads: BTreeMap::new(),
            reply_sizes: Vec::new(),
            in_flight_at_end: 0,
            log: None,
        }
    }

    #[test]
    fn step_function_for_single_episode() {
        let r = result(Policy::Commcp, "s", 0, 50.0, &[Some(0.5), Some(0.5)], 0.5);
        let curves = compute_curves(&group_by_policy(&[r]));
        assert_eq!(curves.len(), 1);
        for p in &curves[0].points {
            let want = if p.ntc < 0.5 { 0.0 } else { 1.0 };
            assert_eq!(p.sr_mean, want, "at {}", p.ntc);
            assert_eq!(p.sr_std, 0.0);
        }
    }

    #[test]
    fn csv_uses_exact_grid() {
        let r = result(Policy::Mmfbe, "s", 0, 50.0, &[Some(0.25), None], 1.0);
        let mut buf = Vec::new();
        write_curves_csv(&mut buf, &compute_curves(&group_by_policy(&[r]))).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("policy,ntc,sr_mean,sr_std,n"));
        let grid: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
        assert_eq!(grid, ["0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9", "1.0"]);
    }

    #[test]
    fn final_checkpoint_is_mean_sr() {
        let rs = vec![
            result(Policy::Commcp, "a", 0, 50.0, &[Some(0.1), Some(0.9), None], 1.0),
            result(Policy::Commcp, "b", 1, 50.0, &[Some(1.0), None, None], 1.0),
            result(Policy::Commcp, "c", 2, 50.0, &[Some(0.3), Some(0.3), Some(0.7)], 0.7),
        ];
        let curves = compute_curves(&group_by_policy(&rs));
        let srs: Vec<f64> = rs.iter().map(|r| r.sr).collect();
        assert_eq!(curves[0].sr_at(1.0), Some(mean(&srs)));
        let means: Vec<f64> = curves[0].points.iter().map(|p| p.sr_mean).collect();
        assert!(means.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn advantage_per_class() {
        let rs = vec![
            result(Policy::Commcp, "a", 0, 100.0, &[Some(0.5)], 0.5),
            result(Policy::Mmfbe, "a", 0, 100.0, &[Some(0.5)], 0.5),
            result(Policy::Commcp, "b", 0, 300.0, &[Some(0.2)], 0.2),
            result(Policy::Mmfbe, "b", 0, 300.0, &[Some(0.8)], 0.8),
        ];
        let adv = size_advantage(&rs, TimeMetric::Completion).unwrap();
        assert_eq!(adv.len(), 2);
        assert_eq!((adv[0].size_class, adv[0].advantage), (1, 0.0));
        assert_eq!(adv[1].size_class, 3);
        assert!((adv[1].advantage + 0.6).abs() < 1e-12);
    }

    #[test]
    fn advantage_needs_two_classes() {
        let rs = vec![
            result(Policy::Commcp, "a", 0, 100.0, &[Some(0.5)], 0.5),
            result(Policy::Mmfbe, "a", 0, 100.0, &[Some(0.5)], 0.5),
        ];
        assert!(matches!(
            size_advantage(&rs, TimeMetric::Completion),
            Err(MetricsError::InsufficientData(_))
        ));
    }
}
