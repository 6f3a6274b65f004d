use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibration::generate_calibration;
use super::episode::{run_episode, EpisodeConfig, EpisodeResult};
use super::generator::{generate, with_extra_agents};
use super::metrics::{compute_curves, size_advantage, write_advantage_csv, write_curves_csv, SrNtcCurve, TimeMetric};
use super::policy::Policy;
use crate::conformal::{CalibrationArtifact, CalibrationSet, Thresholds};
use crate::scenario::Scenario;

/// Seed offset of the scenarios used only for calibration.
pub const CALIBRATION_SEED_BASE: u64 = 1_000_000;
pub const CALIBRATION_SCENARIOS: usize = 20;
pub const LATENCY_RATES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Comm,
    Cp,
    Latency,
    Size,
    Scale3,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 5] = [SuiteKind::Comm, SuiteKind::Cp, SuiteKind::Latency, SuiteKind::Size, SuiteKind::Scale3];

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Comm => "comm",
            SuiteKind::Cp => "cp",
            SuiteKind::Latency => "latency",
            SuiteKind::Size => "size",
            SuiteKind::Scale3 => "scale3",
        }
    }

    /// Oracle noise the suite runs at.
    pub fn noise(self) -> f64 {
        match self {
            SuiteKind::Cp => 0.35,
            _ => 0.15,
        }
    }
}

impl fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SuiteKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown suite {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub kind: SuiteKind,
    /// Scenarios per variant (per size class for the size suite).
    pub seeds: usize,
    /// Scenario `i` is generated from `base_seed + i` and run with episode seed `i`.
    pub base_seed: u64,
    pub episode: EpisodeConfig,
    pub calibration_pairs: usize,
    pub record_logs: bool,
}

impl SuiteConfig {
    pub fn new(kind: SuiteKind, seeds: usize) -> Self {
        let mut episode = EpisodeConfig::default();
        episode.oracle.noise = kind.noise();
        SuiteConfig {
            kind,
            seeds,
            base_seed: 0,
            episode,
            calibration_pairs: 2000,
            record_logs: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutput {
    pub config: SuiteConfig,
    pub calibration: (CalibrationSet, CalibrationSet),
    pub thresholds: Thresholds,
    /// Results per variant, each in seed order.
    pub groups: BTreeMap<String, Vec<EpisodeResult>>,
    pub curves: Vec<SrNtcCurve>,
}

impl SuiteOutput {
    pub fn group(&self, name: &str) -> &[EpisodeResult] {
        self.groups.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Metric values of two groups, paired by position.
    pub fn paired(&self, a: &str, b: &str, metric: TimeMetric) -> (Vec<f64>, Vec<f64>) {
        let (ga, gb) = (self.group(a), self.group(b));
        assert_eq!(ga.len(), gb.len(), "groups {a} and {b} are not paired");
        (
            ga.iter().map(|r| metric.eval(r)).collect(),
            gb.iter().map(|r| metric.eval(r)).collect(),
        )
    }

    pub fn all_results(&self) -> Vec<EpisodeResult> {
        self.groups.values().flatten().cloned().collect()
    }
}

struct Job {
    group: String,
    scenario: usize,
    policy: Policy,
    seed: u64,
    cfg: EpisodeConfig,
}

pub fn calibration_scenarios() -> Result<Vec<Scenario>> {
    (0..CALIBRATION_SCENARIOS)
        .map(|j| {
            generate(CALIBRATION_SEED_BASE + j as u64, (j % 3 + 1) as u8, 2)
                .with_context(|| format!("calibration scenario {j}"))
        })
        .collect()
}

fn mixed(cfg: &SuiteConfig, i: usize) -> Result<Scenario> {
    let seed = cfg.base_seed + i as u64;
    generate(seed, (i % 3 + 1) as u8, 2).with_context(|| format!("scenario seed {seed}"))
}

fn plan(cfg: &SuiteConfig) -> Result<(Vec<Scenario>, Vec<Job>)> {
    let mut scenarios = Vec::new();
    let mut jobs = Vec::new();
    let base = &cfg.episode;
    let add = |jobs: &mut Vec<Job>, group: String, scenario: usize, policy: Policy, seed: u64, ep: EpisodeConfig| {
        jobs.push(Job { group, scenario, policy, seed, cfg: ep })
    };
    match cfg.kind {
        SuiteKind::Comm | SuiteKind::Cp => {
            let policies: &[Policy] = if cfg.kind == SuiteKind::Comm {
                &[Policy::Commcp, Policy::Mmfbe, Policy::Mmeuc, Policy::ComControl, Policy::NoAnswerSharing]
            } else {
                &[Policy::Commcp, Policy::NoCp]
            };
            for i in 0..cfg.seeds {
                scenarios.push(mixed(cfg, i)?);
                for &p in policies {
                    add(&mut jobs, p.name().into(), i, p, i as u64, base.clone());
                }
            }
        }
        SuiteKind::Latency => {
            for i in 0..cfg.seeds {
                scenarios.push(mixed(cfg, i)?);
                for rate in LATENCY_RATES {
                    let mut ep = base.clone();
                    ep.bus.msg_rate = rate;
                    add(&mut jobs, latency_group(rate), i, Policy::Commcp, i as u64, ep);
                }
            }
        }
        SuiteKind::Size => {
            for class in 1..=3u8 {
                for i in 0..cfg.seeds {
                    let seed = cfg.base_seed + i as u64;
                    let s = generate(seed, class, 2).with_context(|| format!("class {class} seed {seed}"))?;
                    scenarios.push(s);
                    let k = scenarios.len() - 1;
                    for p in [Policy::Commcp, Policy::Mmfbe] {
                        add(&mut jobs, size_group(p, class), k, p, i as u64, base.clone());
                    }
                }
            }
        }
        SuiteKind::Scale3 => {
            for i in 0..cfg.seeds {
                let two = mixed(cfg, i)?;
                let three = with_extra_agents(&two, 3, cfg.base_seed + i as u64)?;
                scenarios.push(two);
                scenarios.push(three);
                let (k2, k3) = (scenarios.len() - 2, scenarios.len() - 1);
                add(&mut jobs, "commcp_2a".into(), k2, Policy::Commcp, i as u64, base.clone());
                add(&mut jobs, "commcp_3a".into(), k3, Policy::Commcp, i as u64, base.clone());
                add(&mut jobs, "mmfbe_3a".into(), k3, Policy::Mmfbe, i as u64, base.clone());
            }
        }
    }
    Ok((scenarios, jobs))
}

pub fn latency_group(rate: f64) -> String {
    format!("rate_{rate}")
}

pub fn size_group(policy: Policy, class: u8) -> String {
    format!("{}_c{class}", policy.name())
}

/// Calibrates once, then runs every episode of the suite in parallel.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteOutput> {
    let cal_scenarios = calibration_scenarios()?;
    let (cal_a, cal_b) = generate_calibration(&cal_scenarios, &cfg.episode.oracle, cfg.base_seed, cfg.calibration_pairs)?;
    let thresholds = cfg.episode.cp.thresholds(&cal_a, &cal_b)?;
    let (scenarios, jobs) = plan(cfg)?;
    let results: Vec<(String, EpisodeResult)> = jobs
        .par_iter()
        .map(|j| {
            let mut ep = j.cfg.clone();
            ep.record_log = cfg.record_logs;
            ep.threads = 1;
            run_episode(&scenarios[j.scenario], j.policy, j.seed, &ep, thresholds)
                .map(|r| (j.group.clone(), r))
                .with_context(|| format!("{} on {}", j.group, scenarios[j.scenario].name()))
        })
        .collect::<Result<_>>()?;
    let mut groups: BTreeMap<String, Vec<EpisodeResult>> = BTreeMap::new();
    for (g, r) in results {
        groups.entry(g).or_default().push(r);
    }
    let curves = compute_curves(&groups);
    Ok(SuiteOutput {
        config: cfg.clone(),
        calibration: (cal_a, cal_b),
        thresholds,
        groups,
        curves,
    })
}

#[derive(Serialize)]
struct EpisodeRow<'a> {
    group: &'a str,
    scenario: &'a str,
    seed: u64,
    policy: Policy,
    n_agents: usize,
    area_m2: f64,
    ntc: f64,
    sr: f64,
    ntc_to_sr_0_6: f64,
    messages_sent: usize,
    requests: usize,
    messages: usize,
    answer_shares: usize,
}

/// Writes `curves.csv`, `episodes.csv`, `calibration.json`, the size table
/// when applicable, and `logs/` when logs were recorded.
pub fn write_suite(out: &SuiteOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_curves_csv(fs::File::create(dir.join("curves.csv"))?, &out.curves)?;
    let mut w = csv::Writer::from_path(dir.join("episodes.csv"))?;
    for (g, rs) in &out.groups {
        for r in rs {
            w.serialize(EpisodeRow {
                group: g,
                scenario: &r.scenario,
                seed: r.seed,
                policy: r.policy,
                n_agents: r.n_agents,
                area_m2: r.area_m2,
                ntc: r.ntc,
                sr: r.sr,
                ntc_to_sr_0_6: r.ntc_to_sr(0.6),
                messages_sent: r.messages_sent,
                requests: r.payload_count("request"),
                messages: r.payload_count("message"),
                answer_shares: r.payload_count("answer_share"),
            })?;
        }
    }
    w.flush()?;
    let cp = &out.config.episode.cp;
    let arts = [
        CalibrationArtifact::build(&out.calibration.0, cp.epsilon1_a, cp.direction)?,
        CalibrationArtifact::build(&out.calibration.1, cp.epsilon1_b, cp.direction)?,
    ];
    crate::conformal::write_artifacts(dir.join("calibration.json"), &arts)?;
    if out.config.kind == SuiteKind::Size {
        for (name, metric) in [("advantage.csv", TimeMetric::Completion), ("advantage_sr06.csv", TimeMetric::ToSr(0.6))] {
            let rows = size_advantage(&out.all_results(), metric)?;
            write_advantage_csv(fs::File::create(dir.join(name))?, &rows)?;
        }
    }
    for (g, rs) in &out.groups {
        for r in rs {
            if let Some(log) = &r.log {
                let d = dir.join("logs").join(g);
                fs::create_dir_all(&d)?;
                fs::write(d.join(format!("{}_seed{}.jsonl", r.scenario, r.seed)), log)?;
            }
        }
    }
    Ok(())
}
