use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::policy::Policy;
use crate::agent::{AgentConfig, AgentState, ConfidenceConfig, ReplySize, Status, StepContext, StepOutput};
use crate::comms::{Bus, BusConfig, BusError, Envelope, Payload};
use crate::conformal::{CpConfig, Thresholds};
use crate::explore::ExploreConfig;
use crate::oracle::{Oracle, OracleConfig, OracleError, SimulatedOracle};
use crate::scenario::Scenario;
use crate::scene::{Cell, Heading, SensorConfig};
use crate::tasks::{grade, success_rate, AnswerRecord, Label, Outcome, Via};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub oracle: OracleConfig,
    pub cp: CpConfig,
    pub bus: BusConfig,
    pub sensor: SensorConfig,
    pub explore: ExploreConfig,
    pub confidence: ConfidenceConfig,
    /// Horizon in seconds; defaults to four perimeter traversals.
    pub tmax: Option<f64>,
    /// Worker threads for agent steps; 0 or 1 runs them inline.
    pub threads: usize,
    pub record_log: bool,
    /// Adds each agent's smoothed value map to the log every tick.
    #[serde(default)]
    pub record_sv: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            oracle: OracleConfig::default(),
            cp: CpConfig::default(),
            bus: BusConfig::default(),
            sensor: SensorConfig::default(),
            explore: ExploreConfig::default(),
            confidence: ConfidenceConfig::default(),
            tmax: None,
            threads: 1,
            record_log: false,
            record_sv: false,
        }
    }
}

impl EpisodeConfig {
    /// Seconds to traverse one cell.
    pub fn tick_seconds(&self, scenario: &Scenario) -> f64 {
        scenario.scene.cell_size() / self.explore.speed
    }

    pub fn horizon(&self, scenario: &Scenario) -> f64 {
        self.tmax.unwrap_or_else(|| {
            let s = &scenario.scene;
            4.0 * 2.0 * (s.width() + s.height()) as f64 * self.tick_seconds(scenario)
        })
    }
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Bus(#[from] BusError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scenario: String,
    pub area_m2: f64,
    pub n_agents: usize,
    pub policy: Policy,
    pub seed: u64,
    pub outcomes: BTreeMap<String, Outcome>,
    pub answers: Vec<AnswerRecord>,
    pub total_sim_time: f64,
    pub tmax: f64,
    pub ntc: f64,
    pub sr: f64,
    pub messages_sent: usize,
    pub payloads: BTreeMap<String, usize>,
    pub reply_sizes: Vec<ReplySize>,
    pub in_flight_at_end: usize,
    #[serde(skip)]
    pub log: Option<String>,
}

impl EpisodeResult {
    fn correct_times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self
            .answers
            .iter()
            .filter(|a| self.outcomes.get(&a.question_id) == Some(&Outcome::Correct))
            .map(|a| (a.sim_time / self.tmax).min(1.0))
            .collect();
        t.sort_by(f64::total_cmp);
        t
    }

    /// Success rate counting only answers given by normalized time `ntc`.
    pub fn sr_at(&self, ntc: f64) -> f64 {
        if self.outcomes.is_empty() {
            return 0.0;
        }
        let n = self.correct_times().iter().filter(|&&t| t <= ntc + 1e-12).count();
        n as f64 / self.outcomes.len() as f64
    }

    /// Normalized time at which the success rate first reaches `level`;
    /// 1.0 when it never does.
    pub fn ntc_to_sr(&self, level: f64) -> f64 {
        let need = (level * self.outcomes.len() as f64 - 1e-9).ceil().max(1.0) as usize;
        self.correct_times().get(need - 1).copied().unwrap_or(1.0).min(1.0)
    }

    pub fn payload_count(&self, kind: &str) -> usize {
        self.payloads.get(kind).copied().unwrap_or(0)
    }
}

#[derive(Serialize)]
struct AgentSnapshot {
    id: usize,
    pos: Cell,
    heading: Heading,
    goal: Option<Cell>,
    status: Status,
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum LogRecord<'a> {
    Tick {
        tick: u64,
        sim_time: f64,
        agents: Vec<AgentSnapshot>,
    },
    Payload {
        sim_time: f64,
        delivery_time: f64,
        kind: &'static str,
        from: usize,
        to: usize,
        body: &'a Payload,
    },
    Sv {
        tick: u64,
        agent: usize,
        width: usize,
        height: usize,
        /// Row-major values.
        data: &'a [f64],
    },
    Solved {
        sim_time: f64,
        owner: usize,
        question_id: &'a str,
        answered_by: usize,
        via: Via,
        label: Label,
    },
}

struct Log(Option<String>);

impl Log {
    fn push(&mut self, rec: &LogRecord<'_>) {
        if let Some(s) = &mut self.0 {
            s.push_str(&serde_json::to_string(rec).expect("log records serialize"));
            s.push('\n');
        }
    }
}

/// Runs one episode with the simulated oracle seeded by `seed`.
pub fn run_episode(
    scenario: &Scenario,
    policy: Policy,
    seed: u64,
    cfg: &EpisodeConfig,
    thresholds: Thresholds,
) -> Result<EpisodeResult, EpisodeError> {
    let oracle = SimulatedOracle::new(OracleConfig {
        seed,
        ..cfg.oracle.clone()
    })?;
    run_episode_with_oracle(scenario, policy, seed, cfg, thresholds, &oracle)
}

pub fn run_episode_with_oracle(
    scenario: &Scenario,
    policy: Policy,
    seed: u64,
    cfg: &EpisodeConfig,
    thresholds: Thresholds,
    oracle: &dyn Oracle,
) -> Result<EpisodeResult, EpisodeError> {
    let eps2 = cfg.confidence.epsilon2;
    if !(eps2 > 0.0 && eps2 < 1.0) {
        return Err(EpisodeError::Config(format!("epsilon2 must lie in (0, 1), got {eps2}")));
    }
    if !(cfg.explore.speed > 0.0 && cfg.explore.smooth_sigma > 0.0) {
        return Err(EpisodeError::Config("speed and smoothing sigma must be positive".into()));
    }
    if !(cfg.explore.tau1 > 0.0 && cfg.explore.tau2 > 0.0) {
        return Err(EpisodeError::Config("tau1 and tau2 must be positive".into()));
    }
    let dt = cfg.tick_seconds(scenario);
    let tmax = cfg.horizon(scenario);
    if !(tmax > 0.0) {
        return Err(EpisodeError::Config(format!("tmax must be positive, got {tmax}")));
    }
    let agent_cfg = AgentConfig {
        sensor: cfg.sensor,
        explore: cfg.explore,
        confidence: cfg.confidence,
        behavior: policy.behavior(thresholds),
        seed,
    };
    let ctx = StepContext {
        scene: &scenario.scene,
        questions: &scenario.questions,
        oracle,
        cfg: &agent_cfg,
    };
    let n = scenario.n_agents();
    let mut agents: Vec<AgentState> = (0..n)
        .map(|i| AgentState::new(i, scenario.starts[i], &scenario.scene, &scenario.questions))
        .collect();
    let mut bus = Bus::new(cfg.bus, n)?;
    let mut log = Log(cfg.record_log.then(String::new));
    let mut answers: Vec<AnswerRecord> = Vec::new();
    let mut reply_sizes = Vec::new();
    let pool = if cfg.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| EpisodeError::Config(e.to_string()))?,
        )
    } else {
        None
    };

    let mut tick: u64 = 0;
    loop {
        let t = tick as f64 * dt;
        if t > tmax + 1e-9 || agents.iter().all(AgentState::stopped) {
            break;
        }
        let inboxes: Vec<Vec<Envelope>> = agents
            .iter()
            .map(|a| if a.stopped() { Vec::new() } else { bus.drain(a.id, t) })
            .collect();
        let step_one = |(a, inbox): (&mut AgentState, Vec<Envelope>)| a.step(&ctx, inbox, t, tick);
        let outputs: Vec<Result<StepOutput, OracleError>> = match &pool {
            Some(p) => p.install(|| agents.par_iter_mut().zip(inboxes).map(step_one).collect()),
            None => agents.iter_mut().zip(inboxes).map(step_one).collect(),
        };
        for (i, out) in outputs.into_iter().enumerate() {
            let out = out?;
            for rec in out.solved {
                log.push(&LogRecord::Solved {
                    sim_time: rec.sim_time,
                    owner: i,
                    question_id: &rec.question_id,
                    answered_by: rec.answered_by,
                    via: rec.via,
                    label: rec.label,
                });
                answers.push(rec);
            }
            reply_sizes.extend(out.reply_sizes);
            for p in out.outbox {
                let envs = bus.enqueue(p, t)?;
                for e in &envs {
                    log.push(&LogRecord::Payload {
                        sim_time: e.sim_time,
                        delivery_time: e.delivery_time,
                        kind: e.payload.kind(),
                        from: e.from,
                        to: e.to,
                        body: &e.payload,
                    });
                }
            }
        }
        log.push(&LogRecord::Tick {
            tick,
            sim_time: t,
            agents: agents
                .iter()
                .map(|a| AgentSnapshot {
                    id: a.id,
                    pos: a.pose.position,
                    heading: a.pose.heading,
                    goal: a.goal,
                    status: if a.stopped() { Status::Done } else { a.status },
                })
                .collect(),
        });
        if cfg.record_sv {
            for a in &agents {
                if let (Some(f), false) = (&a.last_values, a.stopped()) {
                    log.push(&LogRecord::Sv {
                        tick,
                        agent: a.id,
                        width: f.width(),
                        height: f.height(),
                        data: f.data(),
                    });
                }
            }
        }
        tick += 1;
    }

    let outcomes = grade(&answers, &scenario.questions)
        .expect("each question is solved once, by its owner");
    let all_answered = answers.len() == scenario.questions.len();
    let total_sim_time = if all_answered {
        answers.iter().map(|a| a.sim_time).fold(0.0, f64::max).min(tmax)
    } else {
        tmax
    };
    let payloads: BTreeMap<String, usize> = ["request", "message", "answer_share"]
        .into_iter()
        .map(|k| (k.to_string(), bus.sent(k)))
        .collect();
    Ok(EpisodeResult {
        scenario: scenario.name().to_string(),
        area_m2: scenario.scene.area_m2(),
        n_agents: n,
        policy,
        seed,
        sr: success_rate(&outcomes),
        outcomes,
        answers,
        total_sim_time,
        tmax,
        ntc: total_sim_time / tmax,
        messages_sent: bus.total_sent(),
        payloads,
        reply_sizes,
        in_flight_at_end: bus.in_flight(),
        log: log.0,
    })
}
