//! The per-agent control loop.
//!
//! One call to [`AgentState::step`] is one tick: observe, answer what can be
//! answered, read the inbox, reply to partners' requests, pick a goal, and
//! move one cell.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::comms::{generate_message, AnswerShare, Envelope, Payload, Request};
use crate::conformal::{filter_pairs, Filtered, Thresholds};
use crate::explore::{
    apply_message, bfs_distances, detect_frontiers, plan_path, smooth, CellState, ExploreConfig,
    Field, OccupancyMap, SemanticValueMap,
};
use crate::oracle::{AnswerJudgment, Oracle, OracleError, RelOption};
use crate::scene::{Cell, GridScene, Heading, Pose, SensorConfig};
use crate::seeding::Key;
use crate::tasks::{AnswerRecord, Label, QuestionSet, Via};

/// Accepts `L` iff it is the only label with `dist(L) * relevance > 1 - epsilon2`.
pub fn confidence_check(judgment: &AnswerJudgment, epsilon2: f64) -> Option<Label> {
    let bar = 1.0 - epsilon2;
    let mut hit = None;
    for (&l, &p) in &judgment.dist {
        if p * judgment.relevance > bar {
            if hit.is_some() {
                return None;
            }
            hit = Some(l);
        }
    }
    hit
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceConfig {
    pub epsilon2: f64,
}

impl Default for ConfidenceConfig {
    fn default() -> Self {
        ConfidenceConfig { epsilon2: 0.4 }
    }
}

/// How an agent decides which evaluated objects to report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    Conformal(Thresholds),
    /// Every A and B pair passes.
    PassAll,
    /// A random sample of every object observed so far, as many as the
    /// conformal filter would have passed.
    CardinalityMatched(Thresholds),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Behavior {
    pub semantic_map: bool,
    pub comms: bool,
    pub filter: FilterMode,
    pub answer_sharing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub sensor: SensorConfig,
    pub explore: ExploreConfig,
    pub confidence: ConfidenceConfig,
    pub behavior: Behavior,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Active,
    /// No reachable frontier; waits in place while questions remain.
    Exhausted,
    Done,
}

#[derive(Debug, Clone, PartialEq)]
struct HeardRequest {
    request: Request,
    evaluated: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq)]
struct HeardMessage {
    relevants: Vec<Cell>,
    targets: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub pose: Pose,
    pub occupancy: OccupancyMap,
    pub sv: SemanticValueMap,
    pub unsolved: BTreeSet<String>,
    pub solved: BTreeMap<String, AnswerRecord>,
    pub goal: Option<Cell>,
    pub path: Vec<Cell>,
    pub status: Status,
    /// Smoothed fused semantic values from the latest plan.
    pub last_values: Option<Field>,
    requests: Vec<HeardRequest>,
    messages: BTreeMap<String, Vec<HeardMessage>>,
    shared: BTreeSet<String>,
    /// Every object index seen so far.
    observed: BTreeSet<usize>,
    requests_sent: bool,
}

/// Read-only inputs shared by every agent in an episode.
pub struct StepContext<'a> {
    pub scene: &'a GridScene,
    pub questions: &'a QuestionSet,
    pub oracle: &'a dyn Oracle,
    pub cfg: &'a AgentConfig,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutput {
    pub outbox: Vec<Payload>,
    pub solved: Vec<AnswerRecord>,
    /// Objects passed per reply, for auditing the filter.
    pub reply_sizes: Vec<ReplySize>,
    pub moved: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplySize {
    /// Objects the conformal filter alone would pass.
    pub conformal: usize,
    pub sent: usize,
}

impl AgentState {
    pub fn new(id: usize, start: Pose, scene: &GridScene, questions: &QuestionSet) -> Self {
        AgentState {
            id,
            pose: start,
            occupancy: OccupancyMap::for_scene(scene),
            sv: SemanticValueMap::new(scene.width(), scene.height()),
            unsolved: questions.assigned_to(id).map(|q| q.id.clone()).collect(),
            solved: BTreeMap::new(),
            goal: None,
            path: Vec::new(),
            status: Status::Active,
            last_values: None,
            requests: Vec::new(),
            messages: BTreeMap::new(),
            shared: BTreeSet::new(),
            observed: BTreeSet::new(),
            requests_sent: false,
        }
    }

    pub fn stopped(&self) -> bool {
        self.unsolved.is_empty()
    }

    fn solve(&mut self, question_id: &str, label: Label, via: Via, answered_by: usize, t: f64) -> Option<AnswerRecord> {
        if !self.unsolved.remove(question_id) {
            return None;
        }
        let rec = AnswerRecord {
            question_id: question_id.to_string(),
            answered_by,
            via,
            label,
            sim_time: t,
        };
        self.solved.insert(question_id.to_string(), rec.clone());
        self.sv.remove(question_id);
        self.messages.remove(question_id);
        Some(rec)
    }

    /// Advances one tick at `sim_time`. `inbox` must come from the bus.
    pub fn step(
        &mut self,
        ctx: &StepContext<'_>,
        inbox: Vec<Envelope>,
        sim_time: f64,
        tick: u64,
    ) -> Result<StepOutput, OracleError> {
        let mut out = StepOutput::default();
        if self.stopped() {
            self.status = Status::Done;
            return Ok(out);
        }
        let cfg = ctx.cfg;
        let b = cfg.behavior;

        if b.comms && !self.requests_sent {
            for q in ctx.questions.assigned_to(self.id) {
                if self.unsolved.contains(&q.id) {
                    out.outbox.push(Payload::Request(Request {
                        from_agent: self.id,
                        question_id: q.id.clone(),
                        targets: q.targets.clone(),
                    }));
                }
            }
            self.requests_sent = true;
        }

        // (1) observe
        let obs = ctx.scene.observe(self.pose, cfg.sensor, tick);
        self.occupancy.update(obs.revealed_cells.iter().copied(), ctx.scene);
        let visible: Vec<_> = obs.visible_objects.iter().map(|&i| &ctx.scene.objects()[i]).collect();
        self.observed.extend(obs.visible_objects.iter().copied());

        // (2) answer own questions, and partners' when a target is in view
        let own: Vec<String> = self.unsolved.iter().cloned().collect();
        for qid in own {
            let q = ctx.questions.get(&qid).expect("own questions exist");
            let j = ctx.oracle.answer_judgment(q, &obs, ctx.scene)?;
            if let Some(l) = confidence_check(&j, cfg.confidence.epsilon2) {
                out.solved.extend(self.solve(&qid, l, Via::SelfAnswered, self.id, sim_time));
            }
        }
        if b.comms && b.answer_sharing {
            let mut drop = Vec::new();
            for r in &self.requests {
                let qid = &r.request.question_id;
                if self.shared.contains(qid) {
                    continue;
                }
                let Some(q) = ctx.questions.get(qid) else { continue };
                if !visible.iter().any(|o| q.matches_any(o)) {
                    continue;
                }
                let j = ctx.oracle.answer_judgment(q, &obs, ctx.scene)?;
                if let Some(l) = confidence_check(&j, cfg.confidence.epsilon2) {
                    out.outbox.push(Payload::AnswerShare(AnswerShare {
                        from_agent: self.id,
                        to_agent: r.request.from_agent,
                        question_id: qid.clone(),
                        label: l,
                    }));
                    drop.push(qid.clone());
                }
            }
            for qid in drop {
                self.shared.insert(qid.clone());
                self.requests.retain(|r| r.request.question_id != qid);
            }
        }

        // (3) inbox
        for env in inbox {
            match env.payload {
                Payload::AnswerShare(a) if a.to_agent == self.id => {
                    out.solved.extend(self.solve(&a.question_id, a.label, Via::Shared, a.from_agent, env.delivery_time));
                }
                Payload::Message(m) if m.to_agent == self.id => {
                    if self.unsolved.contains(&m.question_id) {
                        self.messages.entry(m.question_id.clone()).or_default().push(HeardMessage {
                            relevants: m.relevants.iter().map(|o| o.pos).collect(),
                            targets: m.targets_seen.iter().map(|o| o.pos).collect(),
                        });
                    }
                }
                Payload::Request(r) if r.from_agent != self.id => {
                    let known = self.shared.contains(&r.question_id)
                        || self.requests.iter().any(|h| h.request.question_id == r.question_id);
                    if !known {
                        self.requests.push(HeardRequest {
                            request: r,
                            evaluated: BTreeSet::new(),
                        });
                    }
                }
                _ => {}
            }
        }

        if self.stopped() {
            self.status = Status::Done;
            self.goal = None;
            self.path.clear();
            return Ok(out);
        }

        // (4) reply to requests about objects not yet evaluated for them
        if b.comms {
            for ri in 0..self.requests.len() {
                let fresh: Vec<usize> = obs
                    .visible_objects
                    .iter()
                    .copied()
                    .filter(|i| !self.requests[ri].evaluated.contains(i))
                    .collect();
                if fresh.is_empty() {
                    continue;
                }
                let req = self.requests[ri].request.clone();
                let mut pairs = Vec::with_capacity(fresh.len());
                for &i in &fresh {
                    pairs.push(ctx.oracle.relevance_options(&ctx.scene.objects()[i], &req.targets, ctx.scene)?);
                }
                self.requests[ri].evaluated.extend(fresh.iter().copied());
                let (conformal, filtered) = match b.filter {
                    FilterMode::Conformal(t) => {
                        let f = filter_pairs(&pairs, t.a, t.b);
                        (f.len(), f)
                    }
                    FilterMode::PassAll => {
                        let f = filter_pairs(&pairs, 0.0, 0.0);
                        (f.len(), f)
                    }
                    FilterMode::CardinalityMatched(t) => {
                        let k = filter_pairs(&pairs, t.a, t.b).len();
                        let mut rng = Key::new(cfg.seed, "com_control")
                            .u64(self.id as u64)
                            .u64(tick)
                            .str(&req.question_id)
                            .rng();
                        let pool: Vec<usize> = self.observed.iter().copied().collect();
                        let mut picked: Vec<usize> = sample(&mut rng, pool.len(), k).into_iter().map(|i| pool[i]).collect();
                        picked.sort_unstable();
                        let mut f = Filtered::default();
                        for i in picked {
                            let obj = &ctx.scene.objects()[i];
                            let p = ctx.oracle.relevance_options(obj, &req.targets, ctx.scene)?;
                            if p.option == RelOption::A {
                                f.targets.push(p.object_id);
                            } else {
                                f.relevants.push(p.object_id);
                            }
                        }
                        (k, f)
                    }
                };
                if let Some(m) = generate_message(&filtered, ctx.scene, &req, self.id) {
                    out.reply_sizes.push(ReplySize {
                        conformal,
                        sent: filtered.len(),
                    });
                    out.outbox.push(Payload::Message(m));
                } else if conformal > 0 {
                    out.reply_sizes.push(ReplySize { conformal, sent: 0 });
                }
            }
        }

        // (5) plan
        let dist = bfs_distances(&self.occupancy, self.pose.position);
        let frontiers: Vec<Cell> = detect_frontiers(&self.occupancy)
            .into_iter()
            .filter(|&f| self.occupancy.index(f).is_some_and(|i| dist[i].is_some()))
            .collect();
        if frontiers.is_empty() {
            self.status = Status::Exhausted;
            self.goal = None;
            self.path.clear();
            return Ok(out);
        }
        self.status = Status::Active;
        let values = self.semantic_values(ctx, &obs, &frontiers);
        self.last_values = Some(values.clone());
        let best = frontiers
            .iter()
            .copied()
            .fold(None::<Cell>, |acc, f| match acc {
                Some(a) if values.get(a) >= values.get(f) => Some(a),
                _ => Some(f),
            })
            .expect("frontiers non-empty");
        let goal = if values.get(best) > 0.0 {
            best
        } else if let Some(g) = self.goal.filter(|g| frontiers.contains(g)) {
            g
        } else {
            let mut rng = Key::new(cfg.seed, "goal").u64(self.id as u64).u64(tick).rng();
            frontiers[rng.random_range(0..frontiers.len())]
        };
        self.goal = Some(goal);
        self.path = plan_path(&self.occupancy, self.pose.position, goal)
            .expect("goal was filtered to reachable frontiers");

        // (6) move one cell, or turn toward unseen space at the goal
        if self.path.len() >= 2 {
            let next = self.path[1];
            let heading = Heading::between(self.pose.position, next).expect("path steps are adjacent");
            self.pose = Pose::new(next, heading);
            out.moved = true;
        } else if let Some(h) = Heading::ALL
            .into_iter()
            .find(|h| self.occupancy.get(self.pose.position.step(*h)) == CellState::Unknown)
        {
            self.pose = Pose::new(self.pose.position, h);
        }
        Ok(out)
    }

    /// Smoothed fused semantic value over the grid for the current frontiers.
    fn semantic_values(&mut self, ctx: &StepContext<'_>, obs: &crate::scene::Observation, frontiers: &[Cell]) -> Field {
        let cfg = ctx.cfg;
        let (w, h) = (ctx.scene.width(), ctx.scene.height());
        let unsolved: Vec<String> = self.unsolved.iter().cloned().collect();
        for qid in &unsolved {
            let q = ctx.questions.get(qid).expect("own questions exist");
            let mut layer = Field::zeros(w, h);
            if cfg.behavior.semantic_map {
                for &f in frontiers {
                    layer.set(f, ctx.oracle.local_semantic_value(q, f, obs, ctx.scene));
                }
            }
            if let Some(msgs) = self.messages.get(qid) {
                let unseen = |c: &&Cell| self.occupancy.get(**c) == CellState::Unknown;
                for m in msgs {
                    let rel: Vec<Cell> = m.relevants.iter().filter(unseen).copied().collect();
                    let tgt: Vec<Cell> = m.targets.iter().filter(unseen).copied().collect();
                    let e = &cfg.explore;
                    apply_message(&mut layer, frontiers, &rel, &tgt, e.tau1, e.tau2)
                        .expect("message positions come from the shared scene");
                }
            }
            *self.sv.layer_mut(qid) = layer;
        }
        smooth(&self.sv.fused(), cfg.explore.smooth_sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn judgment(dist: &[(Label, f64)], relevance: f64) -> AnswerJudgment {
        AnswerJudgment {
            dist: dist.iter().copied().collect(),
            relevance,
        }
    }

    #[test]
    fn confidence_examples() {
        let j = judgment(&[(Label::A, 0.9), (Label::B, 0.05), (Label::C, 0.03), (Label::D, 0.02)], 0.95);
        assert_eq!(confidence_check(&j, 0.2), Some(Label::A));
        let j = judgment(&[(Label::A, 0.25), (Label::B, 0.25), (Label::C, 0.25), (Label::D, 0.25)], 1.0);
        assert_eq!(confidence_check(&j, 0.2), None);
        let j = judgment(&[(Label::A, 0.5), (Label::B, 0.45), (Label::C, 0.03), (Label::D, 0.02)], 1.0);
        assert_eq!(confidence_check(&j, 0.6), None);
    }

    proptest! {
        #[test]
        fn confidence_matches_scan(
            raw in prop::collection::vec(0.0f64..1.0, 2..=4),
            rel in 0.0f64..=1.0,
            eps in 0.01f64..0.99,
        ) {
            let s: f64 = raw.iter().sum::<f64>().max(1e-9);
            let dist: Vec<(Label, f64)> = raw.iter().enumerate().map(|(i, v)| (Label::ALL[i], v / s)).collect();
            let j = judgment(&dist, rel);
            let passing: Vec<Label> = dist.iter().filter(|(_, p)| p * rel > 1.0 - eps).map(|(l, _)| *l).collect();
            let want = if passing.len() == 1 { Some(passing[0]) } else { None };
            prop_assert_eq!(confidence_check(&j, eps), want);
        }
    }
}
