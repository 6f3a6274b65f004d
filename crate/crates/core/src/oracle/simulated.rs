use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{
    ground_truth_option, AnswerJudgment, Oracle, OracleConfig, OracleError, OptionProbPair,
    RelOption, AFFINITY,
};
use crate::scene::{Cell, GridScene, Heading, ObjectInstance, Observation};
use crate::seeding::Key;
use crate::tasks::{Question, TargetDescriptor};

/// Ground-truth oracle with seeded miscalibration. Every output is a pure
/// function of the config and the call's inputs.
#[derive(Debug, Clone)]
pub struct SimulatedOracle {
    cfg: OracleConfig,
}

impl SimulatedOracle {
    pub fn new(cfg: OracleConfig) -> Result<Self, OracleError> {
        cfg.validate()?;
        Ok(SimulatedOracle { cfg })
    }

    pub fn config(&self) -> &OracleConfig {
        &self.cfg
    }

    /// Full option distribution for one (observed, request) pair, plus the
    /// ground-truth option it was generated around.
    pub fn option_distribution(
        &self,
        observed: &ObjectInstance,
        request: &[TargetDescriptor],
        scene: &GridScene,
    ) -> ([f64; 4], RelOption) {
        let truth = ground_truth_option(observed, request, scene);
        let mut key = scene_key(self.cfg.seed, "relevance", scene).str(&observed.id);
        for d in request {
            key = key.str(&d.phrase());
        }
        let mut rng = key.rng();
        let scale = self.cfg.logit_noise_gain * self.cfg.noise;
        let mut logits = [0.0f64; 4];
        for (i, l) in logits.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            let margin = if i == truth.index() { self.cfg.sharpness } else { 0.0 };
            *l = margin + scale * z;
        }
        (softmax(logits), truth)
    }

    fn noise_draw(&self, key: Key) -> f64 {
        let z: f64 = key.rng().sample(StandardNormal);
        z * self.cfg.noise
    }
}

fn softmax(logits: [f64; 4]) -> [f64; 4] {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = logits.map(|l| (l - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

/// Keys are scoped to the scene so reused ids in other scenes draw afresh.
fn scene_key(seed: u64, domain: &str, scene: &GridScene) -> Key {
    Key::new(seed, domain).str(&scene.name).u64(scene.seed)
}

fn heading_code(h: Heading) -> u64 {
    h as u64
}

impl Oracle for SimulatedOracle {
    fn relevance_options(
        &self,
        observed: &ObjectInstance,
        request: &[TargetDescriptor],
        scene: &GridScene,
    ) -> Result<OptionProbPair, OracleError> {
        let (dist, _) = self.option_distribution(observed, request, scene);
        let mut best = 0;
        for i in 1..4 {
            if dist[i] > dist[best] {
                best = i;
            }
        }
        Ok(OptionProbPair {
            object_id: observed.id.clone(),
            option: RelOption::ALL[best],
            prob: dist[best].clamp(0.0, 1.0),
        })
    }

    fn answer_judgment(
        &self,
        question: &Question,
        observation: &Observation,
        scene: &GridScene,
    ) -> Result<AnswerJudgment, OracleError> {
        let labels = question.labels();
        let k = labels.len();
        let target_in_view = observation
            .visible_objects
            .iter()
            .any(|&i| question.matches_any(&scene.objects()[i]));
        let p = observation.pose;
        let key = scene_key(self.cfg.seed, "answer", scene)
            .str(&question.id)
            .i64(i64::from(p.position.x))
            .i64(i64::from(p.position.y))
            .u64(heading_code(p.heading))
            .u64(observation.tick);
        let noise = self.noise_draw(key);
        let mut dist = BTreeMap::new();
        let relevance = if target_in_view && k > 1 {
            let gamma = (self.cfg.gamma0 + self.cfg.gamma_gain * self.cfg.noise).min(0.5);
            for &l in labels {
                let v = if l == question.truth {
                    1.0 - gamma
                } else {
                    gamma / (k - 1) as f64
                };
                dist.insert(l, v);
            }
            (self.cfg.rel_hi + noise).clamp(0.0, 1.0)
        } else {
            for &l in labels {
                dist.insert(l, 1.0 / k as f64);
            }
            (self.cfg.rel_lo + noise).clamp(0.0, 1.0)
        };
        Ok(AnswerJudgment { dist, relevance })
    }

    fn local_semantic_value(
        &self,
        question: &Question,
        frontier: Cell,
        _observation: &Observation,
        scene: &GridScene,
    ) -> f64 {
        let Some(room) = scene.room_at(frontier) else {
            return 0.0;
        };
        let holds_target = scene
            .objects()
            .iter()
            .any(|o| o.room_id == room.id && question.matches_any(o));
        let typical = question
            .targets
            .iter()
            .any(|t| AFFINITY.typical_rooms(&t.name).any(|l| l == room.label));
        let base = if holds_target {
            self.cfg.sv_max
        } else if typical {
            self.cfg.sv_prior
        } else {
            0.0
        };
        let key = scene_key(self.cfg.seed, "sv", scene)
            .str(&question.id)
            .i64(i64::from(frontier.x))
            .i64(i64::from(frontier.y));
        let noise = self.noise_draw(key) * self.cfg.sv_noise_gain * self.cfg.sv_max;
        (base + noise).clamp(0.0, self.cfg.sv_max)
    }
}
