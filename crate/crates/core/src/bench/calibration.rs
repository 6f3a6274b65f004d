use rand::seq::IndexedRandom;
use rand::Rng;
use thiserror::Error;

use crate::conformal::{CalibrationSample, CalibrationSet};
use crate::oracle::{OracleConfig, OracleError, RelOption, SimulatedOracle};
use crate::scenario::Scenario;
use crate::scene::ObjectInstance;
use crate::seeding::Key;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("no scenarios to calibrate from")]
    NoScenarios,
    #[error("scenario {0} has no questions or objects to pair")]
    EmptyScenario(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// One labelled (observed, request) draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDraw {
    pub scenario: String,
    pub object_id: String,
    pub truth: RelOption,
    pub emitted: RelOption,
    /// Oracle probability of every option, indexed A..D.
    pub dist: [f64; 4],
}

impl PairDraw {
    /// Conformity sample for the true class, if that class is A or B.
    pub fn sample(&self) -> Option<CalibrationSample> {
        self.truth.communicable().then(|| CalibrationSample {
            option: self.truth,
            prob: self.dist[self.truth.index()],
            true_option: self.truth,
        })
    }
}

/// Draws `n` pairs, cycling through `scenarios`. A quarter of draws observe
/// a requested instance, a quarter an object sharing its room, and the rest
/// a uniformly random object.
pub fn draw_pairs(
    scenarios: &[Scenario],
    oracle: &OracleConfig,
    seed: u64,
    n: usize,
) -> Result<Vec<PairDraw>, CalibrationError> {
    if scenarios.is_empty() {
        return Err(CalibrationError::NoScenarios);
    }
    let sim = SimulatedOracle::new(oracle.clone())?;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let s = &scenarios[k % scenarios.len()];
        let objects = s.scene.objects();
        let (Some(_), false) = (objects.first(), s.questions.is_empty()) else {
            return Err(CalibrationError::EmptyScenario(s.name().to_string()));
        };
        let mut rng = Key::new(seed, "calibration").str(s.name()).u64(k as u64).rng();
        let q = s.questions.questions.choose(&mut rng).expect("non-empty");
        let matching: Vec<&ObjectInstance> = objects.iter().filter(|o| q.matches_any(o)).collect();
        let near: Vec<&ObjectInstance> = objects
            .iter()
            .filter(|o| !q.matches_any(o) && matching.iter().any(|m| m.room_id == o.room_id))
            .collect();
        let u: f64 = rng.random();
        let pool: &[&ObjectInstance] = if u < 0.25 && !matching.is_empty() {
            &matching
        } else if u < 0.5 && !near.is_empty() {
            &near
        } else {
            &[]
        };
        let observed = match pool.choose(&mut rng) {
            Some(o) => *o,
            None => objects.choose(&mut rng).expect("non-empty"),
        };
        let (dist, truth) = sim.option_distribution(observed, &q.targets, &s.scene);
        let emitted = (0..4).fold(0, |b, i| if dist[i] > dist[b] { i } else { b });
        out.push(PairDraw {
            scenario: s.name().to_string(),
            object_id: observed.id.clone(),
            truth,
            emitted: RelOption::ALL[emitted],
            dist,
        });
    }
    Ok(out)
}

/// Splits draws into the A and B calibration sets.
pub fn calibration_sets(draws: &[PairDraw]) -> (CalibrationSet, CalibrationSet) {
    let mut provenance: Vec<String> = draws.iter().map(|d| d.scenario.clone()).collect();
    provenance.sort();
    provenance.dedup();
    let set = |class: RelOption| CalibrationSet {
        option_class: class,
        scores: draws
            .iter()
            .filter_map(PairDraw::sample)
            .filter(|s| s.option == class)
            .map(|s| s.prob)
            .collect(),
        provenance: provenance.clone(),
    };
    (set(RelOption::A), set(RelOption::B))
}

/// Calibration sets from `pairs` draws.
pub fn generate_calibration(
    scenarios: &[Scenario],
    oracle: &OracleConfig,
    seed: u64,
    pairs: usize,
) -> Result<(CalibrationSet, CalibrationSet), CalibrationError> {
    Ok(calibration_sets(&draw_pairs(scenarios, oracle, seed, pairs)?))
}

/// Keeps drawing until each class holds at least `per_class` samples, then
/// truncates both to exactly that many.
pub fn samples_per_class(
    scenarios: &[Scenario],
    oracle: &OracleConfig,
    seed: u64,
    per_class: usize,
) -> Result<(Vec<CalibrationSample>, Vec<CalibrationSample>), CalibrationError> {
    let mut n = per_class * 4;
    loop {
        let draws = draw_pairs(scenarios, oracle, seed, n)?;
        let samples: Vec<CalibrationSample> = draws.iter().filter_map(PairDraw::sample).collect();
        let a: Vec<_> = samples.iter().filter(|s| s.option == RelOption::A).copied().collect();
        let b: Vec<_> = samples.iter().filter(|s| s.option == RelOption::B).copied().collect();
        if a.len() >= per_class && b.len() >= per_class {
            return Ok((a[..per_class].to_vec(), b[..per_class].to_vec()));
        }
        n *= 2;
    }
}
