use std::collections::BTreeMap;
use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};

use super::{
    AnswerJudgment, Oracle, OracleConfig, OracleError, OptionProbPair, RelOption, SimulatedOracle,
};
use crate::scene::{Cell, GridScene, ObjectInstance, Observation};
use crate::tasks::{Label, Question, TargetDescriptor};

/// One generated token with its probability and the runner-up tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenProb {
    pub token: String,
    pub prob: f64,
    #[serde(default)]
    pub alternatives: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub tokens: Vec<TokenProb>,
}

/// A text-completion endpoint that reports per-token probabilities.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, system: &str, user: &str) -> Result<CompletionResponse, OracleError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplates {
    pub relevance_analysis_system: String,
    pub relevance_analysis_user: String,
    pub relevance_letter_system: String,
    pub relevance_letter_user: String,
    pub confidence_user: String,
    pub answer_user: String,
    pub perception_user: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self::bundled()
    }
}

impl PromptTemplates {
    pub fn bundled() -> Self {
        let t = |s: &str| s.trim().to_string();
        PromptTemplates {
            relevance_analysis_system: t(include_str!("../../fixtures/prompts/relevance_analysis_system.txt")),
            relevance_analysis_user: t(include_str!("../../fixtures/prompts/relevance_analysis_user.txt")),
            relevance_letter_system: t(include_str!("../../fixtures/prompts/relevance_letter_system.txt")),
            relevance_letter_user: t(include_str!("../../fixtures/prompts/relevance_letter_user.txt")),
            confidence_user: t(include_str!("../../fixtures/prompts/confidence_user.txt")),
            answer_user: t(include_str!("../../fixtures/prompts/answer_user.txt")),
            perception_user: t(include_str!("../../fixtures/prompts/perception_user.txt")),
        }
    }

    /// Substitutes `{key}` placeholders.
    pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
        let mut out = template.to_string();
        for (k, v) in vars {
            out = out.replace(&format!("{{{k}}}"), v);
        }
        out
    }
}

/// Counting semaphore bounding outstanding endpoint calls.
#[derive(Debug)]
struct Limiter {
    cap: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(cap: usize) -> Self {
        Limiter {
            cap,
            used: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut used = self.used.lock().unwrap_or_else(|e| e.into_inner());
        while *used >= self.cap {
            used = self.freed.wait(used).unwrap_or_else(|e| e.into_inner());
        }
        *used += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut used = self.0.used.lock().unwrap_or_else(|e| e.into_inner());
        *used -= 1;
        self.0.freed.notify_one();
    }
}

/// Oracle backed by a language model endpoint. Frontier scoring has no
/// prompt of its own and is delegated to the simulated oracle.
pub struct ExternalOracle<B> {
    backend: B,
    templates: PromptTemplates,
    limiter: Limiter,
    frontier: SimulatedOracle,
}

impl<B: CompletionBackend> ExternalOracle<B> {
    pub fn new(backend: B, templates: PromptTemplates, cfg: OracleConfig) -> Result<Self, OracleError> {
        let limiter = Limiter::new(cfg.max_in_flight);
        Ok(ExternalOracle {
            backend,
            templates,
            limiter,
            frontier: SimulatedOracle::new(cfg)?,
        })
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    fn call(&self, system: &str, user: &str) -> Result<CompletionResponse, OracleError> {
        let _permit = self.limiter.acquire();
        self.backend.complete(system, user)
    }
}

fn request_phrase(request: &[TargetDescriptor]) -> String {
    request.iter().map(|d| d.phrase()).collect::<Vec<_>>().join(" or ")
}

/// Probability mass per candidate letter at the first token that is one of
/// them. Letters are assumed to be single tokens.
fn letter_probs(resp: &CompletionResponse, letters: &[char]) -> Option<BTreeMap<char, f64>> {
    let as_letter = |t: &str| {
        let t = t.trim().trim_end_matches(['.', ')']);
        let mut cs = t.chars();
        match (cs.next(), cs.next()) {
            (Some(c), None) if letters.contains(&c) => Some(c),
            _ => None,
        }
    };
    let tok = resp.tokens.iter().find(|t| as_letter(&t.token).is_some())?;
    let mut out = BTreeMap::new();
    out.insert(as_letter(&tok.token)?, tok.prob.clamp(0.0, 1.0));
    for (alt, p) in &tok.alternatives {
        if let Some(c) = as_letter(alt) {
            out.entry(c).or_insert(p.clamp(0.0, 1.0));
        }
    }
    Some(out)
}

impl<B: CompletionBackend> Oracle for ExternalOracle<B> {
    fn relevance_options(
        &self,
        observed: &ObjectInstance,
        request: &[TargetDescriptor],
        _scene: &GridScene,
    ) -> Result<OptionProbPair, OracleError> {
        let req = request_phrase(request);
        let obs = observed.phrase();
        let vars = [("request", req.as_str()), ("observed", obs.as_str())];
        let t = &self.templates;
        let analysis = self.call(
            &PromptTemplates::render(&t.relevance_analysis_system, &vars),
            &PromptTemplates::render(&t.relevance_analysis_user, &vars),
        )?;
        let vars = [
            ("request", req.as_str()),
            ("observed", obs.as_str()),
            ("analysis", analysis.text.trim()),
        ];
        let letter = self.call(
            &t.relevance_letter_system,
            &PromptTemplates::render(&t.relevance_letter_user, &vars),
        )?;
        let tok = letter
            .tokens
            .iter()
            .find_map(|tp| {
                let s = tp.token.trim();
                let mut cs = s.chars();
                match (cs.next(), cs.next()) {
                    (Some(c), None) => RelOption::from_letter(c).map(|o| (o, tp.prob)),
                    _ => None,
                }
            })
            .ok_or_else(|| {
                OracleError::ExternalBackend(format!("no option letter in reply {:?}", letter.text))
            })?;
        Ok(OptionProbPair {
            object_id: observed.id.clone(),
            option: tok.0,
            prob: tok.1.clamp(0.0, 1.0),
        })
    }

    fn answer_judgment(
        &self,
        question: &Question,
        observation: &Observation,
        scene: &GridScene,
    ) -> Result<AnswerJudgment, OracleError> {
        let observed = observation
            .visible_objects
            .iter()
            .map(|&i| scene.objects()[i].phrase())
            .collect::<Vec<_>>();
        let observed = if observed.is_empty() {
            "nothing notable".to_string()
        } else {
            observed.join(", ")
        };
        let choices = question
            .choices
            .iter()
            .zip(question.labels())
            .map(|(c, l)| format!("{l}) {c}"))
            .collect::<Vec<_>>()
            .join(" ");
        let t = &self.templates;
        let vars = [
            ("question", question.text.as_str()),
            ("observed", observed.as_str()),
            ("choices", choices.as_str()),
        ];
        let ans = self.call("", &PromptTemplates::render(&t.answer_user, &vars))?;
        let letters: Vec<char> = question.labels().iter().map(|l| l.letter()).collect();
        let raw = letter_probs(&ans, &letters).unwrap_or_default();
        let total: f64 = raw.values().sum();
        let k = letters.len() as f64;
        let dist: BTreeMap<Label, f64> = question
            .labels()
            .iter()
            .map(|&l| {
                let p = if total > 0.0 {
                    raw.get(&l.letter()).copied().unwrap_or(0.0) / total
                } else {
                    1.0 / k
                };
                (l, p)
            })
            .collect();

        let conf = self.call("", &PromptTemplates::render(&t.confidence_user, &vars))?;
        let relevance = conf
            .tokens
            .iter()
            .find_map(|tp| {
                let yes = |s: &str| s.trim().to_ascii_lowercase().starts_with("yes");
                let no = |s: &str| s.trim().to_ascii_lowercase().starts_with("no");
                if yes(&tp.token) {
                    Some(tp.prob)
                } else if no(&tp.token) {
                    let alt = tp.alternatives.iter().find(|(a, _)| yes(a)).map(|(_, p)| *p);
                    Some(alt.unwrap_or(1.0 - tp.prob))
                } else {
                    None
                }
            })
            .unwrap_or(0.0)
            .clamp(0.0, 1.0);
        Ok(AnswerJudgment { dist, relevance })
    }

    fn local_semantic_value(
        &self,
        question: &Question,
        frontier: Cell,
        observation: &Observation,
        scene: &GridScene,
    ) -> f64 {
        self.frontier
            .local_semantic_value(question, frontier, observation, scene)
    }
}

/// OpenAI-style chat completion endpoint with token log-probabilities.
#[cfg(feature = "http")]
pub struct HttpBackend {
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub top_logprobs: u32,
}

#[cfg(feature = "http")]
impl CompletionBackend for HttpBackend {
    fn complete(&self, system: &str, user: &str) -> Result<CompletionResponse, OracleError> {
        use serde_json::{json, Value};
        let err = |e: &dyn std::fmt::Display| OracleError::ExternalBackend(e.to_string());
        let mut messages = Vec::new();
        if !system.is_empty() {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": user}));
        let body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": 0,
            "logprobs": true,
            "top_logprobs": self.top_logprobs,
        });
        let mut req = ureq::post(&self.url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| err(&e))?;
        let v: Value = resp.body_mut().read_json().map_err(|e| err(&e))?;
        let choice = &v["choices"][0];
        let text = choice["message"]["content"].as_str().unwrap_or_default().to_string();
        let tokens = choice["logprobs"]["content"]
            .as_array()
            .map(|arr| {
                arr.iter()
                    .map(|t| TokenProb {
                        token: t["token"].as_str().unwrap_or_default().to_string(),
                        prob: t["logprob"].as_f64().unwrap_or(f64::NEG_INFINITY).exp(),
                        alternatives: t["top_logprobs"]
                            .as_array()
                            .map(|alts| {
                                alts.iter()
                                    .map(|a| {
                                        (
                                            a["token"].as_str().unwrap_or_default().to_string(),
                                            a["logprob"].as_f64().unwrap_or(f64::NEG_INFINITY).exp(),
                                        )
                                    })
                                    .collect()
                            })
                            .unwrap_or_default(),
                    })
                    .collect()
            })
            .unwrap_or_default();
        Ok(CompletionResponse { text, tokens })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::load_scenario;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;
    use std::time::Duration;

    struct Scripted {
        calls: Mutex<Vec<(String, String)>>,
        in_flight: AtomicUsize,
        peak: AtomicUsize,
    }

    impl Scripted {
        fn new() -> Self {
            Scripted {
                calls: Mutex::new(Vec::new()),
                in_flight: AtomicUsize::new(0),
                peak: AtomicUsize::new(0),
            }
        }
    }

    impl CompletionBackend for Scripted {
        fn complete(&self, system: &str, user: &str) -> Result<CompletionResponse, OracleError> {
            let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(5));
            self.calls.lock().unwrap().push((system.into(), user.into()));
            self.in_flight.fetch_sub(1, Ordering::SeqCst);
            let tok = |t: &str, p: f64, alts: Vec<(String, f64)>| TokenProb {
                token: t.into(),
                prob: p,
                alternatives: alts,
            };
            let resp = if system.contains("one letter") {
                CompletionResponse {
                    text: "B".into(),
                    tokens: vec![tok("B", 0.7, vec![("A".into(), 0.2)])],
                }
            } else if user.contains("confident") {
                CompletionResponse {
                    text: "No".into(),
                    tokens: vec![tok("No", 0.8, vec![("Yes".into(), 0.15)])],
                }
            } else if user.contains("correct choice") {
                CompletionResponse {
                    text: "A".into(),
                    tokens: vec![tok(" A", 0.6, vec![("B".into(), 0.2), ("Z".into(), 0.1)])],
                }
            } else {
                CompletionResponse {
                    text: "They are related.".into(),
                    tokens: vec![tok("They", 0.9, vec![])],
                }
            };
            Ok(resp)
        }
    }

    const DOC: &str = r#"{
        "meta": {"name": "ext", "cell_size_m": 1.0, "seed": 0},
        "grid": ["aaa", "aaa"],
        "rooms": [{"id": "r", "label": "living_room", "tag_char": "a"}],
        "objects": [{"id": "p", "name": "pillow", "room": "r", "pos": [1, 0], "attributes": {"color": "white"}}],
        "questions": [{"id": "q", "type": "Existence", "text": "Is there a pillow?", "choices": ["Yes", "No"],
                       "truth": "A", "targets": [{"name": "pillow"}], "assignee": 0}],
        "agents": [{"pos": [1, 1], "heading": "N"}]
    }"#;

    #[test]
    fn bundled_templates_keep_placeholders() {
        let t = PromptTemplates::bundled();
        assert!(t.relevance_analysis_user.contains("{observed}"));
        assert!(t.relevance_analysis_user.contains("{request}"));
        assert!(t.relevance_letter_user.contains("{analysis}"));
        assert!(t.confidence_user.contains("{question}"));
        assert_eq!(t.relevance_letter_system, "You should only output one letter.");
    }

    #[test]
    fn two_stage_relevance_reads_letter_probability() {
        let s = load_scenario(DOC).unwrap();
        let o = ExternalOracle::new(Scripted::new(), PromptTemplates::bundled(), OracleConfig::default()).unwrap();
        let req = vec![TargetDescriptor::new("cushion")];
        let pair = o.relevance_options(s.scene.object("p").unwrap(), &req, &s.scene).unwrap();
        assert_eq!(pair.option, RelOption::B);
        assert!((pair.prob - 0.7).abs() < 1e-12);
        let calls = o.backend().calls.lock().unwrap();
        assert_eq!(calls.len(), 2);
        assert!(calls[0].0.contains("looking for cushion"));
        assert!(calls[0].1.contains("You observe white pillow."));
        assert!(calls[1].1.contains("Here is your previous analysis: They are related.."));
    }

    #[test]
    fn answer_distribution_restricted_to_question_labels() {
        let s = load_scenario(DOC).unwrap();
        let o = ExternalOracle::new(Scripted::new(), PromptTemplates::bundled(), OracleConfig::default()).unwrap();
        let obs = s.scene.observe(s.starts[0], Default::default(), 0);
        let j = o.answer_judgment(s.questions.get("q").unwrap(), &obs, &s.scene).unwrap();
        assert_eq!(j.dist.len(), 2);
        assert!((j.dist[&Label::A] - 0.75).abs() < 1e-12);
        assert!((j.dist[&Label::B] - 0.25).abs() < 1e-12);
        assert!((j.relevance - 0.15).abs() < 1e-12);
    }

    #[test]
    fn in_flight_calls_are_bounded() {
        let s = Arc::new(load_scenario(DOC).unwrap());
        let cfg = OracleConfig { max_in_flight: 2, ..Default::default() };
        let o = Arc::new(ExternalOracle::new(Scripted::new(), PromptTemplates::bundled(), cfg).unwrap());
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let (o, s) = (o.clone(), s.clone());
                std::thread::spawn(move || {
                    let req = vec![TargetDescriptor::new("cushion")];
                    o.relevance_options(s.scene.object("p").unwrap(), &req, &s.scene).unwrap();
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert_eq!(o.backend().calls.lock().unwrap().len(), 16);
        assert!(o.backend().peak.load(Ordering::SeqCst) <= 2);
    }
}
