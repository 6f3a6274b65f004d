//! Multiple-choice questions, their assignment to agents, and grading.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{AttrKey, Attributes, GridScene, ObjectInstance, ValidationError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    A,
    B,
    C,
    D,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::A, Label::B, Label::C, Label::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }

    pub fn letter(self) -> char {
        (b'A' + self as u8) as char
    }

    pub fn from_letter(c: char) -> Option<Label> {
        match c {
            'A' => Some(Label::A),
            'B' => Some(Label::B),
            'C' => Some(Label::C),
            'D' => Some(Label::D),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuestionType {
    Location,
    Identification,
    Counting,
    Existence,
    State,
}

impl QuestionType {
    pub const ALL: [QuestionType; 5] = [
        QuestionType::Location,
        QuestionType::Identification,
        QuestionType::Counting,
        QuestionType::Existence,
        QuestionType::State,
    ];

    /// Yes/No types carry two choices, the rest four.
    pub fn n_choices(self) -> usize {
        match self {
            QuestionType::Existence | QuestionType::State => 2,
            _ => 4,
        }
    }
}

/// Name plus an attribute subset; matches every instance with that name
/// whose attributes contain the subset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TargetDescriptor {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: Attributes,
}

impl TargetDescriptor {
    pub fn new(name: impl Into<String>) -> Self {
        TargetDescriptor {
            name: name.into(),
            attributes: Attributes::new(),
        }
    }

    pub fn with(mut self, key: AttrKey, value: impl Into<crate::scene::AttrValue>) -> Self {
        self.attributes.insert(key, value.into());
        self
    }

    pub fn matches(&self, obj: &ObjectInstance) -> bool {
        obj.name == self.name
            && self
                .attributes
                .iter()
                .all(|(k, v)| obj.attributes.get(k) == Some(v))
    }

    /// Noun phrase used in messages: color, state, then name.
    pub fn phrase(&self) -> String {
        let mut words: Vec<String> = Vec::new();
        if let Some(c) = self.attributes.get(&AttrKey::Color) {
            words.push(c.to_string());
        }
        words.push(self.name.clone());
        words.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    #[serde(rename = "type")]
    pub qtype: QuestionType,
    pub text: String,
    pub choices: Vec<String>,
    pub truth: Label,
    pub targets: Vec<TargetDescriptor>,
    pub assignee: usize,
}

impl Question {
    /// Labels of this question's own choices.
    pub fn labels(&self) -> &'static [Label] {
        &Label::ALL[..self.choices.len().min(4)]
    }

    pub fn matches_any(&self, obj: &ObjectInstance) -> bool {
        self.targets.iter().any(|t| t.matches(obj))
    }

    /// Checks shape invariants and that every descriptor names at least one
    /// instance in `scene`.
    pub fn validate(&self, scene: &GridScene) -> Result<(), ValidationError> {
        let fail = |reason: String| ValidationError::Question {
            question: self.id.clone(),
            reason,
        };
        let want = self.qtype.n_choices();
        if self.choices.len() != want {
            return Err(fail(format!(
                "{:?} questions need {want} choices, got {}",
                self.qtype,
                self.choices.len()
            )));
        }
        if self.truth.index() >= self.choices.len() {
            return Err(fail(format!("truth {} indexes no choice", self.truth)));
        }
        if self.targets.is_empty() {
            return Err(fail("no target descriptors".into()));
        }
        for t in &self.targets {
            if !scene.objects().iter().any(|o| t.matches(o)) {
                return Err(fail(format!("descriptor '{}' matches no instance", t.phrase())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSet {
    pub questions: Vec<Question>,
    pub n_agents: usize,
    pub per_agent: usize,
}

impl QuestionSet {
    pub fn get(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn assigned_to(&self, agent: usize) -> impl Iterator<Item = &Question> {
        self.questions.iter().filter(move |q| q.assignee == agent)
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssignmentError {
    #[error("need at least one agent")]
    NoAgents,
    #[error("{questions} questions cannot be split evenly over {agents} agents")]
    Indivisible { questions: usize, agents: usize },
    #[error("question {question} assigned to agent {assignee}, only {agents} agents")]
    AssigneeOutOfRange {
        question: String,
        assignee: usize,
        agents: usize,
    },
    #[error("agent {agent} has {got} questions, expected {want}")]
    Unbalanced { agent: usize, got: usize, want: usize },
    #[error("duplicate question id {0}")]
    DuplicateId(String),
}

/// Groups questions by assignee, checking every agent carries the same load.
pub fn assign(questions: Vec<Question>, n_agents: usize) -> Result<QuestionSet, AssignmentError> {
    if n_agents == 0 {
        return Err(AssignmentError::NoAgents);
    }
    if questions.len() % n_agents != 0 {
        return Err(AssignmentError::Indivisible {
            questions: questions.len(),
            agents: n_agents,
        });
    }
    let per_agent = questions.len() / n_agents;
    let mut counts = vec![0usize; n_agents];
    let mut ids = BTreeSet::new();
    for q in &questions {
        if !ids.insert(q.id.as_str()) {
            return Err(AssignmentError::DuplicateId(q.id.clone()));
        }
        if q.assignee >= n_agents {
            return Err(AssignmentError::AssigneeOutOfRange {
                question: q.id.clone(),
                assignee: q.assignee,
                agents: n_agents,
            });
        }
        counts[q.assignee] += 1;
    }
    if let Some((agent, &got)) = counts.iter().enumerate().find(|(_, c)| **c != per_agent) {
        return Err(AssignmentError::Unbalanced {
            agent,
            got,
            want: per_agent,
        });
    }
    Ok(QuestionSet {
        questions,
        n_agents,
        per_agent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Via {
    #[serde(rename = "self")]
    SelfAnswered,
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub question_id: String,
    pub answered_by: usize,
    pub via: Via,
    pub label: Label,
    pub sim_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    Incorrect,
    Unanswered,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GradeError {
    #[error("question {0} answered more than once")]
    DuplicateAnswer(String),
    #[error("record for unknown question {0}")]
    UnknownQuestion(String),
}

pub fn grade(
    records: &[AnswerRecord],
    qset: &QuestionSet,
) -> Result<BTreeMap<String, Outcome>, GradeError> {
    let mut out: BTreeMap<String, Outcome> = qset
        .questions
        .iter()
        .map(|q| (q.id.clone(), Outcome::Unanswered))
        .collect();
    for r in records {
        let q = qset
            .get(&r.question_id)
            .ok_or_else(|| GradeError::UnknownQuestion(r.question_id.clone()))?;
        let slot = out.get_mut(&q.id).expect("seeded from qset");
        if *slot != Outcome::Unanswered {
            return Err(GradeError::DuplicateAnswer(q.id.clone()));
        }
        *slot = if r.label == q.truth {
            Outcome::Correct
        } else {
            Outcome::Incorrect
        };
    }
    Ok(out)
}

/// Correct answers over all questions; unanswered counts against.
pub fn success_rate(graded: &BTreeMap<String, Outcome>) -> f64 {
    if graded.is_empty() {
        return 0.0;
    }
    let correct = graded.values().filter(|o| **o == Outcome::Correct).count();
    correct as f64 / graded.len() as f64
}
