//! Scenario documents: the JSON file format that carries a scene, its
//! questions, and the agents' starting poses.
//!
//! ```json
//! {
//!   "meta":      {"name": "house", "cell_size_m": 1.0, "seed": 0},
//!   "grid":      ["#####", "#aab#", "#####"],
//!   "rooms":     [{"id": "living", "label": "living_room", "tag_char": "a"}],
//!   "objects":   [{"id": "o1", "name": "cushion", "room": "living", "pos": [1, 1],
//!                  "attributes": {"color": "red"}}],
//!   "questions": [{"id": "q1", "type": "Location", "text": "...", "choices": [...],
//!                  "truth": "A", "targets": [{"name": "cushion"}], "assignee": 0}],
//!   "agents":    [{"pos": [2, 1], "heading": "N"}]
//! }
//! ```
//!
//! `#` is a wall and `.` a free cell in the implicit hallway; any other
//! character must be the `tag_char` of a declared room.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{Attributes, Cell, CellKind, GridScene, Heading, ObjectInstance, Pose, Room, RoomLabel, ValidationError};
use crate::tasks::{assign, AssignmentError, Question, QuestionSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub name: String,
    pub cell_size_m: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomDoc {
    pub id: String,
    pub label: RoomLabel,
    pub tag_char: char,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDoc {
    pub id: String,
    pub name: String,
    pub room: String,
    pub pos: Cell,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: Attributes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentDoc {
    pub pos: Cell,
    pub heading: Heading,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub meta: Meta,
    pub grid: Vec<String>,
    pub rooms: Vec<RoomDoc>,
    pub objects: Vec<ObjectDoc>,
    pub questions: Vec<Question>,
    pub agents: Vec<AgentDoc>,
}

/// A loaded, validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub scene: GridScene,
    pub questions: QuestionSet,
    pub starts: Vec<Pose>,
}

impl Scenario {
    pub fn name(&self) -> &str {
        &self.scene.name
    }

    pub fn n_agents(&self) -> usize {
        self.starts.len()
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(#[from] ValidationError),
    #[error("assignment error: {0}")]
    Assignment(#[from] AssignmentError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl From<serde_json::Error> for ScenarioError {
    fn from(e: serde_json::Error) -> Self {
        ScenarioError::Parse(e.to_string())
    }
}

pub const HALLWAY_ID: &str = "hallway";

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = serde_json::from_str(text)?;
    from_document(&doc)
}

pub fn load_scenario_file(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_scenario(&text)
}

pub fn from_document(doc: &ScenarioDoc) -> Result<Scenario, ScenarioError> {
    let height = doc.grid.len();
    let width = doc.grid.first().map(|r| r.chars().count()).unwrap_or(0);
    if height == 0 || width == 0 {
        return Err(ScenarioError::Parse("grid is empty".into()));
    }
    let mut tags: BTreeMap<char, usize> = BTreeMap::new();
    let mut rooms: Vec<Room> = Vec::new();
    for r in &doc.rooms {
        if r.tag_char == '#' {
            return Err(ScenarioError::Parse(format!("room {} uses the wall character", r.id)));
        }
        if tags.insert(r.tag_char, rooms.len()).is_some() {
            return Err(ScenarioError::Parse(format!("tag '{}' declared twice", r.tag_char)));
        }
        rooms.push(Room {
            id: r.id.clone(),
            label: r.label,
            tag: r.tag_char,
            cells: Vec::new(),
        });
    }
    let mut cells = Vec::with_capacity(width * height);
    for (y, row) in doc.grid.iter().enumerate() {
        if row.chars().count() != width {
            return Err(ScenarioError::Parse(format!("grid row {y} has ragged width")));
        }
        for (x, ch) in row.chars().enumerate() {
            let c = Cell::new(x as i32, y as i32);
            if ch == '#' {
                cells.push(CellKind::Wall);
                continue;
            }
            cells.push(CellKind::Free);
            let ri = match tags.get(&ch) {
                Some(&ri) => ri,
                None if ch == '.' => {
                    tags.insert('.', rooms.len());
                    rooms.push(Room {
                        id: HALLWAY_ID.into(),
                        label: RoomLabel::Hallway,
                        tag: '.',
                        cells: Vec::new(),
                    });
                    rooms.len() - 1
                }
                None => {
                    return Err(ScenarioError::Parse(format!(
                        "grid character '{ch}' at {c} is not a declared room tag"
                    )))
                }
            };
            rooms[ri].cells.push(c);
        }
    }
    let objects = doc
        .objects
        .iter()
        .map(|o| ObjectInstance {
            id: o.id.clone(),
            name: o.name.clone(),
            attributes: o.attributes.clone(),
            position: o.pos,
            room_id: o.room.clone(),
        })
        .collect();
    let scene = GridScene::new(
        doc.meta.name.clone(),
        doc.meta.seed,
        width,
        height,
        doc.meta.cell_size_m,
        cells,
        rooms,
        objects,
    )?;
    if doc.agents.is_empty() {
        return Err(ValidationError::AgentStart {
            index: 0,
            reason: "scenario declares no agents".into(),
        }
        .into());
    }
    let mut starts = Vec::with_capacity(doc.agents.len());
    for (index, a) in doc.agents.iter().enumerate() {
        if !scene.is_free(a.pos) {
            return Err(ValidationError::AgentStart {
                index,
                reason: format!("{} is not a free cell", a.pos),
            }
            .into());
        }
        starts.push(Pose::new(a.pos, a.heading));
    }
    for q in &doc.questions {
        q.validate(&scene)?;
    }
    let questions = assign(doc.questions.clone(), starts.len())?;
    Ok(Scenario {
        scene,
        questions,
        starts,
    })
}

/// Inverse of [`from_document`] up to semantic content.
pub fn to_document(s: &Scenario) -> ScenarioDoc {
    let scene = &s.scene;
    let mut grid = Vec::with_capacity(scene.height());
    for y in 0..scene.height() as i32 {
        let row: String = (0..scene.width() as i32)
            .map(|x| {
                let c = Cell::new(x, y);
                match scene.room_at(c) {
                    Some(r) => r.tag,
                    None => '#',
                }
            })
            .collect();
        grid.push(row);
    }
    ScenarioDoc {
        meta: Meta {
            name: scene.name.clone(),
            cell_size_m: scene.cell_size(),
            seed: scene.seed,
        },
        grid,
        rooms: scene
            .rooms()
            .iter()
            .map(|r| RoomDoc {
                id: r.id.clone(),
                label: r.label,
                tag_char: r.tag,
            })
            .collect(),
        objects: scene
            .objects()
            .iter()
            .map(|o| ObjectDoc {
                id: o.id.clone(),
                name: o.name.clone(),
                room: o.room_id.clone(),
                pos: o.position,
                attributes: o.attributes.clone(),
            })
            .collect(),
        questions: s.questions.questions.clone(),
        agents: s
            .starts
            .iter()
            .map(|p| AgentDoc {
                pos: p.position,
                heading: p.heading,
            })
            .collect(),
    }
}

pub fn serialize_scenario(s: &Scenario) -> String {
    serde_json::to_string_pretty(&to_document(s)).expect("scenario documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "meta": {"name": "mini", "cell_size_m": 1.0, "seed": 0},
        "grid": ["aaa", "aaa", "aaa"],
        "rooms": [{"id": "room", "label": "living_room", "tag_char": "a"}],
        "objects": [{"id": "o1", "name": "cushion", "room": "room", "pos": [1, 0],
                     "attributes": {"color": "red"}}],
        "questions": [{"id": "q1", "type": "Identification", "text": "What color is the cushion?",
                       "choices": ["Red", "White", "Black", "Gray"], "truth": "A",
                       "targets": [{"name": "cushion"}], "assignee": 0}],
        "agents": [{"pos": [1, 1], "heading": "N"}]
    }"#;

    #[test]
    fn minimal_document_loads() {
        let s = load_scenario(MINIMAL).unwrap();
        assert_eq!(s.scene.width(), 3);
        assert_eq!(s.scene.height(), 3);
        assert_eq!(s.scene.rooms().len(), 1);
        assert_eq!(s.scene.objects().len(), 1);
        assert_eq!(s.questions.len(), 1);
        assert_eq!(s.starts, vec![Pose::new(Cell::new(1, 1), Heading::N)]);
    }

    #[test]
    fn object_on_wall_is_rejected() {
        let text = MINIMAL.replace(r#""aaa", "aaa", "aaa""#, r##""a#a", "aaa", "aaa""##);
        match load_scenario(&text) {
            Err(ScenarioError::Validation(ValidationError::ObjectOnNonFree { id, .. })) => {
                assert_eq!(id, "o1")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(load_scenario("{"), Err(ScenarioError::Parse(_))));
        let text = MINIMAL.replace(r#""aaa", "aaa", "aaa""#, r#""aaa", "aza", "aaa""#);
        assert!(matches!(load_scenario(&text), Err(ScenarioError::Parse(_))));
    }

    #[test]
    fn dots_become_hallway() {
        let text = MINIMAL.replace(r#""aaa", "aaa", "aaa""#, r#""aaa", "...", "..a""#);
        let text = text.replace(r#""pos": [1, 1]"#, r#""pos": [0, 2]"#);
        // lower-right 'a' cell is disconnected from the top row
        assert!(matches!(
            load_scenario(&text),
            Err(ScenarioError::Validation(ValidationError::DisconnectedRoom(_)))
        ));
        let text = MINIMAL.replace(r#""aaa", "aaa", "aaa""#, r#""aaa", "...", "...""#);
        let s = load_scenario(&text).unwrap();
        let hall = s.scene.room(HALLWAY_ID).unwrap();
        assert_eq!(hall.label, RoomLabel::Hallway);
        assert_eq!(hall.cells.len(), 6);
    }

    #[test]
    fn round_trip_is_semantic_identity() {
        let s = load_scenario(MINIMAL).unwrap();
        let again = load_scenario(&serialize_scenario(&s)).unwrap();
        assert_eq!(s, again);
    }
}
