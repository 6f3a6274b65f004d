use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use serde::Deserialize;

use crate::scene::RoomLabel;

/// Household co-occurrence knowledge, loaded from `fixtures/affinity.json`.
#[derive(Debug, Clone)]
pub struct AffinityTable {
    pub version: u32,
    common_features: BTreeSet<String>,
    room_objects: BTreeMap<RoomLabel, Vec<String>>,
    pairs: BTreeSet<(String, String)>,
}

#[derive(Deserialize)]
struct Raw {
    version: u32,
    common_features: Vec<String>,
    room_objects: BTreeMap<String, Vec<String>>,
    pairs: Vec<(String, String)>,
}

pub static AFFINITY: LazyLock<AffinityTable> = LazyLock::new(|| {
    AffinityTable::parse(include_str!("../../fixtures/affinity.json"))
        .expect("bundled affinity fixture is valid")
});

impl AffinityTable {
    pub fn parse(text: &str) -> Result<Self, String> {
        let raw: Raw = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut room_objects = BTreeMap::new();
        for (label, names) in raw.room_objects {
            let label = RoomLabel::parse(&label).ok_or_else(|| format!("unknown room label {label}"))?;
            room_objects.insert(label, names);
        }
        let mut pairs = BTreeSet::new();
        for (a, b) in raw.pairs {
            pairs.insert((a.clone(), b.clone()));
            pairs.insert((b, a));
        }
        Ok(AffinityTable {
            version: raw.version,
            common_features: raw.common_features.into_iter().collect(),
            room_objects,
            pairs,
        })
    }

    pub fn is_common_feature(&self, name: &str) -> bool {
        self.common_features.contains(name)
    }

    pub fn common_features(&self) -> impl Iterator<Item = &str> {
        self.common_features.iter().map(String::as_str)
    }

    /// Symmetric pair lookup.
    pub fn related(&self, a: &str, b: &str) -> bool {
        self.pairs.contains(&(a.to_string(), b.to_string()))
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len() / 2
    }

    /// Room categories where `name` is typically found.
    pub fn typical_rooms(&self, name: &str) -> impl Iterator<Item = RoomLabel> + '_ {
        let name = name.to_string();
        self.room_objects
            .iter()
            .filter(move |(_, names)| names.contains(&name))
            .map(|(l, _)| *l)
    }

    pub fn catalog(&self, label: RoomLabel) -> &[String] {
        self.room_objects.get(&label).map(Vec::as_slice).unwrap_or(&[])
    }
}
