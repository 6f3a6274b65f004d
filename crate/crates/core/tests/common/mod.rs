#![allow(dead_code)]

use std::path::PathBuf;

use commcp::scenario::{load_scenario_file, Scenario};
use commcp::scene::{AttrKey, Cell, CellKind, GridScene, ObjectInstance, Room, RoomLabel};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load_fixture(name: &str) -> Scenario {
    load_scenario_file(fixture(name)).expect("fixture loads")
}

/// Scene from a wall mask where every free cell is its own room, so any
/// wall layout validates. One plain object per entry of `objects`.
pub fn walled_scene(w: usize, h: usize, walls: &[bool], objects: &[Cell]) -> GridScene {
    let cells: Vec<CellKind> = walls
        .iter()
        .map(|&b| if b { CellKind::Wall } else { CellKind::Free })
        .collect();
    let room_id = |c: Cell| format!("r{}_{}", c.x, c.y);
    let rooms = (0..h * w)
        .filter(|&i| !walls[i])
        .map(|i| {
            let c = Cell::new((i % w) as i32, (i / w) as i32);
            Room {
                id: room_id(c),
                label: RoomLabel::Other,
                tag: 'a',
                cells: vec![c],
            }
        })
        .collect();
    let objects = objects
        .iter()
        .enumerate()
        .map(|(i, &c)| ObjectInstance {
            id: format!("o{i}"),
            name: "box".into(),
            attributes: [(AttrKey::Color, "gray".into())].into_iter().collect(),
            position: c,
            room_id: room_id(c),
        })
        .collect();
    GridScene::new("walled", 0, w, h, 1.0, cells, rooms, objects).expect("valid scene")
}
