//! Discretized 2D environment: cells, rooms, placed objects, and the
//! geometric observation model (field of view, range, occlusion).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Integer cell coordinates. `x` grows east, `y` grows south (row index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn chebyshev(self, other: Cell) -> u32 {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    /// 4-neighbours in N, E, S, W order.
    pub fn neighbors4(self) -> [Cell; 4] {
        Heading::ALL.map(|h| self.step(h))
    }

    pub fn step(self, heading: Heading) -> Cell {
        let (dx, dy) = heading.delta();
        Cell::new(self.x + dx, self.y + dy)
    }
}

impl From<[i32; 2]> for Cell {
    fn from(v: [i32; 2]) -> Self {
        Cell::new(v[0], v[1])
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Heading {
    N,
    E,
    S,
    W,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::N, Heading::E, Heading::S, Heading::W];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Heading::N => (0, -1),
            Heading::E => (1, 0),
            Heading::S => (0, 1),
            Heading::W => (-1, 0),
        }
    }

    /// Heading of a unit 4-connected move, if `from -> to` is one.
    pub fn between(from: Cell, to: Cell) -> Option<Heading> {
        Heading::ALL
            .into_iter()
            .find(|h| from.step(*h) == to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub position: Cell,
    pub heading: Heading,
}

impl Pose {
    pub fn new(position: Cell, heading: Heading) -> Self {
        Pose { position, heading }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    Free,
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomLabel {
    Bedroom,
    Bathroom,
    Kitchen,
    LivingRoom,
    Hallway,
    Other,
}

impl RoomLabel {
    pub const ALL: [RoomLabel; 6] = [
        RoomLabel::Bedroom,
        RoomLabel::Bathroom,
        RoomLabel::Kitchen,
        RoomLabel::LivingRoom,
        RoomLabel::Hallway,
        RoomLabel::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoomLabel::Bedroom => "bedroom",
            RoomLabel::Bathroom => "bathroom",
            RoomLabel::Kitchen => "kitchen",
            RoomLabel::LivingRoom => "living_room",
            RoomLabel::Hallway => "hallway",
            RoomLabel::Other => "other",
        }
    }

    /// Human phrasing used in generated question text.
    pub fn phrase(self) -> &'static str {
        match self {
            RoomLabel::LivingRoom => "living room",
            RoomLabel::Other => "utility room",
            other => other.as_str(),
        }
    }

    pub fn parse(s: &str) -> Option<RoomLabel> {
        RoomLabel::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Room {
    pub id: String,
    pub label: RoomLabel,
    /// Grid character the room is drawn with in scenario documents.
    pub tag: char,
    /// Row-major sorted.
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttrKey {
    Color,
    State,
    Count,
    LocationHint,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Int(i64),
    Text(String),
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Int(v) => write!(f, "{v}"),
            AttrValue::Text(s) => f.write_str(s),
        }
    }
}

impl From<&str> for AttrValue {
    fn from(s: &str) -> Self {
        AttrValue::Text(s.to_string())
    }
}

impl From<i64> for AttrValue {
    fn from(v: i64) -> Self {
        AttrValue::Int(v)
    }
}

pub type Attributes = BTreeMap<AttrKey, AttrValue>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectInstance {
    pub id: String,
    pub name: String,
    pub attributes: Attributes,
    pub position: Cell,
    pub room_id: String,
}

impl ObjectInstance {
    pub fn color(&self) -> Option<&AttrValue> {
        self.attributes.get(&AttrKey::Color)
    }

    /// Noun phrase with color, e.g. "red cushion".
    pub fn phrase(&self) -> String {
        match self.color() {
            Some(c) => format!("{c} {}", self.name),
            None => self.name.clone(),
        }
    }
}

/// Camera-like sensor cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub fov_deg: f64,
    /// Chebyshev range in cells.
    pub range: u32,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            fov_deg: 90.0,
            range: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("grid dimensions must be at least 1x1 (got {width}x{height})")]
    EmptyGrid { width: usize, height: usize },
    #[error("cell_size must be positive (got {0})")]
    CellSize(String),
    #[error("object on non-Free cell: {id} at {pos}")]
    ObjectOnNonFree { id: String, pos: Cell },
    #[error("object out of bounds: {id} at {pos}")]
    ObjectOutOfBounds { id: String, pos: Cell },
    #[error("duplicate object id: {0}")]
    DuplicateObject(String),
    #[error("object {id} declares room {declared} but sits in {actual}")]
    ObjectRoomMismatch {
        id: String,
        declared: String,
        actual: String,
    },
    #[error("free cell {0} belongs to no room")]
    UnroomedCell(Cell),
    #[error("cell {cell} claimed by more than one room")]
    OverlappingRooms { cell: Cell },
    #[error("room {0} has no cells")]
    EmptyRoom(String),
    #[error("room {0} is not 4-connected")]
    DisconnectedRoom(String),
    #[error("room {room} contains non-Free cell {cell}")]
    RoomOnWall { room: String, cell: Cell },
    #[error("duplicate room id: {0}")]
    DuplicateRoom(String),
    #[error("question {question}: {reason}")]
    Question { question: String, reason: String },
    #[error("agent start {index} invalid: {reason}")]
    AgentStart { index: usize, reason: String },
}

/// Immutable after construction; share freely across agent threads.
#[derive(Debug, Clone, PartialEq)]
pub struct GridScene {
    pub name: String,
    pub seed: u64,
    width: usize,
    height: usize,
    cell_size: f64,
    cells: Vec<CellKind>,
    rooms: Vec<Room>,
    objects: Vec<ObjectInstance>,
    room_of: Vec<Option<usize>>,
}

impl GridScene {
    /// Builds and validates a scene. `rooms` cells may be given in any order.
    pub fn new(
        name: impl Into<String>,
        seed: u64,
        width: usize,
        height: usize,
        cell_size: f64,
        cells: Vec<CellKind>,
        mut rooms: Vec<Room>,
        objects: Vec<ObjectInstance>,
    ) -> Result<Self, ValidationError> {
        if width == 0 || height == 0 || cells.len() != width * height {
            return Err(ValidationError::EmptyGrid { width, height });
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(ValidationError::CellSize(cell_size.to_string()));
        }
        let mut room_of = vec![None; width * height];
        let mut seen_rooms = BTreeSet::new();
        for (ri, room) in rooms.iter_mut().enumerate() {
            if !seen_rooms.insert(room.id.clone()) {
                return Err(ValidationError::DuplicateRoom(room.id.clone()));
            }
            if room.cells.is_empty() {
                return Err(ValidationError::EmptyRoom(room.id.clone()));
            }
            room.cells.sort_by_key(|c| (c.y, c.x));
            room.cells.dedup();
            for &c in &room.cells {
                let idx = index_of(width, height, c).ok_or(ValidationError::RoomOnWall {
                    room: room.id.clone(),
                    cell: c,
                })?;
                if cells[idx] != CellKind::Free {
                    return Err(ValidationError::RoomOnWall {
                        room: room.id.clone(),
                        cell: c,
                    });
                }
                if room_of[idx].is_some() {
                    return Err(ValidationError::OverlappingRooms { cell: c });
                }
                room_of[idx] = Some(ri);
            }
            if !is_connected(&room.cells) {
                return Err(ValidationError::DisconnectedRoom(room.id.clone()));
            }
        }
        for (idx, kind) in cells.iter().enumerate() {
            if *kind == CellKind::Free && room_of[idx].is_none() {
                let c = Cell::new((idx % width) as i32, (idx / width) as i32);
                return Err(ValidationError::UnroomedCell(c));
            }
        }
        let mut ids = BTreeSet::new();
        for obj in &objects {
            if !ids.insert(obj.id.clone()) {
                return Err(ValidationError::DuplicateObject(obj.id.clone()));
            }
            let idx = index_of(width, height, obj.position).ok_or_else(|| {
                ValidationError::ObjectOutOfBounds {
                    id: obj.id.clone(),
                    pos: obj.position,
                }
            })?;
            if cells[idx] != CellKind::Free {
                return Err(ValidationError::ObjectOnNonFree {
                    id: obj.id.clone(),
                    pos: obj.position,
                });
            }
            let actual = &rooms[room_of[idx].expect("free cells are roomed")].id;
            if *actual != obj.room_id {
                return Err(ValidationError::ObjectRoomMismatch {
                    id: obj.id.clone(),
                    declared: obj.room_id.clone(),
                    actual: actual.clone(),
                });
            }
        }
        Ok(GridScene {
            name: name.into(),
            seed,
            width,
            height,
            cell_size,
            cells,
            rooms,
            objects,
            room_of,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    /// Floor area in square meters.
    pub fn area_m2(&self) -> f64 {
        self.width as f64 * self.height as f64 * self.cell_size * self.cell_size
    }

    pub fn rooms(&self) -> &[Room] {
        &self.rooms
    }

    pub fn objects(&self) -> &[ObjectInstance] {
        &self.objects
    }

    pub fn object(&self, id: &str) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        index_of(self.width, self.height, c).is_some()
    }

    pub fn index(&self, c: Cell) -> Option<usize> {
        index_of(self.width, self.height, c)
    }

    pub fn kind(&self, c: Cell) -> Option<CellKind> {
        self.index(c).map(|i| self.cells[i])
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.kind(c) == Some(CellKind::Free)
    }

    pub fn is_wall(&self, c: Cell) -> bool {
        self.kind(c) == Some(CellKind::Wall)
    }

    pub fn room_at(&self, c: Cell) -> Option<&Room> {
        self.index(c)
            .and_then(|i| self.room_of[i])
            .map(|ri| &self.rooms[ri])
    }

    pub fn room(&self, id: &str) -> Option<&Room> {
        self.rooms.iter().find(|r| r.id == id)
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (Cell, CellKind)> + '_ {
        self.cells.iter().enumerate().map(move |(i, k)| {
            (Cell::new((i % self.width) as i32, (i / self.width) as i32), *k)
        })
    }

    /// True if `cell` lies within the sensor cone at `pose` (range and
    /// angle only, no occlusion).
    pub fn in_cone(&self, pose: Pose, cell: Cell, sensor: SensorConfig) -> bool {
        if pose.position.chebyshev(cell) > sensor.range {
            return false;
        }
        if cell == pose.position || sensor.fov_deg >= 360.0 {
            return true;
        }
        let (hx, hy) = pose.heading.delta();
        let vx = f64::from(cell.x - pose.position.x);
        let vy = f64::from(cell.y - pose.position.y);
        let cos = (f64::from(hx) * vx + f64::from(hy) * vy) / (vx * vx + vy * vy).sqrt();
        let angle = cos.clamp(-1.0, 1.0).acos().to_degrees();
        angle <= sensor.fov_deg / 2.0 + 1e-9
    }

    /// No Wall strictly between `from` and `to` on the supercover line.
    pub fn line_of_sight(&self, from: Cell, to: Cell) -> bool {
        let line = supercover_line(from, to);
        let n = line.len();
        line.iter()
            .take(n.saturating_sub(1))
            .skip(1)
            .all(|c| !self.is_wall(*c))
    }

    fn observable(&self, pose: Pose, cell: Cell, sensor: SensorConfig) -> bool {
        self.in_bounds(cell) && self.in_cone(pose, cell, sensor) && self.line_of_sight(pose.position, cell)
    }

    /// Cells hit by sensor rays: inside the cone with the first Wall on each
    /// ray included and everything behind it excluded.
    pub fn reveal(&self, pose: Pose, sensor: SensorConfig) -> BTreeSet<Cell> {
        let r = sensor.range as i32;
        let p = pose.position;
        let mut out = BTreeSet::new();
        for y in (p.y - r)..=(p.y + r) {
            for x in (p.x - r)..=(p.x + r) {
                let c = Cell::new(x, y);
                if self.observable(pose, c, sensor) {
                    out.insert(c);
                }
            }
        }
        out
    }

    /// Indices into [`GridScene::objects`] of the instances currently in view.
    pub fn visible_objects(&self, pose: Pose, sensor: SensorConfig) -> Vec<usize> {
        self.objects
            .iter()
            .enumerate()
            .filter(|(_, o)| self.observable(pose, o.position, sensor))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn observe(&self, pose: Pose, sensor: SensorConfig, tick: u64) -> Observation {
        Observation {
            pose,
            tick,
            visible_objects: self.visible_objects(pose, sensor),
            revealed_cells: self.reveal(pose, sensor),
        }
    }
}

/// Value snapshot of one sensor reading.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub pose: Pose,
    /// Simulation tick the reading was taken at.
    pub tick: u64,
    /// Indices into the scene's object list.
    pub visible_objects: Vec<usize>,
    pub revealed_cells: BTreeSet<Cell>,
}

fn index_of(width: usize, height: usize, c: Cell) -> Option<usize> {
    if c.x < 0 || c.y < 0 {
        return None;
    }
    let (x, y) = (c.x as usize, c.y as usize);
    (x < width && y < height).then_some(y * width + x)
}

fn is_connected(cells: &[Cell]) -> bool {
    let set: BTreeSet<Cell> = cells.iter().copied().collect();
    let Some(&start) = cells.first() else {
        return false;
    };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for n in c.neighbors4() {
            if set.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len() == set.len()
}

/// Every cell the segment between the two cell centers touches, endpoints
/// included. A segment passing exactly through a lattice corner touches both
/// side cells as well as the diagonal one.
pub fn supercover_line(from: Cell, to: Cell) -> Vec<Cell> {
    let dx = i64::from(to.x) - i64::from(from.x);
    let dy = i64::from(to.y) - i64::from(from.y);
    let (nx, ny) = (dx.abs(), dy.abs());
    let (sx, sy) = (dx.signum() as i32, dy.signum() as i32);
    let mut p = from;
    let mut out = vec![p];
    let (mut ix, mut iy) = (0i64, 0i64);
    while ix < nx || iy < ny {
        let decision = (1 + 2 * ix) * ny - (1 + 2 * iy) * nx;
        if decision == 0 {
            out.push(Cell::new(p.x + sx, p.y));
            out.push(Cell::new(p.x, p.y + sy));
            p = Cell::new(p.x + sx, p.y + sy);
            ix += 1;
            iy += 1;
        } else if decision < 0 {
            p.x += sx;
            ix += 1;
        } else {
            p.y += sy;
            iy += 1;
        }
        out.push(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn open_scene(w: usize, h: usize, objects: Vec<(&str, &str, Cell)>) -> GridScene {
        let cells = vec![CellKind::Free; w * h];
        let room_cells = (0..h as i32)
            .flat_map(|y| (0..w as i32).map(move |x| Cell::new(x, y)))
            .collect();
        let rooms = vec![Room {
            id: "r".into(),
            label: RoomLabel::LivingRoom,
            tag: 'a',
            cells: room_cells,
        }];
        let objects = objects
            .into_iter()
            .map(|(id, name, pos)| ObjectInstance {
                id: id.into(),
                name: name.into(),
                attributes: Attributes::new(),
                position: pos,
                room_id: "r".into(),
            })
            .collect();
        GridScene::new("open", 0, w, h, 1.0, cells, rooms, objects).unwrap()
    }

    fn scene_from_rows(rows: &[&str], objects: Vec<(&str, Cell)>) -> GridScene {
        let h = rows.len();
        let w = rows[0].len();
        let mut cells = Vec::new();
        let mut free = Vec::new();
        for (y, row) in rows.iter().enumerate() {
            for (x, ch) in row.chars().enumerate() {
                if ch == '#' {
                    cells.push(CellKind::Wall);
                } else {
                    cells.push(CellKind::Free);
                    free.push(Cell::new(x as i32, y as i32));
                }
            }
        }
        let rooms = vec![Room {
            id: "r".into(),
            label: RoomLabel::Other,
            tag: 'a',
            cells: free,
        }];
        let objects = objects
            .into_iter()
            .map(|(id, pos)| ObjectInstance {
                id: id.into(),
                name: id.into(),
                attributes: Attributes::new(),
                position: pos,
                room_id: "r".into(),
            })
            .collect();
        GridScene::new("rows", 0, w, h, 1.0, cells, rooms, objects).unwrap()
    }

    #[test]
    fn supercover_through_corner_touches_both_sides() {
        let line = supercover_line(Cell::new(0, 0), Cell::new(1, 1));
        assert_eq!(
            line,
            vec![Cell::new(0, 0), Cell::new(1, 0), Cell::new(0, 1), Cell::new(1, 1)]
        );
    }

    #[test]
    fn supercover_straight_and_shallow() {
        assert_eq!(supercover_line(Cell::new(2, 2), Cell::new(2, 2)), vec![Cell::new(2, 2)]);
        let line = supercover_line(Cell::new(0, 0), Cell::new(3, 0));
        assert_eq!(line.len(), 4);
        let line = supercover_line(Cell::new(0, 0), Cell::new(4, 1));
        assert_eq!(line.first(), Some(&Cell::new(0, 0)));
        assert_eq!(line.last(), Some(&Cell::new(4, 1)));
        // consecutive cells are 4-adjacent except at exact corners
        assert!(line.windows(2).all(|w| w[0].manhattan(w[1]) == 1));
    }

    #[test]
    fn adjacent_object_in_heading_is_visible() {
        let scene = open_scene(5, 5, vec![("o", "cup", Cell::new(2, 1))]);
        let pose = Pose::new(Cell::new(2, 2), Heading::N);
        let sensor = SensorConfig { fov_deg: 90.0, range: 5 };
        assert_eq!(scene.visible_objects(pose, sensor), vec![0]);
    }

    #[test]
    fn wall_occludes_object() {
        let scene = scene_from_rows(&[".....", "###..", "....."], vec![("o", Cell::new(1, 0))]);
        let pose = Pose::new(Cell::new(1, 2), Heading::N);
        let sensor = SensorConfig { fov_deg: 90.0, range: 5 };
        assert!(scene.visible_objects(pose, sensor).is_empty());
        assert!(scene.reveal(pose, sensor).contains(&Cell::new(1, 1)));
        assert!(!scene.reveal(pose, sensor).contains(&Cell::new(1, 0)));
    }

    #[test]
    fn walled_cell_reveals_itself_and_four_walls() {
        let scene = scene_from_rows(&["#####", "#####", "##.##", "#####", "#####"], vec![]);
        let pose = Pose::new(Cell::new(2, 2), Heading::N);
        let got = scene.reveal(pose, SensorConfig { fov_deg: 360.0, range: 3 });
        let want: BTreeSet<Cell> = [(2, 2), (2, 1), (3, 2), (2, 3), (1, 2)]
            .into_iter()
            .map(|(x, y)| Cell::new(x, y))
            .collect();
        assert_eq!(got, want);
        // with a forward cone only the north wall is in view
        let got = scene.reveal(pose, SensorConfig { fov_deg: 90.0, range: 3 });
        assert_eq!(got, BTreeSet::from([Cell::new(2, 2), Cell::new(2, 1)]));
    }

    #[test]
    fn degenerate_range_reveals_pose_only() {
        let scene = open_scene(5, 5, vec![]);
        let pose = Pose::new(Cell::new(2, 2), Heading::E);
        let got = scene.reveal(pose, SensorConfig { fov_deg: 360.0, range: 0 });
        assert_eq!(got, BTreeSet::from([Cell::new(2, 2)]));
    }

    #[test]
    fn open_room_full_reveal() {
        let scene = open_scene(5, 5, vec![]);
        let pose = Pose::new(Cell::new(1, 3), Heading::W);
        let got = scene.reveal(pose, SensorConfig { fov_deg: 360.0, range: 10 });
        assert_eq!(got.len(), 25);
    }

    #[test]
    fn cone_excludes_cells_behind() {
        let scene = open_scene(7, 7, vec![]);
        let pose = Pose::new(Cell::new(3, 3), Heading::N);
        let s = SensorConfig { fov_deg: 90.0, range: 3 };
        assert!(scene.in_cone(pose, Cell::new(3, 0), s));
        assert!(scene.in_cone(pose, Cell::new(0, 0), s)); // exactly 45 degrees
        assert!(!scene.in_cone(pose, Cell::new(0, 1), s));
        assert!(!scene.in_cone(pose, Cell::new(3, 4), s));
    }

    #[test]
    fn validation_catches_object_on_wall() {
        let cells = vec![CellKind::Free, CellKind::Wall];
        let rooms = vec![Room {
            id: "r".into(),
            label: RoomLabel::Other,
            tag: 'a',
            cells: vec![Cell::new(0, 0)],
        }];
        let objects = vec![ObjectInstance {
            id: "o".into(),
            name: "cup".into(),
            attributes: Attributes::new(),
            position: Cell::new(1, 0),
            room_id: "r".into(),
        }];
        let err = GridScene::new("x", 0, 2, 1, 1.0, cells, rooms, objects).unwrap_err();
        assert!(matches!(err, ValidationError::ObjectOnNonFree { .. }));
        assert!(err.to_string().starts_with("object on non-Free cell"));
    }

    #[test]
    fn validation_catches_disconnected_room() {
        let cells = vec![CellKind::Free, CellKind::Wall, CellKind::Free];
        let rooms = vec![Room {
            id: "r".into(),
            label: RoomLabel::Other,
            tag: 'a',
            cells: vec![Cell::new(0, 0), Cell::new(2, 0)],
        }];
        let err = GridScene::new("x", 0, 3, 1, 1.0, cells, rooms, vec![]).unwrap_err();
        assert_eq!(err, ValidationError::DisconnectedRoom("r".into()));
    }
}
