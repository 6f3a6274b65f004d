//! Seeded synthetic houses: BSP room layout, catalog objects, and questions
//! of every type with verified ground truth.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::oracle::AFFINITY;
use crate::scenario::{from_document, AgentDoc, Meta, ObjectDoc, RoomDoc, Scenario, ScenarioDoc, ScenarioError};
use crate::scene::{AttrKey, AttrValue, Attributes, Cell, Heading, RoomLabel};
use crate::seeding::Key;
use crate::tasks::{Label, Question, QuestionType, TargetDescriptor};

pub const CELL_SIZE_M: f64 = 0.5;
pub const QUESTIONS_PER_AGENT: usize = 3;

const COLORS: [&str; 8] = ["red", "white", "black", "gray", "blue", "brown", "green", "yellow"];
const SWITCHABLE: [&str; 7] = ["tv", "lamp", "microwave", "stove", "computer", "washing machine", "kettle"];
const COUNTABLE: [&str; 12] = [
    "cushion", "pillow", "mug", "plate", "towel", "plant", "chair", "soap", "coat", "umbrella", "basketball",
    "remote",
];

/// Grid dimensions (cells, walls included) for a size class.
pub fn dims_for_class(class: u8) -> (usize, usize) {
    match class {
        1 => (23, 17),
        2 => (32, 25),
        _ => (42, 31),
    }
}

/// Size class from floor area in square meters.
pub fn size_class(area_m2: f64) -> u8 {
    if area_m2 < 150.0 {
        1
    } else if area_m2 < 250.0 {
        2
    } else {
        3
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: i32,
    y0: i32,
    x1: i32,
    y1: i32,
}

impl Rect {
    fn w(&self) -> i32 {
        self.x1 - self.x0 + 1
    }
    fn h(&self) -> i32 {
        self.y1 - self.y0 + 1
    }
}

const MIN_SIDE: i32 = 4;

struct Layout {
    w: usize,
    wall: Vec<bool>,
    doors: BTreeSet<Cell>,
    leaves: Vec<Rect>,
}

impl Layout {
    fn idx(&self, c: Cell) -> usize {
        c.y as usize * self.w + c.x as usize
    }

    fn split(&mut self, r: Rect, rng: &mut ChaCha8Rng) {
        let area = r.w() * r.h();
        let can_v = r.w() >= 2 * MIN_SIDE + 1;
        let can_h = r.h() >= 2 * MIN_SIDE + 1;
        let want = area > 90 || (area > 50 && rng.random_bool(0.5));
        if !(want && (can_v || can_h)) {
            self.leaves.push(r);
            return;
        }
        let vertical = match (can_v, can_h) {
            (true, true) => r.w() > r.h() || (r.w() == r.h() && rng.random_bool(0.5)),
            (v, _) => v,
        };
        let (lo, hi) = if vertical {
            (r.x0 + MIN_SIDE, r.x1 - MIN_SIDE)
        } else {
            (r.y0 + MIN_SIDE, r.y1 - MIN_SIDE)
        };
        // a wall ending next to an existing door would block it
        let options: Vec<i32> = (lo..=hi)
            .filter(|&p| {
                let ends = if vertical {
                    [Cell::new(p, r.y0 - 1), Cell::new(p, r.y1 + 1)]
                } else {
                    [Cell::new(r.x0 - 1, p), Cell::new(r.x1 + 1, p)]
                };
                !ends.iter().any(|c| self.doors.contains(c))
            })
            .collect();
        let Some(&p) = options.choose(rng) else {
            self.leaves.push(r);
            return;
        };
        let line: Vec<Cell> = if vertical {
            (r.y0..=r.y1).map(|y| Cell::new(p, y)).collect()
        } else {
            (r.x0..=r.x1).map(|x| Cell::new(x, p)).collect()
        };
        for &c in &line {
            let i = self.idx(c);
            self.wall[i] = true;
        }
        let d = rng.random_range(0..line.len() - 1);
        for &c in &line[d..d + 2] {
            let i = self.idx(c);
            self.wall[i] = false;
            self.doors.insert(c);
        }
        let (a, b) = if vertical {
            (Rect { x1: p - 1, ..r }, Rect { x0: p + 1, ..r })
        } else {
            (Rect { y1: p - 1, ..r }, Rect { y0: p + 1, ..r })
        };
        self.split(a, rng);
        self.split(b, rng);
    }
}

fn room_labels(n: usize, rng: &mut ChaCha8Rng) -> Vec<RoomLabel> {
    use RoomLabel::*;
    let mut core = vec![LivingRoom, Kitchen, Bedroom, Bathroom];
    core.shuffle(rng);
    let extra = [Bedroom, Hallway, Other, Bathroom, Bedroom, Other, LivingRoom];
    let mut out: Vec<RoomLabel> = core.into_iter().chain(extra.iter().copied().cycle()).take(n).collect();
    out.shuffle(rng);
    out
}

fn pick_other<'a>(truth: &'a str, pool: &[&'a str], rng: &mut ChaCha8Rng, k: usize) -> Vec<&'a str> {
    let mut others: Vec<&str> = pool.iter().copied().filter(|p| *p != truth).collect();
    others.shuffle(rng);
    others.truncate(k);
    others
}

/// Shuffles `truth` in among `others` and returns (choices, truth label).
fn arrange(truth: String, others: Vec<String>, rng: &mut ChaCha8Rng) -> (Vec<String>, Label) {
    let mut all: Vec<(bool, String)> = std::iter::once((true, truth))
        .chain(others.into_iter().map(|o| (false, o)))
        .collect();
    all.shuffle(rng);
    let idx = all.iter().position(|(t, _)| *t).expect("truth was inserted");
    (all.into_iter().map(|(_, c)| c).collect(), Label::ALL[idx])
}

/// Generates a validated scenario for `n_agents` agents. Layouts with too
/// few distinct objects to ask about are redrawn.
pub fn generate(seed: u64, class: u8, n_agents: usize) -> Result<Scenario, ScenarioError> {
    let mut last = None;
    for attempt in 0..32 {
        match generate_attempt(seed, class, n_agents, attempt) {
            Ok(s) => return Ok(s),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt ran"))
}

fn generate_attempt(seed: u64, class: u8, n_agents: usize, attempt: u64) -> Result<Scenario, ScenarioError> {
    let mut rng = Key::new(seed, "generate")
        .u64(u64::from(class))
        .u64(n_agents as u64)
        .u64(attempt)
        .rng();
    let (w, h) = dims_for_class(class);
    let mut wall = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x == w - 1 || y == h - 1 {
                wall[y * w + x] = true;
            }
        }
    }
    let mut layout = Layout {
        w,
        wall,
        doors: BTreeSet::new(),
        leaves: Vec::new(),
    };
    layout.split(
        Rect {
            x0: 1,
            y0: 1,
            x1: w as i32 - 2,
            y1: h as i32 - 2,
        },
        &mut rng,
    );

    let labels = room_labels(layout.leaves.len(), &mut rng);
    let mut tag_of = vec!['#'; w * h];
    let mut rooms = Vec::new();
    let mut room_cells: Vec<Vec<Cell>> = Vec::new();
    for (i, (r, label)) in layout.leaves.iter().zip(&labels).enumerate() {
        let tag = (b'a' + i as u8) as char;
        rooms.push(RoomDoc {
            id: format!("{}_{i}", label.as_str()),
            label: *label,
            tag_char: tag,
        });
        let mut cells = Vec::new();
        for y in r.y0..=r.y1 {
            for x in r.x0..=r.x1 {
                tag_of[y as usize * w + x as usize] = tag;
                cells.push(Cell::new(x, y));
            }
        }
        room_cells.push(cells);
    }
    // door cells join the room on their left or upper side
    for &d in &layout.doors {
        let side = [Cell::new(d.x - 1, d.y), Cell::new(d.x, d.y - 1)]
            .into_iter()
            .find(|c| !layout.wall[layout.idx(*c)] && tag_of[layout.idx(*c)] != '#')
            .expect("door cells border a room cell");
        let t = tag_of[layout.idx(side)];
        tag_of[layout.idx(d)] = t;
    }
    let grid: Vec<String> = (0..h)
        .map(|y| (0..w).map(|x| if layout.wall[y * w + x] { '#' } else { tag_of[y * w + x] }).collect())
        .collect();

    // objects
    let mut used: BTreeSet<Cell> = layout.doors.clone();
    let mut objects: Vec<ObjectDoc> = Vec::new();
    for (ri, room) in rooms.iter().enumerate() {
        let catalog = AFFINITY.catalog(room.label);
        let n = rng.random_range(2..=4usize).min(catalog.len());
        let mut names: Vec<&String> = catalog.iter().collect();
        names.shuffle(&mut rng);
        let mut chosen: Vec<String> = names.into_iter().take(n).cloned().collect();
        if rng.random_bool(0.5) {
            let feats: Vec<&str> = AFFINITY.common_features().filter(|f| *f != "wall").collect();
            chosen.push(feats.choose(&mut rng).expect("fixture lists features").to_string());
        }
        let interior: Vec<Cell> = room_cells[ri].iter().copied().filter(|c| !used.contains(c)).collect();
        for name in chosen {
            let free: Vec<Cell> = interior.iter().copied().filter(|c| !used.contains(c)).collect();
            let Some(&pos) = free.choose(&mut rng) else { break };
            used.insert(pos);
            let mut attributes = Attributes::new();
            attributes.insert(AttrKey::Color, AttrValue::from(*COLORS.choose(&mut rng).expect("non-empty")));
            if SWITCHABLE.contains(&name.as_str()) {
                attributes.insert(AttrKey::State, AttrValue::from(if rng.random_bool(0.5) { "on" } else { "off" }));
            }
            if COUNTABLE.contains(&name.as_str()) {
                attributes.insert(AttrKey::Count, AttrValue::from(rng.random_range(1..=4i64)));
            }
            objects.push(ObjectDoc {
                id: format!("o{}", objects.len()),
                name,
                room: room.id.clone(),
                pos,
                attributes,
            });
        }
    }

    // questions about objects whose name is unique in the scene
    let mut name_count: BTreeMap<&str, usize> = BTreeMap::new();
    for o in &objects {
        *name_count.entry(o.name.as_str()).or_default() += 1;
    }
    let mut candidates: Vec<&ObjectDoc> = objects
        .iter()
        .filter(|o| name_count[o.name.as_str()] == 1 && !AFFINITY.is_common_feature(&o.name))
        .collect();
    candidates.shuffle(&mut rng);
    let n_q = n_agents * QUESTIONS_PER_AGENT;
    let mut types = QuestionType::ALL.to_vec();
    types.shuffle(&mut rng);
    let label_of: BTreeMap<&str, RoomLabel> = rooms.iter().map(|r| (r.id.as_str(), r.label)).collect();
    let present: Vec<RoomLabel> = {
        let s: BTreeSet<RoomLabel> = rooms.iter().map(|r| r.label).collect();
        s.into_iter().collect()
    };
    let mut questions = Vec::new();
    let mut ti = 0;
    for o in candidates {
        if questions.len() == n_q {
            break;
        }
        let color = o.attributes[&AttrKey::Color].to_string();
        let room_label = label_of[o.room.as_str()];
        // first type in the rotation this object supports
        let mut made = None;
        for k in 0..types.len() {
            let qt = types[(ti + k) % types.len()];
            let base = TargetDescriptor::new(o.name.clone());
            let colored = base.clone().with(AttrKey::Color, color.as_str());
            let q = match qt {
                QuestionType::Location => {
                    let pool: Vec<&str> = RoomLabel::ALL.iter().map(|l| l.phrase()).collect();
                    let others = pick_other(room_label.phrase(), &pool, &mut rng, 3);
                    let (choices, truth) = arrange(
                        room_label.phrase().to_string(),
                        others.into_iter().map(String::from).collect(),
                        &mut rng,
                    );
                    Some((format!("Where is the {color} {}?", o.name), choices, truth, colored))
                }
                QuestionType::Identification => {
                    let others = pick_other(&color, &COLORS, &mut rng, 3);
                    let cap = |s: &str| {
                        let mut c = s.chars();
                        c.next().map(|f| f.to_uppercase().chain(c).collect::<String>()).unwrap_or_default()
                    };
                    let (choices, truth) =
                        arrange(cap(&color), others.into_iter().map(cap).collect(), &mut rng);
                    Some((format!("What color is the {}?", o.name), choices, truth, base))
                }
                QuestionType::Counting => o.attributes.get(&AttrKey::Count).map(|c| {
                    let n = c.to_string();
                    let nums: Vec<String> = (1..=6).map(|i| i.to_string()).collect();
                    let pool: Vec<&str> = nums.iter().map(String::as_str).collect();
                    let others = pick_other(&n, &pool, &mut rng, 3);
                    let (choices, truth) = arrange(n.clone(), others.into_iter().map(String::from).collect(), &mut rng);
                    (format!("How many {} {}s are there?", color, o.name), choices, truth, colored.clone())
                }),
                QuestionType::Existence => {
                    let asked = if rng.random_bool(0.5) {
                        room_label
                    } else {
                        *present.choose(&mut rng).expect("rooms exist")
                    };
                    let truth = if asked == room_label { Label::A } else { Label::B };
                    Some((
                        format!("Is there a {color} {} in the {}?", o.name, asked.phrase()),
                        vec!["Yes".into(), "No".into()],
                        truth,
                        colored,
                    ))
                }
                QuestionType::State => o.attributes.get(&AttrKey::State).map(|s| {
                    let truth = if s.to_string() == "on" { Label::A } else { Label::B };
                    (
                        format!("Is the {color} {} turned on?", o.name),
                        vec!["Yes".into(), "No".into()],
                        truth,
                        colored.clone(),
                    )
                }),
            };
            if let Some(q) = q {
                made = Some((qt, q));
                ti = (ti + k + 1) % types.len();
                break;
            }
        }
        let (qtype, (text, choices, truth, target)) = made.expect("location questions always apply");
        let i = questions.len();
        questions.push(Question {
            id: format!("q{i}"),
            qtype,
            text,
            choices,
            truth,
            targets: vec![target],
            assignee: i / QUESTIONS_PER_AGENT,
        });
    }
    if questions.len() < n_q {
        return Err(ScenarioError::Parse(format!(
            "seed {seed}: only {} questionable objects for {n_q} questions",
            questions.len()
        )));
    }

    let free: Vec<Cell> = (0..h)
        .flat_map(|y| (0..w).map(move |x| Cell::new(x as i32, y as i32)))
        .filter(|c| !layout.wall[layout.idx(*c)] && !used.contains(c))
        .collect();
    let agents = free
        .choose_multiple(&mut rng, n_agents)
        .map(|&pos| AgentDoc {
            pos,
            heading: *Heading::ALL.choose(&mut rng).expect("non-empty"),
        })
        .collect();

    let doc = ScenarioDoc {
        meta: Meta {
            name: format!("gen-c{class}-s{seed}"),
            cell_size_m: CELL_SIZE_M,
            seed,
        },
        grid,
        rooms,
        objects,
        questions,
        agents,
    };
    from_document(&doc)
}

/// Adds agents to `base` and splits its questions evenly over the larger
/// team, keeping the scene and question contents fixed.
pub fn with_extra_agents(base: &Scenario, n_agents: usize, seed: u64) -> Result<Scenario, ScenarioError> {
    let mut doc = crate::scenario::to_document(base);
    let mut rng = Key::new(seed, "extra_agents").str(base.name()).rng();
    let taken: BTreeSet<Cell> = doc
        .objects
        .iter()
        .map(|o| o.pos)
        .chain(doc.agents.iter().map(|a| a.pos))
        .collect();
    let free: Vec<Cell> = base
        .scene
        .cells()
        .filter(|(c, k)| *k == crate::scene::CellKind::Free && !taken.contains(c))
        .map(|(c, _)| c)
        .collect();
    let extra = n_agents.saturating_sub(doc.agents.len());
    for &pos in free.choose_multiple(&mut rng, extra) {
        doc.agents.push(AgentDoc {
            pos,
            heading: *Heading::ALL.choose(&mut rng).expect("non-empty"),
        });
    }
    let per = doc.questions.len() / n_agents.max(1);
    for (i, q) in doc.questions.iter_mut().enumerate() {
        q.assignee = (i / per.max(1)).min(n_agents - 1);
    }
    from_document(&doc)
}
