//! Wire payloads and the latency-modelled message bus.
//!
//! Every payload occupies its sender's channel for `1 / msg_rate` seconds and
//! becomes visible to the recipient when that slot ends. A broadcast uses one
//! slot and is copied to every recipient.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformal::Filtered;
use crate::scene::{Cell, GridScene};
use crate::tasks::{Label, TargetDescriptor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub from_agent: usize,
    pub question_id: String,
    pub targets: Vec<TargetDescriptor>,
}

impl Request {
    pub fn target_phrase(&self) -> String {
        target_phrase(&self.targets)
    }
}

/// Requested targets as one noun phrase.
pub fn target_phrase(targets: &[TargetDescriptor]) -> String {
    targets.iter().map(|t| t.phrase()).collect::<Vec<_>>().join(" or ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeenObject {
    pub name: String,
    pub pos: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub from_agent: usize,
    pub to_agent: usize,
    pub question_id: String,
    pub relevants: Vec<SeenObject>,
    pub targets_seen: Vec<SeenObject>,
    pub rendered: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerShare {
    pub from_agent: usize,
    pub to_agent: usize,
    pub question_id: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Request(Request),
    Message(Message),
    AnswerShare(AnswerShare),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Request(_) => "request",
            Payload::Message(_) => "message",
            Payload::AnswerShare(_) => "answer_share",
        }
    }

    pub fn from_agent(&self) -> usize {
        match self {
            Payload::Request(r) => r.from_agent,
            Payload::Message(m) => m.from_agent,
            Payload::AnswerShare(a) => a.from_agent,
        }
    }

    /// `None` for broadcasts.
    pub fn to_agent(&self) -> Option<usize> {
        match self {
            Payload::Request(_) => None,
            Payload::Message(m) => Some(m.to_agent),
            Payload::AnswerShare(a) => Some(a.to_agent),
        }
    }
}

fn join_cells(cells: impl Iterator<Item = Cell>) -> String {
    cells.map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
}

fn join_names<'a>(names: impl Iterator<Item = &'a str>) -> String {
    names.collect::<Vec<_>>().join(", ")
}

/// Renders the message sentence. Either list may be empty, not both.
pub fn render(relevants: &[SeenObject], target: &str, targets_seen: &[SeenObject]) -> String {
    let rel = format!(
        "{} that may be relevant to your target {} at {}",
        join_names(relevants.iter().map(|o| o.name.as_str())),
        target,
        join_cells(relevants.iter().map(|o| o.pos)),
    );
    let tgt = format!(
        "{} may be your target at {}",
        join_names(targets_seen.iter().map(|o| o.name.as_str())),
        join_cells(targets_seen.iter().map(|o| o.pos)),
    );
    match (relevants.is_empty(), targets_seen.is_empty()) {
        (false, false) => format!("I see {rel}, and {tgt}"),
        (false, true) => format!("I see {rel}"),
        (true, false) => format!("I see {} that may be your target at {}",
            join_names(targets_seen.iter().map(|o| o.name.as_str())),
            join_cells(targets_seen.iter().map(|o| o.pos))),
        (true, true) => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedMessage {
    pub relevants: Vec<SeenObject>,
    /// Present iff `relevants` is non-empty.
    pub target: Option<String>,
    pub targets_seen: Vec<SeenObject>,
}

fn parse_cells(s: &str) -> Option<Vec<Cell>> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let body = rest.strip_prefix('(')?;
        let close = body.find(')')?;
        let (x, y) = body[..close].split_once(", ")?;
        out.push(Cell::new(x.parse().ok()?, y.parse().ok()?));
        rest = body[close + 1..].trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
            if rest.is_empty() {
                return None;
            }
        } else if !rest.is_empty() {
            return None;
        }
    }
    Some(out)
}

fn zip_objects(names: &str, cells: &str) -> Option<Vec<SeenObject>> {
    let names: Vec<&str> = names.split(", ").collect();
    let cells = parse_cells(cells)?;
    if names.len() != cells.len() || names.iter().any(|n| n.is_empty()) {
        return None;
    }
    Some(
        names
            .into_iter()
            .zip(cells)
            .map(|(n, pos)| SeenObject { name: n.to_string(), pos })
            .collect(),
    )
}

const REL: &str = " that may be relevant to your target ";
const TGT_ONLY: &str = " that may be your target at ";
const TGT: &str = " may be your target at ";

/// Inverse of [`render`].
pub fn parse_rendered(s: &str) -> Option<ParsedMessage> {
    let body = s.strip_prefix("I see ")?;
    if let Some((names, rest)) = body.split_once(REL) {
        // "<target> at <cells>[, and <names> may be your target at <cells>]"
        let (rel_part, tgt_part) = match rest.split_once(", and ") {
            Some((a, b)) => (a, Some(b)),
            None => (rest, None),
        };
        let at = rel_part.find(" at (")?;
        let target = rel_part[..at].to_string();
        let relevants = zip_objects(names, &rel_part[at + 4..])?;
        let targets_seen = match tgt_part {
            Some(t) => {
                let (n, c) = t.split_once(TGT)?;
                zip_objects(n, c)?
            }
            None => Vec::new(),
        };
        return Some(ParsedMessage {
            relevants,
            target: Some(target),
            targets_seen,
        });
    }
    let (names, cells) = body.split_once(TGT_ONLY)?;
    Some(ParsedMessage {
        relevants: Vec::new(),
        target: None,
        targets_seen: zip_objects(names, cells)?,
    })
}

/// Builds the reply to `request` from filtered object ids; `None` when
/// nothing passed the filter.
pub fn generate_message(
    filtered: &Filtered,
    scene: &GridScene,
    request: &Request,
    sender: usize,
) -> Option<Message> {
    if filtered.is_empty() {
        return None;
    }
    let seen = |ids: &[String]| -> Vec<SeenObject> {
        ids.iter()
            .filter_map(|id| scene.object(id))
            .map(|o| SeenObject {
                name: o.phrase(),
                pos: o.position,
            })
            .collect()
    };
    let relevants = seen(&filtered.relevants);
    let targets_seen = seen(&filtered.targets);
    if relevants.is_empty() && targets_seen.is_empty() {
        return None;
    }
    let rendered = render(&relevants, &request.target_phrase(), &targets_seen);
    Some(Message {
        from_agent: sender,
        to_agent: request.from_agent,
        question_id: request.question_id.clone(),
        relevants,
        targets_seen,
        rendered,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusConfig {
    /// Payloads per second per sender.
    pub msg_rate: f64,
}

impl Default for BusConfig {
    fn default() -> Self {
        BusConfig { msg_rate: 1.0 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BusError {
    #[error("msg_rate must be positive, got {0}")]
    Rate(f64),
    #[error("agent {0} out of range")]
    Agent(usize),
    #[error("enqueue at {t} precedes bus time {now}")]
    Time { t: f64, now: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub seq: u64,
    pub sim_time: f64,
    pub delivery_time: f64,
    pub from: usize,
    pub to: usize,
    pub payload: Payload,
}

#[derive(Debug, Clone)]
pub struct Bus {
    cfg: BusConfig,
    n_agents: usize,
    channel_free_at: Vec<f64>,
    pending: Vec<Envelope>,
    now: f64,
    next_seq: u64,
    sent: BTreeMap<&'static str, usize>,
}

impl Bus {
    pub fn new(cfg: BusConfig, n_agents: usize) -> Result<Self, BusError> {
        if !(cfg.msg_rate > 0.0 && cfg.msg_rate.is_finite()) {
            return Err(BusError::Rate(cfg.msg_rate));
        }
        Ok(Bus {
            cfg,
            n_agents,
            channel_free_at: vec![0.0; n_agents],
            pending: Vec::new(),
            now: 0.0,
            next_seq: 0,
            sent: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> BusConfig {
        self.cfg
    }

    /// Queues a payload on its sender's channel and returns the envelopes
    /// created, one per recipient, all sharing one delivery time.
    pub fn enqueue(&mut self, payload: Payload, sim_time: f64) -> Result<Vec<Envelope>, BusError> {
        if sim_time + 1e-9 < self.now {
            return Err(BusError::Time { t: sim_time, now: self.now });
        }
        self.now = self.now.max(sim_time);
        let from = payload.from_agent();
        if from >= self.n_agents {
            return Err(BusError::Agent(from));
        }
        let recipients: Vec<usize> = match payload.to_agent() {
            Some(to) if to >= self.n_agents => return Err(BusError::Agent(to)),
            Some(to) => vec![to],
            None => (0..self.n_agents).filter(|&a| a != from).collect(),
        };
        if recipients.is_empty() {
            return Ok(Vec::new());
        }
        let start = sim_time.max(self.channel_free_at[from]);
        let delivery_time = start + 1.0 / self.cfg.msg_rate;
        self.channel_free_at[from] = delivery_time;
        *self.sent.entry(payload.kind()).or_default() += 1;
        let mut out = Vec::with_capacity(recipients.len());
        for to in recipients {
            let env = Envelope {
                seq: self.next_seq,
                sim_time,
                delivery_time,
                from,
                to,
                payload: payload.clone(),
            };
            self.next_seq += 1;
            self.pending.push(env.clone());
            out.push(env);
        }
        Ok(out)
    }

    /// Removes and returns everything due for `agent` by `sim_time`, in
    /// delivery order with enqueue order breaking ties.
    pub fn drain(&mut self, agent: usize, sim_time: f64) -> Vec<Envelope> {
        let mut due = Vec::new();
        let mut i = 0;
        while i < self.pending.len() {
            let e = &self.pending[i];
            if e.to == agent && e.delivery_time <= sim_time + 1e-9 {
                due.push(self.pending.remove(i));
            } else {
                i += 1;
            }
        }
        due.sort_by(|a, b| a.delivery_time.total_cmp(&b.delivery_time).then(a.seq.cmp(&b.seq)));
        due
    }

    /// Envelopes not yet drained.
    pub fn in_flight(&self) -> usize {
        self.pending.len()
    }

    /// Payloads sent so far by kind (a broadcast counts once).
    pub fn sent(&self, kind: &str) -> usize {
        self.sent.get(kind).copied().unwrap_or(0)
    }

    pub fn total_sent(&self) -> usize {
        self.sent.values().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn share(from: usize, to: usize, q: &str) -> Payload {
        Payload::AnswerShare(AnswerShare {
            from_agent: from,
            to_agent: to,
            question_id: q.into(),
            label: Label::A,
        })
    }

    fn obj(name: &str, x: i32, y: i32) -> SeenObject {
        SeenObject { name: name.into(), pos: Cell::new(x, y) }
    }

    #[test]
    fn delivery_after_one_slot() {
        let mut bus = Bus::new(BusConfig { msg_rate: 1.0 }, 2).unwrap();
        let e = bus.enqueue(share(0, 1, "q"), 10.0).unwrap();
        assert_eq!(e[0].delivery_time, 11.0);
    }

    #[test]
    fn back_to_back_at_rate_four() {
        let mut bus = Bus::new(BusConfig { msg_rate: 4.0 }, 2).unwrap();
        let a = bus.enqueue(share(0, 1, "a"), 0.0).unwrap();
        let b = bus.enqueue(share(0, 1, "b"), 0.0).unwrap();
        assert_eq!(a[0].delivery_time, 0.25);
        assert_eq!(b[0].delivery_time, 0.5);
    }

    #[test]
    fn queued_behind_busy_channel() {
        let mut bus = Bus::new(BusConfig { msg_rate: 1.0 }, 2).unwrap();
        bus.enqueue(share(0, 1, "a"), 5.0).unwrap();
        let b = bus.enqueue(share(0, 1, "b"), 5.5).unwrap();
        assert_eq!(b[0].delivery_time, 7.0);
    }

    #[test]
    fn drain_cases() {
        let mut bus = Bus::new(BusConfig { msg_rate: 1.0 }, 3).unwrap();
        assert!(bus.drain(1, 100.0).is_empty());
        bus.enqueue(share(0, 1, "due"), 0.0).unwrap();
        bus.enqueue(share(0, 1, "late"), 0.0).unwrap();
        let got = bus.drain(1, 1.0);
        assert_eq!(got.len(), 1);
        assert!(matches!(&got[0].payload, Payload::AnswerShare(a) if a.question_id == "due"));
        assert_eq!(bus.in_flight(), 1);
        // equal delivery time from different senders: enqueue order
        bus.enqueue(share(2, 1, "x"), 1.0).unwrap();
        let got = bus.drain(1, 2.0);
        let ids: Vec<_> = got
            .iter()
            .map(|e| match &e.payload {
                Payload::AnswerShare(a) => a.question_id.clone(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(ids, vec!["late", "x"]);
    }

    #[test]
    fn broadcast_uses_one_slot() {
        let mut bus = Bus::new(BusConfig { msg_rate: 1.0 }, 3).unwrap();
        let req = Payload::Request(Request {
            from_agent: 1,
            question_id: "q".into(),
            targets: vec![TargetDescriptor::new("cushion")],
        });
        let env = bus.enqueue(req, 0.0).unwrap();
        assert_eq!(env.iter().map(|e| e.to).collect::<Vec<_>>(), vec![0, 2]);
        assert!(env.iter().all(|e| e.delivery_time == 1.0));
        assert_eq!(bus.sent("request"), 1);
        let next = bus.enqueue(share(1, 0, "q"), 0.0).unwrap();
        assert_eq!(next[0].delivery_time, 2.0);
    }

    #[test]
    fn rejects_bad_config_and_agents() {
        assert!(Bus::new(BusConfig { msg_rate: 0.0 }, 2).is_err());
        let mut bus = Bus::new(BusConfig::default(), 2).unwrap();
        assert_eq!(bus.enqueue(share(0, 5, "q"), 0.0), Err(BusError::Agent(5)));
    }

    #[test]
    fn rendered_forms() {
        assert_eq!(render(&[], "x", &[]), "");
        assert_eq!(
            render(&[obj("pillow", 4, 2)], "red bear cushion", &[]),
            "I see pillow that may be relevant to your target red bear cushion at (4, 2)"
        );
        assert_eq!(
            render(&[obj("bed", 1, 1), obj("red pillow", 2, 1)], "red pillow", &[obj("red pillow", 2, 1)]),
            "I see bed, red pillow that may be relevant to your target red pillow at (1, 1), (2, 1), \
             and red pillow may be your target at (2, 1)"
        );
        assert_eq!(
            render(&[], "cup", &[obj("cup", 0, 3)]),
            "I see cup that may be your target at (0, 3)"
        );
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_rendered("").is_none());
        assert!(parse_rendered("I see a cat").is_none());
        assert!(parse_rendered("I see cup that may be your target at (0, 3), ").is_none());
        assert!(parse_rendered("I see cup, mug that may be your target at (0, 3)").is_none());
    }

    fn name_strategy() -> impl Strategy<Value = String> {
        prop::sample::select(vec!["pillow", "red pillow", "bed", "white towel", "tv", "ceiling light"])
            .prop_map(String::from)
    }

    fn objs() -> impl Strategy<Value = Vec<SeenObject>> {
        prop::collection::vec(
            (name_strategy(), 0i32..50, 0i32..50).prop_map(|(n, x, y)| obj(&n, x, y)),
            0..4,
        )
    }

    proptest! {
        #[test]
        fn render_round_trips(rel in objs(), tgt in objs(), target in name_strategy()) {
            prop_assume!(!rel.is_empty() || !tgt.is_empty());
            let s = render(&rel, &target, &tgt);
            prop_assert!(!s.is_empty());
            let p = parse_rendered(&s).unwrap();
            prop_assert_eq!(&p.relevants, &rel);
            prop_assert_eq!(&p.targets_seen, &tgt);
            prop_assert_eq!(p.target.is_some(), !rel.is_empty());
            if !rel.is_empty() {
                prop_assert_eq!(p.target.unwrap(), target);
            }
        }

        #[test]
        fn bus_delivers_each_payload_once_in_sender_order(
            sends in prop::collection::vec((0usize..3, 0usize..3, 0u32..20), 1..40),
            rate in prop::sample::select(vec![0.25, 0.5, 1.0, 2.0, 4.0]),
        ) {
            let mut bus = Bus::new(BusConfig { msg_rate: rate }, 3).unwrap();
            let mut sends = sends;
            sends.sort_by_key(|s| s.2);
            let mut expected = 0;
            for (i, &(from, to, t)) in sends.iter().enumerate() {
                if from == to { continue; }
                bus.enqueue(share(from, to, &i.to_string()), f64::from(t)).unwrap();
                expected += 1;
            }
            let mut got = Vec::new();
            for step in 0..400 {
                let t = f64::from(step) * 0.25;
                for a in 0..3 {
                    for e in bus.drain(a, t) {
                        prop_assert!(e.delivery_time <= t + 1e-9);
                        got.push(e);
                    }
                }
            }
            prop_assert_eq!(got.len(), expected);
            prop_assert_eq!(bus.in_flight(), 0);
            for from in 0..3 {
                let seqs: Vec<u64> = got.iter().filter(|e| e.from == from).map(|e| e.seq).collect();
                let times: Vec<f64> = got.iter().filter(|e| e.from == from).map(|e| e.delivery_time).collect();
                let mut sorted = seqs.clone();
                sorted.sort();
                let by_time: Vec<u64> = {
                    let mut v: Vec<(f64, u64)> = times.into_iter().zip(seqs.iter().copied()).collect();
                    v.sort_by(|a, b| a.0.total_cmp(&b.0));
                    v.into_iter().map(|x| x.1).collect()
                };
                prop_assert_eq!(by_time, sorted);
            }
        }
    }
}
