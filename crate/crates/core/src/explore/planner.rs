use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use thiserror::Error;

use super::occupancy::OccupancyMap;
use super::sv::Field;
use crate::scene::Cell;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("no path from {from} to {to}")]
    Unreachable { from: Cell, to: Cell },
    #[error("no frontier left to explore")]
    NoFrontier,
}

/// Shortest 4-connected path over FreeSeen cells, endpoints included.
/// A* with a Manhattan heuristic; the open set pops by (f, insertion order)
/// and neighbours are pushed N, E, S, W, so ties resolve the same way on
/// every run.
pub fn plan_path(map: &OccupancyMap, from: Cell, to: Cell) -> Result<Vec<Cell>, PlanError> {
    let unreachable = PlanError::Unreachable { from, to };
    if !map.is_traversable(from) || !map.is_traversable(to) {
        return Err(unreachable);
    }
    if from == to {
        return Ok(vec![from]);
    }
    let n = map.width() * map.height();
    let idx = |c: Cell| map.index(c).expect("traversable cells are in bounds");
    let mut g = vec![u32::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    g[idx(from)] = 0;
    open.push(Reverse((from.manhattan(to), seq, idx(from))));
    while let Some(Reverse((_, _, i))) = open.pop() {
        if closed[i] {
            continue;
        }
        closed[i] = true;
        let c = map.cell_at(i);
        if c == to {
            let mut path = vec![c];
            let mut j = i;
            while parent[j] != usize::MAX {
                j = parent[j];
                path.push(map.cell_at(j));
            }
            path.reverse();
            return Ok(path);
        }
        for nb in c.neighbors4() {
            if !map.is_traversable(nb) {
                continue;
            }
            let ni = idx(nb);
            let ng = g[i] + 1;
            if ng < g[ni] {
                g[ni] = ng;
                parent[ni] = i;
                seq += 1;
                open.push(Reverse((ng + nb.manhattan(to), seq, ni)));
            }
        }
    }
    Err(unreachable)
}

/// Breadth-first step counts over FreeSeen cells from `from`.
pub fn bfs_distances(map: &OccupancyMap, from: Cell) -> Vec<Option<u32>> {
    let mut dist = vec![None; map.width() * map.height()];
    let Some(s) = map.index(from) else { return dist };
    if !map.is_traversable(from) {
        return dist;
    }
    dist[s] = Some(0);
    let mut q = VecDeque::from([from]);
    while let Some(c) = q.pop_front() {
        let d = dist[map.index(c).expect("queued cells are in bounds")].expect("queued cells have a distance");
        for nb in c.neighbors4() {
            if map.is_traversable(nb) {
                let ni = map.index(nb).expect("traversable cells are in bounds");
                if dist[ni].is_none() {
                    dist[ni] = Some(d + 1);
                    q.push_back(nb);
                }
            }
        }
    }
    dist
}

/// Frontier with the largest value, earliest on ties; a uniform draw from
/// `rng` when every value is zero.
pub fn select_goal(frontiers: &[Cell], values: &Field, rng: &mut impl Rng) -> Result<Cell, PlanError> {
    if frontiers.is_empty() {
        return Err(PlanError::NoFrontier);
    }
    let mut best = 0;
    for i in 1..frontiers.len() {
        if values.get(frontiers[i]) > values.get(frontiers[best]) {
            best = i;
        }
    }
    if values.get(frontiers[best]) <= 0.0 {
        return Ok(frontiers[rng.random_range(0..frontiers.len())]);
    }
    Ok(frontiers[best])
}
