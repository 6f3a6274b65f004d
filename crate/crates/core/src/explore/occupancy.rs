use serde::{Deserialize, Serialize};

use crate::scene::{Cell, CellKind, GridScene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Unknown,
    FreeSeen,
    WallSeen,
}

/// An agent's private knowledge of the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyMap {
    width: usize,
    height: usize,
    cells: Vec<CellState>,
}

impl OccupancyMap {
    pub fn new(width: usize, height: usize) -> Self {
        OccupancyMap {
            width,
            height,
            cells: vec![CellState::Unknown; width * height],
        }
    }

    pub fn for_scene(scene: &GridScene) -> Self {
        Self::new(scene.width(), scene.height())
    }

    /// Builds a map directly from states in row-major order.
    pub fn from_states(width: usize, height: usize, cells: Vec<CellState>) -> Self {
        assert_eq!(cells.len(), width * height, "state count must match dims");
        OccupancyMap { width, height, cells }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn index(&self, c: Cell) -> Option<usize> {
        if c.x < 0 || c.y < 0 || c.x as usize >= self.width || c.y as usize >= self.height {
            return None;
        }
        Some(c.y as usize * self.width + c.x as usize)
    }

    pub fn cell_at(&self, i: usize) -> Cell {
        Cell::new((i % self.width) as i32, (i / self.width) as i32)
    }

    /// Out-of-bounds cells read as walls.
    pub fn get(&self, c: Cell) -> CellState {
        self.index(c).map_or(CellState::WallSeen, |i| self.cells[i])
    }

    pub fn set(&mut self, c: Cell, s: CellState) {
        if let Some(i) = self.index(c) {
            self.cells[i] = s;
        }
    }

    pub fn is_traversable(&self, c: Cell) -> bool {
        self.get(c) == CellState::FreeSeen
    }

    pub fn states(&self) -> &[CellState] {
        &self.cells
    }

    pub fn known_count(&self) -> usize {
        self.cells.iter().filter(|s| **s != CellState::Unknown).count()
    }

    /// Marks revealed cells from scene truth; known cells keep their state.
    pub fn update(&mut self, revealed: impl IntoIterator<Item = Cell>, scene: &GridScene) {
        for c in revealed {
            let Some(i) = self.index(c) else { continue };
            if self.cells[i] != CellState::Unknown {
                continue;
            }
            self.cells[i] = match scene.kind(c) {
                Some(CellKind::Free) => CellState::FreeSeen,
                Some(CellKind::Wall) => CellState::WallSeen,
                None => continue,
            };
        }
    }

    pub fn is_frontier(&self, c: Cell) -> bool {
        self.get(c) == CellState::FreeSeen
            && c.neighbors4().iter().any(|&n| self.index(n).is_some() && self.get(n) == CellState::Unknown)
    }
}

/// FreeSeen cells with an Unknown 4-neighbour, in row-major order.
pub fn detect_frontiers(map: &OccupancyMap) -> Vec<Cell> {
    (0..map.cells.len())
        .map(|i| map.cell_at(i))
        .filter(|&c| map.is_frontier(c))
        .collect()
}
