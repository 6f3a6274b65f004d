use std::collections::BTreeMap;

use thiserror::Error;

use crate::scene::Cell;

/// Dense row-major scalar field over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(width: usize, height: usize) -> Self {
        Field {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "field data must match dims");
        Field { width, height, data }
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

    pub fn get(&self, c: Cell) -> f64 {
        self.index(c).map_or(0.0, |i| self.data[i])
    }

    pub fn set(&mut self, c: Cell, v: f64) {
        if let Some(i) = self.index(c) {
            self.data[i] = v;
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

/// Value from message counts: `ln(tau1 * n_relevant + tau2 * n_target)`,
/// floored at zero when the argument is below one.
pub fn sv_com(n_relevant: usize, n_target: usize, tau1: f64, tau2: f64) -> f64 {
    let arg = tau1 * n_relevant as f64 + tau2 * n_target as f64;
    if arg < 1.0 {
        0.0
    } else {
        arg.ln()
    }
}

pub fn sv_point(sv_no_com: f64, sv_com: f64) -> f64 {
    sv_no_com.max(sv_com)
}

/// Mean over unsolved questions; zero when there are none.
pub fn sv_final(per_question: &[f64]) -> f64 {
    if per_question.is_empty() {
        0.0
    } else {
        per_question.iter().sum::<f64>() / per_question.len() as f64
    }
}

/// Index of the frontier closest to `pos` in Manhattan distance; ties go to
/// the earlier (row-major) frontier.
pub fn nearest_frontier(frontiers: &[Cell], pos: Cell) -> Option<usize> {
    let mut best: Option<(u32, usize)> = None;
    for (i, f) in frontiers.iter().enumerate() {
        let d = f.manhattan(pos);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("message position {0} outside the map")]
pub struct PositionOutOfBounds(pub Cell);

/// Raises `layer` at frontiers near the message's object positions. Each
/// position counts toward its nearest frontier; a frontier's value becomes
/// the max of its current value and `sv_com` of its counts.
pub fn apply_message(
    layer: &mut Field,
    frontiers: &[Cell],
    relevants: &[Cell],
    targets: &[Cell],
    tau1: f64,
    tau2: f64,
) -> Result<(), PositionOutOfBounds> {
    for &p in relevants.iter().chain(targets) {
        if layer.index(p).is_none() {
            return Err(PositionOutOfBounds(p));
        }
    }
    let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for &p in relevants {
        if let Some(i) = nearest_frontier(frontiers, p) {
            counts.entry(i).or_default().0 += 1;
        }
    }
    for &p in targets {
        if let Some(i) = nearest_frontier(frontiers, p) {
            counts.entry(i).or_default().1 += 1;
        }
    }
    for (i, (nr, nt)) in counts {
        let f = frontiers[i];
        let v = sv_point(layer.get(f), sv_com(nr, nt, tau1, tau2));
        layer.set(f, v);
    }
    Ok(())
}

/// Per-question layers plus their fused mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticValueMap {
    width: usize,
    height: usize,
    pub layers: BTreeMap<String, Field>,
}

impl SemanticValueMap {
    pub fn new(width: usize, height: usize) -> Self {
        SemanticValueMap {
            width,
            height,
            layers: BTreeMap::new(),
        }
    }

    pub fn layer_mut(&mut self, question_id: &str) -> &mut Field {
        let (w, h) = (self.width, self.height);
        self.layers
            .entry(question_id.to_string())
            .or_insert_with(|| Field::zeros(w, h))
    }

    pub fn remove(&mut self, question_id: &str) {
        self.layers.remove(question_id);
    }

    /// Pointwise mean over layers.
    pub fn fused(&self) -> Field {
        let mut out = Field::zeros(self.width, self.height);
        if self.layers.is_empty() {
            return out;
        }
        let n = self.layers.len() as f64;
        for layer in self.layers.values() {
            for (o, v) in out.data.iter_mut().zip(&layer.data) {
                *o += v;
            }
        }
        for o in &mut out.data {
            *o /= n;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sv_com_examples() {
        assert!((sv_com(2, 1, 1.0, 10.0) - 12f64.ln()).abs() < 1e-15);
        assert_eq!(sv_com(1, 0, 1.0, 10.0), 0.0);
        assert_eq!(sv_com(0, 0, 1.0, 10.0), 0.0);
    }

    #[test]
    fn sv_point_and_final_examples() {
        assert_eq!(sv_point(2.0, 1.0), 2.0);
        assert_eq!(sv_point(0.0, 0.0), 0.0);
        assert_eq!(sv_point(1.3, sv_com(2, 1, 1.0, 10.0)), 12f64.ln());
        assert_eq!(sv_final(&[2.0, 0.0, 1.0]), 1.0);
        assert_eq!(sv_final(&[0.7]), 0.7);
        assert_eq!(sv_final(&[]), 0.0);
    }

    #[test]
    fn message_lands_on_nearest_frontier() {
        let frontiers = [Cell::new(0, 0), Cell::new(4, 0), Cell::new(4, 4)];
        let mut layer = Field::zeros(5, 5);
        apply_message(&mut layer, &frontiers, &[], &[Cell::new(3, 1)], 1.0, 10.0).unwrap();
        assert!(layer.get(Cell::new(4, 0)) >= 10f64.ln());
        assert_eq!(layer.get(Cell::new(0, 0)), 0.0);

        let mut layer = Field::zeros(5, 5);
        apply_message(&mut layer, &frontiers, &[Cell::new(4, 3), Cell::new(3, 4)], &[], 1.0, 10.0).unwrap();
        assert!((layer.get(Cell::new(4, 4)) - 2f64.ln()).abs() < 1e-15);

        // equidistant: earlier frontier wins
        assert_eq!(nearest_frontier(&frontiers, Cell::new(2, 0)), Some(0));
    }

    #[test]
    fn message_application_is_idempotent_and_bounds_checked() {
        let frontiers = [Cell::new(1, 1), Cell::new(3, 3)];
        let mut layer = Field::zeros(5, 5);
        layer.set(Cell::new(3, 3), 0.5);
        apply_message(&mut layer, &frontiers, &[Cell::new(3, 2)], &[Cell::new(1, 2)], 1.0, 10.0).unwrap();
        let once = layer.clone();
        apply_message(&mut layer, &frontiers, &[Cell::new(3, 2)], &[Cell::new(1, 2)], 1.0, 10.0).unwrap();
        assert_eq!(once, layer);
        assert_eq!(
            apply_message(&mut layer, &frontiers, &[Cell::new(9, 9)], &[], 1.0, 10.0),
            Err(PositionOutOfBounds(Cell::new(9, 9)))
        );
    }

    #[test]
    fn fused_is_mean_of_layers() {
        let mut m = SemanticValueMap::new(2, 1);
        assert_eq!(m.fused().data(), &[0.0, 0.0]);
        m.layer_mut("a").set(Cell::new(0, 0), 3.0);
        m.layer_mut("b").set(Cell::new(1, 0), 1.0);
        assert_eq!(m.fused().data(), &[1.5, 0.5]);
        m.remove("a");
        assert_eq!(m.fused().data(), &[0.0, 1.0]);
    }
}
