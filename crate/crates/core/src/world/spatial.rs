//! Bucketed spatial index over the grid.
//!
//! Cells are grouped into square buckets of side `1 << BUCKET_SHIFT`; a
//! rectangle query touches only the overlapping buckets and filters by
//! exact position, so cost scales with the rectangle area plus matches
//! rather than with the population.

use crate::world::entities::{Cell, Species};

const BUCKET_SHIFT: u32 = 3;

/// Inclusive, in-bounds cell rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl CellRect {
    /// Clip arbitrary corner coordinates to a `width x height` grid.
    /// Returns `None` when the rectangle misses the grid entirely.
    pub fn clipped(x0: i64, y0: i64, x1: i64, y1: i64, width: u32, height: u32) -> Option<CellRect> {
        let cx0 = x0.max(0);
        let cy0 = y0.max(0);
        let cx1 = x1.min(width as i64 - 1);
        let cy1 = y1.min(height as i64 - 1);
        if cx0 > cx1 || cy0 > cy1 {
            return None;
        }
        Some(CellRect {
            x0: cx0 as u32,
            y0: cy0 as u32,
            x1: cx1 as u32,
            y1: cy1 as u32,
        })
    }

    /// The capture square of side `2 * radius + 1` around `center`,
    /// clipped to the grid.
    pub fn capture_square(center: Cell, radius: u32, width: u32, height: u32) -> CellRect {
        let r = radius as i64;
        let (cx, cy) = (center.0 as i64, center.1 as i64);
        // center is in bounds, so the clip never empties the rect
        CellRect::clipped(cx - r, cy - r, cx + r, cy + r, width, height)
            .expect("capture square centered on an in-bounds cell")
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.0 >= self.x0 && cell.0 <= self.x1 && cell.1 >= self.y0 && cell.1 <= self.y1
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PredatorEntry {
    id: u64,
    pos: Cell,
}

#[derive(Debug, Clone, PartialEq)]
struct PreyEntry {
    id: u64,
    pos: Cell,
    species: Species,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialIndex {
    buckets_x: u32,
    buckets_y: u32,
    predators: Vec<Vec<PredatorEntry>>,
    preys: Vec<Vec<PreyEntry>>,
}

impl SpatialIndex {
    pub fn new(width: u32, height: u32) -> SpatialIndex {
        let buckets_x = (width + (1 << BUCKET_SHIFT) - 1) >> BUCKET_SHIFT;
        let buckets_y = (height + (1 << BUCKET_SHIFT) - 1) >> BUCKET_SHIFT;
        let n = buckets_x.max(1) as usize * buckets_y.max(1) as usize;
        SpatialIndex {
            buckets_x: buckets_x.max(1),
            buckets_y: buckets_y.max(1),
            predators: vec![Vec::new(); n],
            preys: vec![Vec::new(); n],
        }
    }

    fn bucket_of(&self, pos: Cell) -> usize {
        let bx = pos.0 >> BUCKET_SHIFT;
        let by = pos.1 >> BUCKET_SHIFT;
        by as usize * self.buckets_x as usize + bx as usize
    }

    pub fn insert_predator(&mut self, id: u64, pos: Cell) {
        let b = self.bucket_of(pos);
        self.predators[b].push(PredatorEntry { id, pos });
    }

    pub fn remove_predator(&mut self, id: u64, pos: Cell) {
        let b = self.bucket_of(pos);
        let bucket = &mut self.predators[b];
        let at = bucket
            .iter()
            .position(|e| e.id == id)
            .expect("predator present in its bucket");
        bucket.swap_remove(at);
    }

    pub fn move_predator(&mut self, id: u64, from: Cell, to: Cell) {
        let b_from = self.bucket_of(from);
        let b_to = self.bucket_of(to);
        if b_from == b_to {
            let entry = self.predators[b_from]
                .iter_mut()
                .find(|e| e.id == id)
                .expect("predator present in its bucket");
            entry.pos = to;
        } else {
            self.remove_predator(id, from);
            self.insert_predator(id, to);
        }
    }

    pub fn insert_prey(&mut self, id: u64, pos: Cell, species: Species) {
        let b = self.bucket_of(pos);
        self.preys[b].push(PreyEntry { id, pos, species });
    }

    pub fn remove_prey(&mut self, id: u64, pos: Cell) {
        let b = self.bucket_of(pos);
        let bucket = &mut self.preys[b];
        let at = bucket
            .iter()
            .position(|e| e.id == id)
            .expect("prey present in its bucket");
        bucket.swap_remove(at);
    }

    fn bucket_range(&self, rect: &CellRect) -> (u32, u32, u32, u32) {
        (
            rect.x0 >> BUCKET_SHIFT,
            rect.y0 >> BUCKET_SHIFT,
            rect.x1 >> BUCKET_SHIFT,
            rect.y1 >> BUCKET_SHIFT,
        )
    }

    /// Append `(id, pos)` of every predator inside `rect` to `out`.
    pub fn predators_in_rect(&self, rect: &CellRect, out: &mut Vec<(u64, Cell)>) {
        let (bx0, by0, bx1, by1) = self.bucket_range(rect);
        for by in by0..=by1 {
            for bx in bx0..=bx1 {
                let bucket = &self.predators[by as usize * self.buckets_x as usize + bx as usize];
                for e in bucket {
                    if rect.contains(e.pos) {
                        out.push((e.id, e.pos));
                    }
                }
            }
        }
    }

    /// Append `(id, pos, species)` of every prey inside `rect` to `out`.
    pub fn preys_in_rect(&self, rect: &CellRect, out: &mut Vec<(u64, Cell, Species)>) {
        let (bx0, by0, bx1, by1) = self.bucket_range(rect);
        for by in by0..=by1 {
            for bx in bx0..=bx1 {
                let bucket = &self.preys[by as usize * self.buckets_x as usize + bx as usize];
                for e in bucket {
                    if rect.contains(e.pos) {
                        out.push((e.id, e.pos, e.species));
                    }
                }
            }
        }
    }

    /// Total entries, for consistency checks.
    pub fn len(&self) -> usize {
        self.predators.iter().map(Vec::len).sum::<usize>()
            + self.preys.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
