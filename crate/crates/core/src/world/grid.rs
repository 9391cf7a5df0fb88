//! The static grid: dimensions and the obstacle mask.

use crate::world::entities::Cell;

/// Immutable grid geometry. Obstacles are stored as a bitset so the hot
/// paths (move settlement, observation encoding) cost one load each.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: u32,
    height: u32,
    obstacle_bits: Vec<u64>,
    obstacle_count: u64,
}

impl GridMap {
    pub fn new(width: u32, height: u32) -> GridMap {
        let cells = width as usize * height as usize;
        GridMap {
            width,
            height,
            obstacle_bits: vec![0; cells.div_ceil(64)],
            obstacle_count: 0,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn cell_count(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn obstacle_count(&self) -> u64 {
        self.obstacle_count
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64
    }

    fn bit_index(&self, cell: Cell) -> usize {
        cell.1 as usize * self.width as usize + cell.0 as usize
    }

    /// Marks a cell as an obstacle; returns false if it already was one.
    /// Only called during world initialization.
    pub(crate) fn add_obstacle(&mut self, cell: Cell) -> bool {
        let idx = self.bit_index(cell);
        let word = &mut self.obstacle_bits[idx / 64];
        let mask = 1u64 << (idx % 64);
        if *word & mask != 0 {
            return false;
        }
        *word |= mask;
        self.obstacle_count += 1;
        true
    }

    pub fn is_obstacle(&self, cell: Cell) -> bool {
        debug_assert!(cell.0 < self.width && cell.1 < self.height);
        let idx = self.bit_index(cell);
        self.obstacle_bits[idx / 64] & (1u64 << (idx % 64)) != 0
    }

    /// True when the cell is inside the grid and not an obstacle.
    pub fn is_free(&self, x: i64, y: i64) -> bool {
        self.contains(x, y) && !self.is_obstacle((x as u32, y as u32))
    }

    /// Obstacle cells in row-major order. Initialization-time and
    /// serialization-time only; not used on hot paths.
    pub fn obstacle_cells(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity(self.obstacle_count as usize);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.is_obstacle((x, y)) {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obstacle_bits_roundtrip() {
        let mut g = GridMap::new(10, 7);
        assert!(g.add_obstacle((3, 2)));
        assert!(g.add_obstacle((9, 6)));
        assert!(!g.add_obstacle((3, 2)));
        assert_eq!(g.obstacle_count(), 2);
        assert!(g.is_obstacle((3, 2)));
        assert!(g.is_obstacle((9, 6)));
        assert!(!g.is_obstacle((0, 0)));
        assert_eq!(g.obstacle_cells(), vec![(3, 2), (9, 6)]);
    }

    #[test]
    fn bounds_checks() {
        let g = GridMap::new(4, 4);
        assert!(g.contains(0, 0) && g.contains(3, 3));
        assert!(!g.contains(-1, 0) && !g.contains(4, 0) && !g.contains(0, 4));
        assert!(g.is_free(2, 2));
        assert!(!g.is_free(-1, 2));
    }
}
