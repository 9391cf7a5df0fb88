//! Observation properties: rotation equivariance, locality and
//! out-of-bounds padding, over randomized neighborhoods.

use proptest::prelude::*;
use swlv_core::config::PerceptionConfig;
use swlv_core::perception::{extract_observation, CHANNELS};
use swlv_core::world::{Cell, Orientation, Species, WorldBuilder, WorldState};

const P7: PerceptionConfig = PerceptionConfig {
    view_depth: 7,
    view_width: 7,
};

const C: i32 = 20;

#[derive(Debug, Clone, Copy)]
enum Placed {
    Predator { dx: i32, dy: i32 },
    Prey { dx: i32, dy: i32, species: Species },
    Obstacle { dx: i32, dy: i32 },
}

fn placed() -> impl Strategy<Value = Placed> {
    let coord = -8..=8i32;
    prop_oneof![
        (coord.clone(), coord.clone()).prop_map(|(dx, dy)| Placed::Predator { dx, dy }),
        (
            coord.clone(),
            coord.clone(),
            prop_oneof![Just(Species::Group), Just(Species::Solo)]
        )
            .prop_map(|(dx, dy, species)| Placed::Prey { dx, dy, species }),
        (coord.clone(), coord).prop_map(|(dx, dy)| Placed::Obstacle { dx, dy }),
    ]
}

fn rotated(mut dx: i32, mut dy: i32, quarter_turns: u32) -> Cell {
    for _ in 0..quarter_turns {
        let (nx, ny) = (-dy, dx);
        dx = nx;
        dy = ny;
    }
    ((C + dx) as u32, (C + dy) as u32)
}

/// Center an agent on a 41x41 grid and place neighbors at offsets
/// rotated by `quarter_turns` counterclockwise around it. Obstacles
/// never land on the agent; entities colliding with an obstacle are
/// dropped (consistently for every rotation of the same items).
fn build_world(items: &[Placed], orientation: Orientation, quarter_turns: u32) -> WorldState {
    let agent: Cell = (C as u32, C as u32);
    let mut obstacles: Vec<Cell> = items
        .iter()
        .filter_map(|item| match item {
            Placed::Obstacle { dx, dy } => Some(rotated(*dx, *dy, quarter_turns)),
            _ => None,
        })
        .collect();
    obstacles.retain(|&pos| pos != agent);
    let mut builder = WorldBuilder::new(41, 41);
    for &pos in &obstacles {
        builder = builder.obstacle(pos);
    }
    builder = builder.predator(agent, orientation);
    for item in items {
        match item {
            Placed::Predator { dx, dy } => {
                let pos = rotated(*dx, *dy, quarter_turns);
                if !obstacles.contains(&pos) {
                    builder = builder.predator(pos, Orientation::North);
                }
            }
            Placed::Prey { dx, dy, species } => {
                let pos = rotated(*dx, *dy, quarter_turns);
                if !obstacles.contains(&pos) {
                    builder = builder.prey(pos, *species, 1, 1, 0.3);
                }
            }
            Placed::Obstacle { .. } => {}
        }
    }
    builder.build()
}

proptest! {
    /// Rotating every neighbor a quarter turn around the agent while
    /// rotating the agent's facing the same way leaves the observation
    /// unchanged.
    #[test]
    fn rotation_equivariance(items in prop::collection::vec(placed(), 0..12),
                             turns in 1u32..4) {
        let orientation = match turns {
            1 => Orientation::West,
            2 => Orientation::South,
            _ => Orientation::East,
        };
        let base = build_world(&items, Orientation::North, 0);
        let turned = build_world(&items, orientation, turns);
        // agent id 0 is inserted first in both worlds
        let agent_id = base.predators().iter().map(|p| p.id).min().unwrap();
        let a = extract_observation(&base, agent_id, &P7).unwrap();
        let b = extract_observation(&turned, agent_id, &P7).unwrap();
        prop_assert_eq!(a, b);
    }

    /// An entity strictly outside the view window never changes the
    /// observation. A north-facing agent at the center sees
    /// x in [C-3, C+3], y in [C, C+6]; rows far south are outside.
    #[test]
    fn locality(items in prop::collection::vec(placed(), 0..8),
                far_x in 0..41u32, far_y in 0..8u32) {
        let world = build_world(&items, Orientation::North, 0);
        let agent_id = world.predators().iter().map(|p| p.id).min().unwrap();
        let before = extract_observation(&world, agent_id, &P7).unwrap();
        if world.grid().is_obstacle((far_x, far_y)) {
            return Ok(());
        }
        let mut builder = WorldBuilder::new(41, 41);
        let mut obstacles: Vec<Cell> = Vec::new();
        for item in &items {
            if let Placed::Obstacle { dx, dy } = item {
                let pos = rotated(*dx, *dy, 0);
                if pos != (C as u32, C as u32) && !obstacles.contains(&pos) {
                    obstacles.push(pos);
                    builder = builder.obstacle(pos);
                }
            }
        }
        builder = builder.predator((C as u32, C as u32), Orientation::North);
        for item in &items {
            match item {
                Placed::Predator { dx, dy } => {
                    let pos = rotated(*dx, *dy, 0);
                    if !obstacles.contains(&pos) {
                        builder = builder.predator(pos, Orientation::North);
                    }
                }
                Placed::Prey { dx, dy, species } => {
                    let pos = rotated(*dx, *dy, 0);
                    if !obstacles.contains(&pos) {
                        builder = builder.prey(pos, *species, 1, 1, 0.3);
                    }
                }
                Placed::Obstacle { .. } => {}
            }
        }
        if !obstacles.contains(&(far_x, far_y)) {
            builder = builder.prey((far_x, far_y), Species::Group, 1, 1, 0.3);
        }
        let world2 = builder.build();
        let agent_id2 = world2.predators().iter().map(|p| p.id).min().unwrap();
        let after = extract_observation(&world2, agent_id2, &P7).unwrap();
        prop_assert_eq!(before, after);
    }

    /// Agents at the border see zeros outside the grid, for every
    /// orientation.
    #[test]
    fn corner_padding_is_all_zero(o in 0u8..4) {
        let orientation = Orientation::from_index(o).unwrap();
        let world = WorldBuilder::new(30, 30)
            .predator((0, 29), orientation)
            .build();
        let obs = extract_observation(&world, 0, &P7).unwrap();
        let (ax, ay) = orientation.ahead();
        let (rx, ry) = orientation.rotated_right().ahead();
        for r in 0..7i64 {
            for c in 0..7i64 {
                let wx = r * ax + (c - 3) * rx;
                let wy = 29 + r * ay + (c - 3) * ry;
                let inside = (0..30).contains(&wx) && (0..30).contains(&wy);
                if !inside {
                    for ch in 0..CHANNELS {
                        prop_assert_eq!(obs.get(r as u32, c as u32, ch), 0.0);
                    }
                }
            }
        }
    }
}
