//! Partial observations and the flat state vector fed to the Q-network.
//!
//! The view is a `depth x width` window of cells: row 0 is the agent's
//! own row, rows extend ahead of its orientation, and columns are
//! centered on the agent with column index growing to its right. Each
//! cell carries five channels:
//!
//! * 0-2: occupant color — predator (1,0,0), group prey (0,1,0),
//!   solo prey (0,0,1), obstacle (0.5,0.5,0.5), blank (0,0,0);
//! * 3: 1.0 when the occupant is a predator belonging to a group;
//! * 4: the occupant's health when it is a predator, else 0.
//!
//! Cells outside the grid stay all-zero. When several entities share a
//! cell the occupant is chosen by precedence predator > group prey >
//! solo prey, then by lowest id; the agent's own cell always shows the
//! agent itself.

use crate::config::PerceptionConfig;
use crate::error::{LearnerError, WorldError};
use crate::world::{view_rect, Cell, Species, WorldState, IDENTITY_LEN};

pub const CHANNELS: usize = 5;

/// Dense `depth x width x 5` observation, row-major, channel-last.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    depth: u32,
    width: u32,
    data: Box<[f32]>,
}

impl Observation {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, row: u32, col: u32, channel: usize) -> f32 {
        debug_assert!(row < self.depth && col < self.width && channel < CHANNELS);
        self.data[(row as usize * self.width as usize + col as usize) * CHANNELS + channel]
    }

    /// Rebuild an observation from its flattened form.
    pub fn from_flat(depth: u32, width: u32, data: &[f32]) -> Option<Observation> {
        if data.len() != depth as usize * width as usize * CHANNELS {
            return None;
        }
        Some(Observation {
            depth,
            width,
            data: data.into(),
        })
    }
}

/// Flattened observation followed by the agent's identity embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Box<[f32]>);

impl StateVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn zeros(len: usize) -> StateVector {
        StateVector(vec![0.0; len].into_boxed_slice())
    }
}

/// Extract the agent's observation against the current world.
pub fn extract_observation(
    world: &WorldState,
    id: u64,
    cfg: &PerceptionConfig,
) -> Result<Observation, WorldError> {
    let mut data = vec![0f32; cfg.view_depth as usize * cfg.view_width as usize * CHANNELS];
    extract_observation_into(world, id, cfg, &mut data)?;
    Ok(Observation {
        depth: cfg.view_depth,
        width: cfg.view_width,
        data: data.into_boxed_slice(),
    })
}

/// Occupant precedence rank; lower wins a shared cell.
const RANK_PREDATOR: u8 = 0;
const RANK_PREY_GROUP: u8 = 1;
const RANK_PREY_SOLO: u8 = 2;

/// Write the observation channels into `out`, which must hold exactly
/// `view_depth * view_width * 5` entries. `out` is fully overwritten.
pub fn extract_observation_into(
    world: &WorldState,
    id: u64,
    cfg: &PerceptionConfig,
    out: &mut [f32],
) -> Result<(), WorldError> {
    let agent = world
        .predator(id)
        .ok_or(WorldError::UnknownPredator(id))?;
    if !agent.alive {
        return Err(WorldError::DeadPredator(id));
    }
    let depth = cfg.view_depth as i64;
    let width = cfg.view_width as i64;
    assert_eq!(out.len(), (depth * width) as usize * CHANNELS);
    out.fill(0.0);

    let (ax, ay) = agent.orientation.ahead();
    let (rx, ry) = agent.orientation.rotated_right().ahead();
    let half = (width - 1) / 2;
    let (px, py) = (agent.pos.0 as i64, agent.pos.1 as i64);

    // bin indexed entities into view cells, best occupant per cell
    let mut occupant: Vec<Option<(u8, u64)>> = vec![None; (depth * width) as usize];
    let view_cell = |wx: i64, wy: i64| -> Option<usize> {
        let (dx, dy) = (wx - px, wy - py);
        let r = dx * ax + dy * ay;
        let c = half + dx * rx + dy * ry;
        if r < 0 || r >= depth || c < 0 || c >= width {
            return None;
        }
        Some((r * width + c) as usize)
    };
    let place = |occupant: &mut Vec<Option<(u8, u64)>>, cell: usize, rank: u8, eid: u64| {
        let slot = &mut occupant[cell];
        if slot.map_or(true, |(r, i)| (rank, eid) < (r, i)) {
            *slot = Some((rank, eid));
        }
    };

    if let Some(rect) = view_rect(
        agent.pos,
        agent.orientation,
        cfg.view_depth,
        cfg.view_width,
        world.grid().width(),
        world.grid().height(),
    ) {
        let mut preds: Vec<(u64, Cell)> = Vec::new();
        world.spatial_index().predators_in_rect(&rect, &mut preds);
        for (pid, pos) in preds {
            let cell = view_cell(pos.0 as i64, pos.1 as i64).expect("rect matches view");
            place(&mut occupant, cell, RANK_PREDATOR, pid);
        }
        let mut preys: Vec<(u64, Cell, Species)> = Vec::new();
        world.spatial_index().preys_in_rect(&rect, &mut preys);
        for (eid, pos, species) in preys {
            let rank = match species {
                Species::Group => RANK_PREY_GROUP,
                Species::Solo => RANK_PREY_SOLO,
            };
            let cell = view_cell(pos.0 as i64, pos.1 as i64).expect("rect matches view");
            place(&mut occupant, cell, rank, eid);
        }
    }
    // the agent's own cell always shows the agent itself
    let own_cell = view_cell(px, py).expect("own cell is in view");
    occupant[own_cell] = Some((RANK_PREDATOR, id));

    for r in 0..depth {
        for c in 0..width {
            let cell = (r * width + c) as usize;
            let base = cell * CHANNELS;
            let wx = px + r * ax + (c - half) * rx;
            let wy = py + r * ay + (c - half) * ry;
            if !world.grid().contains(wx, wy) {
                continue;
            }
            match occupant[cell] {
                Some((RANK_PREDATOR, pid)) => {
                    let p = world.predator(pid).expect("indexed predator exists");
                    out[base] = 1.0;
                    out[base + 3] = if p.group_id.is_some() { 1.0 } else { 0.0 };
                    out[base + 4] = p.health;
                }
                Some((RANK_PREY_GROUP, _)) => out[base + 1] = 1.0,
                Some((RANK_PREY_SOLO, _)) => out[base + 2] = 1.0,
                Some(_) => unreachable!(),
                None => {
                    if world.grid().is_obstacle((wx as u32, wy as u32)) {
                        out[base] = 0.5;
                        out[base + 1] = 0.5;
                        out[base + 2] = 0.5;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Flatten an observation and append the identity embedding.
pub fn encode_state(obs: &Observation, identity: &[f32]) -> Result<StateVector, LearnerError> {
    if identity.len() != IDENTITY_LEN {
        return Err(LearnerError::ShapeMismatch {
            expected: IDENTITY_LEN,
            got: identity.len(),
        });
    }
    let mut values = Vec::with_capacity(obs.data.len() + IDENTITY_LEN);
    values.extend_from_slice(&obs.data);
    values.extend_from_slice(identity);
    Ok(StateVector(values.into_boxed_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PerceptionConfig;
    use crate::world::{Orientation, WorldBuilder};

    const P7: PerceptionConfig = PerceptionConfig {
        view_depth: 7,
        view_width: 7,
    };

    #[test]
    fn lone_agent_sees_only_itself() {
        let w = WorldBuilder::new(30, 30)
            .predator((15, 15), Orientation::North)
            .build();
        let obs = extract_observation(&w, 0, &P7).unwrap();
        for r in 0..7 {
            for c in 0..7 {
                for ch in 0..CHANNELS {
                    let expect = if (r, c) == (0, 3) {
                        // own cell: predator color, no group, health 1.0
                        match ch {
                            0 => 1.0,
                            4 => 1.0,
                            _ => 0.0,
                        }
                    } else {
                        0.0
                    };
                    assert_eq!(obs.get(r, c, ch), expect, "r={r} c={c} ch={ch}");
                }
            }
        }
    }

    #[test]
    fn group_prey_one_cell_ahead_lights_channel_one() {
        let w = WorldBuilder::new(30, 30)
            .predator((15, 15), Orientation::North)
            .prey((15, 16), Species::Group, 3, 2, 1.0)
            .build();
        let obs = extract_observation(&w, 0, &P7).unwrap();
        assert_eq!(obs.get(1, 3, 0), 0.0);
        assert_eq!(obs.get(1, 3, 1), 1.0);
        assert_eq!(obs.get(1, 3, 2), 0.0);
        assert_eq!(obs.get(1, 3, 4), 0.0);
    }

    #[test]
    fn grouped_neighbor_shows_flag_and_health() {
        let w = WorldBuilder::new(30, 30)
            .predator((15, 15), Orientation::North)
            .predator((16, 16), Orientation::South)
            .health(0.75)
            .predator((16, 17), Orientation::South)
            .group(&[1, 2])
            .build();
        let obs = extract_observation(&w, 0, &P7).unwrap();
        // predator 1 at (16, 16): one ahead, one to the right
        assert_eq!(obs.get(1, 4, 0), 1.0);
        assert_eq!(obs.get(1, 4, 3), 1.0);
        assert_eq!(obs.get(1, 4, 4), 0.75);
    }

    #[test]
    fn obstacles_render_gray_and_outside_stays_zero() {
        let w = WorldBuilder::new(30, 30)
            .obstacle((15, 17))
            .predator((15, 15), Orientation::North)
            .build();
        let obs = extract_observation(&w, 0, &P7).unwrap();
        assert_eq!(obs.get(2, 3, 0), 0.5);
        assert_eq!(obs.get(2, 3, 1), 0.5);
        assert_eq!(obs.get(2, 3, 2), 0.5);
        assert_eq!(obs.get(2, 3, 3), 0.0);
    }

    #[test]
    fn corner_agent_facing_outward_is_zero_padded() {
        let w = WorldBuilder::new(30, 30)
            .predator((0, 0), Orientation::South)
            .build();
        let obs = extract_observation(&w, 0, &P7).unwrap();
        // facing south at the origin: every row past the own row is
        // outside the grid, as is everything east-of-center (the view's
        // left side when facing south)
        for r in 1..7 {
            for c in 0..7 {
                for ch in 0..CHANNELS {
                    assert_eq!(obs.get(r, c, ch), 0.0);
                }
            }
        }
        assert_eq!(obs.get(0, 3, 0), 1.0);
    }

    #[test]
    fn dead_or_unknown_agent_is_a_lookup_error() {
        let w = WorldBuilder::new(10, 10).build();
        assert!(extract_observation(&w, 5, &P7).is_err());
    }

    #[test]
    fn encode_state_has_expected_length_and_tail() {
        let w = WorldBuilder::new(30, 30)
            .predator((15, 15), Orientation::North)
            .build();
        let obs = extract_observation(&w, 0, &P7).unwrap();
        let identity = [0.1, -0.2, 0.3, -0.4, 0.5];
        let state = encode_state(&obs, &identity).unwrap();
        assert_eq!(state.len(), 7 * 7 * 5 + 5);
        assert_eq!(&state.values()[7 * 7 * 5..], &identity);
        assert!(encode_state(&obs, &[0.0; 4]).is_err());
    }

    #[test]
    fn zero_observation_and_identity_encode_to_zero() {
        let obs = Observation::from_flat(7, 7, &[0.0; 7 * 7 * 5]).unwrap();
        let state = encode_state(&obs, &[0.0; 5]).unwrap();
        assert!(state.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn encode_unflatten_roundtrip() {
        let w = WorldBuilder::new(30, 30)
            .predator((15, 15), Orientation::East)
            .prey((17, 15), Species::Solo, 1, 1, 0.3)
            .obstacle((15, 13))
            .build();
        let obs = extract_observation(&w, 0, &P7).unwrap();
        let state = encode_state(&obs, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let back = Observation::from_flat(7, 7, &state.values()[..7 * 7 * 5]).unwrap();
        assert_eq!(obs, back);
    }
}
