//! World snapshot format, used for checkpoint/resume, the per-step
//! rollback staging and byte-compare determinism checks.
//!
//! Layout, all little-endian; snapshots are taken at settled states, so
//! every serialized entity is alive:
//!
//! ```text
//! magic  b"SWLV"
//! u32    format version (currently 1)
//! u64    time step
//! u64    next entity id
//! u64    next group id
//! u8     last fed species (0 none, 1 group, 2 solo)
//! [u8;32] rng seed, u128 rng word position
//! u32    grid width, u32 grid height
//! u64    obstacle count, then (u32 x, u32 y) per cell, row-major order
//! u64    predator count, then records in ascending id order:
//!        u64 id, u32 x, u32 y, u8 orientation,
//!        u8 grouped flag, u64 group id (0 when ungrouped),
//!        f32 health, f32*5 identity
//! u64    prey count, then records in ascending id order:
//!        u64 id, u8 species, u32 x, u32 y,
//!        u32 capture radius, u32 capture threshold, f64 reward
//! u64    group count, then records in ascending group-id order:
//!        u64 group id, u64 member count, u64 per member (ascending)
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{FormatError, SimError};
use crate::wire::{Reader, Writer};
use crate::world::entities::{Group, Orientation, Predator, Prey, Species, IDENTITY_LEN};
use crate::world::grid::GridMap;
use crate::world::spatial::SpatialIndex;
use crate::world::WorldState;

pub const MAGIC: &str = "SWLV";
pub const VERSION: u32 = 1;

const PREDATOR_RECORD: usize = 8 + 4 + 4 + 1 + 1 + 8 + 4 + 4 * IDENTITY_LEN;
const PREY_RECORD: usize = 8 + 1 + 4 + 4 + 4 + 4 + 8;

impl WorldState {
    pub fn encode_snapshot(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.magic(MAGIC);
        w.u32(VERSION);
        w.u64(self.time);
        w.u64(self.next_entity_id);
        w.u64(self.next_group_id);
        w.u8(match self.last_fed {
            None => 0,
            Some(Species::Group) => 1,
            Some(Species::Solo) => 2,
        });
        w.bytes(&self.rng.get_seed());
        w.u128(self.rng.get_word_pos());
        w.u32(self.grid.width());
        w.u32(self.grid.height());
        let obstacles = self.grid.obstacle_cells();
        w.u64(obstacles.len() as u64);
        for (x, y) in obstacles {
            w.u32(x);
            w.u32(y);
        }
        w.u64(self.predators.len() as u64);
        for p in &self.predators {
            debug_assert!(p.alive, "snapshot of an unsettled state");
            w.u64(p.id);
            w.u32(p.pos.0);
            w.u32(p.pos.1);
            w.u8(p.orientation as u8);
            w.u8(p.group_id.is_some() as u8);
            w.u64(p.group_id.unwrap_or(0));
            w.f32(p.health);
            for v in p.identity {
                w.f32(v);
            }
        }
        w.u64(self.preys.len() as u64);
        for p in &self.preys {
            debug_assert!(p.alive, "snapshot of an unsettled state");
            w.u64(p.id);
            w.u8(p.species as u8);
            w.u32(p.pos.0);
            w.u32(p.pos.1);
            w.u32(p.capture_radius);
            w.u32(p.capture_threshold);
            w.f64(p.reward);
        }
        w.u64(self.groups.len() as u64);
        for (gid, group) in &self.groups {
            w.u64(*gid);
            w.u64(group.members.len() as u64);
            for m in &group.members {
                w.u64(*m);
            }
        }
        w.into_bytes()
    }

    pub fn decode_snapshot(data: &[u8]) -> Result<WorldState, FormatError> {
        let mut r = Reader::new(data);
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(FormatError::BadVersion {
                offset: r.offset() - 4,
                version,
            });
        }
        let time = r.u64()?;
        let next_entity_id = r.u64()?;
        let next_group_id = r.u64()?;
        let last_fed = match r.u8()? {
            0 => None,
            1 => Some(Species::Group),
            2 => Some(Species::Solo),
            other => return Err(r.invalid(format!("last-fed tag {other}"))),
        };
        let seed: [u8; 32] = r.byte_array()?;
        let word_pos = r.u128()?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_word_pos(word_pos);

        let width = r.u32()?;
        let height = r.u32()?;
        if width == 0 || height == 0 || width > (1 << 20) || height > (1 << 20) {
            return Err(r.invalid(format!("grid {width}x{height} out of range")));
        }
        let mut grid = GridMap::new(width, height);
        let n_obstacles = r.count(8)?;
        let mut prev: Option<(u32, u32)> = None;
        for _ in 0..n_obstacles {
            let x = r.u32()?;
            let y = r.u32()?;
            if x >= width || y >= height {
                return Err(r.invalid(format!("obstacle ({x}, {y}) out of bounds")));
            }
            if let Some((px, py)) = prev {
                if (y, x) <= (py, px) {
                    return Err(r.invalid("obstacles not in row-major order"));
                }
            }
            prev = Some((x, y));
            grid.add_obstacle((x, y));
        }

        let mut index = SpatialIndex::new(width, height);
        let n_predators = r.count(PREDATOR_RECORD)?;
        let mut predators = Vec::with_capacity(n_predators);
        let mut last_id: Option<u64> = None;
        for _ in 0..n_predators {
            let id = r.u64()?;
            if last_id.is_some_and(|l| id <= l) {
                return Err(r.invalid("predator ids not strictly ascending"));
            }
            last_id = Some(id);
            let x = r.u32()?;
            let y = r.u32()?;
            let orientation = Orientation::from_index(r.u8()?)
                .ok_or_else(|| r.invalid("orientation tag"))?;
            let grouped = r.u8()?;
            let group_raw = r.u64()?;
            let group_id = match grouped {
                0 => None,
                1 => Some(group_raw),
                other => return Err(r.invalid(format!("grouped flag {other}"))),
            };
            let health = r.f32()?;
            let mut identity = [0f32; IDENTITY_LEN];
            for v in &mut identity {
                *v = r.f32()?;
            }
            if x >= width || y >= height || grid.is_obstacle((x, y)) {
                return Err(r.invalid(format!("predator {id} on invalid cell ({x}, {y})")));
            }
            if id >= next_entity_id {
                return Err(r.invalid(format!("predator id {id} beyond id counter")));
            }
            index.insert_predator(id, (x, y));
            predators.push(Predator {
                id,
                pos: (x, y),
                orientation,
                health,
                group_id,
                identity,
                alive: true,
            });
        }

        let n_preys = r.count(PREY_RECORD)?;
        let mut preys = Vec::with_capacity(n_preys);
        let mut alive_prey = [0u64; 2];
        let mut last_id: Option<u64> = None;
        for _ in 0..n_preys {
            let id = r.u64()?;
            if last_id.is_some_and(|l| id <= l) {
                return Err(r.invalid("prey ids not strictly ascending"));
            }
            last_id = Some(id);
            let species = match r.u8()? {
                0 => Species::Group,
                1 => Species::Solo,
                other => return Err(r.invalid(format!("species tag {other}"))),
            };
            let x = r.u32()?;
            let y = r.u32()?;
            let capture_radius = r.u32()?;
            let capture_threshold = r.u32()?;
            let reward = r.f64()?;
            if x >= width || y >= height || grid.is_obstacle((x, y)) {
                return Err(r.invalid(format!("prey {id} on invalid cell ({x}, {y})")));
            }
            if id >= next_entity_id {
                return Err(r.invalid(format!("prey id {id} beyond id counter")));
            }
            if capture_threshold == 0 {
                return Err(r.invalid(format!("prey {id} capture threshold 0")));
            }
            index.insert_prey(id, (x, y), species);
            alive_prey[species as usize] += 1;
            preys.push(Prey {
                id,
                species,
                pos: (x, y),
                capture_radius,
                capture_threshold,
                reward,
                alive: true,
            });
        }

        let n_groups = r.count(16)?;
        let mut groups = BTreeMap::new();
        let mut last_gid: Option<u64> = None;
        for _ in 0..n_groups {
            let gid = r.u64()?;
            if last_gid.is_some_and(|l| gid <= l) {
                return Err(r.invalid("group ids not strictly ascending"));
            }
            last_gid = Some(gid);
            if gid >= next_group_id {
                return Err(r.invalid(format!("group id {gid} beyond id counter")));
            }
            let n_members = r.count(8)?;
            if n_members < 2 {
                return Err(r.invalid(format!("group {gid} has {n_members} members")));
            }
            let mut members = Vec::with_capacity(n_members);
            let mut last_m: Option<u64> = None;
            for _ in 0..n_members {
                let m = r.u64()?;
                if last_m.is_some_and(|l| m <= l) {
                    return Err(r.invalid("group members not strictly ascending"));
                }
                last_m = Some(m);
                members.push(m);
            }
            groups.insert(gid, Group { group_id: gid, members });
        }
        r.finish()?;

        // cross-check membership both ways
        for (gid, group) in &groups {
            for m in &group.members {
                let Ok(i) = predators.binary_search_by_key(m, |p| p.id) else {
                    return Err(r.invalid(format!("group {gid} member {m} does not exist")));
                };
                if predators[i].group_id != Some(*gid) {
                    return Err(r.invalid(format!("group {gid} member {m} disagrees")));
                }
            }
        }
        for p in &predators {
            if let Some(g) = p.group_id {
                let ok = groups
                    .get(&g)
                    .is_some_and(|grp| grp.members.binary_search(&p.id).is_ok());
                if !ok {
                    return Err(r.invalid(format!("predator {} not in its group {g}", p.id)));
                }
            }
        }

        let alive_predators = predators.len() as u64;
        Ok(WorldState {
            grid,
            predators,
            preys,
            groups,
            index,
            time,
            rng,
            next_entity_id,
            next_group_id,
            last_fed,
            alive_predators,
            alive_prey,
        })
    }

    pub fn save_snapshot(&self, path: &Path) -> Result<(), SimError> {
        std::fs::write(path, self.encode_snapshot()).map_err(|e| SimError::io(path, e))
    }

    pub fn load_snapshot(path: &Path) -> Result<WorldState, SimError> {
        let bytes = std::fs::read(path).map_err(|e| SimError::io(path, e))?;
        Ok(WorldState::decode_snapshot(&bytes)?)
    }
}
