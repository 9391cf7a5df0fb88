//! Hand-placed world construction, mainly for tests and tooling.

use std::collections::BTreeMap;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::world::entities::{Cell, Group, Orientation, Predator, Prey, Species, IDENTITY_LEN};
use crate::world::grid::GridMap;
use crate::world::spatial::SpatialIndex;
use crate::world::WorldState;

/// Builds a `WorldState` with explicitly placed entities. Ids are
/// assigned in insertion order across predators and preys.
pub struct WorldBuilder {
    width: u32,
    height: u32,
    seed: u64,
    obstacles: Vec<Cell>,
    predators: Vec<Predator>,
    preys: Vec<Prey>,
    groups: Vec<Vec<u64>>,
    next_id: u64,
}

impl WorldBuilder {
    pub fn new(width: u32, height: u32) -> WorldBuilder {
        WorldBuilder {
            width,
            height,
            seed: 0,
            obstacles: Vec::new(),
            predators: Vec::new(),
            preys: Vec::new(),
            groups: Vec::new(),
            next_id: 0,
        }
    }

    pub fn seed(mut self, seed: u64) -> WorldBuilder {
        self.seed = seed;
        self
    }

    pub fn obstacle(mut self, cell: Cell) -> WorldBuilder {
        self.obstacles.push(cell);
        self
    }

    /// Place a predator facing `orientation`; returns its id through
    /// `WorldBuilder::last_id`.
    pub fn predator(mut self, pos: Cell, orientation: Orientation) -> WorldBuilder {
        let id = self.next_id;
        self.next_id += 1;
        self.predators.push(Predator {
            id,
            pos,
            orientation,
            health: 1.0,
            group_id: None,
            identity: [0.0; IDENTITY_LEN],
            alive: true,
        });
        self
    }

    pub fn predator_with_health(mut self, pos: Cell, health: f32) -> WorldBuilder {
        self = self.predator(pos, Orientation::North);
        self.predators.last_mut().unwrap().health = health;
        self
    }

    /// Set the health of the most recently added predator.
    pub fn health(mut self, health: f32) -> WorldBuilder {
        self.predators
            .last_mut()
            .expect("a predator was added")
            .health = health;
        self
    }

    pub fn prey(mut self, pos: Cell, species: Species, radius: u32, threshold: u32, reward: f64) -> WorldBuilder {
        let id = self.next_id;
        self.next_id += 1;
        self.preys.push(Prey {
            id,
            species,
            pos,
            capture_radius: radius,
            capture_threshold: threshold,
            reward,
            alive: true,
        });
        self
    }

    /// Id that the most recently added entity received.
    pub fn last_id(&self) -> u64 {
        self.next_id - 1
    }

    /// Register a group over existing predator ids (at least two).
    pub fn group(mut self, members: &[u64]) -> WorldBuilder {
        assert!(members.len() >= 2, "groups need at least two members");
        self.groups.push(members.to_vec());
        self
    }

    pub fn build(self) -> WorldState {
        let mut grid = GridMap::new(self.width, self.height);
        for cell in self.obstacles {
            grid.add_obstacle(cell);
        }
        let mut index = SpatialIndex::new(self.width, self.height);
        let mut predators = self.predators;
        for p in &predators {
            assert!(
                grid.is_free(p.pos.0 as i64, p.pos.1 as i64),
                "predator placed on an invalid cell"
            );
            index.insert_predator(p.id, p.pos);
        }
        let mut alive_prey = [0u64; 2];
        for p in &self.preys {
            assert!(
                grid.is_free(p.pos.0 as i64, p.pos.1 as i64),
                "prey placed on an invalid cell"
            );
            index.insert_prey(p.id, p.pos, p.species);
            alive_prey[p.species as usize] += 1;
        }
        let mut groups = BTreeMap::new();
        for (gi, mut members) in self.groups.into_iter().enumerate() {
            let gid = gi as u64;
            members.sort_unstable();
            for m in &members {
                let i = predators
                    .binary_search_by_key(m, |p| p.id)
                    .expect("group member exists");
                assert!(predators[i].group_id.is_none(), "predator in two groups");
                predators[i].group_id = Some(gid);
            }
            groups.insert(gid, Group { group_id: gid, members });
        }
        let alive_predators = predators.len() as u64;
        let next_group_id = groups.len() as u64;
        WorldState {
            grid,
            predators,
            preys: self.preys,
            groups,
            index,
            time: 0,
            rng: ChaCha8Rng::seed_from_u64(self.seed),
            next_entity_id: self.next_id,
            next_group_id,
            last_fed: None,
            alive_predators,
            alive_prey,
        }
    }
}
