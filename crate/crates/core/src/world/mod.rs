//! The environment: grid, entities, groups, movement settlement, capture
//! resolution, lifecycle and the feeding driver.
//!
//! All mutation goes through `&mut self` methods that draw from the
//! world-owned RNG in a fixed order, so identical `(config, seed)` pairs
//! produce identical trajectories regardless of reader parallelism.

pub mod builder;
pub mod entities;
pub mod grid;
pub mod snapshot;
pub mod spatial;

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{LifecycleConfig, WorldConfig, ZookeeperConfig};
use crate::error::{ConfigError, WorldError};
pub use builder::WorldBuilder;
pub use entities::{
    Action, CaptureEvent, Cell, Group, Orientation, Predator, Prey, Species, ACTION_COUNT,
    IDENTITY_LEN,
};
pub use grid::GridMap;
pub use spatial::{CellRect, SpatialIndex};

/// Result of a grouping-action settlement, mostly for tests and logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupingOutcome {
    /// Joined the existing group with this id.
    Joined(u64),
    /// Formed a fresh two-member group with this id.
    Formed(u64),
    /// Left a group that still has at least two members.
    Left,
    /// Left a group whose last other member became single again.
    Dissolved,
    /// Invalid action for the agent's situation; state unchanged.
    NotSettled,
}

/// Births applied at the start of a step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Births {
    pub prey_group: u64,
    pub prey_solo: u64,
    pub predators: u64,
}

/// Decay, reward application and removal report for the end of a step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepEnd {
    /// Reward earned this step, keyed by predator id. Absent id = 0.
    pub rewards: std::collections::HashMap<u64, f64>,
    pub predator_deaths: u64,
    pub prey_deaths: u64,
}

/// Prey supplement performed by the feeding driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedingEvent {
    pub species: Species,
    pub amount: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    grid: GridMap,
    /// Ascending by id; entries are alive except between a mark and the
    /// end-of-step sweep.
    predators: Vec<Predator>,
    preys: Vec<Prey>,
    groups: BTreeMap<u64, Group>,
    index: SpatialIndex,
    time: u64,
    rng: ChaCha8Rng,
    next_entity_id: u64,
    next_group_id: u64,
    /// Species the feeding driver most recently supplied.
    last_fed: Option<Species>,
    alive_predators: u64,
    alive_prey: [u64; 2],
}

impl WorldState {
    /// Build a fresh world: obstacles, then predators, then group prey,
    /// then solo prey, each on uniform-random non-obstacle cells.
    pub fn init(config: &WorldConfig, seed: u64) -> Result<WorldState, ConfigError> {
        validate_world_config(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut grid = GridMap::new(config.width, config.height);
        let obstacle_target = (config.obstacle_density * grid.cell_count() as f64).floor() as u64;
        while grid.obstacle_count() < obstacle_target {
            let cell = sample_cell(&grid, &mut rng);
            grid.add_obstacle(cell);
        }

        let mut world = WorldState {
            index: SpatialIndex::new(config.width, config.height),
            grid,
            predators: Vec::with_capacity(config.predators as usize),
            preys: Vec::with_capacity((config.prey_group + config.prey_solo) as usize),
            groups: BTreeMap::new(),
            time: 0,
            rng,
            next_entity_id: 0,
            next_group_id: 0,
            last_fed: None,
            alive_predators: 0,
            alive_prey: [0, 0],
        };
        for _ in 0..config.predators {
            world.spawn_predator();
        }
        for _ in 0..config.prey_group {
            world.spawn_prey(Species::Group, &config.group_prey);
        }
        for _ in 0..config.prey_solo {
            world.spawn_prey(Species::Solo, &config.solo_prey);
        }
        Ok(world)
    }

    pub fn grid(&self) -> &GridMap {
        &self.grid
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn advance_time(&mut self) {
        self.time += 1;
    }

    pub fn alive_predators(&self) -> u64 {
        self.alive_predators
    }

    pub fn alive_prey(&self, species: Species) -> u64 {
        self.alive_prey[species as usize]
    }

    pub fn total_alive_prey(&self) -> u64 {
        self.alive_prey[0] + self.alive_prey[1]
    }

    pub fn total_entities(&self) -> u64 {
        self.predators.len() as u64 + self.preys.len() as u64
    }

    /// Alive predators currently belonging to a group.
    pub fn grouped_predators(&self) -> u64 {
        self.predators
            .iter()
            .filter(|p| p.alive && p.group_id.is_some())
            .count() as u64
    }

    pub fn predators(&self) -> &[Predator] {
        &self.predators
    }

    pub fn preys(&self) -> &[Prey] {
        &self.preys
    }

    pub fn groups(&self) -> &BTreeMap<u64, Group> {
        &self.groups
    }

    pub fn spatial_index(&self) -> &SpatialIndex {
        &self.index
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn predator(&self, id: u64) -> Option<&Predator> {
        self.predators
            .binary_search_by_key(&id, |p| p.id)
            .ok()
            .map(|i| &self.predators[i])
    }

    pub fn prey(&self, id: u64) -> Option<&Prey> {
        self.preys
            .binary_search_by_key(&id, |p| p.id)
            .ok()
            .map(|i| &self.preys[i])
    }

    fn predator_index(&self, id: u64) -> Result<usize, WorldError> {
        self.predators
            .binary_search_by_key(&id, |p| p.id)
            .map_err(|_| WorldError::UnknownPredator(id))
    }

    fn spawn_predator(&mut self) {
        let pos = sample_free_cell(&self.grid, &mut self.rng);
        let orientation = Orientation::from_index(self.rng.random_range(0..4u8)).unwrap();
        let mut identity = [0f32; IDENTITY_LEN];
        for v in &mut identity {
            *v = self.rng.sample(StandardNormal);
        }
        let id = self.next_entity_id;
        self.next_entity_id += 1;
        self.predators.push(Predator {
            id,
            pos,
            orientation,
            health: 1.0,
            group_id: None,
            identity,
            alive: true,
        });
        self.index.insert_predator(id, pos);
        self.alive_predators += 1;
    }

    fn spawn_prey(&mut self, species: Species, params: &crate::config::SpeciesParams) {
        let pos = sample_free_cell(&self.grid, &mut self.rng);
        let id = self.next_entity_id;
        self.next_entity_id += 1;
        self.preys.push(Prey {
            id,
            species,
            pos,
            capture_radius: params.capture_radius,
            capture_threshold: params.capture_threshold,
            reward: params.reward,
            alive: true,
        });
        self.index.insert_prey(id, pos, species);
        self.alive_prey[species as usize] += 1;
    }

    /// Settle a movement action. Rotations always settle; translations
    /// that would leave the grid or enter an obstacle are ignored.
    /// Returns the (possibly unchanged) pose.
    pub fn settle_move(
        &mut self,
        id: u64,
        action: Action,
    ) -> Result<(Cell, Orientation), WorldError> {
        assert!(!action.is_grouping(), "grouping action routed to settle_move");
        let i = self.predator_index(id)?;
        if !self.predators[i].alive {
            return Err(WorldError::DeadPredator(id));
        }
        let (pos, orientation) = (self.predators[i].pos, self.predators[i].orientation);
        match action {
            Action::RotateLeft => self.predators[i].orientation = orientation.rotated_left(),
            Action::RotateRight => self.predators[i].orientation = orientation.rotated_right(),
            Action::StandStill => {}
            Action::Forward | Action::Backward | Action::Left | Action::Right => {
                let (dx, dy) = match action {
                    Action::Forward => orientation.ahead(),
                    Action::Backward => {
                        let (x, y) = orientation.ahead();
                        (-x, -y)
                    }
                    Action::Left => orientation.rotated_left().ahead(),
                    Action::Right => orientation.rotated_right().ahead(),
                    _ => unreachable!(),
                };
                let nx = pos.0 as i64 + dx;
                let ny = pos.1 as i64 + dy;
                if self.grid.is_free(nx, ny) {
                    let to = (nx as u32, ny as u32);
                    self.index.move_predator(id, pos, to);
                    self.predators[i].pos = to;
                }
            }
            Action::JoinGroup | Action::LeaveGroup => unreachable!(),
        }
        let p = &self.predators[i];
        Ok((p.pos, p.orientation))
    }

    /// Settle a join/leave action against the agent's current view.
    ///
    /// Joining as a member or leaving as a single is not settled. A
    /// single joining picks uniformly among groups visible in its view;
    /// with no group visible it pairs up with a uniformly chosen visible
    /// ungrouped predator; with neither, nothing happens.
    pub fn settle_grouping(
        &mut self,
        id: u64,
        action: Action,
        view_depth: u32,
        view_width: u32,
    ) -> Result<GroupingOutcome, WorldError> {
        assert!(action.is_grouping(), "movement action routed to settle_grouping");
        let i = self.predator_index(id)?;
        if !self.predators[i].alive {
            return Err(WorldError::DeadPredator(id));
        }
        match action {
            Action::JoinGroup => {
                if self.predators[i].group_id.is_some() {
                    return Ok(GroupingOutcome::NotSettled);
                }
                let p = &self.predators[i];
                let rect = view_rect(
                    p.pos,
                    p.orientation,
                    view_depth,
                    view_width,
                    self.grid.width(),
                    self.grid.height(),
                );
                let mut seen: Vec<(u64, Cell)> = Vec::new();
                if let Some(rect) = rect {
                    self.index.predators_in_rect(&rect, &mut seen);
                }
                let mut group_ids: Vec<u64> = Vec::new();
                let mut loners: Vec<u64> = Vec::new();
                for (pid, _) in seen {
                    if pid == id {
                        continue;
                    }
                    let other = self.predator(pid).expect("indexed predator exists");
                    match other.group_id {
                        Some(g) => group_ids.push(g),
                        None => loners.push(pid),
                    }
                }
                group_ids.sort_unstable();
                group_ids.dedup();
                loners.sort_unstable();
                if !group_ids.is_empty() {
                    let g = group_ids[self.rng.random_range(0..group_ids.len())];
                    let group = self.groups.get_mut(&g).expect("registered group");
                    let at = group.members.binary_search(&id).unwrap_err();
                    group.members.insert(at, id);
                    self.predators[i].group_id = Some(g);
                    Ok(GroupingOutcome::Joined(g))
                } else if !loners.is_empty() {
                    let partner = loners[self.rng.random_range(0..loners.len())];
                    let g = self.next_group_id;
                    self.next_group_id += 1;
                    let mut members = vec![id, partner];
                    members.sort_unstable();
                    self.groups.insert(g, Group { group_id: g, members });
                    self.predators[i].group_id = Some(g);
                    let j = self.predator_index(partner)?;
                    self.predators[j].group_id = Some(g);
                    Ok(GroupingOutcome::Formed(g))
                } else {
                    Ok(GroupingOutcome::NotSettled)
                }
            }
            Action::LeaveGroup => {
                let Some(g) = self.predators[i].group_id else {
                    return Ok(GroupingOutcome::NotSettled);
                };
                self.predators[i].group_id = None;
                self.remove_group_member(g, id)
            }
            _ => unreachable!(),
        }
    }

    /// Drop `id` from group `g`, dissolving the group when one member
    /// would remain. The caller has already cleared the leaver's own
    /// `group_id`.
    fn remove_group_member(&mut self, g: u64, id: u64) -> Result<GroupingOutcome, WorldError> {
        let group = self.groups.get_mut(&g).expect("registered group");
        let at = group.members.binary_search(&id).expect("member of its group");
        group.members.remove(at);
        if group.members.len() == 1 {
            let remaining = group.members[0];
            self.groups.remove(&g);
            let j = self.predator_index(remaining)?;
            self.predators[j].group_id = None;
            Ok(GroupingOutcome::Dissolved)
        } else {
            Ok(GroupingOutcome::Left)
        }
    }

    /// Resolve every alive prey in ascending id order.
    ///
    /// A hunting unit is a group or an ungrouped single. Units whose
    /// in-area member count meets the prey's threshold are candidates;
    /// the largest total unit size wins, with ties broken uniformly via
    /// the world RNG over candidates ordered by their smallest member
    /// id. Every member of the winning unit is consumed for the rest of
    /// the step and shares the reward equally.
    pub fn resolve_captures(&mut self) -> Vec<CaptureEvent> {
        let mut events = Vec::new();
        let mut consumed: HashSet<u64> = HashSet::new();
        let mut group_consumed: BTreeMap<u64, usize> = BTreeMap::new();
        let mut in_area: Vec<(u64, Cell)> = Vec::new();

        for prey_i in 0..self.preys.len() {
            let prey = &self.preys[prey_i];
            if !prey.alive {
                continue;
            }
            let (prey_id, pos, radius, threshold, reward, species) = (
                prey.id,
                prey.pos,
                prey.capture_radius,
                prey.capture_threshold,
                prey.reward,
                prey.species,
            );
            let rect =
                CellRect::capture_square(pos, radius, self.grid.width(), self.grid.height());
            in_area.clear();
            self.index.predators_in_rect(&rect, &mut in_area);
            in_area.sort_unstable_by_key(|e| e.0);

            let mut group_in_area: BTreeMap<u64, usize> = BTreeMap::new();
            let mut singles: Vec<u64> = Vec::new();
            for &(pid, _) in &in_area {
                if consumed.contains(&pid) {
                    continue;
                }
                let p = self.predator(pid).expect("indexed predator exists");
                match p.group_id {
                    Some(g) => *group_in_area.entry(g).or_insert(0) += 1,
                    None => singles.push(pid),
                }
            }

            // candidates as (total unit size, smallest effective member id)
            enum Unit {
                Group(u64),
                Single(u64),
            }
            let mut candidates: Vec<(usize, u64, Unit)> = Vec::new();
            for (&g, &count) in &group_in_area {
                if count < threshold as usize {
                    continue;
                }
                let members = &self.groups[&g].members;
                let eaten = group_consumed.get(&g).copied().unwrap_or(0);
                let size = members.len() - eaten;
                let min_member = members
                    .iter()
                    .find(|m| !consumed.contains(m))
                    .copied()
                    .expect("candidate group has an effective member");
                candidates.push((size, min_member, Unit::Group(g)));
            }
            if threshold <= 1 {
                for &pid in &singles {
                    candidates.push((1, pid, Unit::Single(pid)));
                }
            }
            if candidates.is_empty() {
                continue;
            }
            let best = candidates.iter().map(|c| c.0).max().unwrap();
            let mut tied: Vec<&(usize, u64, Unit)> =
                candidates.iter().filter(|c| c.0 == best).collect();
            tied.sort_unstable_by_key(|c| c.1);
            let winner = if tied.len() == 1 {
                tied[0]
            } else {
                tied[self.rng.random_range(0..tied.len())]
            };
            let members: Vec<u64> = match winner.2 {
                Unit::Single(pid) => vec![pid],
                Unit::Group(g) => self.groups[&g].members
                    .iter()
                    .filter(|m| !consumed.contains(m))
                    .copied()
                    .collect(),
            };
            if let Unit::Group(g) = winner.2 {
                *group_consumed.entry(g).or_insert(0) += members.len();
            }
            let share = reward / members.len() as f64;
            consumed.extend(members.iter().copied());
            self.preys[prey_i].alive = false;
            self.alive_prey[species as usize] -= 1;
            events.push(CaptureEvent {
                prey_id,
                winner_members: members,
                share,
            });
        }
        events
    }

    /// Start-of-step procreation: each alive prey, then each healthy
    /// predator, spawns one offspring with its configured probability.
    /// Prey births stop at `prey_capacity`; predator births are skipped
    /// under eternal longevity.
    pub fn procreate(
        &mut self,
        lifecycle: &LifecycleConfig,
        eternal_longevity: bool,
        prey_capacity: u64,
    ) -> Births {
        let mut births = Births::default();
        let mut total_preys = self.total_alive_prey();
        let existing = self.preys.len();
        if lifecycle.prey_birth_rate > 0.0 {
            for i in 0..existing {
                if total_preys >= prey_capacity {
                    break;
                }
                if !self.preys[i].alive {
                    continue;
                }
                if self.rng.random::<f64>() < lifecycle.prey_birth_rate {
                    let parent = &self.preys[i];
                    let (species, params) = (
                        parent.species,
                        crate::config::SpeciesParams {
                            capture_radius: parent.capture_radius,
                            capture_threshold: parent.capture_threshold,
                            reward: parent.reward,
                        },
                    );
                    self.spawn_prey(species, &params);
                    total_preys += 1;
                    match species {
                        Species::Group => births.prey_group += 1,
                        Species::Solo => births.prey_solo += 1,
                    }
                }
            }
        }
        if !eternal_longevity && lifecycle.predator_birth_rate > 0.0 {
            let existing = self.predators.len();
            for i in 0..existing {
                let p = &self.predators[i];
                if !p.alive || (p.health as f64) < lifecycle.reproduce_health_threshold {
                    continue;
                }
                if self.rng.random::<f64>() < lifecycle.predator_birth_rate {
                    self.predators[i].health -= lifecycle.birth_cost as f32;
                    self.spawn_predator();
                    births.predators += 1;
                }
            }
        }
        births
    }

    /// End-of-step settlement: decay every predator's health, credit
    /// capture shares as health and reward, then remove starved
    /// predators and captured preys. Under eternal longevity predators
    /// neither decay nor die.
    pub fn settle_step_end(
        &mut self,
        events: &[CaptureEvent],
        lifecycle: &LifecycleConfig,
        eternal_longevity: bool,
    ) -> StepEnd {
        let mut end = StepEnd::default();
        if !eternal_longevity {
            let decay = lifecycle.health_decay as f32;
            for p in &mut self.predators {
                p.health -= decay;
            }
        }
        for ev in events {
            for &m in &ev.winner_members {
                let i = self.predator_index(m).expect("winner exists");
                self.predators[i].health += ev.share as f32;
                end.rewards.insert(m, ev.share);
            }
        }

        // mark starved predators and detach them from their groups
        if !eternal_longevity {
            let dead: Vec<u64> = self
                .predators
                .iter()
                .filter(|p| p.alive && p.health <= 0.0)
                .map(|p| p.id)
                .collect();
            for id in dead {
                let i = self.predator_index(id).expect("marked predator exists");
                self.predators[i].alive = false;
                self.alive_predators -= 1;
                end.predator_deaths += 1;
                if let Some(g) = self.predators[i].group_id.take() {
                    self.remove_group_member(g, id).expect("member of its group");
                }
            }
        }

        // sweep
        let index = &mut self.index;
        self.predators.retain(|p| {
            if !p.alive {
                index.remove_predator(p.id, p.pos);
            }
            p.alive
        });
        self.preys.retain(|p| {
            if !p.alive {
                index.remove_prey(p.id, p.pos);
                end.prey_deaths += 1;
            }
            p.alive
        });
        end
    }

    /// Feeding driver: watches the species it last supplied (or both,
    /// before any feeding) and, when the watched count drops below the
    /// threshold, tops the opposite species up to `refill_amount`. At
    /// most one feeding per step.
    pub fn zookeeper_step(
        &mut self,
        cfg: &ZookeeperConfig,
        world_cfg: &WorldConfig,
    ) -> Option<FeedingEvent> {
        if !cfg.enabled {
            return None;
        }
        let watched: &[Species] = match self.last_fed {
            Some(Species::Group) => &[Species::Group],
            Some(Species::Solo) => &[Species::Solo],
            None => &[Species::Group, Species::Solo],
        };
        for &species in watched {
            if self.alive_prey(species) < cfg.threshold {
                let fed = species.other();
                let amount = cfg.refill_amount.saturating_sub(self.alive_prey(fed));
                let params = match fed {
                    Species::Group => world_cfg.group_prey,
                    Species::Solo => world_cfg.solo_prey,
                };
                for _ in 0..amount {
                    self.spawn_prey(fed, &params);
                }
                self.last_fed = Some(fed);
                return Some(FeedingEvent { species: fed, amount });
            }
        }
        None
    }

    pub fn last_fed(&self) -> Option<Species> {
        self.last_fed
    }

    /// Ids of all alive entities (predators and preys) inside `rect`,
    /// ascending.
    pub fn spatial_query(&self, rect: &CellRect) -> Vec<u64> {
        let mut preds = Vec::new();
        self.index.predators_in_rect(rect, &mut preds);
        let mut preys = Vec::new();
        self.index.preys_in_rect(rect, &mut preys);
        let mut ids: Vec<u64> = preds
            .into_iter()
            .map(|(id, _)| id)
            .chain(preys.into_iter().map(|(id, _, _)| id))
            .collect();
        ids.sort_unstable();
        ids
    }
}

/// The agent's view rectangle in world coordinates: `depth` rows
/// starting at the agent's own row and extending ahead, `width` columns
/// centered on the agent, axis-aligned because orientations are
/// cardinal. `None` when the clipped view is empty (never happens for
/// an in-bounds agent).
pub fn view_rect(
    pos: Cell,
    orientation: Orientation,
    depth: u32,
    width: u32,
    grid_w: u32,
    grid_h: u32,
) -> Option<CellRect> {
    let (ax, ay) = orientation.ahead();
    let (rx, ry) = orientation.rotated_right().ahead();
    let half = (width as i64 - 1) / 2;
    let d = depth as i64 - 1;
    let (px, py) = (pos.0 as i64, pos.1 as i64);
    // corners: own cell offset by +-half laterally, and depth-1 ahead
    let xs = [
        px - rx * half,
        px + rx * half,
        px + ax * d - rx * half,
        px + ax * d + rx * half,
    ];
    let ys = [
        py - ry * half,
        py + ry * half,
        py + ay * d - ry * half,
        py + ay * d + ry * half,
    ];
    CellRect::clipped(
        *xs.iter().min().unwrap(),
        *ys.iter().min().unwrap(),
        *xs.iter().max().unwrap(),
        *ys.iter().max().unwrap(),
        grid_w,
        grid_h,
    )
}

fn validate_world_config(config: &WorldConfig) -> Result<(), ConfigError> {
    if config.width < 1 || config.height < 1 {
        return Err(ConfigError::invalid("world.width", "grid must be at least 1x1"));
    }
    if !(0.0..1.0).contains(&config.obstacle_density) {
        return Err(ConfigError::invalid(
            "world.obstacle_density",
            "must be in [0, 1)",
        ));
    }
    if config.group_prey.capture_threshold < 1 || config.solo_prey.capture_threshold != 1 {
        return Err(ConfigError::invalid(
            "prey.capture_threshold",
            "group >= 1 and solo == 1 required",
        ));
    }
    Ok(())
}

fn sample_cell(grid: &GridMap, rng: &mut ChaCha8Rng) -> Cell {
    (
        rng.random_range(0..grid.width()),
        rng.random_range(0..grid.height()),
    )
}

/// Rejection-sample a uniform non-obstacle cell.
fn sample_free_cell(grid: &GridMap, rng: &mut ChaCha8Rng) -> Cell {
    loop {
        let cell = sample_cell(grid, rng);
        if !grid.is_obstacle(cell) {
            return cell;
        }
    }
}
