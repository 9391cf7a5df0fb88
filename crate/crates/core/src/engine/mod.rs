//! Per-step orchestration: procreation, the observe/select fan-out, the
//! single-writer settlement phase, capture resolution, lifecycle,
//! feeding, next-state extraction and training.
//!
//! Parallelism is phased: read-only fan-outs (observation encoding and
//! Q-value evaluation) run over an immutable world, while every
//! mutation and every RNG draw happens in a single writer in ascending
//! agent-id order. Output is therefore identical for any worker count.

mod run;

pub use run::{NoHooks, RunArtifacts, RunHooks, StepLog};

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::config::{Mode, SimConfig};
use crate::error::{ConfigError, SimError};
use crate::learner::{
    select_action, ExperienceBuffer, ForwardScratch, QNetwork, Transition, OUTPUT_UNITS,
};
use crate::perception::{extract_observation_into, StateVector, CHANNELS};
use crate::world::{Action, Births, FeedingEvent, WorldState};

/// Outcome of one engine step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// World time after the step.
    pub t: u64,
    pub births: Births,
    pub predator_deaths: u64,
    pub prey_deaths: u64,
    pub captures: u64,
    /// Mean reward over all acting agents (0 when none acted).
    pub mean_reward: f64,
    pub batches_trained: u64,
    /// Number of transitions stored; equals the acting-agent count.
    pub transitions: u64,
    pub feeding: Option<FeedingEvent>,
    pub wall: Duration,
}

pub struct Simulation {
    config: SimConfig,
    world: WorldState,
    net: QNetwork,
    buffer: ExperienceBuffer,
    pool: rayon::ThreadPool,
    rollback_dir: PathBuf,
}

enum StagedWorld {
    Memory(Box<WorldState>),
    Disk(PathBuf),
}

impl Simulation {
    /// Initialize world and network from the config and seed.
    pub fn new(config: SimConfig) -> Result<Simulation, SimError> {
        config.validate()?;
        let mut world = WorldState::init(&config.world, config.engine.seed)?;
        let input_dim = config.perception.state_len() as u32;
        let net = QNetwork::shared(input_dim, world.rng_mut());
        Simulation::assemble(config, world, net)
    }

    /// Initialize with network parameters taken from a checkpoint
    /// (transfer runs). The checkpoint must match the configured state
    /// length and output width.
    pub fn with_checkpoint(config: SimConfig, net: QNetwork) -> Result<Simulation, SimError> {
        config.validate()?;
        let expected = config.perception.state_len();
        if net.input_dim() != expected || net.output_dim() != OUTPUT_UNITS as usize {
            return Err(ConfigError::invalid(
                "checkpoint",
                format!(
                    "network {}->{} does not fit state length {expected} and {OUTPUT_UNITS} actions",
                    net.input_dim(),
                    net.output_dim()
                ),
            )
            .into());
        }
        let world = WorldState::init(&config.world, config.engine.seed)?;
        Simulation::assemble(config, world, net)
    }

    /// Resume from a saved world snapshot and checkpoint.
    pub fn from_snapshot(
        config: SimConfig,
        world: WorldState,
        net: QNetwork,
    ) -> Result<Simulation, SimError> {
        config.validate()?;
        Simulation::assemble(config, world, net)
    }

    fn assemble(config: SimConfig, world: WorldState, net: QNetwork) -> Result<Simulation, SimError> {
        let threads = worker_threads(config.engine.threads);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool");
        Ok(Simulation {
            config,
            world,
            net,
            buffer: ExperienceBuffer::new(),
            pool,
            rollback_dir: std::env::temp_dir(),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn network(&self) -> &QNetwork {
        &self.net
    }

    /// Run one full step; on any error the world, network and buffer
    /// are restored to their pre-step states.
    pub fn step(&mut self) -> Result<StepReport, SimError> {
        let staged_world = self.stage_world()?;
        let staged_net = self.net.clone();
        match self.step_inner() {
            Ok(report) => {
                if let StagedWorld::Disk(path) = staged_world {
                    let _ = std::fs::remove_file(path);
                }
                Ok(report)
            }
            Err(e) => {
                match staged_world {
                    StagedWorld::Memory(w) => self.world = *w,
                    StagedWorld::Disk(path) => {
                        self.world = WorldState::load_snapshot(&path)?;
                        let _ = std::fs::remove_file(path);
                    }
                }
                self.net = staged_net;
                self.buffer.clear();
                Err(e)
            }
        }
    }

    fn stage_world(&self) -> Result<StagedWorld, SimError> {
        if self.world.total_entities() <= self.config.engine.snapshot_spill_entities {
            Ok(StagedWorld::Memory(Box::new(self.world.clone())))
        } else {
            let path = self.rollback_dir.join(format!(
                "swlv-rollback-{}-{}.snap",
                std::process::id(),
                self.world.time()
            ));
            self.world.save_snapshot(&path)?;
            Ok(StagedWorld::Disk(path))
        }
    }

    fn step_inner(&mut self) -> Result<StepReport, SimError> {
        let start = Instant::now();
        debug_assert!(self.buffer.is_empty(), "buffer must be empty at step start");
        let lifecycle = self.config.lifecycle;
        let eternal = self.config.engine.eternal_longevity;
        let perception = self.config.perception;
        let learner = self.config.learner;

        // 1. procreation
        let births = self
            .world
            .procreate(&lifecycle, eternal, self.config.prey_capacity());

        // 2. read-only fan-out: state and Q-values per acting agent
        let agent_ids: Vec<u64> = self.world.predators().iter().map(|p| p.id).collect();
        let state_len = perception.state_len();
        let world = &self.world;
        let net = &self.net;
        let evaluated: Vec<(StateVector, Vec<f64>)> = self.pool.install(|| {
            agent_ids
                .par_iter()
                .map_init(
                    || ForwardScratch::new(net),
                    |scratch, &id| {
                        let state = agent_state(world, id, &perception, state_len)
                            .expect("acting agent is alive");
                        let q = net.forward_with(state.values(), scratch).to_vec();
                        (state, q)
                    },
                )
                .collect()
        });

        // 3. single-writer: epsilon-greedy draws and settlement, id order
        let mut actions: Vec<Action> = Vec::with_capacity(agent_ids.len());
        for (&id, (_, qvalues)) in agent_ids.iter().zip(&evaluated) {
            let choice = select_action(qvalues, learner.epsilon, self.world.rng_mut())?;
            let action = Action::from_index(choice).expect("valid action index");
            if action.is_grouping() {
                self.world.settle_grouping(
                    id,
                    action,
                    perception.view_depth,
                    perception.view_width,
                )?;
            } else {
                self.world.settle_move(id, action)?;
            }
            actions.push(action);
        }

        // 4. capture resolution, then end-of-step lifecycle
        let events = self.world.resolve_captures();
        let captures = events.len() as u64;
        let end = self.world.settle_step_end(&events, &lifecycle, eternal);

        // 5. feeding driver (grouping experiments only)
        let feeding = if self.config.engine.mode == Mode::Grouping {
            self.world
                .zookeeper_step(&self.config.zookeeper, &self.config.world)
        } else {
            None
        };

        // 6. next states against the fully settled world
        let world = &self.world;
        let next_states: Vec<Option<StateVector>> = self.pool.install(|| {
            agent_ids
                .par_iter()
                .map(|&id| agent_state(world, id, &perception, state_len))
                .collect()
        });

        // 7. transitions in id order
        let mut reward_sum = 0.0;
        for ((&id, (state, _)), (action, next)) in agent_ids
            .iter()
            .zip(evaluated)
            .zip(actions.iter().zip(next_states))
        {
            let reward = end.rewards.get(&id).copied().unwrap_or(0.0);
            reward_sum += reward;
            let (next_state, terminal) = match next {
                Some(s) => (s, false),
                None => (StateVector::zeros(state_len), true),
            };
            self.buffer.push(Transition {
                state,
                action: action.index() as u8,
                reward,
                next_state,
                terminal,
            });
        }
        let transitions = self.buffer.len() as u64;
        debug_assert_eq!(transitions as usize, agent_ids.len());

        // 8. train on this step's experience, then clear the buffer
        let mut batches_trained = 0u64;
        if learner.learning_enabled {
            let batches = self
                .buffer
                .drain_minibatches(learner.batch_size, self.world.rng_mut());
            let net = &mut self.net;
            let pool = &self.pool;
            for batch in &batches {
                pool.install(|| net.td_update(batch, &learner))?;
                batches_trained += 1;
            }
        }
        self.buffer.clear();

        // 9. advance time
        self.world.advance_time();

        Ok(StepReport {
            t: self.world.time(),
            births,
            predator_deaths: end.predator_deaths,
            prey_deaths: end.prey_deaths,
            captures,
            mean_reward: if transitions == 0 {
                0.0
            } else {
                reward_sum / transitions as f64
            },
            batches_trained,
            transitions,
            feeding,
            wall: start.elapsed(),
        })
    }
}

/// Observation plus identity for one alive agent; `None` when the agent
/// no longer exists (died this step).
fn agent_state(
    world: &WorldState,
    id: u64,
    perception: &crate::config::PerceptionConfig,
    state_len: usize,
) -> Option<StateVector> {
    let agent = world.predator(id)?;
    if !agent.alive {
        return None;
    }
    let obs_len = state_len - crate::world::IDENTITY_LEN;
    debug_assert_eq!(
        obs_len,
        perception.view_depth as usize * perception.view_width as usize * CHANNELS
    );
    let mut values = vec![0f32; state_len];
    extract_observation_into(world, id, perception, &mut values[..obs_len])
        .expect("alive agent observation");
    values[obs_len..].copy_from_slice(&agent.identity);
    Some(StateVector(values.into_boxed_slice()))
}

/// Worker count: `SWLV_THREADS` beats the config; 0 means all cores.
fn worker_threads(configured: usize) -> usize {
    match std::env::var("SWLV_THREADS") {
        Ok(v) => v.trim().parse().unwrap_or(configured),
        Err(_) => configured,
    }
}
