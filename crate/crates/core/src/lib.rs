//! Large-scale predator-prey grid world driven by shared-network
//! Q-learning, plus the analysis tools for its population dynamics.
//!
//! The crate splits into:
//!
//! * [`world`] — grid, entities, groups, movement and grouping
//!   settlement, capture resolution, lifecycle, feeding driver and the
//!   binary world snapshot;
//! * [`perception`] — per-agent observations and state vectors;
//! * [`learner`] — the shared Q-network, epsilon-greedy selection, the
//!   single-step experience buffer, TD updates and checkpoints;
//! * [`engine`] — step orchestration, experiment modes, determinism and
//!   run artifacts;
//! * [`analysis`] — population-cycle fitting, the conserved quantity,
//!   phase lag, cycle detection;
//! * [`config`] — the typed `key = value` configuration format.

pub mod analysis;
pub mod config;
pub mod engine;
pub mod error;
pub mod learner;
pub mod perception;
pub mod wire;
pub mod world;

pub use config::SimConfig;
pub use engine::{Simulation, StepReport};
pub use world::WorldState;
