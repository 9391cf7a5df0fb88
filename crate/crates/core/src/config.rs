//! Typed simulation configuration and its flat `key = value` file format.
//!
//! A config file is a sequence of `[section]` headers and `key = value`
//! lines. Blank lines and lines starting with `#` are ignored. Every key
//! has a default, so the empty string parses to the default configuration.
//! Unknown sections or keys are rejected rather than ignored.

use crate::error::ConfigError;

/// Experiment mode selecting which run-level rules apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Population dynamics with births, starvation and learning.
    Dynamics,
    /// Like `Dynamics` but the Q-network starts from a loaded checkpoint.
    Transfer,
    /// Learning disabled; the network stays frozen at initialization.
    Ablation,
    /// Fixed predator population with alternating prey feeding.
    Grouping,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Dynamics => "dynamics",
            Mode::Transfer => "transfer",
            Mode::Ablation => "ablation",
            Mode::Grouping => "grouping",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dynamics" => Ok(Mode::Dynamics),
            "transfer" => Ok(Mode::Transfer),
            "ablation" => Ok(Mode::Ablation),
            "grouping" => Ok(Mode::Grouping),
            other => Err(format!(
                "unknown mode '{other}' (expected dynamics|transfer|ablation|grouping)"
            )),
        }
    }
}

/// Per-species prey parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesParams {
    /// Capture square spans `2 * capture_radius + 1` cells per side.
    pub capture_radius: u32,
    /// Minimum in-area hunting-unit members for a valid capture candidate.
    pub capture_threshold: u32,
    /// Reward split equally among the winning unit's members.
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub width: u32,
    pub height: u32,
    pub predators: u64,
    pub prey_group: u64,
    pub prey_solo: u64,
    /// Fraction of cells turned into obstacles, in [0, 1).
    pub obstacle_density: f64,
    pub group_prey: SpeciesParams,
    pub solo_prey: SpeciesParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerceptionConfig {
    /// Rows in the view: the agent's own row plus `view_depth - 1` ahead.
    pub view_depth: u32,
    /// Columns in the view, centered on the agent; must be odd.
    pub view_width: u32,
}

impl PerceptionConfig {
    /// Length of the flattened state vector fed to the Q-network.
    pub fn state_len(&self) -> usize {
        self.view_depth as usize * self.view_width as usize * 5 + 5
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifecycleConfig {
    /// Per-prey offspring probability per step.
    pub prey_birth_rate: f64,
    /// Per-predator offspring probability per step, gated on health.
    pub predator_birth_rate: f64,
    /// Health lost by every predator at the end of each step.
    pub health_decay: f64,
    /// Minimum health for a predator to be eligible to reproduce.
    pub reproduce_health_threshold: f64,
    /// Health deducted from a parent predator per offspring; couples
    /// reproduction to recent hunting success instead of stored wealth.
    pub birth_cost: f64,
    /// Total prey count above which prey births are suppressed.
    /// 0 means one prey per grid cell.
    pub prey_capacity: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    pub epsilon: f64,
    pub discount_gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub learning_enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub mode: Mode,
    /// Disables predator decay, death and reproduction.
    pub eternal_longevity: bool,
    pub total_steps: u64,
    /// Record population/grouping rows whenever `t % record_every == 0`.
    pub record_every: u64,
    pub seed: u64,
    /// Worker threads; 0 = all available. `SWLV_THREADS` overrides.
    pub threads: usize,
    /// Write snapshot + checkpoint whenever `t % snapshot_every == 0`.
    /// 0 means only at the end of the run.
    pub snapshot_every: u64,
    /// Entity count above which the per-step rollback snapshot is staged
    /// on disk instead of in memory.
    pub snapshot_spill_entities: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZookeeperConfig {
    pub enabled: bool,
    /// Feeding triggers when the watched species drops below this count.
    pub threshold: u64,
    /// The fed species is topped up to this count.
    pub refill_amount: u64,
}

/// Fully resolved simulation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub world: WorldConfig,
    pub perception: PerceptionConfig,
    pub lifecycle: LifecycleConfig,
    pub learner: LearnerConfig,
    pub engine: EngineConfig,
    pub zookeeper: ZookeeperConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            world: WorldConfig {
                width: 1000,
                height: 1000,
                predators: 10_000,
                prey_group: 5_000,
                prey_solo: 0,
                obstacle_density: 0.01,
                group_prey: SpeciesParams {
                    capture_radius: 3,
                    capture_threshold: 2,
                    reward: 1.0,
                },
                solo_prey: SpeciesParams {
                    capture_radius: 1,
                    capture_threshold: 1,
                    reward: 0.3,
                },
            },
            perception: PerceptionConfig {
                view_depth: 7,
                view_width: 7,
            },
            lifecycle: LifecycleConfig {
                prey_birth_rate: 0.006,
                predator_birth_rate: 0.02,
                health_decay: 0.01,
                reproduce_health_threshold: 1.0,
                birth_cost: 0.0,
                prey_capacity: 0,
            },
            learner: LearnerConfig {
                epsilon: 0.1,
                discount_gamma: 0.9,
                learning_rate: 0.001,
                batch_size: 1024,
                learning_enabled: true,
            },
            engine: EngineConfig {
                mode: Mode::Dynamics,
                eternal_longevity: false,
                total_steps: 1000,
                record_every: 10,
                seed: 0,
                threads: 0,
                snapshot_every: 0,
                snapshot_spill_entities: 200_000,
            },
            zookeeper: ZookeeperConfig {
                enabled: false,
                threshold: 0,
                refill_amount: 0,
            },
        }
    }
}

impl SimConfig {
    /// Parse a config file, starting from defaults. Validates on success.
    pub fn parse_str(text: &str) -> Result<SimConfig, ConfigError> {
        let mut cfg = SimConfig::default();
        let mut section = String::new();
        let mut seen: Vec<(String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return Err(ConfigError::Syntax {
                        line: line_no,
                        reason: "unterminated section header".into(),
                    });
                };
                section = name.trim().to_string();
                if !KNOWN_SECTIONS.contains(&section.as_str()) {
                    return Err(ConfigError::UnknownSection(section));
                }
                continue;
            }
            let Some(eq) = line.find('=') else {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    reason: "expected 'key = value'".into(),
                });
            };
            let key = line[..eq].trim().to_string();
            let value = line[eq + 1..].trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    reason: "empty key".into(),
                });
            }
            if section.is_empty() {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    reason: format!("key '{key}' appears before any [section]"),
                });
            }
            if seen.iter().any(|(s, k)| *s == section && *k == key) {
                return Err(ConfigError::DuplicateKey {
                    section,
                    key,
                });
            }
            cfg.apply(&section, &key, value)?;
            seen.push((section.clone(), key));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str) -> Result<(), ConfigError> {
        let full = |k: &str| format!("{section}.{k}");
        match (section, key) {
            ("world", "width") => self.world.width = parse_num(&full(key), value)?,
            ("world", "height") => self.world.height = parse_num(&full(key), value)?,
            ("world", "predators") => self.world.predators = parse_num(&full(key), value)?,
            ("world", "prey_group") => self.world.prey_group = parse_num(&full(key), value)?,
            ("world", "prey_solo") => self.world.prey_solo = parse_num(&full(key), value)?,
            ("world", "obstacle_density") => {
                self.world.obstacle_density = parse_num(&full(key), value)?
            }
            ("prey.group", "capture_radius") => {
                self.world.group_prey.capture_radius = parse_num(&full(key), value)?
            }
            ("prey.group", "capture_threshold") => {
                self.world.group_prey.capture_threshold = parse_num(&full(key), value)?
            }
            ("prey.group", "reward") => self.world.group_prey.reward = parse_num(&full(key), value)?,
            ("prey.solo", "capture_radius") => {
                self.world.solo_prey.capture_radius = parse_num(&full(key), value)?
            }
            ("prey.solo", "capture_threshold") => {
                self.world.solo_prey.capture_threshold = parse_num(&full(key), value)?
            }
            ("prey.solo", "reward") => self.world.solo_prey.reward = parse_num(&full(key), value)?,
            ("perception", "view_depth") => {
                self.perception.view_depth = parse_num(&full(key), value)?
            }
            ("perception", "view_width") => {
                self.perception.view_width = parse_num(&full(key), value)?
            }
            ("lifecycle", "prey_birth_rate") => {
                self.lifecycle.prey_birth_rate = parse_num(&full(key), value)?
            }
            ("lifecycle", "predator_birth_rate") => {
                self.lifecycle.predator_birth_rate = parse_num(&full(key), value)?
            }
            ("lifecycle", "health_decay") => {
                self.lifecycle.health_decay = parse_num(&full(key), value)?
            }
            ("lifecycle", "reproduce_health_threshold") => {
                self.lifecycle.reproduce_health_threshold = parse_num(&full(key), value)?
            }
            ("lifecycle", "birth_cost") => {
                self.lifecycle.birth_cost = parse_num(&full(key), value)?
            }
            ("lifecycle", "prey_capacity") => {
                self.lifecycle.prey_capacity = parse_num(&full(key), value)?
            }
            ("learner", "epsilon") => self.learner.epsilon = parse_num(&full(key), value)?,
            ("learner", "discount_gamma") => {
                self.learner.discount_gamma = parse_num(&full(key), value)?
            }
            ("learner", "learning_rate") => {
                self.learner.learning_rate = parse_num(&full(key), value)?
            }
            ("learner", "batch_size") => self.learner.batch_size = parse_num(&full(key), value)?,
            ("learner", "learning_enabled") => {
                self.learner.learning_enabled = parse_bool(&full(key), value)?
            }
            ("engine", "mode") => {
                self.engine.mode = value
                    .parse()
                    .map_err(|e: String| ConfigError::invalid(&full(key), e))?
            }
            ("engine", "eternal_longevity") => {
                self.engine.eternal_longevity = parse_bool(&full(key), value)?
            }
            ("engine", "total_steps") => self.engine.total_steps = parse_num(&full(key), value)?,
            ("engine", "record_every") => self.engine.record_every = parse_num(&full(key), value)?,
            ("engine", "seed") => self.engine.seed = parse_num(&full(key), value)?,
            ("engine", "threads") => self.engine.threads = parse_num(&full(key), value)?,
            ("engine", "snapshot_every") => {
                self.engine.snapshot_every = parse_num(&full(key), value)?
            }
            ("engine", "snapshot_spill_entities") => {
                self.engine.snapshot_spill_entities = parse_num(&full(key), value)?
            }
            ("zookeeper", "enabled") => self.zookeeper.enabled = parse_bool(&full(key), value)?,
            ("zookeeper", "threshold") => self.zookeeper.threshold = parse_num(&full(key), value)?,
            ("zookeeper", "refill_amount") => {
                self.zookeeper.refill_amount = parse_num(&full(key), value)?
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    section: section.to_string(),
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Check every range and mode invariant, naming the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let w = &self.world;
        if w.width < 1 {
            return Err(ConfigError::invalid("world.width", "must be >= 1"));
        }
        if w.height < 1 {
            return Err(ConfigError::invalid("world.height", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&w.obstacle_density) {
            return Err(ConfigError::invalid(
                "world.obstacle_density",
                "must be in [0, 1)",
            ));
        }
        if w.group_prey.capture_threshold < 1 {
            return Err(ConfigError::invalid(
                "prey.group.capture_threshold",
                "must be >= 1",
            ));
        }
        if w.solo_prey.capture_threshold != 1 {
            return Err(ConfigError::invalid(
                "prey.solo.capture_threshold",
                "must be exactly 1",
            ));
        }
        if w.group_prey.reward < 0.0 || !w.group_prey.reward.is_finite() {
            return Err(ConfigError::invalid("prey.group.reward", "must be >= 0"));
        }
        if w.solo_prey.reward < 0.0 || !w.solo_prey.reward.is_finite() {
            return Err(ConfigError::invalid("prey.solo.reward", "must be >= 0"));
        }
        let p = &self.perception;
        if p.view_depth < 1 {
            return Err(ConfigError::invalid("perception.view_depth", "must be >= 1"));
        }
        if p.view_width < 1 || p.view_width % 2 == 0 {
            return Err(ConfigError::invalid(
                "perception.view_width",
                "must be odd and >= 1",
            ));
        }
        let l = &self.lifecycle;
        for (key, v) in [
            ("lifecycle.prey_birth_rate", l.prey_birth_rate),
            ("lifecycle.predator_birth_rate", l.predator_birth_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::invalid(key, "must be in [0, 1]"));
            }
        }
        if l.health_decay < 0.0 || !l.health_decay.is_finite() {
            return Err(ConfigError::invalid("lifecycle.health_decay", "must be >= 0"));
        }
        if !l.reproduce_health_threshold.is_finite() {
            return Err(ConfigError::invalid(
                "lifecycle.reproduce_health_threshold",
                "must be finite",
            ));
        }
        if l.birth_cost < 0.0 || !l.birth_cost.is_finite() {
            return Err(ConfigError::invalid("lifecycle.birth_cost", "must be >= 0"));
        }
        let q = &self.learner;
        if !(0.0..=1.0).contains(&q.epsilon) {
            return Err(ConfigError::invalid("learner.epsilon", "must be in [0, 1]"));
        }
        if !(0.0..1.0).contains(&q.discount_gamma) {
            return Err(ConfigError::invalid(
                "learner.discount_gamma",
                "must be in [0, 1)",
            ));
        }
        if q.learning_rate <= 0.0 || !q.learning_rate.is_finite() {
            return Err(ConfigError::invalid("learner.learning_rate", "must be > 0"));
        }
        if q.batch_size < 1 {
            return Err(ConfigError::invalid("learner.batch_size", "must be >= 1"));
        }
        let e = &self.engine;
        if e.total_steps < 1 {
            return Err(ConfigError::invalid("engine.total_steps", "must be >= 1"));
        }
        if e.record_every < 1 {
            return Err(ConfigError::invalid("engine.record_every", "must be >= 1"));
        }
        match e.mode {
            Mode::Grouping => {
                if !e.eternal_longevity {
                    return Err(ConfigError::invalid(
                        "engine.eternal_longevity",
                        "must be true in grouping mode",
                    ));
                }
                if w.prey_group == 0 || w.prey_solo == 0 {
                    return Err(ConfigError::invalid(
                        "world.prey_solo",
                        "grouping mode requires both prey species present",
                    ));
                }
            }
            Mode::Ablation => {
                if q.learning_enabled {
                    return Err(ConfigError::invalid(
                        "learner.learning_enabled",
                        "must be false in ablation mode",
                    ));
                }
            }
            Mode::Dynamics | Mode::Transfer => {}
        }
        Ok(())
    }

    /// Effective prey capacity (0 resolves to one prey per cell).
    pub fn prey_capacity(&self) -> u64 {
        if self.lifecycle.prey_capacity == 0 {
            self.world.width as u64 * self.world.height as u64
        } else {
            self.lifecycle.prey_capacity
        }
    }

    /// Render the fully resolved config in the file format; parsing the
    /// output reproduces `self` exactly.
    pub fn to_config_string(&self) -> String {
        let w = &self.world;
        let p = &self.perception;
        let l = &self.lifecycle;
        let q = &self.learner;
        let e = &self.engine;
        let z = &self.zookeeper;
        format!(
            "[world]\n\
             width = {}\n\
             height = {}\n\
             predators = {}\n\
             prey_group = {}\n\
             prey_solo = {}\n\
             obstacle_density = {}\n\
             \n\
             [prey.group]\n\
             capture_radius = {}\n\
             capture_threshold = {}\n\
             reward = {}\n\
             \n\
             [prey.solo]\n\
             capture_radius = {}\n\
             capture_threshold = {}\n\
             reward = {}\n\
             \n\
             [perception]\n\
             view_depth = {}\n\
             view_width = {}\n\
             \n\
             [lifecycle]\n\
             prey_birth_rate = {}\n\
             predator_birth_rate = {}\n\
             health_decay = {}\n\
             reproduce_health_threshold = {}\n\
             birth_cost = {}\n\
             prey_capacity = {}\n\
             \n\
             [learner]\n\
             epsilon = {}\n\
             discount_gamma = {}\n\
             learning_rate = {}\n\
             batch_size = {}\n\
             learning_enabled = {}\n\
             \n\
             [engine]\n\
             mode = {}\n\
             eternal_longevity = {}\n\
             total_steps = {}\n\
             record_every = {}\n\
             seed = {}\n\
             threads = {}\n\
             snapshot_every = {}\n\
             snapshot_spill_entities = {}\n\
             \n\
             [zookeeper]\n\
             enabled = {}\n\
             threshold = {}\n\
             refill_amount = {}\n",
            w.width,
            w.height,
            w.predators,
            w.prey_group,
            w.prey_solo,
            w.obstacle_density,
            w.group_prey.capture_radius,
            w.group_prey.capture_threshold,
            w.group_prey.reward,
            w.solo_prey.capture_radius,
            w.solo_prey.capture_threshold,
            w.solo_prey.reward,
            p.view_depth,
            p.view_width,
            l.prey_birth_rate,
            l.predator_birth_rate,
            l.health_decay,
            l.reproduce_health_threshold,
            l.birth_cost,
            l.prey_capacity,
            q.epsilon,
            q.discount_gamma,
            q.learning_rate,
            q.batch_size,
            q.learning_enabled,
            e.mode.as_str(),
            e.eternal_longevity,
            e.total_steps,
            e.record_every,
            e.seed,
            e.threads,
            e.snapshot_every,
            e.snapshot_spill_entities,
            z.enabled,
            z.threshold,
            z.refill_amount,
        )
    }
}

const KNOWN_SECTIONS: [&str; 8] = [
    "world",
    "prey.group",
    "prey.solo",
    "perception",
    "lifecycle",
    "learner",
    "engine",
    "zookeeper",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| ConfigError::invalid(key, format!("'{value}': {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(ConfigError::invalid(
            key,
            format!("'{other}' is not a boolean (true|false)"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_is_default() {
        let cfg = SimConfig::parse_str("").unwrap();
        assert_eq!(cfg, SimConfig::default());
    }

    #[test]
    fn roundtrip_preserves_config() {
        let mut cfg = SimConfig::default();
        cfg.world.width = 123;
        cfg.learner.epsilon = 0.25;
        cfg.engine.mode = Mode::Ablation;
        cfg.learner.learning_enabled = false;
        let text = cfg.to_config_string();
        let back = SimConfig::parse_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = SimConfig::parse_str("[world]\nwdith = 3\n").unwrap_err();
        assert!(err.to_string().contains("wdith"), "{err}");
    }

    #[test]
    fn negative_count_is_rejected() {
        let err = SimConfig::parse_str("[world]\npredators = -5\n").unwrap_err();
        assert!(err.to_string().contains("world.predators"), "{err}");
    }

    #[test]
    fn obstacle_density_must_be_below_one() {
        let err = SimConfig::parse_str("[world]\nobstacle_density = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("obstacle_density"), "{err}");
    }

    #[test]
    fn solo_capture_threshold_is_pinned_to_one() {
        let err = SimConfig::parse_str("[prey.solo]\ncapture_threshold = 2\n").unwrap_err();
        assert!(err.to_string().contains("prey.solo.capture_threshold"), "{err}");
    }

    #[test]
    fn ablation_requires_learning_disabled() {
        let err = SimConfig::parse_str("[engine]\nmode = ablation\n").unwrap_err();
        assert!(err.to_string().contains("learning_enabled"), "{err}");
        let ok = SimConfig::parse_str(
            "[engine]\nmode = ablation\n[learner]\nlearning_enabled = false\n",
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn grouping_requires_eternal_longevity_and_both_species() {
        let err = SimConfig::parse_str("[engine]\nmode = grouping\n").unwrap_err();
        assert!(err.to_string().contains("eternal_longevity"), "{err}");
        let err = SimConfig::parse_str(
            "[engine]\nmode = grouping\neternal_longevity = true\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("prey"), "{err}");
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let err = SimConfig::parse_str("[world]\nwidth = 3\nwidth = 4\n").unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { .. }), "{err}");
    }

    #[test]
    fn zero_steps_is_rejected() {
        let err = SimConfig::parse_str("[engine]\ntotal_steps = 0\n").unwrap_err();
        assert!(err.to_string().contains("total_steps"), "{err}");
    }
}
