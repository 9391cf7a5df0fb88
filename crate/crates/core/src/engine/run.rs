//! Run loop: drives steps, records population/grouping/event rows,
//! writes the run log and the final snapshot + checkpoint.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::analysis::csvio::{EVENTS_HEADER, GROUPING_HEADER, POPULATION_HEADER};
use crate::analysis::{group_proportion, PopulationRecord};
use crate::config::Mode;
use crate::engine::{Simulation, StepReport};
use crate::error::SimError;
use crate::world::{Species, WorldState};

/// Paths produced by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub outdir: PathBuf,
    pub config_copy: PathBuf,
    pub population_csv: PathBuf,
    pub grouping_csv: Option<PathBuf>,
    pub events_csv: Option<PathBuf>,
    pub checkpoint: PathBuf,
    pub snapshot: PathBuf,
    pub run_log: PathBuf,
}

/// Step summary handed to hooks together with the recorded row.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLog {
    pub report: StepReport,
    pub record: PopulationRecord,
}

/// Observer invoked at every recorded step.
pub trait RunHooks {
    fn on_record(&mut self, world: &WorldState, log: &StepLog) {
        let _ = (world, log);
    }
}

/// No-op hooks.
pub struct NoHooks;

impl RunHooks for NoHooks {}

struct CsvSink {
    path: PathBuf,
    writer: BufWriter<File>,
}

impl CsvSink {
    fn create(path: PathBuf, header: &str) -> Result<CsvSink, SimError> {
        let file = File::create(&path).map_err(|e| SimError::io(&path, e))?;
        let mut writer = BufWriter::new(file);
        writeln!(writer, "{header}").map_err(|e| SimError::io(&path, e))?;
        writer.flush().map_err(|e| SimError::io(&path, e))?;
        Ok(CsvSink { path, writer })
    }

    /// Write one row and flush, so an interrupted run keeps every
    /// completed record.
    fn row(&mut self, line: &str) -> Result<(), SimError> {
        writeln!(self.writer, "{line}").map_err(|e| SimError::io(&self.path, e))?;
        self.writer.flush().map_err(|e| SimError::io(&self.path, e))
    }
}

impl Simulation {
    /// Current population row.
    pub fn population_record(&self) -> PopulationRecord {
        let world = self.world();
        PopulationRecord {
            t: world.time(),
            n_predators: world.alive_predators(),
            n_prey_group: world.alive_prey(Species::Group),
            n_prey_solo: world.alive_prey(Species::Solo),
            group_proportion: group_proportion(world),
        }
    }

    /// Drive `total_steps` steps, recording every `record_every` steps
    /// and writing all artifacts into `outdir`.
    pub fn run(&mut self, outdir: &Path, hooks: &mut dyn RunHooks) -> Result<RunArtifacts, SimError> {
        std::fs::create_dir_all(outdir).map_err(|e| SimError::io(outdir, e))?;
        let config_copy = outdir.join("config.copy");
        std::fs::write(&config_copy, self.config().to_config_string())
            .map_err(|e| SimError::io(&config_copy, e))?;

        let grouping_mode = self.config().engine.mode == Mode::Grouping;
        let mut population = CsvSink::create(outdir.join("population.csv"), POPULATION_HEADER)?;
        let mut grouping = if grouping_mode {
            Some(CsvSink::create(outdir.join("grouping.csv"), GROUPING_HEADER)?)
        } else {
            None
        };
        let mut events = if grouping_mode {
            Some(CsvSink::create(outdir.join("events.csv"), EVENTS_HEADER)?)
        } else {
            None
        };
        let log_path = outdir.join("run.log");
        let log_file = File::create(&log_path).map_err(|e| SimError::io(&log_path, e))?;
        let mut log = BufWriter::new(log_file);

        let total_steps = self.config().engine.total_steps;
        let record_every = self.config().engine.record_every;
        let snapshot_every = self.config().engine.snapshot_every;
        let snapshot_path = outdir.join("world.snap");
        let checkpoint_path = outdir.join("qnet.ckpt");

        for _ in 0..total_steps {
            let report = self.step()?;
            let t = report.t;
            writeln!(
                log,
                "t={t} predators={} prey_group={} prey_solo={} captures={} batches={} \
                 mean_reward={:.6} wall_ms={:.3}",
                self.world().alive_predators(),
                self.world().alive_prey(Species::Group),
                self.world().alive_prey(Species::Solo),
                report.captures,
                report.batches_trained,
                report.mean_reward,
                report.wall.as_secs_f64() * 1e3,
            )
            .map_err(|e| SimError::io(&log_path, e))?;

            if let (Some(events), Some(feeding)) = (events.as_mut(), report.feeding) {
                events.row(&format!(
                    "{t},{},{}",
                    feeding.species.as_str(),
                    feeding.amount
                ))?;
            }
            if t % record_every == 0 {
                let record = self.population_record();
                population.row(&crate::analysis::csvio::population_row(&record))?;
                if let Some(grouping) = grouping.as_mut() {
                    grouping.row(&format!(
                        "{t},{},{},{}",
                        record.group_proportion, record.n_prey_group, record.n_prey_solo
                    ))?;
                }
                log.flush().map_err(|e| SimError::io(&log_path, e))?;
                hooks.on_record(self.world(), &StepLog { report, record });
            }
            if snapshot_every > 0 && t % snapshot_every == 0 {
                write_atomically(&snapshot_path, &self.world().encode_snapshot())?;
                write_atomically(&checkpoint_path, &self.network().encode())?;
            }
        }

        write_atomically(&snapshot_path, &self.world().encode_snapshot())?;
        write_atomically(&checkpoint_path, &self.network().encode())?;
        log.flush().map_err(|e| SimError::io(&log_path, e))?;

        Ok(RunArtifacts {
            outdir: outdir.to_path_buf(),
            config_copy,
            population_csv: population.path,
            grouping_csv: grouping.map(|g| g.path),
            events_csv: events.map(|e| e.path),
            checkpoint: checkpoint_path,
            snapshot: snapshot_path,
            run_log: log_path,
        })
    }
}

/// Write via a temp file and rename, so a crash never leaves a torn
/// snapshot behind.
fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), SimError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| SimError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| SimError::io(path, e))
}
