//! `swlv`: run predator-prey learning experiments and analyze their
//! recorded series.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error,
//! 4 analysis/degenerate-data error.

mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use swlv_core::analysis::csvio::{
    format_fit_report, parse_events_csv, parse_grouping_csv, parse_population_csv, FitReport,
};
use swlv_core::analysis::{
    detect_cycles, dominant_period_of, fit_lv, integrate_lv, phase_lag, CycleConfig,
};
use swlv_core::config::{Mode, SimConfig};
use swlv_core::engine::{RunHooks, StepLog};
use swlv_core::error::SimError;
use swlv_core::learner::QNetwork;
use swlv_core::world::{Species, WorldState};
use swlv_core::Simulation;

#[derive(Parser)]
#[command(name = "swlv", version, about = "Predator-prey world with learning agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a population-dynamics experiment (dynamics or transfer mode).
    RunDynamics {
        /// Bundled config name or path to a config file.
        #[arg(long)]
        config: String,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured number of steps.
        #[arg(long)]
        steps: Option<u64>,
        /// Output directory for run artifacts.
        #[arg(long)]
        out: PathBuf,
        /// Checkpoint to start from (transfer mode).
        #[arg(long)]
        init_checkpoint: Option<PathBuf>,
        /// Force learning off.
        #[arg(long)]
        no_learning: bool,
    },
    /// Run a grouping experiment with alternating prey feeding.
    RunGrouping {
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run with learning disabled and summarize the collapse.
    RunAblation {
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit interaction coefficients to a recorded population series.
    FitLv {
        /// population.csv produced by a run.
        #[arg(long)]
        csv: PathBuf,
        /// Smoothing window in samples (default: 5% of the dominant
        /// period, at least 11).
        #[arg(long)]
        window: Option<usize>,
        /// Output directory for fit.txt and lv_overlay.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a recorded series as a static SVG plot.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        kind: PlotKind,
        #[arg(long)]
        outfile: PathBuf,
        /// Fitted-trajectory CSV overlaid on a phase plot.
        #[arg(long)]
        overlay: Option<PathBuf>,
        /// events.csv drawn as feeding markers on a grouping plot.
        #[arg(long)]
        events: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Timeseries,
    Phase,
    Grouping,
}

/// Error classes mapped onto exit codes.
enum CliError {
    Config(String),
    Runtime(String),
    Analysis(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Analysis(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) | CliError::Analysis(m) => m,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> CliError {
        match e {
            SimError::Config(c) => CliError::Config(c.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

const BUNDLED: &[(&str, &str)] = &[
    ("fig3a", include_str!("../configs/fig3a.cfg")),
    ("fig3b", include_str!("../configs/fig3b.cfg")),
    ("fig5", include_str!("../configs/fig5.cfg")),
    ("fig6a", include_str!("../configs/fig6a.cfg")),
    ("fig3a-desk", include_str!("../configs/fig3a-desk.cfg")),
    ("fig3b-desk", include_str!("../configs/fig3b-desk.cfg")),
    ("fig5-desk", include_str!("../configs/fig5-desk.cfg")),
    ("fig6a-desk", include_str!("../configs/fig6a-desk.cfg")),
];

fn load_config(name_or_path: &str) -> Result<SimConfig, CliError> {
    let text = if let Some((_, text)) = BUNDLED.iter().find(|(n, _)| *n == name_or_path) {
        (*text).to_string()
    } else {
        std::fs::read_to_string(name_or_path).map_err(|e| {
            CliError::Config(format!(
                "config '{name_or_path}' is neither a bundled name nor a readable file: {e}"
            ))
        })?
    };
    SimConfig::parse_str(&text).map_err(|e| CliError::Config(e.to_string()))
}

fn apply_overrides(
    cfg: &mut SimConfig,
    seed: Option<u64>,
    steps: Option<u64>,
    no_learning: bool,
) -> Result<(), CliError> {
    if let Some(seed) = seed {
        cfg.engine.seed = seed;
    }
    if let Some(steps) = steps {
        cfg.engine.total_steps = steps;
    }
    if no_learning {
        cfg.learner.learning_enabled = false;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))
}

fn write_manifest(
    outdir: &Path,
    subcommand: &str,
    config_source: &str,
    cfg: &SimConfig,
    init_checkpoint: Option<&Path>,
) -> Result<(), CliError> {
    std::fs::create_dir_all(outdir)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", outdir.display())))?;
    let manifest = format!(
        "subcommand={subcommand}\n\
         config_source={config_source}\n\
         seed={}\n\
         total_steps={}\n\
         init_checkpoint={}\n\
         tool_version={}\n\
         resolved_config=config.copy\n",
        cfg.engine.seed,
        cfg.engine.total_steps,
        init_checkpoint
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "-".to_string()),
        env!("CARGO_PKG_VERSION"),
    );
    let path = outdir.join("manifest.txt");
    std::fs::write(&path, manifest)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Tracks ablation milestones: predator extinction and the prey count
/// reaching capacity.
struct CollapseTracker {
    capacity: u64,
    extinction_step: Option<u64>,
    cap_hit_step: Option<u64>,
}

impl RunHooks for CollapseTracker {
    fn on_record(&mut self, _world: &WorldState, log: &StepLog) {
        if self.extinction_step.is_none() && log.record.n_predators == 0 {
            self.extinction_step = Some(log.record.t);
        }
        if self.cap_hit_step.is_none() && log.record.total_prey() >= self.capacity {
            self.cap_hit_step = Some(log.record.t);
        }
    }
}

fn cmd_run(
    subcommand: &str,
    config: &str,
    seed: Option<u64>,
    steps: Option<u64>,
    out: &Path,
    init_checkpoint: Option<&Path>,
    no_learning: bool,
    allowed_modes: &[Mode],
) -> Result<(), CliError> {
    let mut cfg = load_config(config)?;
    apply_overrides(&mut cfg, seed, steps, no_learning)?;
    if !allowed_modes.contains(&cfg.engine.mode) {
        return Err(CliError::Config(format!(
            "engine.mode = {} is not valid for {subcommand}",
            cfg.engine.mode.as_str()
        )));
    }
    match (cfg.engine.mode, init_checkpoint) {
        (Mode::Transfer, None) => {
            return Err(CliError::Config(
                "transfer mode requires --init-checkpoint".into(),
            ))
        }
        (mode, Some(_)) if mode != Mode::Transfer => {
            return Err(CliError::Config(format!(
                "--init-checkpoint is only valid in transfer mode, not {}",
                mode.as_str()
            )))
        }
        _ => {}
    }
    write_manifest(out, subcommand, config, &cfg, init_checkpoint)?;

    let capacity = cfg.prey_capacity();
    let ablation = cfg.engine.mode == Mode::Ablation;
    let mut sim = match init_checkpoint {
        Some(path) => {
            let net = QNetwork::load(path)?;
            Simulation::with_checkpoint(cfg, net)?
        }
        None => Simulation::new(cfg)?,
    };
    let mut tracker = CollapseTracker {
        capacity,
        extinction_step: None,
        cap_hit_step: None,
    };
    let artifacts = sim.run(out, &mut tracker)?;
    if ablation {
        let summary = format!(
            "predator_extinction_step={}\nprey_cap_hit_step={}\n",
            tracker
                .extinction_step
                .map(|t| t.to_string())
                .unwrap_or_else(|| "none".into()),
            tracker
                .cap_hit_step
                .map(|t| t.to_string())
                .unwrap_or_else(|| "none".into()),
        );
        let path = out.join("ablation_summary.txt");
        std::fs::write(&path, summary)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    }
    println!("run complete: {}", artifacts.outdir.display());
    Ok(())
}

fn cmd_fit_lv(csv: &Path, window: Option<usize>, out: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(csv)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", csv.display())))?;
    let records =
        parse_population_csv(&text).map_err(|e| CliError::Analysis(format!("{}: {e}", csv.display())))?;
    let prey: Vec<f64> = records.iter().map(|r| r.total_prey() as f64).collect();
    let predators: Vec<f64> = records.iter().map(|r| r.n_predators as f64).collect();

    let window = match window {
        Some(w) => w,
        None => match dominant_period_of(&prey) {
            Ok(period) => (period / 20).max(11),
            Err(_) => 11,
        },
    };
    let fit = fit_lv(&records, window).map_err(|e| CliError::Analysis(e.to_string()))?;
    let lag = phase_lag(&prey, &predators).unwrap_or(f64::NAN);
    let cycles = detect_cycles(&predators, &CycleConfig::default()).cycles;
    let report = FitReport {
        fit,
        phase_lag: lag,
        cycles,
    };

    std::fs::create_dir_all(out).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    let fit_path = out.join("fit.txt");
    std::fs::write(&fit_path, format_fit_report(&report))
        .map_err(|e| CliError::Runtime(format!("{}: {e}", fit_path.display())))?;

    // fitted trajectory from the first recorded point, one row per record
    let dt = if records.len() >= 2 {
        (records[1].t - records[0].t) as f64
    } else {
        1.0
    };
    let p0 = prey[0].max(1.0);
    let q0 = predators[0].max(1.0);
    let overlay_path = out.join("lv_overlay.csv");
    let traj = integrate_lv(&fit.params, p0, q0, dt, records.len() - 1)
        .map_err(|e| CliError::Analysis(e.to_string()))?;
    let mut overlay = String::from("t,p,q\n");
    for (t, p, q) in traj {
        overlay.push_str(&format!("{t},{p},{q}\n"));
    }
    std::fs::write(&overlay_path, overlay)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", overlay_path.display())))?;
    println!("fit written: {}", fit_path.display());
    Ok(())
}

fn cmd_plot(
    csv: &Path,
    kind: PlotKind,
    outfile: &Path,
    overlay: Option<&Path>,
    events: Option<&Path>,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(csv)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", csv.display())))?;
    let spec = match kind {
        PlotKind::Timeseries => {
            let records = parse_population_csv(&text)
                .map_err(|e| CliError::Analysis(format!("{}: {e}", csv.display())))?;
            plot::PlotSpec {
                title: "Population dynamics".into(),
                x_label: "time step".into(),
                y_label: "population".into(),
                series: vec![
                    plot::Series {
                        label: "preys".into(),
                        color: "#2a9d8f",
                        points: records
                            .iter()
                            .map(|r| (r.t as f64, r.total_prey() as f64))
                            .collect(),
                    },
                    plot::Series {
                        label: "predators".into(),
                        color: "#e76f51",
                        points: records
                            .iter()
                            .map(|r| (r.t as f64, r.n_predators as f64))
                            .collect(),
                    },
                ],
                markers: Vec::new(),
            }
        }
        PlotKind::Phase => {
            let records = parse_population_csv(&text)
                .map_err(|e| CliError::Analysis(format!("{}: {e}", csv.display())))?;
            let mut series = vec![plot::Series {
                label: "simulation".into(),
                color: "#264653",
                points: records
                    .iter()
                    .map(|r| (r.total_prey() as f64, r.n_predators as f64))
                    .collect(),
            }];
            if let Some(overlay_path) = overlay {
                let overlay_text = std::fs::read_to_string(overlay_path)
                    .map_err(|e| CliError::Runtime(format!("{}: {e}", overlay_path.display())))?;
                series.push(plot::Series {
                    label: "fitted model".into(),
                    color: "#e9c46a",
                    points: parse_overlay_csv(&overlay_text)?,
                });
            }
            plot::PlotSpec {
                title: "Phase space".into(),
                x_label: "preys".into(),
                y_label: "predators".into(),
                series,
                markers: Vec::new(),
            }
        }
        PlotKind::Grouping => {
            let records = parse_grouping_csv(&text)
                .map_err(|e| CliError::Analysis(format!("{}: {e}", csv.display())))?;
            let mut markers = Vec::new();
            if let Some(events_path) = events {
                let events_text = std::fs::read_to_string(events_path)
                    .map_err(|e| CliError::Runtime(format!("{}: {e}", events_path.display())))?;
                let parsed = parse_events_csv(&events_text)
                    .map_err(|e| CliError::Analysis(format!("{}: {e}", events_path.display())))?;
                for ev in parsed {
                    markers.push(plot::Marker {
                        x: ev.t as f64,
                        color: match ev.species {
                            Species::Group => "#ee7733",
                            Species::Solo => "#0077bb",
                        },
                    });
                }
            }
            plot::PlotSpec {
                title: "Group proportion".into(),
                x_label: "time step".into(),
                y_label: "group proportion".into(),
                series: vec![plot::Series {
                    label: "group proportion".into(),
                    color: "#264653",
                    points: records
                        .iter()
                        .map(|r| (r.t as f64, r.group_proportion))
                        .collect(),
                }],
                markers,
            }
        }
    };
    std::fs::write(outfile, plot::render_svg(&spec))
        .map_err(|e| CliError::Runtime(format!("{}: {e}", outfile.display())))?;
    println!("plot written: {}", outfile.display());
    Ok(())
}

fn parse_overlay_csv(text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "t,p,q")) => {}
        _ => return Err(CliError::Analysis("overlay: expected header 't,p,q'".into())),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CliError::Analysis(format!(
                "overlay line {}: expected 3 fields",
                idx + 1
            )));
        }
        let p: f64 = fields[1]
            .parse()
            .map_err(|e| CliError::Analysis(format!("overlay line {}: {e}", idx + 1)))?;
        let q: f64 = fields[2]
            .parse()
            .map_err(|e| CliError::Analysis(format!("overlay line {}: {e}", idx + 1)))?;
        out.push((p, q));
    }
    Ok(out)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::RunDynamics {
            config,
            seed,
            steps,
            out,
            init_checkpoint,
            no_learning,
        } => cmd_run(
            "run-dynamics",
            &config,
            seed,
            steps,
            &out,
            init_checkpoint.as_deref(),
            no_learning,
            &[Mode::Dynamics, Mode::Transfer],
        ),
        Command::RunGrouping {
            config,
            seed,
            steps,
            out,
        } => cmd_run(
            "run-grouping",
            &config,
            seed,
            steps,
            &out,
            None,
            false,
            &[Mode::Grouping],
        ),
        Command::RunAblation {
            config,
            seed,
            steps,
            out,
        } => cmd_run(
            "run-ablation",
            &config,
            seed,
            steps,
            &out,
            None,
            false,
            &[Mode::Ablation],
        ),
        Command::FitLv { csv, window, out } => cmd_fit_lv(&csv, window, &out),
        Command::Plot {
            csv,
            kind,
            outfile,
            overlay,
            events,
        } => cmd_plot(&csv, kind, &outfile, overlay.as_deref(), events.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
