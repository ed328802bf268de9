//! Configuration-driven runner for the lifelong-RL memory studies: a
//! forgetting sweep over replay-memory sizes, a latent-separation study of the
//! C-VAE, and pseudo-rehearsal with a DQN agent.
//!
//! A run writes `<name>.csv` (metrics), one `<name>_<chart>.svg` per chart and
//! `<name>.manifest` (timestamps and file list) into the output directory.

pub mod config;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod retention;
pub mod svg;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub use config::{parse_config, parse_str, ExperimentConfig};
pub use error::LabError;
pub use experiments::{run_experiment, RunOutput};
pub use metrics::{emit_csv, format_g9, MetricsRow};
pub use retention::RetentionMatrix;
pub use svg::{emit_svg, Chart, Series};

pub const OUT_ENV: &str = "REHEARSAL_LAB_OUT";

/// `--out` first, then the config's `out`, then `$REHEARSAL_LAB_OUT`, then `./lab-out`.
pub fn resolve_out_dir(cli: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("lab-out"))
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub csv: PathBuf,
    pub charts: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub output: RunOutput,
}

fn unix_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Runs the experiment on `jobs` worker threads (0 = one per core) and writes
/// every output file. Metric and chart files carry no timing information.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path, jobs: usize) -> Result<RunSummary, LabError> {
    if cfg.experiment == config::ExperimentKind::LatentSeparation {
        // Fail on missing inputs before spending any compute.
        experiments::load_dataset(cfg)?;
    }
    std::fs::create_dir_all(dir)?;
    let started = unix_seconds();
    let clock = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| LabError::Io(std::io::Error::other(e)))?;
    let output = pool.install(|| run_experiment(cfg))?;

    let name = cfg.run_name();
    let csv = dir.join(format!("{name}.csv"));
    emit_csv(&output.rows, &csv)?;
    let mut charts = Vec::new();
    for (suffix, chart) in &output.charts {
        let path = dir.join(format!("{name}_{suffix}.svg"));
        emit_svg(chart, &path)?;
        charts.push(path);
    }

    let manifest = dir.join(format!("{name}.manifest"));
    let mut m = String::new();
    m.push_str(&format!("experiment = {}\n", cfg.experiment.name()));
    m.push_str(&format!("name = {name}\n"));
    m.push_str(&format!("seeds = {}..{}\n", cfg.seed, cfg.seed + cfg.seeds as u64));
    m.push_str(&format!("started_unix = {started:.3}\n"));
    m.push_str(&format!("elapsed_seconds = {:.3}\n", clock.elapsed().as_secs_f64()));
    m.push_str(&format!("rows = {}\n", output.rows.len()));
    for p in std::iter::once(&csv).chain(&charts) {
        m.push_str(&format!("file = {}\n", p.display()));
    }
    std::fs::write(&manifest, m)?;

    Ok(RunSummary {
        csv,
        charts,
        manifest,
        output,
    })
}
