//! Batch front end behind the `vcosim` binary: JSON configuration, named
//! experiments, and CSV/JSON output committed atomically.

mod commands;
mod config;
mod output;

pub use config::{
    HigherOrderSettings, NtfSettings, RunConfig, StfSettings, SweepAmpSettings, SweepFreqSettings,
    SCHEMA_VERSION,
};
pub use output::{check_target, csv, num, Artifacts};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::modulator::LockReport;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Run,
    SweepAmp,
    SweepFreq,
    Ntf,
    Stf,
    Compare,
    HigherOrder,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Run,
        Experiment::SweepAmp,
        Experiment::SweepFreq,
        Experiment::Ntf,
        Experiment::Stf,
        Experiment::Compare,
        Experiment::HigherOrder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Run => "run",
            Experiment::SweepAmp => "sweep-amp",
            Experiment::SweepFreq => "sweep-freq",
            Experiment::Ntf => "ntf",
            Experiment::Stf => "stf",
            Experiment::Compare => "compare",
            Experiment::HigherOrder => "higher-order",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::config(format!("unknown experiment {s:?}")))
    }
}

/// One CLI invocation.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub experiment: Experiment,
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    /// Overrides `sim.seed`.
    pub seed: Option<u64>,
    /// Worker threads; `None` lets the pool decide.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// The loop lost lock or diverged; outputs were still written.
    Flagged,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Flagged => 1,
        }
    }
}

/// Process exit code for an error: 2 for configuration and I/O problems,
/// 1 for failures of the simulation itself.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::Unstable(_) | Error::Logic(_) => 1,
        _ => 2,
    }
}

/// Summary written to `metrics.json`. Fields an experiment does not
/// produce are `null`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Metrics {
    pub experiment: String,
    pub tool_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub sndr_dba: Option<f64>,
    pub snr_dba: Option<f64>,
    pub thd_pct: Option<f64>,
    pub aop_dbv: Option<f64>,
    pub dr_db: Option<f64>,
    /// Least-squares slope of the output PSD over `slope_band_hz`; positive
    /// when the noise rises with frequency.
    pub slope_db_per_dec: Option<f64>,
    pub lock: Option<LockReport>,
    pub details: serde_json::Map<String, serde_json::Value>,
}

/// Context shared by the experiment implementations.
pub struct RunContext {
    pub cfg: RunConfig,
    pub experiment: Experiment,
    pub config_sha256: String,
}

impl RunContext {
    pub fn new(mut cfg: RunConfig, experiment: Experiment, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            cfg.sim.seed = s;
        }
        let config_sha256 = hex::encode(Sha256::digest(cfg.canonical_json().as_bytes()));
        Self {
            cfg,
            experiment,
            config_sha256,
        }
    }

    pub fn comment(&self) -> String {
        format!(
            "config_sha256={} vcosim={}",
            self.config_sha256, TOOL_VERSION
        )
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            experiment: self.experiment.name().to_owned(),
            tool_version: TOOL_VERSION.to_owned(),
            config_sha256: self.config_sha256.clone(),
            seed: self.cfg.sim.seed,
            ..Metrics::default()
        }
    }
}

/// Runs `experiment` on an already parsed configuration and returns the
/// files it would write.
pub fn produce(
    cfg: RunConfig,
    experiment: Experiment,
    seed: Option<u64>,
) -> Result<(Artifacts, Status)> {
    let ctx = RunContext::new(cfg, experiment, seed);
    ctx.cfg.validate()?;
    commands::dispatch(&ctx)
}

fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_json(&text)
}

/// Loads the configuration, runs the experiment on a pool of `jobs`
/// threads and commits the outputs. Nothing is written unless the whole
/// run succeeds.
pub fn execute(inv: &Invocation) -> Result<Status> {
    let cfg = load(&inv.config_path)?;
    check_target(&inv.out_dir)?;
    if inv.jobs == Some(0) {
        return Err(Error::config("--jobs must be at least 1"));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = inv.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let (artifacts, status) = pool.install(|| produce(cfg, inv.experiment, inv.seed))?;
    artifacts.commit(&inv.out_dir)?;
    Ok(status)
}
