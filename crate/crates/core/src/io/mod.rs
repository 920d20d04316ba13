//! Run configuration, field snapshots, chord profiles, residual logs, and
//! final-state files.

mod config;
mod profile;
mod state;
mod vtk;

pub use config::{
    parse_config, parse_config_str, ConfigError, GeometrySource, RunConfig, V2Setting,
};
pub use profile::{extract_profile, PointValues, ProfileError, ProfileExtract, ProfileSample};
pub use state::{load_state, save_state, SavedState, StateError};
pub use vtk::write_vtk;

use crate::solver::ResidualSample;
use std::io::Write;
use std::path::Path;

/// Incremental residual log: `step,time,r_u,r_k`, one flushed row per step,
/// so an aborted run still leaves every completed step on disk.
pub struct ResidualLog {
    w: std::io::BufWriter<std::fs::File>,
}

impl ResidualLog {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "step,time,r_u,r_k")?;
        w.flush()?;
        Ok(ResidualLog { w })
    }

    pub fn append(&mut self, row: &ResidualSample) -> std::io::Result<()> {
        writeln!(self.w, "{},{},{},{}", row.step, row.time, row.r_u, row.r_k)?;
        self.w.flush()
    }
}

/// The whole log at once, for runs kept in memory.
pub fn write_residual_csv(path: &Path, rows: &[ResidualSample]) -> std::io::Result<()> {
    let mut log = ResidualLog::create(path)?;
    for row in rows {
        log.append(row)?;
    }
    Ok(())
}
