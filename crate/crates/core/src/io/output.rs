//! The files of one run: report, config echo, series, events, plot script.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::{Event, ExperimentReport};
use crate::io::config::RunConfig;
use crate::io::plot::emit_plot_script;
use crate::io::records::{write_report_series, EventLog};

pub const REPORT_FILE: &str = "report.json";
pub const CONFIG_ECHO_FILE: &str = "config.toml";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const PLOT_FILE: &str = "plot.gp";

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes everything for a finished run into `dir`, returning the paths.
pub fn write_run(dir: &Path, config: &RunConfig, report: &ExperimentReport) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let echo = dir.join(CONFIG_ECHO_FILE);
    write(&echo, &config.to_toml())?;
    written.push(echo);
    let path = dir.join(REPORT_FILE);
    write(&path, &report.to_json())?;
    written.push(path);
    written.extend(write_report_series(dir, report)?);
    written.push(write_events(dir, &report.events)?);
    if config.emit_plots {
        let path = dir.join(PLOT_FILE);
        write(&path, &emit_plot_script(report))?;
        written.push(path);
    }
    Ok(written)
}

/// Event log of a run (possibly empty).
pub fn write_events(dir: &Path, events: &[Event]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(EVENTS_FILE);
    let mut log = EventLog::create(&path)?;
    for e in events {
        log.log(e)?;
    }
    log.finish()?;
    Ok(path)
}
