//! Configuration, records, checkpoints and plot scripts.

pub mod checkpoint;
pub mod config;
pub mod output;
pub mod plot;
pub mod records;

pub use checkpoint::{decode, encode, read_checkpoint, write_checkpoint, Checkpoint, CheckpointError};
pub use config::{parse_config, read_config, ConfigError, RunConfig};
pub use output::{write_events, write_run, CONFIG_ECHO_FILE, EVENTS_FILE, PLOT_FILE, REPORT_FILE};
pub use plot::emit_plot_script;
pub use records::{format_f64, read_events, read_records, write_records, write_report_series, CsvWriter, EventLog};
