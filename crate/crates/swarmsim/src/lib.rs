//! File formats and presentation around the `swarmsim-core` simulator:
//! TOML scenario files, CSV logs, SVG figures and the `swarmsim` CLI.

pub mod config;
pub mod csv;
pub mod plots;

pub use config::{load_scenario, parse_scenario, ConfigError};
pub use csv::{format_summary, summary_from_dir, CsvSink};
pub use plots::{emit_plots, PlotCollector, PlotSpec};
