//! Persistence: binary and CSV grids, run configuration and manifests.

pub mod binary;
pub mod config;
pub mod csv;

pub use binary::{load_field, load_grid, save_field, save_grid, sidecar_path, GridFileHeader, ValueType};
pub use config::{parse_config, parse_config_str, ConfigBuilder, RunConfig, Scenario, SigmaRef};
pub use csv::{read_field_csv, read_grid_csv, read_xy_csv, write_field_csv, write_grid_csv, write_marginals};
