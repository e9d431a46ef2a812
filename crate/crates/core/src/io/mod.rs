//! Matrix files, bundles, configuration and CSV exports.

pub mod bundle;
pub mod config;
pub mod csv_out;
pub mod matrix;

pub use bundle::{read_rom, read_system, write_rom, write_system};
pub use config::RunConfig;
pub use matrix::{read_matrix, write_matrix};
