//! File formats, configuration parsing, statistics, and the command
//! implementations behind the `mtmv` binary.

pub mod arch_io;
pub mod commands;
pub mod config_io;
pub mod csv_io;
pub mod dataset_io;
pub mod error;
pub mod model_io;
pub mod params_io;
pub mod round_log;
pub mod stats;
pub mod tensor_io;
