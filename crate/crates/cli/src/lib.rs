//! Experiment driver for the wavelet-operator ensemble: dataset generation,
//! training, evaluation, and the two sweep studies. The binary is a thin
//! clap wrapper over [`commands`]; all file formats live here.

pub mod checkpoint;
pub mod commands;
pub mod config;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use commands::{cmd_eval, cmd_generate, cmd_sweep_beta, cmd_sweep_tds, cmd_train};
pub use config::{parse_points, ProbePoint, RunConfig};
