//! Library behind the `gan` binary: experiment configs and one function per
//! subcommand. Every command is deterministic given its seeds and writes its
//! files atomically.

pub mod config;
pub mod error;
pub mod fig1;
pub mod output;
pub mod parzen_cmd;
pub mod sample;
pub mod theory_check;
pub mod train_cmd;

pub use config::{resolve_out_dir, DataSource, ExperimentConfig, Fig1Settings, CONFIG_VERSION, OUT_DIR_ENV};
pub use error::{CliError, CliResult};
pub use fig1::{cmd_fig1, read_curves_csv, CurveRow, Fig1Snapshot, Fig1Summary};
pub use output::write_atomic;
pub use parzen_cmd::{cmd_eval_parzen, parse_sigma_grid};
pub use sample::{cmd_interpolate, cmd_sample};
pub use theory_check::{cmd_theory_check, CheckRow, TheoryReport};
pub use train_cmd::{cmd_train, RunManifest, TrainOutcome};
