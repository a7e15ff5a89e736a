#![allow(dead_code)]

use starbeam_cli::ExperimentConfig;

/// A grid small enough to run in milliseconds per cell.
pub const TINY: &str = r#"
trials = 1
n_y = 2
elements = 4
clusters = 4
bs_antennas = 4
user_antennas = 2
users = 2
max_iterations = 5
record_timing = false

[sweep]
values = [0, 10]
"#;

pub fn tiny() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(TINY).unwrap()
}
