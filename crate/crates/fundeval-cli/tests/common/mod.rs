//! Shared test fixtures: the on-disk demo dataset and a binary runner.

use std::path::{Path, PathBuf};

pub const IMAGE_SIZE: usize = 128;

/// Build the bundled demo dataset (16 real + 16 synthetic images) and return
/// the config path.
pub fn build_demo_dataset(root: &Path) -> PathBuf {
    fundeval::phantom::write_demo_dataset(root, 16, IMAGE_SIZE).expect("demo dataset writes")
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fundeval")
}

pub fn run_cli(args: &[&str], cwd: &Path) -> std::process::Output {
    std::process::Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}
