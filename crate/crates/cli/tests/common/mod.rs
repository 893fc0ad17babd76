//! Helpers for CLI integration tests: fixture images and binary
//! invocation.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use irforge_core::codec::{encode_image, ImageFormat};
use irforge_core::raster::Raster;

pub struct TestRng(pub u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.wrapping_add(0x9e3779b97f4a7c15))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0
    }

    pub fn next_u8(&mut self) -> u8 {
        (self.next_u64() >> 56) as u8
    }
}

pub fn random_raster(rng: &mut TestRng, width: u32, height: u32, channels: u8) -> Raster {
    let n = width as usize * height as usize * channels as usize;
    Raster::new(width, height, channels, (0..n).map(|_| rng.next_u8()).collect()).unwrap()
}

pub fn write_png(path: &Path, raster: &Raster) {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).unwrap();
    }
    std::fs::write(path, encode_image(raster, ImageFormat::Png).unwrap()).unwrap();
}

/// Runs the irforge binary with a clean environment (IRFORGE_WORKERS
/// unset unless the test sets it).
pub fn irforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irforge"))
        .args(args)
        .env_remove("IRFORGE_WORKERS")
        .output()
        .expect("failed to launch irforge")
}

pub fn irforge_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut command = Command::new(env!("CARGO_BIN_EXE_irforge"));
    command.args(args).env_remove("IRFORGE_WORKERS");
    for (key, value) in env {
        command.env(key, value);
    }
    command.output().expect("failed to launch irforge")
}

pub fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("process terminated by signal")
}

pub fn stdout_str(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

pub fn stderr_str(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Builds `<root>/<loc>/<modality>/...` pools of random images.
pub fn build_dataset(
    rng: &mut TestRng,
    root: &Path,
    locations: &[(&str, usize, usize)],
    size: u32,
) {
    for (loc, rgb_count, ir_count) in locations {
        for i in 0..*rgb_count {
            write_png(
                &root.join(loc).join("rgb").join(format!("{loc}_r{i:02}.png")),
                &random_raster(rng, size, size, 3),
            );
        }
        for i in 0..*ir_count {
            write_png(
                &root.join(loc).join("ir").join(format!("{loc}_i{i:02}.png")),
                &random_raster(rng, size, size, 1),
            );
        }
    }
}
