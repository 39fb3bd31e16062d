//! Drive the batch front end from code: run every sample config and print
//! the resulting report.
//!
//! `cargo run --example run_config -- [out_dir]`

use std::path::{Path, PathBuf};

use bosonic_limits::cli;

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("bosonic-limits-examples"));
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    let mut names: Vec<_> = std::fs::read_dir(&configs)
        .expect("examples/configs exists")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    names.sort();
    for cfg in names {
        let stem = cfg.file_stem().unwrap().to_string_lossy().to_string();
        let dir = out.join(&stem);
        let code = cli::main_with_args([
            "bosonic-limits",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        println!("== {stem} (exit {code})");
        if let Ok(text) = std::fs::read_to_string(dir.join("report.csv")) {
            print!("{text}");
        }
    }
}
