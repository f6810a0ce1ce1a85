//! Output files and the run manifest that lists them.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::cache::{sha256_hex, CacheLog};

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub config_sha256: String,
    pub versions: Versions,
    pub wall_clock_seconds: f64,
    pub stages: Vec<Stage>,
    pub cache: CacheLog,
    pub exit_code: i32,
    pub files: Vec<FileEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub freerep: &'static str,
    pub freerep_cli: &'static str,
    pub report_schema: u32,
}

impl Versions {
    pub fn current() -> Versions {
        Versions {
            freerep: env!("CARGO_PKG_VERSION"),
            freerep_cli: env!("CARGO_PKG_VERSION"),
            report_schema: freerep::asymptotics::report::SCHEMA_VERSION,
        }
    }
}

/// Writes files under one directory and remembers their digests.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    pub files: Vec<FileEntry>,
}

impl Outputs {
    pub fn new(dir: &Path) -> std::io::Result<Outputs> {
        fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry { path: name.to_string(), sha256: sha256_hex(contents.as_bytes()), bytes: contents.len() as u64 });
        Ok(path)
    }
}

/// Named wall-clock stages.
#[derive(Debug)]
pub struct Timer {
    start: Instant,
    last: Instant,
    pub stages: Vec<Stage>,
}

impl Timer {
    pub fn start() -> Timer {
        let now = Instant::now();
        Timer { start: now, last: now, stages: Vec::new() }
    }

    pub fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.stages.push(Stage { name: name.to_string(), seconds: (now - self.last).as_secs_f64() });
        self.last = now;
    }

    pub fn total(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}
