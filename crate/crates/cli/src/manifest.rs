use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Versions {
    kns_core: &'static str,
    kns_cli: &'static str,
}

/// Run metadata written next to every output file.
#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command_line: &'a [String],
    config: &'a Value,
    versions: Versions,
    wall_seconds: f64,
    outputs: Vec<FileDigest>,
}

/// Collects output files for one command invocation.
pub struct Recorder {
    argv: Vec<String>,
    config: Value,
    start: Instant,
    written: Vec<PathBuf>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

impl Recorder {
    pub fn new(config: Value) -> Self {
        Recorder {
            argv: std::env::args().collect(),
            config,
            start: Instant::now(),
            written: Vec::new(),
        }
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> std::io::Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, bytes)?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    /// Writes `<output>.manifest.json` beside each written file.
    pub fn finish(self) -> std::io::Result<()> {
        let wall_seconds = self.start.elapsed().as_secs_f64();
        for path in &self.written {
            let bytes = fs::read(path)?;
            let manifest = RunManifest {
                command_line: &self.argv,
                config: &self.config,
                versions: Versions {
                    kns_core: kns_core::VERSION,
                    kns_cli: env!("CARGO_PKG_VERSION"),
                },
                wall_seconds,
                outputs: vec![FileDigest {
                    path: path.display().to_string(),
                    sha256: sha256_hex(&bytes),
                }],
            };
            let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            fs::write(manifest_path(path), text + "\n")?;
        }
        Ok(())
    }
}
