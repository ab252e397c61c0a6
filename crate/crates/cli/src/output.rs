use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

/// `--out`, then `$ZAK_OUT_DIR`, then `./zak-out`.
pub fn out_root(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os("ZAK_OUT_DIR") {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from("zak-out"),
    }
}

/// Writes to stdout, ignoring a closed pipe.
pub fn say(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

pub fn unix_millis() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Record of one command invocation, written last as `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: Option<String>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    /// Paths relative to the run directory.
    pub outputs: Vec<String>,
    pub stop_reason: Option<String>,
    pub exit_code: u8,
}

/// Output directory that is built under a hidden staging name and moved into
/// place on [`RunDir::commit`], so a failed command leaves nothing behind.
pub struct RunDir {
    staging: PathBuf,
    target: PathBuf,
    files: Vec<String>,
    committed: bool,
}

impl RunDir {
    pub fn create(root: &Path, name: &str) -> Result<RunDir> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let staging = root.join(format!(".{name}.partial-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir_all(&staging).with_context(|| format!("creating {}", staging.display()))?;
        Ok(RunDir {
            staging,
            target: root.join(name),
            files: Vec::new(),
            committed: false,
        })
    }

    /// Creates `rel` (subdirectories included) and records it as an output.
    pub fn file(&mut self, rel: &str) -> Result<BufWriter<File>> {
        let path = self.staging.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(rel.to_string());
        Ok(BufWriter::new(f))
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> Result<()> {
        let mut w = self.file(rel)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(rel, &text)
    }

    /// Writes `manifest.json` and moves the directory into place.
    pub fn commit(mut self, mut manifest: RunManifest) -> Result<PathBuf> {
        let mut outputs = self.files.clone();
        outputs.push("manifest.json".into());
        manifest.outputs = outputs;
        manifest.finished_unix_ms = unix_millis();
        self.write_json("manifest.json", &manifest)?;
        if self.target.exists() {
            fs::remove_dir_all(&self.target)
                .with_context(|| format!("replacing {}", self.target.display()))?;
        }
        fs::rename(&self.staging, &self.target)
            .with_context(|| format!("moving outputs to {}", self.target.display()))?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}

/// Formats a float parameter for use in a directory name.
pub fn tag(x: f64) -> String {
    format!("{x}").replace('-', "m")
}
