//! Output plumbing: atomic file writes, coverage masks and run manifests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// Writes `path` by filling a temporary file in the same directory and
/// renaming it into place, so readers never see a partial file.
pub fn atomic_write(path: &Path, fill: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let suffix = path
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    let tmp = tempfile::Builder::new()
        .prefix(".plumbline-")
        .suffix(&suffix)
        .tempfile_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    fill(tmp.path())?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Atomically writes whatever `body` produces through a buffered writer.
pub fn atomic_write_with(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    atomic_write(path, |tmp| {
        let mut w = BufWriter::new(File::create(tmp)?);
        body(&mut w)?;
        w.flush()?;
        Ok(())
    })
}

/// Writes a 1-bit grayscale PNG: white where `covered` is set.
pub fn write_mask(path: &Path, width: usize, height: usize, covered: &[bool]) -> Result<()> {
    let row_bytes = width.div_ceil(8);
    let mut packed = vec![0u8; row_bytes * height];
    for y in 0..height {
        for x in 0..width {
            if covered[y * width + x] {
                packed[y * row_bytes + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    atomic_write(path, |tmp| {
        let file = BufWriter::new(File::create(tmp)?);
        let mut enc = png::Encoder::new(file, width as u32, height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::One);
        let mut w = enc.write_header()?;
        w.write_image_data(&packed)?;
        w.finish()?;
        Ok(())
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InputRecord {
    pub path: String,
    pub width: usize,
    pub height: usize,
    /// Edgels kept from this input, when the command extracts any.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub edgels: Option<usize>,
}

/// Everything needed to rerun a command and get the same outputs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, exactly as given.
    pub argv: Vec<String>,
    /// Working directory that relative paths in `argv` resolve against.
    pub cwd: String,
    pub inputs: Vec<InputRecord>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub edgel_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub result: Option<serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], seed: u64, config: serde_json::Value) -> Self {
        let cwd = std::env::current_dir()
            .map(|d| d.display().to_string())
            .unwrap_or_default();
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            argv: argv.to_vec(),
            cwd,
            inputs: Vec::new(),
            config,
            seed,
            outputs: Vec::new(),
            edgel_count: None,
            result: None,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        atomic_write_with(path, |w| writeln!(w, "{text}"))
    }
}

/// `dir/name.ext` becomes `dir/name.manifest.json`.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

pub fn display(p: &Path) -> String {
    p.display().to_string()
}
