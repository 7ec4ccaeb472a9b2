//! File formats: CSV tables, binary snapshots and run manifests.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use stepflow::{Coefficients, Grid, ScalarField};

use crate::config::GridSpec;
use crate::error::{CliError, CliResult};

/// File name of the manifest written into every output directory.
pub const MANIFEST_NAME: &str = "manifest.json";

/// 17 significant digits, `.` decimal separator.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    Ok(())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    ensure_parent(path)?;
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

/// Row-by-row CSV writer.
pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> CliResult<Self> {
        ensure_parent(path)?;
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        let mut w = Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        w.line(&header.join(","))?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> CliResult<()> {
        writeln!(self.out, "{s}").map_err(|e| io_err(&self.path, e))
    }

    pub fn row(&mut self, cells: &[f64]) -> CliResult<()> {
        let s: Vec<String> = cells.iter().map(|&x| fmt(x)).collect();
        self.line(&s.join(","))
    }

    /// A row with preformatted cells, for integer or boolean columns.
    pub fn row_text(&mut self, cells: &[String]) -> CliResult<()> {
        self.line(&cells.join(","))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.out.flush().map_err(|e| io_err(&self.path, e))
    }
}

/// Binary snapshot: `u64 n`, `f64 L`, `f64 B1`, `f64 B2`, then `n²` values of
/// `h̃` in row-major order (first index `x1`), all little-endian.
pub fn snapshot_bytes(f: &ScalarField) -> Vec<u8> {
    let n = f.grid().n();
    let mut out = Vec::with_capacity(32 + 8 * n * n);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&f.grid().length().to_le_bytes());
    for b in f.slope() {
        out.extend_from_slice(&b.to_le_bytes());
    }
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_snapshot(path: &Path, f: &ScalarField) -> CliResult<()> {
    write_bytes(path, &snapshot_bytes(f))
}

pub fn parse_snapshot(bytes: &[u8], source: &Path) -> CliResult<ScalarField> {
    let bad = |m: String| CliError::Config(format!("snapshot {}: {m}", source.display()));
    if bytes.len() < 32 {
        return Err(bad(format!("truncated header ({} bytes)", bytes.len())));
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("8-byte slice") };
    let n = u64::from_le_bytes(word(0));
    let length = f64::from_le_bytes(word(1));
    let slope = [f64::from_le_bytes(word(2)), f64::from_le_bytes(word(3))];
    let count = usize::try_from(n)
        .ok()
        .and_then(|n| n.checked_mul(n))
        .ok_or_else(|| bad(format!("grid size {n} is too large")))?;
    if bytes.len() != 32 + 8 * count {
        return Err(bad(format!(
            "expected {} bytes for n = {n}, found {}",
            32 + 8 * count,
            bytes.len()
        )));
    }
    let grid = Grid::new(n as usize, length).map_err(|e| bad(e.to_string()))?;
    let values = (0..count).map(|i| f64::from_le_bytes(word(4 + i))).collect();
    ScalarField::new(grid, values, slope).map_err(|e| bad(e.to_string()))
}

pub fn read_snapshot(path: &Path) -> CliResult<ScalarField> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Config(format!("cannot read snapshot {}: {e}", path.display())))?;
    parse_snapshot(&bytes, path)
}

/// CSV with columns `x1, x2, h_tilde`.
pub fn write_field_csv(path: &Path, f: &ScalarField) -> CliResult<()> {
    let mut w = CsvWriter::create(path, &["x1", "x2", "h_tilde"])?;
    for (idx, &v) in f.values().iter().enumerate() {
        let (x1, x2) = f.grid().point(idx);
        w.row(&[x1, x2, v])?;
    }
    w.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Provenance record written next to the outputs of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub argv: Vec<String>,
    /// Resolved configuration; `--config manifest.json` re-runs it.
    pub config: serde_json::Value,
    pub coefficients: Option<Coefficients>,
    pub grid: Option<GridSpec>,
    pub seed: Option<u64>,
    pub version: String,
    pub threads: usize,
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects the files of one run and writes its manifests.
pub struct RunRecord {
    command: String,
    config: serde_json::Value,
    coefficients: Option<Coefficients>,
    grid: Option<GridSpec>,
    seed: Option<u64>,
    started_unix: f64,
    clock: Instant,
    files: Vec<PathBuf>,
}

impl RunRecord {
    pub fn start<T: Serialize>(command: &str, config: &T) -> CliResult<Self> {
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Ok(Self {
            command: command.to_string(),
            config: serde_json::to_value(config).map_err(|e| CliError::Io(e.to_string()))?,
            coefficients: None,
            grid: None,
            seed: None,
            started_unix,
            clock: Instant::now(),
            files: Vec::new(),
        })
    }

    pub fn coefficients(mut self, c: Coefficients) -> Self {
        self.coefficients = Some(c);
        self
    }

    pub fn grid(mut self, g: &Grid) -> Self {
        self.grid = Some(GridSpec {
            n: g.n(),
            length: g.length(),
        });
        self
    }

    pub fn seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn add(&mut self, path: &Path) {
        self.files.push(path.to_path_buf());
    }

    /// Writes one manifest into each directory that received an output.
    pub fn finish(self) -> CliResult<Vec<PathBuf>> {
        let mut outputs = Vec::with_capacity(self.files.len());
        for path in &self.files {
            let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
            outputs.push(OutputDigest {
                file: path.display().to_string(),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            });
        }
        let manifest = Manifest {
            command: self.command,
            argv: std::env::args().collect(),
            config: self.config,
            coefficients: self.coefficients,
            grid: self.grid,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            started_unix: self.started_unix,
            wall_clock_seconds: self.clock.elapsed().as_secs_f64(),
            outputs,
        };
        let mut dirs: Vec<PathBuf> = self.files.iter().map(|p| output_dir(p)).collect();
        dirs.sort();
        dirs.dedup();
        let mut written = Vec::new();
        for dir in dirs {
            let path = dir.join(MANIFEST_NAME);
            write_json(&path, &manifest)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn output_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use stepflow::random_smooth_field;

    #[test]
    fn snapshot_round_trip_is_exact() {
        let f = random_smooth_field(Grid::new(16, 2.5).unwrap(), [0.3, -1.0], 9, 4, 0.2);
        let back = parse_snapshot(&snapshot_bytes(&f), Path::new("mem")).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn truncated_snapshot_is_a_config_error() {
        let f = ScalarField::zeros(Grid::new(8, 1.0).unwrap(), [1.0, 0.0]);
        let bytes = snapshot_bytes(&f);
        let err = parse_snapshot(&bytes[..bytes.len() - 8], Path::new("x.bin")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("x.bin"));
    }

    #[test]
    fn nonzero_mean_snapshot_is_rejected() {
        let f = ScalarField::zeros(Grid::new(8, 1.0).unwrap(), [1.0, 0.0]);
        let mut bytes = snapshot_bytes(&f);
        for i in 0..64 {
            bytes[32 + 8 * i..40 + 8 * i].copy_from_slice(&1.0f64.to_le_bytes());
        }
        assert!(parse_snapshot(&bytes, Path::new("m.bin")).is_err());
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt(-2.0), "-2.0000000000000000e0");
    }
}
