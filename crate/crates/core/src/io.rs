//! Dataset serialization (TSV with a '#'-prefixed metadata header, or
//! JSON), atomic file writes, the run cache, and config hashing.
//!
//! Every artifact carries the same canonical header: schema version,
//! dataset kind, engine version, the full generating parameters as JSON,
//! and the RNG seed. Writes go to a temporary file in the target directory
//! followed by a rename, so an interrupted write never leaves a partially
//! valid dataset behind.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::crossings::{CrossingKind, CrossingRecord, SectorPair};
use crate::floquet::ModelParams;
use crate::spectrum::{ButterflyDataset, ParityLabel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema mismatch: file has version {found}, this build reads {expected}")]
    SchemaMismatch { found: u32, expected: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Tsv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(OutputFormat::Tsv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?} (expected tsv or json)")),
        }
    }
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Tsv => "tsv",
            OutputFormat::Json => "json",
        }
    }
}

/// Canonical metadata carried by every dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema_version: u32,
    pub kind: String,
    pub engine_version: String,
    /// Full generating parameters (command-specific JSON object).
    pub params: serde_json::Value,
    pub rng_seed: u64,
}

impl DatasetMeta {
    pub fn new(kind: &str, params: serde_json::Value, rng_seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            engine_version: crate::ENGINE_VERSION.to_string(),
            params,
            rng_seed,
        }
    }
}

/// A row type that knows its dataset kind and column layout.
pub trait DatasetRow: Sized + Clone + PartialEq {
    const KIND: &'static str;
    fn columns() -> &'static [&'static str];
    fn to_fields(&self) -> Vec<String>;
    fn from_fields(fields: &[&str]) -> Result<Self, String>;
}

/// A typed dataset: metadata plus rows (already in deterministic order).
#[derive(Debug, Clone, PartialEq)]
pub struct TypedDataset<R: DatasetRow> {
    pub meta: DatasetMeta,
    pub rows: Vec<R>,
}

fn fmt_f64(x: f64) -> String {
    // Shortest round-trip decimal (std's Display for f64).
    format!("{x}")
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("bad float {s:?}: {e}"))
}

// --- Row types ---------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ButterflyRow {
    pub heta: f64,
    pub phase: f64,
    pub parity: ParityLabel,
    pub residual: f64,
}

impl DatasetRow for ButterflyRow {
    const KIND: &'static str = "butterfly";
    fn columns() -> &'static [&'static str] {
        &["heta", "phase", "parity", "residual"]
    }
    fn to_fields(&self) -> Vec<String> {
        vec![fmt_f64(self.heta), fmt_f64(self.phase), self.parity.to_string(), fmt_f64(self.residual)]
    }
    fn from_fields(fields: &[&str]) -> Result<Self, String> {
        let parity = match fields[2] {
            "even" => ParityLabel::Even,
            "odd" => ParityLabel::Odd,
            "unresolved" => ParityLabel::Unresolved,
            other => return Err(format!("bad parity {other:?}")),
        };
        Ok(Self {
            heta: parse_f64(fields[0])?,
            phase: parse_f64(fields[1])?,
            parity,
            residual: parse_f64(fields[3])?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingRow {
    pub heta_star: f64,
    pub kind: CrossingKind,
    pub sector_pair: SectorPair,
    /// −1 encodes "all levels" (the collapse record).
    pub level_i: i64,
    pub level_j: i64,
    pub gap_bound: f64,
    /// "-" when untested.
    pub alpha_independent: Option<bool>,
}

impl From<&CrossingRecord> for CrossingRow {
    fn from(r: &CrossingRecord) -> Self {
        Self {
            heta_star: r.heta_star,
            kind: r.kind,
            sector_pair: r.sector_pair,
            level_i: r.level_ids.map_or(-1, |(i, _)| i as i64),
            level_j: r.level_ids.map_or(-1, |(_, j)| j as i64),
            gap_bound: r.gap_bound,
            alpha_independent: r.alpha_independent,
        }
    }
}

impl CrossingRow {
    pub fn to_record(&self) -> CrossingRecord {
        CrossingRecord {
            heta_star: self.heta_star,
            kind: self.kind,
            sector_pair: self.sector_pair,
            level_ids: if self.level_i < 0 {
                None
            } else {
                Some((self.level_i as usize, self.level_j as usize))
            },
            gap_bound: self.gap_bound,
            alpha_independent: self.alpha_independent,
        }
    }
}

impl DatasetRow for CrossingRow {
    const KIND: &'static str = "crossings";
    fn columns() -> &'static [&'static str] {
        &["heta_star", "kind", "sector_pair", "level_i", "level_j", "gap_bound", "alpha_independent"]
    }
    fn to_fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.heta_star),
            self.kind.to_string(),
            self.sector_pair.to_string(),
            self.level_i.to_string(),
            self.level_j.to_string(),
            fmt_f64(self.gap_bound),
            match self.alpha_independent {
                None => "-".to_string(),
                Some(v) => v.to_string(),
            },
        ]
    }
    fn from_fields(fields: &[&str]) -> Result<Self, String> {
        let kind = match fields[1] {
            "different-parity" => CrossingKind::DifferentParity,
            "same-parity" => CrossingKind::SameParity,
            "avoided" => CrossingKind::Avoided,
            "collapse" => CrossingKind::Collapse,
            other => return Err(format!("bad crossing kind {other:?}")),
        };
        let sector = match fields[2] {
            "even-odd" => SectorPair::EvenOdd,
            "even-even" => SectorPair::EvenEven,
            "odd-odd" => SectorPair::OddOdd,
            "unresolved" => SectorPair::Unresolved,
            other => return Err(format!("bad sector pair {other:?}")),
        };
        let alpha_independent = match fields[6] {
            "-" => None,
            "true" => Some(true),
            "false" => Some(false),
            other => return Err(format!("bad alpha_independent {other:?}")),
        };
        Ok(Self {
            heta_star: parse_f64(fields[0])?,
            kind,
            sector_pair: sector,
            level_i: fields[3].parse().map_err(|e| format!("bad level_i: {e}"))?,
            level_j: fields[4].parse().map_err(|e| format!("bad level_j: {e}"))?,
            gap_bound: parse_f64(fields[5])?,
            alpha_independent,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionRow {
    pub seed_id: u64,
    pub step: u64,
    pub y: f64,
    pub z: f64,
}

impl DatasetRow for SectionRow {
    const KIND: &'static str = "section";
    fn columns() -> &'static [&'static str] {
        &["seed_id", "step", "y", "z"]
    }
    fn to_fields(&self) -> Vec<String> {
        vec![self.seed_id.to_string(), self.step.to_string(), fmt_f64(self.y), fmt_f64(self.z)]
    }
    fn from_fields(fields: &[&str]) -> Result<Self, String> {
        Ok(Self {
            seed_id: fields[0].parse().map_err(|e| format!("bad seed_id: {e}"))?,
            step: fields[1].parse().map_err(|e| format!("bad step: {e}"))?,
            y: parse_f64(fields[2])?,
            z: parse_f64(fields[3])?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqRow {
    pub sector: String,
    pub q: f64,
    pub d_q: f64,
    pub r2: f64,
    pub stderr: f64,
}

impl DatasetRow for DqRow {
    const KIND: &'static str = "dq";
    fn columns() -> &'static [&'static str] {
        &["sector", "q", "d_q", "fit_r2", "fit_stderr"]
    }
    fn to_fields(&self) -> Vec<String> {
        vec![
            self.sector.clone(),
            fmt_f64(self.q),
            fmt_f64(self.d_q),
            fmt_f64(self.r2),
            fmt_f64(self.stderr),
        ]
    }
    fn from_fields(fields: &[&str]) -> Result<Self, String> {
        Ok(Self {
            sector: fields[0].to_string(),
            q: parse_f64(fields[1])?,
            d_q: parse_f64(fields[2])?,
            r2: parse_f64(fields[3])?,
            stderr: parse_f64(fields[4])?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FftRow {
    pub heta: f64,
    pub phase: f64,
    pub power: f64,
}

impl DatasetRow for FftRow {
    const KIND: &'static str = "fft-power";
    fn columns() -> &'static [&'static str] {
        &["heta", "phase", "power"]
    }
    fn to_fields(&self) -> Vec<String> {
        vec![fmt_f64(self.heta), fmt_f64(self.phase), fmt_f64(self.power)]
    }
    fn from_fields(fields: &[&str]) -> Result<Self, String> {
        Ok(Self { heta: parse_f64(fields[0])?, phase: parse_f64(fields[1])?, power: parse_f64(fields[2])? })
    }
}

// --- Rendering ---------------------------------------------------------

/// Render a dataset to TSV bytes (header lines prefixed with '#').
pub fn render_tsv<R: DatasetRow>(ds: &TypedDataset<R>) -> Vec<u8> {
    let mut out = String::new();
    let _ = writeln!(out, "# schema_version = {}", ds.meta.schema_version);
    let _ = writeln!(out, "# kind = {}", ds.meta.kind);
    let _ = writeln!(out, "# engine_version = {}", ds.meta.engine_version);
    let _ = writeln!(out, "# params = {}", ds.meta.params);
    let _ = writeln!(out, "# rng_seed = {}", ds.meta.rng_seed);
    let _ = writeln!(out, "# columns = {}", R::columns().join("\t"));
    for row in &ds.rows {
        let _ = writeln!(out, "{}", row.to_fields().join("\t"));
    }
    out.into_bytes()
}

#[derive(Serialize, Deserialize)]
struct JsonFile {
    schema_version: u32,
    kind: String,
    engine_version: String,
    params: serde_json::Value,
    rng_seed: u64,
    columns: Vec<String>,
    rows: Vec<Vec<serde_json::Value>>,
}

/// Render a dataset to a single JSON document.
pub fn render_json<R: DatasetRow>(ds: &TypedDataset<R>) -> Vec<u8> {
    let rows = ds
        .rows
        .iter()
        .map(|r| {
            r.to_fields()
                .into_iter()
                .map(|f| match f.parse::<f64>() {
                    Ok(v) if f != "-" => serde_json::Number::from_f64(v)
                        .map(serde_json::Value::Number)
                        .unwrap_or(serde_json::Value::String(f)),
                    _ => serde_json::Value::String(f),
                })
                .collect()
        })
        .collect();
    let file = JsonFile {
        schema_version: ds.meta.schema_version,
        kind: ds.meta.kind.clone(),
        engine_version: ds.meta.engine_version.clone(),
        params: ds.meta.params.clone(),
        rng_seed: ds.meta.rng_seed,
        columns: R::columns().iter().map(|s| s.to_string()).collect(),
        rows,
    };
    let mut bytes = serde_json::to_vec_pretty(&file).expect("dataset serialization");
    bytes.push(b'\n');
    bytes
}

pub fn render<R: DatasetRow>(ds: &TypedDataset<R>, format: OutputFormat) -> Vec<u8> {
    match format {
        OutputFormat::Tsv => render_tsv(ds),
        OutputFormat::Json => render_json(ds),
    }
}

// --- Parsing -----------------------------------------------------------

fn header_value<'a>(line: &'a str, key: &str, line_no: usize) -> Result<&'a str, IoError> {
    let prefix = format!("# {key} = ");
    line.strip_prefix(&prefix).ok_or_else(|| IoError::Parse {
        line: line_no,
        message: format!("expected header line {prefix:?}…, got {line:?}"),
    })
}

/// Parse TSV bytes into a typed dataset.
pub fn parse_tsv<R: DatasetRow>(bytes: &[u8]) -> Result<TypedDataset<R>, IoError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| IoError::Parse { line: 0, message: format!("not UTF-8: {e}") })?;
    let mut lines = text.lines().enumerate();
    let mut next_line = |key: &str| -> Result<(usize, String), IoError> {
        let (i, line) = lines.next().ok_or(IoError::Parse {
            line: 0,
            message: format!("truncated header: missing {key}"),
        })?;
        Ok((i + 1, header_value(line, key, i + 1)?.to_string()))
    };
    let (ln, sv) = next_line("schema_version")?;
    let schema_version: u32 = sv
        .parse()
        .map_err(|e| IoError::Parse { line: ln, message: format!("bad schema_version: {e}") })?;
    if schema_version != SCHEMA_VERSION {
        return Err(IoError::SchemaMismatch { found: schema_version, expected: SCHEMA_VERSION });
    }
    let (ln, kind) = next_line("kind")?;
    if kind != R::KIND {
        return Err(IoError::Parse {
            line: ln,
            message: format!("dataset kind {kind:?} does not match expected {:?}", R::KIND),
        });
    }
    let (_, engine_version) = next_line("engine_version")?;
    let (ln, params_text) = next_line("params")?;
    let params: serde_json::Value = serde_json::from_str(&params_text)
        .map_err(|e| IoError::Parse { line: ln, message: format!("bad params JSON: {e}") })?;
    let (ln, seed_text) = next_line("rng_seed")?;
    let rng_seed: u64 = seed_text
        .parse()
        .map_err(|e| IoError::Parse { line: ln, message: format!("bad rng_seed: {e}") })?;
    let (ln, cols) = next_line("columns")?;
    let expected_cols = R::columns().join("\t");
    if cols != expected_cols {
        return Err(IoError::Parse {
            line: ln,
            message: format!("columns {cols:?} do not match {expected_cols:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != R::columns().len() {
            return Err(IoError::Parse {
                line: i + 1,
                message: format!("expected {} fields, got {}", R::columns().len(), fields.len()),
            });
        }
        rows.push(R::from_fields(&fields).map_err(|message| IoError::Parse { line: i + 1, message })?);
    }
    Ok(TypedDataset {
        meta: DatasetMeta { schema_version, kind, engine_version, params, rng_seed },
        rows,
    })
}

/// Parse JSON bytes into a typed dataset.
pub fn parse_json<R: DatasetRow>(bytes: &[u8]) -> Result<TypedDataset<R>, IoError> {
    let file: JsonFile = serde_json::from_slice(bytes)
        .map_err(|e| IoError::Parse { line: e.line(), message: e.to_string() })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(IoError::SchemaMismatch { found: file.schema_version, expected: SCHEMA_VERSION });
    }
    if file.kind != R::KIND {
        return Err(IoError::Parse {
            line: 0,
            message: format!("dataset kind {:?} does not match expected {:?}", file.kind, R::KIND),
        });
    }
    let mut rows = Vec::new();
    for (i, raw) in file.rows.iter().enumerate() {
        let fields: Vec<String> = raw
            .iter()
            .map(|v| match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .collect();
        let refs: Vec<&str> = fields.iter().map(|s| s.as_str()).collect();
        rows.push(R::from_fields(&refs).map_err(|message| IoError::Parse { line: i + 1, message })?);
    }
    Ok(TypedDataset {
        meta: DatasetMeta {
            schema_version: file.schema_version,
            kind: file.kind,
            engine_version: file.engine_version,
            params: file.params,
            rng_seed: file.rng_seed,
        },
        rows,
    })
}

/// Detect the format of a dataset file by its first byte.
pub fn sniff_format(bytes: &[u8]) -> OutputFormat {
    if bytes.first() == Some(&b'{') {
        OutputFormat::Json
    } else {
        OutputFormat::Tsv
    }
}

/// Read and parse a typed dataset from disk (either format).
pub fn read_dataset<R: DatasetRow>(path: &Path) -> Result<TypedDataset<R>, IoError> {
    let bytes = fs::read(path)?;
    match sniff_format(&bytes) {
        OutputFormat::Tsv => parse_tsv(&bytes),
        OutputFormat::Json => parse_json(&bytes),
    }
}

// --- Atomic writes -----------------------------------------------------

/// Write bytes atomically: a temp file in the target directory is renamed
/// over the destination only after all bytes are flushed.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| IoError::Io(e.error))?;
    Ok(())
}

/// Render and atomically write a dataset.
pub fn write_dataset<R: DatasetRow>(
    ds: &TypedDataset<R>,
    path: &Path,
    format: OutputFormat,
) -> Result<(), IoError> {
    atomic_write(path, &render(ds, format))
}

// --- Hashing and cache -------------------------------------------------

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Stable short hash of model parameters (dataset provenance).
pub fn param_hash(params: &ModelParams) -> String {
    let json = serde_json::to_string(params).expect("params serialize");
    sha256_hex(json.as_bytes())[..16].to_string()
}

/// Cache key: hash of the canonicalized run configuration (the JSON must
/// already exclude output-path fields).
pub fn cache_key(config: &serde_json::Value) -> String {
    sha256_hex(config.to_string().as_bytes())
}

/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "SU2_BUTTERFLY_CACHE_DIR";

/// Resolve the cache directory: explicit flag wins, then the environment
/// variable; `None` disables caching.
pub fn resolve_cache_dir(flag: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = flag {
        return Some(p.to_path_buf());
    }
    std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from)
}

/// Look up rendered bytes in the cache.
pub fn cache_lookup(dir: &Path, key: &str) -> Option<Vec<u8>> {
    fs::read(dir.join(key)).ok()
}

/// Store rendered bytes in the cache (atomically; failures are ignored —
/// the cache is best-effort).
pub fn cache_store(dir: &Path, key: &str, bytes: &[u8]) {
    if fs::create_dir_all(dir).is_ok() {
        let _ = atomic_write(&dir.join(key), bytes);
    }
}

// --- Conversions from in-memory datasets --------------------------------

/// Flatten a butterfly dataset into rows (grid order, phases ascending
/// within each column).
pub fn butterfly_rows(ds: &ButterflyDataset) -> Vec<ButterflyRow> {
    let mut rows = Vec::new();
    for (heta, col) in ds.grid.iter().zip(&ds.columns) {
        for (i, &phase) in col.phases.iter().enumerate() {
            rows.push(ButterflyRow { heta: *heta, phase, parity: col.parities[i], residual: col.residual });
        }
    }
    rows
}

/// Crossing records to rows (already sorted by ℏ_η by the detector).
pub fn crossing_rows(records: &[CrossingRecord]) -> Vec<CrossingRow> {
    records.iter().map(CrossingRow::from).collect()
}
