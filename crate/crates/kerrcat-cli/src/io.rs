//! Argument parsing, artifact writing, and the run manifest.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use kerrcat::C64;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Errors surfaced to the shell, sorted by exit code.
///
/// 0 success, 1 i/o, 2 usage or schema, 3 numerical failure, 4 infeasible
/// design target.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Lib(kerrcat::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
            CliError::Lib(e) => match e {
                kerrcat::Error::Infeasible { .. } | kerrcat::Error::DegenerateTarget => 4,
                kerrcat::Error::OutOfRange { .. }
                | kerrcat::Error::InvalidSpace { .. }
                | kerrcat::Error::DimensionMismatch { .. }
                | kerrcat::Error::TruncationInadequate { .. }
                | kerrcat::Error::OpenPath => 2,
                _ => 3,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::Lib(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<kerrcat::Error> for CliError {
    fn from(e: kerrcat::Error) -> Self {
        CliError::Lib(e)
    }
}

/// Parses a complex literal: `mag@deg` (the `deg` suffix optional), a raw
/// `[re,im]` pair, or a plain real number.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t = s.trim();
    if let Some((mag, ang)) = t.split_once('@') {
        let mag: f64 = mag
            .trim()
            .parse()
            .map_err(|_| format!("bad magnitude in complex literal '{s}'"))?;
        let ang = ang.trim();
        let ang = ang.strip_suffix("deg").unwrap_or(ang).trim();
        let deg: f64 = ang
            .parse()
            .map_err(|_| format!("bad angle in complex literal '{s}'"))?;
        return Ok(C64::from_polar(mag, deg.to_radians()));
    }
    if t.starts_with('[') {
        let pair: Vec<f64> = serde_json::from_str(t)
            .map_err(|_| format!("bad complex literal '{s}': expected [re,im]"))?;
        if pair.len() != 2 {
            return Err(format!("complex literal '{s}' must have exactly [re,im]"));
        }
        return Ok(C64::new(pair[0], pair[1]));
    }
    t.parse::<f64>().map(|x| C64::new(x, 0.0)).map_err(|_| {
        format!("cannot parse complex literal '{s}'; use mag@deg, [re,im], or a real number")
    })
}

/// Complex field in a JSON config; accepts every literal form `parse_complex`
/// does, plus `{"re":..,"im":..}` objects and bare numbers.
#[derive(Debug, Clone, Copy)]
pub struct CxIn(pub C64);

impl<'de> Deserialize<'de> for CxIn {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let v = Value::deserialize(deserializer)?;
        complex_from_value(&v).map(CxIn).map_err(serde::de::Error::custom)
    }
}

pub fn complex_from_value(v: &Value) -> Result<C64, String> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .map(|x| C64::new(x, 0.0))
            .ok_or_else(|| "number out of f64 range".to_string()),
        Value::String(s) => parse_complex(s),
        Value::Array(a) if a.len() == 2 => {
            let re = a[0].as_f64().ok_or("non-numeric re")?;
            let im = a[1].as_f64().ok_or("non-numeric im")?;
            Ok(C64::new(re, im))
        }
        Value::Object(m) => {
            let re = m.get("re").and_then(Value::as_f64);
            let im = m.get("im").and_then(Value::as_f64);
            match (re, im) {
                (Some(re), Some(im)) => Ok(C64::new(re, im)),
                _ => Err("complex object needs numeric re and im".into()),
            }
        }
        _ => Err("expected mag@deg, [re,im], {re,im}, or a number".into()),
    }
}

pub fn complex_json(z: C64) -> Value {
    // normalize -0.0 so exact zeros print as zeros
    json!([z.re + 0.0, z.im + 0.0])
}

/// Parses `lo:hi:step` into an ascending inclusive grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid '{s}' must be lo:hi:step"));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("non-numeric bound in grid '{s}'"))?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || !step.is_finite() {
        return Err(format!("grid step must be positive, got {step}"));
    }
    if hi < lo {
        return Err(format!("grid '{s}' has hi < lo"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if n > 2_000_000 {
        return Err(format!("grid '{s}' has {n} points; refusing"));
    }
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

/// Reads a JSON file into `T`, reporting schema violations with a JSON
/// pointer to the offending field.
pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        CliError::Usage(format!(
            "{}: invalid field at {}: {}",
            path.display(),
            json_pointer(e.path()),
            e.inner()
        ))
    })
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        use serde_path_to_error::Segment;
        match seg {
            Segment::Seq { index } => {
                out.push('/');
                out.push_str(&index.to_string());
            }
            Segment::Map { key } => {
                out.push('/');
                out.push_str(key);
            }
            Segment::Enum { variant } => {
                out.push('/');
                out.push_str(variant);
            }
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        "/".into()
    } else {
        out
    }
}

/// Output directory plus the bookkeeping every command shares.
pub struct RunContext {
    pub dir: PathBuf,
    pub seed: u64,
}

impl RunContext {
    pub fn new(out: Option<PathBuf>, seed: u64) -> CliResult<Self> {
        let dir = out
            .or_else(|| std::env::var_os("KERRCAT_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir, seed })
    }

    pub fn save(&self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }

    pub fn save_json(&self, name: &str, v: &Value) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(v)
            .map_err(|e| CliError::Io(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.save(name, text.as_bytes())
    }

    /// Writes `manifest.json`: the resolved run configuration, its hash, the
    /// truncation and tolerances in force, and the artifact list. Rerunning
    /// the recorded configuration reproduces every artifact byte for byte.
    pub fn manifest(
        &self,
        command: &str,
        params: Value,
        truncation: Option<usize>,
        tolerances: Value,
        artifacts: &[&str],
    ) -> CliResult<()> {
        let run = json!({
            "command": command,
            "params": params,
            "output_dir": self.dir.display().to_string(),
            "seed": self.seed,
        });
        let bytes = serde_json::to_vec(&run)
            .map_err(|e| CliError::Io(format!("cannot serialize run config: {e}")))?;
        let hash = Sha256::digest(&bytes);
        let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
        let manifest = json!({
            "run": run,
            "config_sha256": hex,
            "truncation": truncation,
            "tolerances": tolerances,
            "artifacts": artifacts,
            "tool_version": env!("CARGO_PKG_VERSION"),
        });
        self.save_json("manifest.json", &manifest)
    }
}

/// Fixed-width scientific notation shared by every CSV artifact.
pub fn csv_row(fields: &[f64]) -> String {
    let mut row = String::new();
    for (i, x) in fields.iter().enumerate() {
        if i > 0 {
            row.push(',');
        }
        row.push_str(&format!("{x:.11e}"));
    }
    row.push('\n');
    row
}
