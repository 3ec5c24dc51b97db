use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Binary,
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Out {
    dir: PathBuf,
    pub format: Format,
}

impl Out {
    pub fn new(dir: &Path, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), format })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), CliError> {
        let p = self.path(name);
        let mut w = csv::Writer::from_path(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", p.display()));
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r.iter().map(|&x| fmt(x))).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(&p, e))
    }

    pub fn json<T: Serialize>(&self, name: &str, v: &T) -> Result<(), CliError> {
        let p = self.path(name);
        let s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(&p, s + "\n").map_err(|e| CliError::io(&p, e))
    }

    /// Records of `[u64 LE length][re, im, re, im, …]`.
    pub fn binary(&self, name: &str, records: &[&[Complex64]]) -> Result<(), CliError> {
        let p = self.path(name);
        let f = File::create(&p).map_err(|e| CliError::io(&p, e))?;
        let mut w = BufWriter::new(f);
        let mut put = |b: &[u8]| w.write_all(b).map_err(|e| CliError::io(&p, e));
        for rec in records {
            put(&(rec.len() as u64).to_le_bytes())?;
            for c in rec.iter() {
                put(&c.re.to_le_bytes())?;
                put(&c.im.to_le_bytes())?;
            }
        }
        w.flush().map_err(|e| CliError::io(&p, e))
    }
}

fn strip_nulls(v: Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(
            m.into_iter().filter(|(_, v)| !v.is_null()).map(|(k, v)| (k, strip_nulls(v))).collect(),
        ),
        other => other,
    }
}

/// Fills unset flags from a config file; flags win.
pub fn merge<T: Serialize + DeserializeOwned>(cli: &T, file: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = file else { return Ok(serde_json::from_value(serde_json::to_value(cli).expect("serializable"))?) };
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut base = match base {
        Value::Object(m) => m,
        _ => return Err(CliError::Config(format!("{}: expected a JSON object", path.display()))),
    };
    // persisted run configs wrap the parameters
    if let Some(Value::Object(inner)) = base.remove("params") {
        base = inner;
    }
    if let Value::Object(over) = strip_nulls(serde_json::to_value(cli).expect("serializable")) {
        for (k, v) in over {
            base.insert(k, v);
        }
    }
    Ok(serde_json::from_value(Value::Object(base))?)
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub fn config_hash<T: Serialize>(v: &T) -> String {
    let s = serde_json::to_string(v).expect("serializable");
    let d = Sha256::digest(s.as_bytes());
    d.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `config.json` and `metadata.json`.
pub fn persist<T: Serialize>(out: &Out, command: &str, params: &T, wall: f64, extra: Value) -> Result<(), CliError> {
    let mut cfg = Map::new();
    cfg.insert("command".into(), Value::String(command.into()));
    cfg.insert("params".into(), serde_json::to_value(params)?);
    out.json("config.json", &Value::Object(cfg))?;
    let mut meta = Map::new();
    meta.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    meta.insert("command".into(), Value::String(command.into()));
    meta.insert("config_hash".into(), Value::String(config_hash(params)));
    meta.insert("wall_time_s".into(), serde_json::json!(wall));
    meta.insert("model".into(), Value::String("quadratic-truncated diagonalized model".into()));
    if let Value::Object(m) = extra {
        meta.extend(m);
    }
    out.json("metadata.json", &Value::Object(meta))
}
