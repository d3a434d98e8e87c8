use super::curve::{CurveKind, ForwardVarianceCurve};
use super::kernel::KernelKind;
use super::params::ModelParams;
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Keys understood by [`ModelConfig::from_map`].
pub const MODEL_KEYS: &[&str] = &[
    "alpha",
    "hurst",
    "nu",
    "lambda",
    "rho",
    "vbar",
    "v0",
    "kernel",
    "curve.kind",
    "curve.level",
    "curve.lambda",
    "curve.table",
];

/// Flat `key = value` configuration with dotted keys and `#` comments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
    base_dir: Option<PathBuf>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config {
                    key: line.to_string(),
                    message: format!("line {} is not of the form key = value", lineno + 1),
                });
            };
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config {
                    key: String::new(),
                    message: format!("line {} has an empty key", lineno + 1),
                });
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config { key, message: "duplicate key".into() });
            }
        }
        Ok(ConfigMap { entries, base_dir: None })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            key: "params_file".into(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        let mut map = Self::parse(&text)?;
        map.base_dir = path.parent().map(Path::to_path_buf);
        Ok(map)
    }

    /// Sets or overrides a key.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<f64>().map(Some).map_err(|_| Error::Config {
                key: key.to_string(),
                message: format!("`{v}` is not a number"),
            }),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.get_f64(key)?.ok_or_else(|| Error::Config {
            key: key.to_string(),
            message: "missing required key".into(),
        })
    }

    /// Fails on the first key outside `known`.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        for k in self.keys() {
            if !known.contains(&k) {
                return Err(Error::Config { key: k.to_string(), message: "unknown key".into() });
            }
        }
        Ok(())
    }

    fn resolve(&self, p: &str) -> PathBuf {
        let path = PathBuf::from(p);
        match (&self.base_dir, path.is_absolute()) {
            (Some(dir), false) => dir.join(path),
            _ => path,
        }
    }
}

/// Model parameters, kernel choice and forward variance curve read from a [`ConfigMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub params: ModelParams,
    pub kernel: KernelKind,
    pub curve: ForwardVarianceCurve,
}

impl ModelConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let alpha = match (map.get_f64("alpha")?, map.get_f64("hurst")?) {
            (Some(_), Some(_)) => {
                return Err(Error::Config {
                    key: "hurst".into(),
                    message: "give either alpha or hurst, not both".into(),
                })
            }
            (Some(a), None) => a,
            (None, Some(h)) => h + 0.5,
            (None, None) => {
                return Err(Error::Config { key: "alpha".into(), message: "missing required key".into() })
            }
        };
        let nu = map.require_f64("nu")?;
        let rho = map.require_f64("rho")?;
        let v0 = map.require_f64("v0")?;
        let lambda = map.get_f64("lambda")?.unwrap_or(0.0);
        let vbar = map.get_f64("vbar")?.unwrap_or(v0);
        let params = ModelParams::new(alpha, nu, lambda, rho, vbar, v0).map_err(|e| Error::Config {
            key: "params".into(),
            message: e.to_string(),
        })?;
        let kernel = match map.get("kernel") {
            Some(k) => k.parse()?,
            None => KernelKind::MittagLeffler,
        };
        let kind = match map.get("curve.kind") {
            Some(k) => k.parse()?,
            None => CurveKind::Flat,
        };
        let curve_err = |key: &str, e: Error| Error::Config { key: key.into(), message: e.to_string() };
        let curve = match kind {
            CurveKind::Flat => {
                let level = map.get_f64("curve.level")?.unwrap_or(v0);
                ForwardVarianceCurve::flat(level).map_err(|e| curve_err("curve.level", e))?
            }
            CurveKind::ExponentialDecay => {
                let cl = map.get_f64("curve.lambda")?.unwrap_or(lambda);
                ForwardVarianceCurve::exponential_decay(v0, vbar, cl).map_err(|e| curve_err("curve.lambda", e))?
            }
            CurveKind::Tabulated => {
                let p = map.get("curve.table").ok_or_else(|| Error::Config {
                    key: "curve.table".into(),
                    message: "tabulated curves need a CSV path".into(),
                })?;
                let text = std::fs::read_to_string(map.resolve(p)).map_err(|e| Error::Config {
                    key: "curve.table".into(),
                    message: format!("cannot read {p}: {e}"),
                })?;
                let pts = parse_curve_table(&text)?;
                ForwardVarianceCurve::tabulated(&pts).map_err(|e| curve_err("curve.table", e))?
            }
        };
        Ok(ModelConfig { params, kernel, curve })
    }
}

/// Parses `maturity,xi` rows; a non-numeric first line is taken as a header.
pub fn parse_curve_table(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut pts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split(',').map(str::trim);
        let (a, b) = (it.next(), it.next());
        let parsed = match (a, b) {
            (Some(a), Some(b)) => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some(p) => pts.push(p),
            None if i == 0 => continue,
            None => {
                return Err(Error::Config {
                    key: "curve.table".into(),
                    message: format!("row {} is not `maturity,xi`: {line}", i + 1),
                })
            }
        }
    }
    Ok(pts)
}
