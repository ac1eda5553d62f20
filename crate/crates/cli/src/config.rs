//! Flat `key = value` configuration, with JSON objects accepted as an
//! alternative spelling of the same map.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

/// Rejected input: bad file, unknown key, or a value out of range.
#[derive(Debug)]
pub struct ValidationError(pub String);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(msg.into()).into()
}

/// Every key any subcommand reads.
pub const KNOWN_KEYS: &[&str] = &[
    "count",
    "eps_exponent",
    "grid",
    "levels",
    "lmax",
    "merge_rtol",
    "normal",
    "normal_b",
    "p_phi",
    "p_theta",
    "phi",
    "potential",
    "resolution",
    "samples",
    "seed",
    "sigma",
    "steps",
    "surface",
    "t_max",
    "tannery_a",
    "tau",
    "theta",
    "time_scale",
    "times",
    "tol",
    "tube_factor",
    "window_center",
    "window_half_width",
];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    /// 1-based line for key-value files; `None` for JSON.
    line: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        if is_json {
            Self::parse_json(&text)
        } else {
            Self::parse_kv(&text)
        }
    }

    pub fn parse_kv(text: &str) -> anyhow::Result<Self> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("config line {}: expected `key = value`, got {raw:?}", i + 1)))?;
            cfg.insert(k.trim(), v.trim().to_string(), Some(i + 1))?;
        }
        Ok(cfg)
    }

    pub fn parse_json(text: &str) -> anyhow::Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| invalid(format!("config is not valid JSON: {e}")))?;
        let obj = value.as_object().ok_or_else(|| invalid("JSON config must be an object"))?;
        let mut cfg = Config::default();
        for (k, v) in obj {
            let flat = match v {
                serde_json::Value::Array(items) => items
                    .iter()
                    .map(|x| json_scalar(k, x))
                    .collect::<anyhow::Result<Vec<_>>>()?
                    .join(","),
                other => json_scalar(k, other)?,
            };
            cfg.insert(k, flat, None)?;
        }
        Ok(cfg)
    }

    fn insert(&mut self, key: &str, value: String, line: Option<usize>) -> anyhow::Result<()> {
        let at = line.map(|l| format!(" (line {l})")).unwrap_or_default();
        if !KNOWN_KEYS.contains(&key) {
            return Err(invalid(format!("unknown config key `{key}`{at}")));
        }
        if self.entries.contains_key(key) {
            return Err(invalid(format!("config key `{key}` given twice{at}")));
        }
        self.entries.insert(key.to_string(), Entry { value, line });
        Ok(())
    }

    /// Adds or replaces an entry given on the command line.
    pub fn set(&mut self, key: &str, value: String) -> anyhow::Result<()> {
        self.entries.remove(key);
        self.insert(key, value, None)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn field_error(&self, key: &str, expected: &str) -> anyhow::Error {
        let e = &self.entries[key];
        let at = e.line.map(|l| format!(" (line {l})")).unwrap_or_default();
        invalid(format!("config key `{key}`{at}: expected {expected}, got {:?}", e.value))
    }

    pub fn string(&self, key: &str, default: &str) -> String {
        self.raw(key).map(|e| e.value.clone()).unwrap_or_else(|| default.to_string())
    }

    pub fn f64_opt(&self, key: &str) -> anyhow::Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => match e.value.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Some(x)),
                _ => Err(self.field_error(key, "a finite number")),
            },
        }
    }

    pub fn f64(&self, key: &str, default: f64) -> anyhow::Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub fn positive(&self, key: &str, default: f64) -> anyhow::Result<f64> {
        let x = self.f64(key, default)?;
        if x > 0.0 {
            Ok(x)
        } else if self.contains(key) {
            Err(self.field_error(key, "a positive number"))
        } else {
            Err(invalid(format!("default for `{key}` is not positive")))
        }
    }

    pub fn usize_opt(&self, key: &str) -> anyhow::Result<Option<usize>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<usize>().map(Some).map_err(|_| self.field_error(key, "a non-negative integer")),
        }
    }

    /// An integer at least `min`.
    pub fn count(&self, key: &str, default: usize, min: usize) -> anyhow::Result<usize> {
        let n = self.usize_opt(key)?.unwrap_or(default);
        if n < min {
            return Err(if self.contains(key) {
                self.field_error(key, &format!("an integer >= {min}"))
            } else {
                invalid(format!("`{key}` must be at least {min}"))
            });
        }
        Ok(n)
    }

    pub fn u64_opt(&self, key: &str) -> anyhow::Result<Option<u64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<u64>().map(Some).map_err(|_| self.field_error(key, "an unsigned integer")),
        }
    }

    pub fn f64_list(&self, key: &str) -> anyhow::Result<Option<Vec<f64>>> {
        let Some(e) = self.raw(key) else { return Ok(None) };
        e.value
            .split(',')
            .map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<_>>>()
            .map(Some)
            .ok_or_else(|| self.field_error(key, "a comma-separated list of numbers"))
    }

    pub fn usize_list(&self, key: &str, default: &[usize]) -> anyhow::Result<Vec<usize>> {
        let Some(e) = self.raw(key) else { return Ok(default.to_vec()) };
        let list = e
            .value
            .split(',')
            .map(|s| s.trim().parse::<usize>().ok())
            .collect::<Option<Vec<_>>>()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| self.field_error(key, "a comma-separated list of integers"))?;
        Ok(list)
    }

    pub fn vec3(&self, key: &str, default: [f64; 3]) -> anyhow::Result<[f64; 3]> {
        match self.f64_list(key)? {
            None => Ok(default),
            Some(v) if v.len() == 3 && v.iter().any(|&x| x != 0.0) => Ok([v[0], v[1], v[2]]),
            Some(_) => Err(self.field_error(key, "three numbers, not all zero")),
        }
    }

    /// SHA-256 of the sorted `key=value` lines with the effective seed.
    pub fn digest(&self, seed: u64) -> String {
        let mut canonical = String::new();
        let mut with_seed: BTreeMap<&str, String> =
            self.entries.iter().map(|(k, e)| (k.as_str(), normalize(&e.value))).collect();
        with_seed.insert("seed", seed.to_string());
        for (k, v) in with_seed {
            canonical.push_str(k);
            canonical.push('=');
            canonical.push_str(&v);
            canonical.push('\n');
        }
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn normalize(v: &str) -> String {
    v.split(',').map(str::trim).collect::<Vec<_>>().join(",")
}

fn json_scalar(key: &str, v: &serde_json::Value) -> anyhow::Result<String> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        serde_json::Value::Bool(b) => Ok(b.to_string()),
        _ => Err(invalid(format!("config key `{key}`: nested JSON values are not supported"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_and_json_agree() {
        let kv = Config::parse_kv("surface = tannery # cubic\nsigma = 0.3, -0.3\n\ncount=5").unwrap();
        let js = Config::parse_json(r#"{"surface": "tannery", "sigma": [0.3, -0.3], "count": 5}"#).unwrap();
        assert_eq!(kv.digest(1), js.digest(1));
        assert_ne!(kv.digest(1), kv.digest(2));
        assert_eq!(kv.f64_list("sigma").unwrap(), Some(vec![0.3, -0.3]));
    }

    #[test]
    fn errors_name_the_field() {
        let e = Config::parse_kv("tol = 1e-9\nfoo = 1").unwrap_err().to_string();
        assert!(e.contains("`foo`") && e.contains("line 2"), "{e}");
        let c = Config::parse_kv("tol = -1").unwrap();
        let e = c.positive("tol", 1e-10).unwrap_err().to_string();
        assert!(e.contains("`tol`") && e.contains("positive"), "{e}");
        assert!(Config::parse_kv("tol 3").is_err());
        assert!(Config::parse_kv("tol = 1\ntol = 2").is_err());
        assert!(Config::parse_kv("normal = 0,0,0").unwrap().vec3("normal", [0.0, 0.0, 1.0]).is_err());
    }
}
