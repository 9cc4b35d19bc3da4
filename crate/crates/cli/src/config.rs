//! `key=value` configuration files, merged under command-line flags.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use halfsup::UHPoint;

use crate::CliError;

pub struct Settings {
    file: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut file = BTreeMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
                file.insert(k.trim().replace('_', "-"), v.trim().to_string());
            }
        }
        Ok(Settings {
            file,
            used: RefCell::default(),
            resolved: RefCell::default(),
        })
    }

    fn raw(&self, key: &str) -> Option<String> {
        self.used.borrow_mut().insert(key.to_string());
        self.file.get(key).cloned()
    }

    fn note(&self, key: &str, v: String) {
        self.resolved.borrow_mut().insert(key.to_string(), v);
    }

    /// Flag value, else the file value, else the default.
    pub fn get<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let from_file = self.raw(key);
        let v = match (flag, from_file) {
            (Some(v), _) => v,
            (None, Some(s)) => s
                .parse()
                .map_err(|e| CliError::Usage(format!("invalid value for {key}: {s:?} ({e})")))?,
            (None, None) => default,
        };
        self.note(key, v.to_string());
        Ok(v)
    }

    pub fn get_str(&self, key: &str, flag: Option<String>, default: &str) -> Result<String, CliError> {
        self.get(key, flag, default.to_string())
    }

    pub fn get_list(&self, key: &str, flag: Option<String>, default: &str) -> Result<Vec<u64>, CliError> {
        let s = self.get_str(key, flag, default)?;
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|e| CliError::Usage(format!("invalid entry {t:?} in {key} ({e})")))
            })
            .collect()
    }

    pub fn get_point(&self, key: &str, flag: Option<String>, default: &str) -> Result<UHPoint, CliError> {
        let s = self.get_str(key, flag, default)?;
        let (x, y) = parse_complex(&s).map_err(|e| CliError::Usage(format!("invalid value for {key}: {e}")))?;
        UHPoint::new(x, y).map_err(|e| CliError::Usage(format!("invalid value for {key}: {e}")))
    }

    pub fn positive(&self, key: &str, v: f64) -> Result<f64, CliError> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::Usage(format!("{key} must be positive, got {v}")))
        }
    }

    /// Rejects file keys the command never asked for.
    pub fn check_unused(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        match self.file.keys().find(|k| !used.contains(*k) && k.as_str() != "seed" && k.as_str() != "out") {
            Some(k) => Err(CliError::Usage(format!("unknown config field {k:?}"))),
            None => Ok(()),
        }
    }

    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.borrow().clone()
    }
}

/// Parses `x+yi`, `x-yi`, `yi`, `i`, `-i` or a real `x`.
pub fn parse_complex(s: &str) -> Result<(f64, f64), String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse {s:?} as x+yi");
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(|x| (x, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse::<f64>().map_err(|_| bad())?,
    };
    Ok((re.parse::<f64>().map_err(|_| bad())?, im))
}
