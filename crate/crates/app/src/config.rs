//! `key = value` configuration with `[section]` headers.
//!
//! Every key is declared in [`SCHEMA`]; unknown keys are errors. Lines
//! starting with `#` or `;` are comments. Lists are comma separated.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{AppError, AppResult};
use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    /// Needed by the commands that read it.
    Required,
    /// May be absent.
    Optional,
    Value(&'static str),
}

use Fallback::{Optional, Required, Value};

/// Declared keys. Paths are relative to the config file.
pub const SCHEMA: &[(&str, Fallback)] = &[
    // `synthetic` or an image path
    ("input.image", Required),
    ("input.size", Value("256")),
    ("input.noise_sigma", Value("15")),
    ("input.seed", Value("1")),
    // grid spacing; the domain is (nx + 1) h by (ny + 1) h
    ("grid.h", Value("1")),
    ("grid.nx", Optional),
    ("grid.ny", Optional),
    // none | nearest
    ("grid.resample", Value("none")),
    // rational | constant
    ("model.g", Value("rational")),
    ("model.a", Value("1")),
    ("model.b", Value("1")),
    ("model.c", Value("100")),
    ("model.d", Value("2")),
    ("model.g0", Value("1")),
    // constant | radial | image
    ("model.lambda", Value("constant")),
    ("model.lambda_value", Value("0.5")),
    ("model.lambda_min", Value("0.3")),
    ("model.lambda_image", Optional),
    ("model.epsilon", Value("0")),
    ("model.delta", Value("1")),
    // gradient | zero
    ("model.v0", Value("gradient")),
    ("model.v0_scale", Value("1")),
    ("solver.dt", Required),
    ("solver.t_end", Required),
    // semi-implicit | explicit
    ("solver.scheme", Value("semi-implicit")),
    // arithmetic | harmonic
    ("solver.face_average", Value("arithmetic")),
    ("solver.picard_tol", Value("1e-10")),
    ("solver.picard_max", Value("50")),
    ("solver.linsolve_tol", Value("1e-10")),
    ("solver.linsolve_max", Value("20000")),
    ("solver.stride", Value("1")),
    // lift | raw
    ("image.mode", Value("lift")),
    // pgm | png
    ("image.format", Value("pgm")),
    ("verify.scenario", Value("radial-lambda")),
    ("verify.n", Value("31")),
    ("verify.gamma", Value("1.1")),
    // auto | limit | regularized
    ("verify.form", Value("auto")),
    ("verify.inadmissible_probe", Value("false")),
    ("sweep.a", Optional),
    ("sweep.b", Optional),
    ("sweep.c", Optional),
    ("sweep.d", Optional),
    // entries `constant:<value>` or `radial:<min>`
    ("sweep.lambda", Optional),
    ("sweep.dt", Optional),
    ("sweep.t_end", Optional),
    ("sweep.parallel", Value("true")),
    ("converge.scenario", Value("heat")),
    ("converge.levels", Value("3,4,5")),
    ("converge.epsilon_scenario", Value("radial-lambda")),
    ("converge.epsilon_n", Value("31")),
    ("converge.eps0", Value("0.01")),
    ("converge.halvings", Value("3")),
    ("converge.parallel", Value("true")),
];

/// Keys holding file paths.
const PATH_KEYS: &[&str] = &["input.image", "model.lambda_image"];

fn schema(key: &str) -> Option<Fallback> {
    SCHEMA.iter().find(|(k, _)| *k == key).map(|(_, d)| *d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl Config {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> AppResult<Self> {
        let mut values = BTreeMap::new();
        let mut section: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = k + 1;
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or(AppError::ConfigSyntax { line: lineno, msg: "unterminated section header".into() })?
                    .trim();
                if name.is_empty() {
                    return Err(AppError::ConfigSyntax { line: lineno, msg: "empty section name".into() });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(AppError::ConfigSyntax { line: lineno, msg: format!("expected key = value, got `{line}`") })?;
            let sec = section
                .as_ref()
                .ok_or(AppError::ConfigSyntax { line: lineno, msg: "key outside any section".into() })?;
            let full = format!("{sec}.{}", key.trim());
            if schema(&full).is_none() {
                return Err(AppError::UnknownKey(full));
            }
            if values.insert(full.clone(), value.trim().to_string()).is_some() {
                return Err(AppError::ConfigSyntax { line: lineno, msg: format!("duplicate key `{full}`") });
            }
        }
        Ok(Self { values, base_dir: base_dir.into() })
    }

    pub fn from_map(map: &BTreeMap<String, String>, base_dir: impl Into<PathBuf>) -> AppResult<Self> {
        let mut cfg = Self { values: BTreeMap::new(), base_dir: base_dir.into() };
        for (k, v) in map {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// A config file, or a run manifest (`.json`) whose snapshot is replayed.
    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: RunManifest = serde_json::from_str(&text)?;
            return Self::from_map(&manifest.config, base);
        }
        Self::parse(&text, base)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> AppResult<()> {
        if schema(key).is_none() {
            return Err(AppError::UnknownKey(key.into()));
        }
        self.values.insert(key.into(), value.into());
        Ok(())
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    /// Explicit value, else the declared default.
    pub fn raw(&self, key: &str) -> AppResult<&str> {
        if let Some(v) = self.values.get(key) {
            return Ok(v);
        }
        match schema(key) {
            Some(Value(d)) => Ok(d),
            Some(_) => Err(AppError::MissingKey(key.into())),
            None => Err(AppError::UnknownKey(key.into())),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> AppResult<T>
    where
        T::Err: Display,
    {
        let raw = self.raw(key)?;
        raw.parse().map_err(|e: T::Err| AppError::bad_value(key, format!("`{raw}`: {e}")))
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> AppResult<Option<T>>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            Ok(_) => self.get(key).map(Some),
            Err(AppError::MissingKey(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn list<T: FromStr>(&self, key: &str) -> AppResult<Vec<T>>
    where
        T::Err: Display,
    {
        let raw = self.raw(key)?;
        let items = raw
            .split(',')
            .map(|s| s.trim().parse().map_err(|e: T::Err| AppError::bad_value(key, format!("`{}`: {e}", s.trim()))))
            .collect::<AppResult<Vec<T>>>()?;
        if items.is_empty() {
            return Err(AppError::bad_value(key, "empty list"));
        }
        Ok(items)
    }

    pub fn path(&self, key: &str) -> AppResult<PathBuf> {
        Ok(self.base_dir.join(self.raw(key)?))
    }

    /// Every key with a value, defaults included; relative paths made absolute.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for (key, _) in SCHEMA {
            if let Ok(v) = self.raw(key) {
                let v = if PATH_KEYS.contains(key) && v != "synthetic" {
                    let p = self.base_dir.join(v);
                    std::path::absolute(&p).unwrap_or(p).display().to_string()
                } else {
                    v.to_string()
                };
                out.insert(key.to_string(), v);
            }
        }
        out
    }
}
