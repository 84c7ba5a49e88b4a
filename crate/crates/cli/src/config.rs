//! TOML experiment and sweep files with `key=value` overrides.
//!
//! An experiment file holds one [`ExperimentConfig`]; its keys mirror the
//! struct fields (`S`, `Y`, `K`, `T_max` keep their capitalisation) and the
//! objective goes in a `[suite]` table. Overrides use dotted paths, e.g.
//! `K=5` or `suite.dirichlet_alpha=1.0`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use fedpt_core::harness::SweepAxis;
use fedpt_core::ExperimentConfig;
use serde::Deserialize;
use toml::de::{DeTable, DeValue};
use toml::{Table, Value};

use crate::CliError;

/// Line numbers of every key in a TOML document, by dotted path.
struct KeyLines {
    entries: Vec<(String, usize)>,
}

impl KeyLines {
    fn scan(text: &str) -> Self {
        let mut entries = Vec::new();
        if let Ok(doc) = DeTable::parse(text) {
            collect(text, "", doc.get_ref(), &mut entries);
        }
        KeyLines { entries }
    }

    fn line_of(&self, path: &str) -> Option<usize> {
        self.entries.iter().find(|(p, _)| p == path).map(|(_, l)| *l)
    }
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn collect(text: &str, prefix: &str, table: &DeTable<'_>, out: &mut Vec<(String, usize)>) {
    for (key, value) in table {
        let path = if prefix.is_empty() {
            key.get_ref().to_string()
        } else {
            format!("{prefix}.{}", key.get_ref())
        };
        out.push((path.clone(), line_at(text, key.span().start)));
        if let DeValue::Table(inner) = value.get_ref() {
            collect(text, &path, inner, out);
        }
    }
}

/// Parses `raw` as a TOML value, falling back to a bare string so that
/// `algorithm=fadamgt` works without quotes.
fn override_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn apply_override(table: &mut Table, spec: &str) -> Result<String, CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{spec}' is not of the form key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override '{spec}' has an empty key")));
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        node = match entry {
            Value::Table(t) => t,
            _ => return Err(CliError::Config(format!("override '{spec}': `{part}` is not a table"))),
        };
    }
    node.insert(parts[parts.len() - 1].to_string(), override_value(raw.trim()));
    Ok(key.to_string())
}

/// Turns a deserialisation error into one naming the key and its line.
fn describe(err: toml::de::Error, lines: &KeyLines, overridden: &BTreeSet<String>, origin: &str) -> CliError {
    let message = err.to_string().trim().to_string();
    let mut parts = message.lines();
    let head = parts.next().unwrap_or_default().to_string();
    let parent = parts
        .find_map(|l| l.trim().strip_prefix("in `").and_then(|s| s.strip_suffix('`')))
        .map(str::to_string);
    let field = head
        .strip_prefix("unknown field `")
        .and_then(|s| s.split('`').next())
        .map(str::to_string);
    let path = match (parent, field) {
        (Some(p), Some(f)) => Some(format!("{p}.{f}")),
        (None, Some(f)) => Some(f),
        (p, None) => p,
    };
    let Some(path) = path else {
        return CliError::Config(format!("{origin}: {head}"));
    };
    let location = if overridden.contains(&path) {
        "command-line override".to_string()
    } else if let Some(line) = lines.line_of(&path) {
        format!("{origin} line {line}")
    } else {
        origin.to_string()
    };
    let what = if head.starts_with("unknown field") {
        format!("unknown key `{path}`")
    } else {
        format!("invalid value for `{path}`")
    };
    CliError::Config(format!("{what} ({location}): {head}"))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn parse_table(text: &str, origin: &str) -> Result<Table, CliError> {
    text.parse::<Table>()
        .map_err(|e| CliError::Config(format!("{origin}: {}", e.to_string().trim())))
}

/// Parses an experiment from TOML text, applies overrides, and validates.
pub fn parse_config_str(text: &str, origin: &str, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let mut table = parse_table(text, origin)?;
    let mut overridden = BTreeSet::new();
    for spec in overrides {
        overridden.insert(apply_override(&mut table, spec)?);
    }
    let lines = KeyLines::scan(text);
    let config: ExperimentConfig = Value::Table(table)
        .try_into()
        .map_err(|e| describe(e, &lines, &overridden, origin))?;
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let text = read(path)?;
    parse_config_str(&text, &path.display().to_string(), overrides)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    base: PathBuf,
    axis: String,
    values: Vec<f64>,
}

/// A sweep: the base experiment plus the varied axis.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// Reads a sweep file (`base`, `axis`, `values`); `base` is resolved
/// relative to the sweep file and the overrides apply to it.
pub fn parse_sweep(path: &Path, overrides: &[String]) -> Result<SweepSpec, CliError> {
    let text = read(path)?;
    let origin = path.display().to_string();
    let file: SweepFile =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{origin}: {}", e.to_string().trim())))?;
    let base_path = match path.parent() {
        Some(dir) if file.base.is_relative() => dir.join(&file.base),
        _ => file.base.clone(),
    };
    let base = parse_config(&base_path, overrides)?;
    let axis: SweepAxis = file.axis.parse()?;
    if file.values.is_empty() {
        return Err(CliError::Config(format!("{origin}: values must not be empty")));
    }
    Ok(SweepSpec {
        base,
        axis,
        values: file.values,
    })
}
