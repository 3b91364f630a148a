//! `sweep`: cartesian grid over dotted config paths, one run per cell, and a
//! leaderboard.
//!
//! Sweep file:
//! `{"base": <run config>, "grid": {"schedules.lr.value": [0.05, 0.1], ...}}`.
//! Grid values may be any JSON, including whole schedule objects.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{parse_strict, read_text, ConfigError, FieldError, RunConfig};
use crate::output::write_json;
use crate::run::execute;
use crate::CliError;

pub const LEADERBOARD_JSON: &str = "leaderboard.json";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: Value,
    pub grid: BTreeMap<String, Vec<Value>>,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let cfg: SweepConfig = parse_strict(&read_text(path)?)?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        if self.grid.is_empty() {
            errors.push(FieldError { field: "grid".into(), reason: "must have at least one dimension".into() });
        }
        for (key, values) in &self.grid {
            if values.is_empty() {
                errors.push(FieldError { field: format!("grid.{key}"), reason: "has no values".into() });
            }
            if lookup(&self.base, key).is_none() {
                errors.push(FieldError { field: format!("grid.{key}"), reason: "path does not exist in base".into() });
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    /// Every grid cell in row-major order over the sorted keys.
    pub fn cells(&self) -> Vec<BTreeMap<String, Value>> {
        let mut cells = vec![BTreeMap::new()];
        for (key, values) in &self.grid {
            cells = cells
                .into_iter()
                .flat_map(|cell| {
                    values.iter().map(move |v| {
                        let mut c = cell.clone();
                        c.insert(key.clone(), v.clone());
                        c
                    })
                })
                .collect();
        }
        cells
    }
}

fn lookup<'a>(v: &'a Value, dotted: &str) -> Option<&'a Value> {
    dotted.split('.').try_fold(v, |cur, part| match cur {
        Value::Object(map) => map.get(part),
        Value::Array(items) => part.parse::<usize>().ok().and_then(|i| items.get(i)),
        _ => None,
    })
}

fn lookup_mut<'a>(v: &'a mut Value, dotted: &str) -> Option<&'a mut Value> {
    dotted.split('.').try_fold(v, |cur, part| match cur {
        Value::Object(map) => map.get_mut(part),
        Value::Array(items) => part.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
        _ => None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LeaderboardEntry {
    pub rank: usize,
    pub cell: usize,
    pub output_dir: PathBuf,
    pub params: BTreeMap<String, Value>,
    pub config_hash: Option<String>,
    pub final_min_full_grad_norm: Option<f64>,
    pub final_loss: Option<f64>,
    pub diverged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Leaderboard {
    pub cells: usize,
    pub failed: usize,
    pub entries: Vec<LeaderboardEntry>,
}

/// Completed runs first by final min grad norm, then final loss, then config
/// hash; diverged runs next; cells that failed to run last.
fn rank_order(a: &LeaderboardEntry, b: &LeaderboardEntry) -> Ordering {
    let class = |e: &LeaderboardEntry| match (&e.error, e.diverged) {
        (Some(_), _) => 2,
        (None, true) => 1,
        (None, false) => 0,
    };
    let key = |v: Option<f64>| v.filter(|x| !x.is_nan()).unwrap_or(f64::INFINITY);
    class(a)
        .cmp(&class(b))
        .then_with(|| key(a.final_min_full_grad_norm).total_cmp(&key(b.final_min_full_grad_norm)))
        .then_with(|| key(a.final_loss).total_cmp(&key(b.final_loss)))
        .then_with(|| a.config_hash.cmp(&b.config_hash))
        .then_with(|| a.cell.cmp(&b.cell))
}

pub fn execute_sweep(sweep: &SweepConfig, seeds: Option<&[u64]>, out: &Path) -> Result<Leaderboard, CliError> {
    fs::create_dir_all(out)?;
    let cells = sweep.cells();
    info!("sweep over {} cells", cells.len());
    let mut entries = Vec::with_capacity(cells.len());
    for (i, params) in cells.into_iter().enumerate() {
        let dir = out.join(format!("cell_{i:03}"));
        let mut value = sweep.base.clone();
        for (key, v) in &params {
            *lookup_mut(&mut value, key).expect("grid paths checked against base") = v.clone();
        }
        let mut entry = LeaderboardEntry {
            rank: 0,
            cell: i,
            output_dir: dir.clone(),
            params,
            config_hash: None,
            final_min_full_grad_norm: None,
            final_loss: None,
            diverged: false,
            error: None,
        };
        let result = parse_strict::<RunConfig>(&value.to_string())
            .map_err(CliError::from)
            .and_then(|cfg| {
                let cfg = cfg.with_overrides(seeds, Some(&dir));
                entry.config_hash = Some(cfg.hash_hex());
                execute(&cfg)
            });
        match result {
            Ok(o) => {
                entry.diverged = o.diverged;
                entry.final_min_full_grad_norm = o.final_min_full_grad_norm;
                entry.final_loss = o.final_loss;
            }
            Err(e) => {
                warn!("cell {i} failed: {e}");
                entry.error = Some(e.to_string());
            }
        }
        entries.push(entry);
    }
    entries.sort_by(rank_order);
    for (r, e) in entries.iter_mut().enumerate() {
        e.rank = r + 1;
    }
    let board = Leaderboard { cells: entries.len(), failed: entries.iter().filter(|e| e.error.is_some()).count(), entries };
    write_json(&out.join(LEADERBOARD_JSON), &board)?;
    Ok(board)
}
