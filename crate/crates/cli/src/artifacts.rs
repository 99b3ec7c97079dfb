//! Persisted learning artifacts and the manifest that ties a `run` to the
//! `learn` invocation that produced its structures.

use hullmax::distributions::ProductDistribution;
use hullmax::hull_learning::HullStructures;
use hullmax::maxima::MaximaStructures;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Maxima,
    Hull,
}

impl std::fmt::Display for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Problem::Maxima => write!(f, "maxima"),
            Problem::Hull => write!(f, "hull"),
        }
    }
}

/// Learning knobs that must match between learn and run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LearnConfig {
    pub problem: Problem,
    pub n: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub c: f64,
    pub delta: f64,
    pub t_slabs: Option<u64>,
    pub t_freq: Option<u64>,
    pub level: Option<usize>,
    pub spacing: Option<usize>,
    pub tail: Option<usize>,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: LearnConfig,
    pub config_hash: String,
    /// Training counters consumed; runs start after these.
    pub counters_used: u64,
    /// Hull learning hit a degenerate input: runs use the worst-case path.
    pub worst_case: bool,
}

/// FNV-1a over the canonical JSON of the config plus the distribution file.
pub fn config_hash(config: &LearnConfig, dist: &ProductDistribution) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    eat(serde_json::to_string(config).expect("config serializes").as_bytes());
    eat(serde_json::to_string(dist).expect("distribution serializes").as_bytes());
    format!("{h:016x}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    fs::write(path, serde_json::to_vec(value)?)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> std::io::Result<T> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(std::io::Error::other)
}

pub enum Structures {
    Maxima(MaximaStructures),
    Hull(HullStructures),
    /// Hull learning failed on a degenerate input; every run falls back.
    HullWorstCase,
}

pub fn save_structures(dir: &Path, s: &Structures) -> std::io::Result<()> {
    match s {
        Structures::Maxima(m) => {
            write_json(&dir.join("slabs.json"), &m.slabs)?;
            write_json(&dir.join("trees.json"), &m.trees)
        }
        Structures::Hull(h) => {
            write_json(&dir.join("canonical.json"), &h.hull)?;
            write_json(&dir.join("trees.json"), &h.trees)
        }
        Structures::HullWorstCase => Ok(()),
    }
}

pub fn load_structures(dir: &Path, manifest: &Manifest) -> std::io::Result<Structures> {
    if manifest.worst_case {
        return Ok(Structures::HullWorstCase);
    }
    Ok(match manifest.config.problem {
        Problem::Maxima => Structures::Maxima(MaximaStructures {
            slabs: read_json(&dir.join("slabs.json"))?,
            trees: read_json(&dir.join("trees.json"))?,
            counters_used: manifest.counters_used,
        }),
        Problem::Hull => Structures::Hull(HullStructures {
            hull: read_json(&dir.join("canonical.json"))?,
            trees: read_json(&dir.join("trees.json"))?,
            counters_used: manifest.counters_used,
        }),
    })
}
