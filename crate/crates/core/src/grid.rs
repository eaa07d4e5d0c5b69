//! Power grid data: buses, branches and the optional placement inputs.
//!
//! Grid files are JSON, schema version 1:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "ieee14",
//!   "buses": [{"id": 1, "has_generator": true, "vm": 1.06, "va_deg": 0.0}],
//!   "branches": [{"from": 1, "to": 2, "r": 0.01938, "x": 0.05917, "b": 0.0528,
//!                 "length_km": 18.0, "transformer": false}],
//!   "substation_map": {"1": [4, 7, 9]},
//!   "pmu_substations": [4, 7, 11]
//! }
//! ```
//!
//! `vm`/`va_deg` carry the reference operating point used as the true state
//! in estimation experiments. `substation_map` keys are substation ids.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const GRID_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("unknown grid schema version {0} (supported: 1)")]
    Version(u64),
    #[error("duplicate bus id {0}")]
    DuplicateBus(u32),
    #[error("branch {index} references unknown bus {bus}")]
    UnknownEndpoint { index: usize, bus: u32 },
    #[error("branch {index}: {message}")]
    BadBranch { index: usize, message: String },
    #[error("grid has no buses")]
    Empty,
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    /// Substation hint, used when no explicit map is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substation: Option<u32>,
    #[serde(default)]
    pub has_generator: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub va_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: u32,
    pub to: u32,
    /// Series resistance (p.u.).
    pub r: f64,
    /// Series reactance (p.u.).
    pub x: f64,
    /// Total line charging susceptance (p.u.).
    #[serde(default)]
    pub b: f64,
    pub length_km: f64,
    #[serde(default)]
    pub transformer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substation_map: Option<BTreeMap<u32, Vec<u32>>>,
    #[serde(default)]
    pub pmu_substations: Vec<u32>,
}

fn default_version() -> u32 {
    GRID_SCHEMA_VERSION
}

impl Grid {
    pub fn from_json_str(text: &str) -> Result<Self, GridError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| GridError::Schema {
            path: "/".into(),
            message: e.to_string(),
        })?;
        if let Some(v) = value.get("schema_version") {
            match v.as_u64() {
                Some(1) => {}
                Some(other) => return Err(GridError::Version(other)),
                None => {
                    return Err(GridError::Schema {
                        path: "/schema_version".into(),
                        message: "expected an integer".into(),
                    })
                }
            }
        }
        let grid: Grid = serde_path_to_error::deserialize(value).map_err(|e| GridError::Schema {
            path: json_pointer(e.path()),
            message: e.inner().to_string(),
        })?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GridError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| GridError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.buses.is_empty() {
            return Err(GridError::Empty);
        }
        let mut seen = BTreeSet::new();
        for b in &self.buses {
            if !seen.insert(b.id) {
                return Err(GridError::DuplicateBus(b.id));
            }
        }
        for (i, br) in self.branches.iter().enumerate() {
            let index = i + 1;
            for bus in [br.from, br.to] {
                if !seen.contains(&bus) {
                    return Err(GridError::UnknownEndpoint { index, bus });
                }
            }
            let bad = |message: &str| GridError::BadBranch {
                index,
                message: message.to_string(),
            };
            if br.from == br.to {
                return Err(bad("self loop"));
            }
            if !(br.r.is_finite() && br.x.is_finite() && br.b.is_finite() && br.length_km.is_finite()) {
                return Err(bad("non-finite parameter"));
            }
            if br.r < 0.0 {
                return Err(bad("negative resistance"));
            }
            if br.x == 0.0 {
                return Err(bad("zero reactance"));
            }
            if br.length_km < 0.0 || (!br.transformer && br.length_km <= 0.0) {
                return Err(bad("line length must be positive"));
            }
        }
        Ok(())
    }

    pub fn bus_ids(&self) -> Vec<u32> {
        self.buses.iter().map(|b| b.id).collect()
    }

    pub fn bus(&self, id: u32) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    /// Position of each bus id in `buses`.
    pub fn bus_index(&self) -> BTreeMap<u32, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect()
    }

    /// Branch numbers (1-based) incident to `bus`.
    pub fn incident_branches(&self, bus: u32) -> Vec<usize> {
        self.branches
            .iter()
            .enumerate()
            .filter(|(_, br)| br.from == bus || br.to == bus)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Distinct neighbouring buses.
    pub fn neighbours(&self, bus: u32) -> BTreeSet<u32> {
        self.branches
            .iter()
            .filter_map(|br| {
                if br.from == bus {
                    Some(br.to)
                } else if br.to == bus {
                    Some(br.from)
                } else {
                    None
                }
            })
            .collect()
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Load and validate a grid file.
pub fn load_grid(path: impl AsRef<Path>) -> Result<Grid, GridError> {
    Grid::load(path)
}
