//! UAV placements and the plan file format.
//!
//! A placement is the output of the planning phase: UAV positions at a shared
//! altitude, the ground-user association, and the log of merges that reduced
//! the initial per-cluster deployment. Relay UAVs carry no association; they
//! exist purely to stitch the aerial graph together.

use crate::canon::{self, num};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::params::Params;
use crate::scenario::Scenario;
use serde::Deserialize;
use serde_json::{Map, Value};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uav {
    pub pos: Point,
    pub is_relay: bool,
}

/// One accepted merge: UAVs `i` and `j` (indices at the time of the merge)
/// were replaced by a single UAV at `pos`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeRecord {
    pub i: usize,
    pub j: usize,
    pub pos: Point,
}

#[derive(Debug, Clone)]
pub struct Placement {
    pub uavs: Vec<Uav>,
    /// Shared flight altitude in metres.
    pub altitude: f64,
    /// `association[g]` is the UAV index serving ground user `g`.
    pub association: Vec<usize>,
    pub merge_log: Vec<MergeRecord>,
    /// Echo of the producing command, preserved across load/save.
    pub meta: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UavRec {
    x: f64,
    y: f64,
    h: f64,
    is_relay: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MergeRec {
    i: usize,
    j: usize,
    x: f64,
    y: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    uavs: Vec<UavRec>,
    association: std::collections::BTreeMap<String, usize>,
    #[serde(default)]
    merge_log: Vec<MergeRec>,
    #[serde(default)]
    meta: Option<Value>,
}

impl Placement {
    /// Number of UAVs serving at least one user (non-relays).
    pub fn n_service_uavs(&self) -> usize {
        self.uavs.iter().filter(|u| !u.is_relay).count()
    }

    pub fn n_relays(&self) -> usize {
        self.uavs.iter().filter(|u| u.is_relay).count()
    }

    /// Ground users associated with UAV `l`, ascending.
    pub fn members_of(&self, l: usize) -> Vec<usize> {
        self.association
            .iter()
            .enumerate()
            .filter_map(|(g, &u)| (u == l).then_some(g))
            .collect()
    }

    /// Total demand entering the network at the users served by UAV `l`.
    pub fn served_demand(&self, l: usize, scenario: &Scenario) -> f64 {
        self.members_of(l).iter().map(|&g| scenario.users[g].demand_out).sum()
    }

    /// Structural and geometric validity against a scenario:
    /// dense association, non-relay UAVs each serve at least one user, relays
    /// serve none, and every user sits within air-to-ground range of its UAV.
    pub fn validate(&self, scenario: &Scenario, params: &Params) -> Result<()> {
        if self.association.len() != scenario.n_users() {
            return Err(Error::Validation {
                field: "association".into(),
                message: format!(
                    "covers {} users, scenario has {}",
                    self.association.len(),
                    scenario.n_users()
                ),
            });
        }
        for (idx, u) in self.uavs.iter().enumerate() {
            if !u.pos.x.is_finite() || !u.pos.y.is_finite() {
                return Err(Error::Validation {
                    field: format!("uavs[{idx}]"),
                    message: "non-finite position".into(),
                });
            }
        }
        let mut counts = vec![0usize; self.uavs.len()];
        for (g, &l) in self.association.iter().enumerate() {
            if l >= self.uavs.len() {
                return Err(Error::Validation {
                    field: format!("association[{g}]"),
                    message: format!("UAV index {l} out of range ({} UAVs)", self.uavs.len()),
                });
            }
            if self.uavs[l].is_relay {
                return Err(Error::Validation {
                    field: format!("association[{g}]"),
                    message: format!("user {g} is associated with relay UAV {l}"),
                });
            }
            counts[l] += 1;
            let d = scenario.users[g].pos.dist_3d(&self.uavs[l].pos, self.altitude);
            if d > params.a2g_range {
                return Err(Error::Validation {
                    field: format!("association[{g}]"),
                    message: format!(
                        "user {g} is {d:.3} m (slant) from UAV {l}, beyond a2g range {}",
                        params.a2g_range
                    ),
                });
            }
        }
        for (l, u) in self.uavs.iter().enumerate() {
            if !u.is_relay && counts[l] == 0 {
                return Err(Error::Validation {
                    field: format!("uavs[{l}]"),
                    message: "service UAV has no associated users".into(),
                });
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Placement> {
        let value = canon::read_json(path)?;
        Placement::from_value(value, &path.display().to_string())
    }

    pub fn from_value(value: Value, origin: &str) -> Result<Placement> {
        let file: PlanFile = serde_json::from_value(value).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        if file.uavs.is_empty() {
            return Err(Error::Validation {
                field: "uavs".into(),
                message: "plan must contain at least one UAV".into(),
            });
        }
        let altitude = file.uavs[0].h;
        for (idx, u) in file.uavs.iter().enumerate() {
            if u.h != altitude {
                return Err(Error::Validation {
                    field: format!("uavs[{idx}].h"),
                    message: format!("altitude {} differs from shared altitude {altitude}", u.h),
                });
            }
        }
        let mut association = vec![usize::MAX; file.association.len()];
        for (key, &l) in &file.association {
            let g: usize = key.parse().map_err(|_| Error::Validation {
                field: format!("association.{key}"),
                message: "keys must be user ids".into(),
            })?;
            if g >= association.len() {
                return Err(Error::Validation {
                    field: format!("association.{key}"),
                    message: format!("ids must be dense 0..{}", association.len()),
                });
            }
            association[g] = l;
        }
        // Dense key check: parse collisions leave usize::MAX holes.
        if association.iter().any(|&l| l == usize::MAX) {
            return Err(Error::Validation {
                field: "association".into(),
                message: "keys must cover every user id exactly once".into(),
            });
        }
        Ok(Placement {
            uavs: file
                .uavs
                .into_iter()
                .map(|u| Uav { pos: Point::new(u.x, u.y), is_relay: u.is_relay })
                .collect(),
            altitude,
            association,
            merge_log: file
                .merge_log
                .into_iter()
                .map(|m| MergeRecord { i: m.i, j: m.j, pos: Point::new(m.x, m.y) })
                .collect(),
            meta: file.meta,
        })
    }

    pub fn to_json(&self) -> Result<Value> {
        let mut root = Map::new();
        let uavs: Result<Vec<Value>> = self
            .uavs
            .iter()
            .map(|u| {
                let mut m = Map::new();
                m.insert("x".into(), num(u.pos.x)?);
                m.insert("y".into(), num(u.pos.y)?);
                m.insert("h".into(), num(self.altitude)?);
                m.insert("is_relay".into(), Value::Bool(u.is_relay));
                Ok(Value::Object(m))
            })
            .collect();
        root.insert("uavs".into(), Value::Array(uavs?));
        let mut assoc = Map::new();
        for (g, &l) in self.association.iter().enumerate() {
            assoc.insert(g.to_string(), Value::from(l as u64));
        }
        root.insert("association".into(), Value::Object(assoc));
        let merges: Result<Vec<Value>> = self
            .merge_log
            .iter()
            .map(|r| {
                let mut m = Map::new();
                m.insert("i".into(), Value::from(r.i as u64));
                m.insert("j".into(), Value::from(r.j as u64));
                m.insert("x".into(), num(r.pos.x)?);
                m.insert("y".into(), num(r.pos.y)?);
                Ok(Value::Object(m))
            })
            .collect();
        root.insert("merge_log".into(), Value::Array(merges?));
        if let Some(meta) = &self.meta {
            root.insert("meta".into(), meta.clone());
        }
        Ok(Value::Object(root))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        canon::write_canonical(path, &self.to_json()?)
    }
}
