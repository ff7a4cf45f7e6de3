//! Ground network scenarios: users, discovered ground links, and the
//! origin-destination traffic demand between users.
//!
//! A scenario file is a JSON object with `users`, `ground_links`, `demand`,
//! an optional `params` block and an optional `meta` echo of the command that
//! produced it. Unknown keys are rejected everywhere so schema drift shows up
//! as a load error instead of silently ignored data. Files written by
//! [`Scenario::save`] are canonical (sorted keys, six-decimal floats) and
//! survive a load/save round trip byte for byte.

use crate::canon::{self, num};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::params::Params;
use serde::Deserialize;
use serde_json::{Map, Value};
use std::collections::BTreeSet;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct GroundUser {
    pub id: usize,
    pub pos: Point,
    /// Total outgoing demand of this user, the row sum of the demand matrix.
    /// Derived from `demand` at construction time, never read from files.
    pub demand_out: f64,
}

/// One origin-destination entry of the demand matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Demand {
    pub src: usize,
    pub dst: usize,
    pub kbps: f64,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    /// Users with dense ids `0..users.len()`, sorted by id.
    pub users: Vec<GroundUser>,
    /// Undirected ground links as `(i, j)` with `i < j`, sorted, no duplicates.
    pub ground_links: Vec<(usize, usize)>,
    /// Demand entries sorted by `(src, dst)`, at most one per ordered pair.
    pub demand: Vec<Demand>,
    pub params: Params,
    /// Opaque echo of the producing command, preserved across round trips.
    pub meta: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UserRec {
    id: usize,
    x: f64,
    y: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandRec {
    src: usize,
    dst: usize,
    kbps: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    users: Vec<UserRec>,
    ground_links: Vec<(usize, usize)>,
    demand: Vec<DemandRec>,
    #[serde(default)]
    params: Option<Value>,
    #[serde(default)]
    meta: Option<Value>,
}

impl Scenario {
    /// Assemble and validate a scenario from raw pieces. Links are normalised
    /// to `(min, max)` order and sorted; demand is sorted by `(src, dst)`;
    /// per-user `demand_out` is recomputed from the demand entries.
    pub fn new(
        positions: Vec<Point>,
        mut ground_links: Vec<(usize, usize)>,
        mut demand: Vec<Demand>,
        params: Params,
    ) -> Result<Scenario> {
        let n = positions.len();
        if n == 0 {
            return Err(Error::Validation {
                field: "users".into(),
                message: "scenario must contain at least one user".into(),
            });
        }
        for (idx, p) in positions.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::Validation {
                    field: format!("users[{idx}]"),
                    message: format!("non-finite position ({}, {})", p.x, p.y),
                });
            }
        }

        for (idx, link) in ground_links.iter_mut().enumerate() {
            if link.0 == link.1 {
                return Err(Error::Validation {
                    field: format!("ground_links[{idx}]"),
                    message: format!("self-link on user {}", link.0),
                });
            }
            if link.0 >= n || link.1 >= n {
                return Err(Error::Validation {
                    field: format!("ground_links[{idx}]"),
                    message: format!("dangling endpoint in ({}, {}), only {n} users", link.0, link.1),
                });
            }
            if link.0 > link.1 {
                *link = (link.1, link.0);
            }
        }
        ground_links.sort_unstable();
        for w in ground_links.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Validation {
                    field: "ground_links".into(),
                    message: format!("duplicate link ({}, {})", w[0].0, w[0].1),
                });
            }
        }

        demand.sort_unstable_by_key(|d| (d.src, d.dst));
        let mut seen = BTreeSet::new();
        for (idx, d) in demand.iter().enumerate() {
            if d.src >= n || d.dst >= n {
                return Err(Error::Validation {
                    field: format!("demand[{idx}]"),
                    message: format!("dangling endpoint in ({}, {}), only {n} users", d.src, d.dst),
                });
            }
            if d.src == d.dst {
                return Err(Error::Validation {
                    field: format!("demand[{idx}]"),
                    message: format!("self-demand on user {}", d.src),
                });
            }
            if !d.kbps.is_finite() || d.kbps < 0.0 {
                return Err(Error::Validation {
                    field: format!("demand[{idx}].kbps"),
                    message: format!("must be non-negative and finite, got {}", d.kbps),
                });
            }
            if !seen.insert((d.src, d.dst)) {
                return Err(Error::Validation {
                    field: format!("demand[{idx}]"),
                    message: format!("duplicate entry for pair ({}, {})", d.src, d.dst),
                });
            }
        }

        params.validate("params.")?;

        let mut users: Vec<GroundUser> = positions
            .into_iter()
            .enumerate()
            .map(|(id, pos)| GroundUser { id, pos, demand_out: 0.0 })
            .collect();
        for d in &demand {
            users[d.src].demand_out += d.kbps;
        }

        Ok(Scenario { users, ground_links, demand, params, meta: None })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn total_demand(&self) -> f64 {
        self.demand.iter().map(|d| d.kbps).sum()
    }

    /// Demand entries that actually carry traffic, in `(src, dst)` order.
    /// These become the commodities of the routing problem.
    pub fn commodities(&self) -> Vec<Demand> {
        self.demand.iter().copied().filter(|d| d.kbps > 0.0).collect()
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let value = canon::read_json(path)?;
        Scenario::from_value(value, &path.display().to_string())
    }

    pub fn from_value(value: Value, origin: &str) -> Result<Scenario> {
        let file: ScenarioFile = serde_json::from_value(value).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;

        // User ids must be dense 0..n so they can double as indices.
        let mut recs = file.users;
        recs.sort_by_key(|u| u.id);
        for (idx, u) in recs.iter().enumerate() {
            if u.id != idx {
                return Err(Error::Validation {
                    field: format!("users[{idx}].id"),
                    message: format!("ids must be dense 0..{}, found {}", recs.len(), u.id),
                });
            }
        }
        let positions: Vec<Point> = recs.iter().map(|u| Point::new(u.x, u.y)).collect();

        let mut params = Params::default();
        if let Some(p) = &file.params {
            params.overlay_json(p, "params.")?;
        }

        let demand = file
            .demand
            .into_iter()
            .map(|d| Demand { src: d.src, dst: d.dst, kbps: d.kbps })
            .collect();

        let mut scenario = Scenario::new(positions, file.ground_links, demand, params)?;
        scenario.meta = file.meta;
        Ok(scenario)
    }

    pub fn to_json(&self) -> Result<Value> {
        let mut root = Map::new();
        let users: Result<Vec<Value>> = self
            .users
            .iter()
            .map(|u| {
                let mut m = Map::new();
                m.insert("id".into(), Value::from(u.id as u64));
                m.insert("x".into(), num(u.pos.x)?);
                m.insert("y".into(), num(u.pos.y)?);
                Ok(Value::Object(m))
            })
            .collect();
        root.insert("users".into(), Value::Array(users?));
        root.insert(
            "ground_links".into(),
            Value::Array(
                self.ground_links
                    .iter()
                    .map(|&(i, j)| Value::Array(vec![Value::from(i as u64), Value::from(j as u64)]))
                    .collect(),
            ),
        );
        let demand: Result<Vec<Value>> = self
            .demand
            .iter()
            .map(|d| {
                let mut m = Map::new();
                m.insert("src".into(), Value::from(d.src as u64));
                m.insert("dst".into(), Value::from(d.dst as u64));
                m.insert("kbps".into(), num(d.kbps)?);
                Ok(Value::Object(m))
            })
            .collect();
        root.insert("demand".into(), Value::Array(demand?));
        root.insert("params".into(), self.params.to_json()?);
        if let Some(meta) = &self.meta {
            root.insert("meta".into(), meta.clone());
        }
        Ok(Value::Object(root))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        canon::write_canonical(path, &self.to_json()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn small_value() -> Value {
        json!({
            "users": [
                {"id": 0, "x": 0.0, "y": 0.0},
                {"id": 1, "x": 50.0, "y": 0.0},
                {"id": 2, "x": 0.0, "y": 80.0}
            ],
            "ground_links": [[0, 1], [1, 2]],
            "demand": [
                {"src": 0, "dst": 2, "kbps": 300.0},
                {"src": 0, "dst": 1, "kbps": 150.0}
            ],
            "params": {"seed": 7}
        })
    }

    #[test]
    fn demand_out_is_row_sum() {
        let s = Scenario::from_value(small_value(), "test").unwrap();
        assert_eq!(s.users[0].demand_out, 450.0);
        assert_eq!(s.users[1].demand_out, 0.0);
        assert_eq!(s.total_demand(), 450.0);
        // Demand is sorted by (src, dst) regardless of input order.
        assert_eq!((s.demand[0].src, s.demand[0].dst), (0, 1));
        assert_eq!(s.params.seed, 7);
    }

    #[test]
    fn unknown_top_level_key_is_rejected() {
        let mut v = small_value();
        v.as_object_mut().unwrap().insert("extra".into(), json!(1));
        let err = Scenario::from_value(v, "test").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err:?}");
    }

    #[test]
    fn dangling_link_names_the_entry() {
        let mut v = small_value();
        v["ground_links"].as_array_mut().unwrap().push(json!([1, 9]));
        let err = Scenario::from_value(v, "test").unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "ground_links[2]"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn self_demand_is_rejected() {
        let mut v = small_value();
        v["demand"].as_array_mut().unwrap().push(json!({"src": 1, "dst": 1, "kbps": 5.0}));
        assert!(Scenario::from_value(v, "test").is_err());
    }

    #[test]
    fn duplicate_demand_pair_is_rejected() {
        let mut v = small_value();
        v["demand"].as_array_mut().unwrap().push(json!({"src": 0, "dst": 1, "kbps": 5.0}));
        assert!(Scenario::from_value(v, "test").is_err());
    }

    #[test]
    fn links_normalise_to_sorted_pairs() {
        let mut v = small_value();
        v["ground_links"] = json!([[2, 1], [1, 0]]);
        let s = Scenario::from_value(v, "test").unwrap();
        assert_eq!(s.ground_links, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn save_load_round_trip_is_byte_identical() {
        let s = Scenario::from_value(small_value(), "test").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.json");
        let p2 = dir.path().join("b.json");
        s.save(&p1).unwrap();
        let s2 = Scenario::load(&p1).unwrap();
        s2.save(&p2).unwrap();
        let b1 = std::fs::read(&p1).unwrap();
        let b2 = std::fs::read(&p2).unwrap();
        assert_eq!(b1, b2);
    }
}
