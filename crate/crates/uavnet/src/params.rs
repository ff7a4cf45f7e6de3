//! Link-model and solver parameters shared by every pipeline stage.
//!
//! Defaults are conventions chosen for the bundled experiment family, not
//! physical claims; every value can be overridden from scenario files, a
//! config file, or command line flags. Precedence is resolved by the caller
//! (flags beat scenario values, scenario values beat config/built-in
//! defaults) via [`Params::overlay_json`] and [`Params::apply_override`].

use crate::canon::num;
use crate::error::{Error, Result};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// UAV flight altitude in metres. All UAVs share it.
    pub altitude: f64,
    /// Maximum slant (3D) distance of an air-to-ground link, metres.
    pub a2g_range: f64,
    /// Maximum horizontal distance of an air-to-air link, metres.
    pub a2a_range: f64,
    /// Per-UAV incoming throughput cap, Kbps.
    pub uav_capacity: f64,
    /// Per-link capacity of a ground link, Kbps (each direction).
    pub ground_capacity: f64,
    /// Per-link capacity of an air-to-ground link, Kbps (each direction).
    pub a2g_capacity: f64,
    /// Per-link capacity of an air-to-air link, Kbps (each direction).
    pub a2a_capacity: f64,
    /// Static power draw of a deployed UAV, watts.
    pub static_power: f64,
    /// Incremental power per Kbps of traffic entering a UAV, watts per Kbps.
    pub power_per_kbps: f64,
    /// Energy weight in the routing objective. Zero maximises supported
    /// traffic only; larger values trade supported traffic for power.
    pub lambda: f64,
    /// Default seed for scenario generation.
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            altitude: 100.0,
            a2g_range: 300.0,
            a2a_range: 500.0,
            uav_capacity: 20_000.0,
            ground_capacity: 2_000.0,
            a2g_capacity: 5_000.0,
            a2a_capacity: 20_000.0,
            static_power: 5.0,
            power_per_kbps: 0.001,
            lambda: 4.0,
            seed: 1,
        }
    }
}

impl Params {
    pub const KEYS: &'static [&'static str] = &[
        "altitude",
        "a2g_range",
        "a2a_range",
        "uav_capacity",
        "ground_capacity",
        "a2g_capacity",
        "a2a_capacity",
        "static_power",
        "power_per_kbps",
        "lambda",
        "seed",
    ];

    /// Check internal consistency. `prefix` is prepended to field names in
    /// error paths (`params.` for scenario-embedded blocks).
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let field = |name: &str| format!("{prefix}{name}");
        let positive = [
            ("a2a_range", self.a2a_range),
            ("uav_capacity", self.uav_capacity),
            ("ground_capacity", self.ground_capacity),
            ("a2g_capacity", self.a2g_capacity),
            ("a2a_capacity", self.a2a_capacity),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Validation {
                    field: field(name),
                    message: format!("must be a positive finite number, got {v}"),
                });
            }
        }
        let nonneg = [
            ("altitude", self.altitude),
            ("static_power", self.static_power),
            ("power_per_kbps", self.power_per_kbps),
            ("lambda", self.lambda),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Validation {
                    field: field(name),
                    message: format!("must be a non-negative finite number, got {v}"),
                });
            }
        }
        if self.a2g_range <= self.altitude {
            return Err(Error::Validation {
                field: field("a2g_range"),
                message: format!(
                    "must exceed altitude {} or no air-to-ground link can form, got {}",
                    self.altitude, self.a2g_range
                ),
            });
        }
        Ok(())
    }

    /// Apply the keys present in a JSON object on top of `self`. Unknown keys
    /// and wrong types are rejected with the offending field path.
    pub fn overlay_json(&mut self, value: &Value, prefix: &str) -> Result<()> {
        let obj = value.as_object().ok_or_else(|| Error::Validation {
            field: prefix.trim_end_matches('.').to_string(),
            message: "expected a JSON object".to_string(),
        })?;
        for (key, v) in obj {
            let path = format!("{prefix}{key}");
            if key == "seed" {
                self.seed = v.as_u64().ok_or_else(|| Error::Validation {
                    field: path.clone(),
                    message: "expected an unsigned integer".to_string(),
                })?;
                continue;
            }
            let f = v.as_f64().ok_or_else(|| Error::Validation {
                field: path.clone(),
                message: "expected a number".to_string(),
            })?;
            self.set_numeric(key, f, &path)?;
        }
        Ok(())
    }

    /// Apply one `key=value` override, as accepted by the CLI.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        if key == "seed" {
            self.seed = value.parse().map_err(|_| Error::Validation {
                field: key.to_string(),
                message: format!("expected an unsigned integer, got {value:?}"),
            })?;
            return Ok(());
        }
        let f: f64 = value.parse().map_err(|_| Error::Validation {
            field: key.to_string(),
            message: format!("expected a number, got {value:?}"),
        })?;
        self.set_numeric(key, f, key)
    }

    fn set_numeric(&mut self, key: &str, f: f64, path: &str) -> Result<()> {
        match key {
            "altitude" => self.altitude = f,
            "a2g_range" => self.a2g_range = f,
            "a2a_range" => self.a2a_range = f,
            "uav_capacity" => self.uav_capacity = f,
            "ground_capacity" => self.ground_capacity = f,
            "a2g_capacity" => self.a2g_capacity = f,
            "a2a_capacity" => self.a2a_capacity = f,
            "static_power" => self.static_power = f,
            "power_per_kbps" => self.power_per_kbps = f,
            "lambda" => self.lambda = f,
            _ => {
                return Err(Error::Validation {
                    field: path.to_string(),
                    message: format!(
                        "unknown parameter (known keys: {})",
                        Params::KEYS.join(", ")
                    ),
                })
            }
        }
        Ok(())
    }

    /// Full parameter block as a JSON object, for embedding in artifacts.
    pub fn to_json(&self) -> Result<Value> {
        let mut m = Map::new();
        m.insert("altitude".into(), num(self.altitude)?);
        m.insert("a2g_range".into(), num(self.a2g_range)?);
        m.insert("a2a_range".into(), num(self.a2a_range)?);
        m.insert("uav_capacity".into(), num(self.uav_capacity)?);
        m.insert("ground_capacity".into(), num(self.ground_capacity)?);
        m.insert("a2g_capacity".into(), num(self.a2g_capacity)?);
        m.insert("a2a_capacity".into(), num(self.a2a_capacity)?);
        m.insert("static_power".into(), num(self.static_power)?);
        m.insert("power_per_kbps".into(), num(self.power_per_kbps)?);
        m.insert("lambda".into(), num(self.lambda)?);
        m.insert("seed".into(), Value::from(self.seed));
        Ok(Value::Object(m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_validate() {
        Params::default().validate("params.").unwrap();
    }

    #[test]
    fn range_must_exceed_altitude() {
        let mut p = Params::default();
        p.a2g_range = 80.0;
        let err = p.validate("params.").unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "params.a2g_range"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn overlay_applies_only_present_keys() {
        let mut p = Params::default();
        p.overlay_json(&json!({"lambda": 0.25, "seed": 9}), "params.").unwrap();
        assert_eq!(p.lambda, 0.25);
        assert_eq!(p.seed, 9);
        assert_eq!(p.altitude, 100.0);
    }

    #[test]
    fn overlay_rejects_unknown_key() {
        let mut p = Params::default();
        let err = p.overlay_json(&json!({"lambada": 1.0}), "params.").unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "params.lambada"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn cli_override_parses_numbers() {
        let mut p = Params::default();
        p.apply_override("uav_capacity", "12500").unwrap();
        assert_eq!(p.uav_capacity, 12500.0);
        assert!(p.apply_override("uav_capacity", "lots").is_err());
        assert!(p.apply_override("nope", "1").is_err());
    }

    #[test]
    fn json_round_trip_covers_every_key() {
        let p = Params::default();
        let v = p.to_json().unwrap();
        let mut q = Params::default();
        q.lambda = 99.0;
        q.overlay_json(&v, "params.").unwrap();
        assert_eq!(p, q);
        let obj = v.as_object().unwrap();
        assert_eq!(obj.len(), Params::KEYS.len());
        for k in Params::KEYS {
            assert!(obj.contains_key(*k), "missing key {k}");
        }
    }
}
