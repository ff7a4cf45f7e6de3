//! Canonical JSON emission.
//!
//! Artifact files (scenarios, plans, routing solutions, sweep mirrors) must be
//! byte-identical across repeated runs so they can be diffed and hashed. The
//! standard serde_json writer emits floats in shortest-round-trip form, which
//! is deterministic but mixes representations (`0.1`, `1e-7`, `100.0`). Here we
//! pin one representation instead:
//!
//! * object keys are emitted in sorted order (serde_json's default map is a
//!   `BTreeMap`, so iteration order is already sorted),
//! * every float is printed with exactly six decimals, negative zero
//!   normalised to zero,
//! * two-space indentation, `\n` line endings, one trailing newline.
//!
//! Six decimals is plenty for the domain: positions are metres, rates are
//! Kbps, and the round-trip `parse -> emit` of a six-decimal literal is exact.

use crate::error::{Error, Result};
use serde_json::Value;
use std::fmt::Write as _;
use std::path::Path;

/// Fixed-width float formatting used across all artifact files.
pub fn fmt_f64(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

/// Build a JSON float, rejecting non-finite values up front. serde_json
/// cannot represent NaN or infinity, so catching them here gives the caller a
/// real error instead of a silent `null`.
pub fn num(v: f64) -> Result<Value> {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .ok_or_else(|| Error::Internal(format!("non-finite number {v} in artifact")))
}

/// Render a JSON tree in canonical form. Fails on non-finite numbers rather
/// than silently corrupting an artifact.
pub fn to_canonical_string(value: &Value) -> Result<String> {
    let mut out = String::new();
    emit(value, 0, &mut out)?;
    out.push('\n');
    Ok(out)
}

/// Write `value` canonically to `path`.
pub fn write_canonical(path: &Path, value: &Value) -> Result<()> {
    let text = to_canonical_string(value)?;
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Read a JSON document from `path`.
pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn emit(value: &Value, depth: usize, out: &mut String) -> Result<()> {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::String(s) => {
            // serde_json already implements exact JSON string escaping.
            let escaped = serde_json::to_string(s).expect("string serialization is infallible");
            out.push_str(&escaped);
        }
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                if !f.is_finite() {
                    return Err(Error::Internal(format!(
                        "non-finite number {f} cannot be serialized canonically"
                    )));
                }
                out.push_str(&fmt_f64(f));
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else {
                out.push('[');
                for (idx, item) in items.iter().enumerate() {
                    if idx > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    indent(depth + 1, out);
                    emit(item, depth + 1, out)?;
                }
                out.push('\n');
                indent(depth, out);
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
            } else {
                out.push('{');
                for (idx, (key, item)) in map.iter().enumerate() {
                    if idx > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    indent(depth + 1, out);
                    let escaped =
                        serde_json::to_string(key).expect("string serialization is infallible");
                    out.push_str(&escaped);
                    out.push_str(": ");
                    emit(item, depth + 1, out)?;
                }
                out.push('\n');
                indent(depth, out);
                out.push('}');
            }
        }
    }
    Ok(())
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_use_six_decimals() {
        assert_eq!(fmt_f64(1.0), "1.000000");
        assert_eq!(fmt_f64(0.1), "0.100000");
        assert_eq!(fmt_f64(-0.0), "0.000000");
        assert_eq!(fmt_f64(123.456789), "123.456789");
        assert_eq!(fmt_f64(1e-7), "0.000000");
    }

    #[test]
    fn keys_come_out_sorted() {
        let v = json!({"zeta": 1, "alpha": {"b": 2.0, "a": 1}, "mid": [1, 2.5]});
        let s = to_canonical_string(&v).unwrap();
        let alpha = s.find("\"alpha\"").unwrap();
        let mid = s.find("\"mid\"").unwrap();
        let zeta = s.find("\"zeta\"").unwrap();
        assert!(alpha < mid && mid < zeta);
        assert!(s.contains("2.500000"));
        assert!(s.ends_with('\n'));
    }

    #[test]
    fn emission_is_stable_under_reparse() {
        let v = json!({"x": 12.25, "ids": [3, 1], "name": "a\"b"});
        let s1 = to_canonical_string(&v).unwrap();
        let re: serde_json::Value = serde_json::from_str(&s1).unwrap();
        let s2 = to_canonical_string(&re).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn non_finite_is_rejected() {
        assert!(num(f64::NAN).is_err());
        assert!(num(f64::INFINITY).is_err());
        assert!(num(2.5).is_ok());
    }
}
