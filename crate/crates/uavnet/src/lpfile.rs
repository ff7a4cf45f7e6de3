//! Text export of routing instances in LP format, plus a parser strong
//! enough to cross-check an exported file against the in-memory instance.
//!
//! Variable names follow the column layout of [`crate::milp::MilpInstance`]:
//! `f_{q}_{e}` (flow of commodity q on edge e), `x_{q}` (supported demand),
//! `y_{e}` (activation of UAV edge e). Rows are named `cons_{q}_{node}`,
//! `cap_{e}` and `thr_{l}`. Coefficients are printed with Rust's shortest
//! round-trip formatting, so parsing an exported file recovers the exact
//! binary values.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::milp::MilpInstance;
use crate::solver::Sense;

/// A parsed LP file: rows keyed by name, terms keyed by variable name.
#[derive(Debug, Clone)]
pub struct LpFile {
    pub maximize: bool,
    pub objective: BTreeMap<String, f64>,
    pub obj_constant: f64,
    pub rows: Vec<LpRow>,
    pub bounds: BTreeMap<String, (f64, f64)>,
    pub binaries: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub name: String,
    pub terms: BTreeMap<String, f64>,
    pub sense: Sense,
    pub rhs: f64,
}

fn var_name(instance: &MilpInstance, col: usize) -> String {
    let n_e = instance.n_edges();
    let n_q = instance.n_commodities();
    if col < n_q * n_e {
        format!("f_{}_{}", col / n_e, col % n_e)
    } else if col < n_q * n_e + n_q {
        format!("x_{}", col - n_q * n_e)
    } else {
        format!("y_{}", instance.uav_edges[col - n_q * (n_e + 1)])
    }
}

fn row_name(instance: &MilpInstance, row: usize) -> String {
    let n_nodes = instance.n_nodes();
    let n_q = instance.n_commodities();
    let n_e = instance.n_edges();
    if row < n_q * n_nodes {
        format!("cons_{}_{}", row / n_nodes, row % n_nodes)
    } else if row < n_q * n_nodes + n_e {
        format!("cap_{}", row - n_q * n_nodes)
    } else {
        format!("thr_{}", row - n_q * n_nodes - n_e)
    }
}

fn push_terms(out: &mut String, terms: &[(usize, f64)], instance: &MilpInstance) {
    let mut first = true;
    for &(col, coeff) in terms {
        if coeff == 0.0 {
            continue;
        }
        if first {
            if coeff < 0.0 {
                out.push_str("- ");
            }
            first = false;
        } else if coeff < 0.0 {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        out.push_str(&format!("{} {}", coeff.abs(), var_name(instance, col)));
    }
    if first {
        out.push('0');
    }
}

/// Render the instance as LP-format text.
pub fn export_lp(instance: &MilpInstance) -> String {
    let lp = &instance.lp;
    let n_rows = lp.rhs.len();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
    for &(r, c, v) in &lp.entries {
        rows[r].push((c, v));
    }
    for terms in rows.iter_mut() {
        terms.sort_by_key(|&(c, _)| c);
    }

    let mut out = String::new();
    out.push_str("\\ multi-commodity routing over a combined ground and UAV network\n");
    out.push_str(&format!(
        "\\ {} commodities, {} edges, {} UAVs\n",
        instance.n_commodities(),
        instance.n_edges(),
        instance.n_uavs
    ));
    out.push_str(if lp.maximize { "Maximize\n" } else { "Minimize\n" });
    out.push_str(" obj: ");
    let obj_terms: Vec<(usize, f64)> = lp
        .obj
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(c, &v)| (c, v))
        .collect();
    push_terms(&mut out, &obj_terms, instance);
    if lp.obj_constant != 0.0 {
        if lp.obj_constant < 0.0 {
            out.push_str(&format!(" - {}", -lp.obj_constant));
        } else {
            out.push_str(&format!(" + {}", lp.obj_constant));
        }
    }
    out.push('\n');
    out.push_str("Subject To\n");
    for (r, terms) in rows.iter().enumerate() {
        out.push_str(&format!(" {}: ", row_name(instance, r)));
        push_terms(&mut out, terms, instance);
        let sense = match lp.senses[r] {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        out.push_str(&format!(" {} {}\n", sense, lp.rhs[r]));
    }
    out.push_str("Bounds\n");
    for col in 0..lp.obj.len() {
        out.push_str(&format!(
            " {} <= {} <= {}\n",
            lp.lower[col],
            var_name(instance, col),
            lp.upper[col]
        ));
    }
    if !instance.uav_edges.is_empty() {
        out.push_str("Binaries\n ");
        let names: Vec<String> =
            instance.uav_edges.iter().map(|&e| format!("y_{e}")).collect();
        out.push_str(&names.join(" "));
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: format!("lp text, line {line}"),
        message: message.into(),
    }
}

#[derive(PartialEq)]
enum Section {
    Preamble,
    Objective,
    Rows,
    Bounds,
    Binaries,
    Done,
}

/// Parse LP-format text produced by [`export_lp`] (sections Maximize or
/// Minimize, Subject To, Bounds, Binaries, End; explicit coefficients;
/// one row per line).
pub fn parse_lp(text: &str) -> Result<LpFile> {
    let mut maximize = None;
    let mut objective = BTreeMap::new();
    let mut obj_constant = 0.0f64;
    let mut rows = Vec::new();
    let mut bounds = BTreeMap::new();
    let mut binaries = BTreeSet::new();
    let mut section = Section::Preamble;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('\\') {
            continue;
        }
        let lowered = line.to_ascii_lowercase();
        match lowered.as_str() {
            "maximize" | "maximise" | "max" => {
                maximize = Some(true);
                section = Section::Objective;
                continue;
            }
            "minimize" | "minimise" | "min" => {
                maximize = Some(false);
                section = Section::Objective;
                continue;
            }
            "subject to" | "st" | "s.t." => {
                section = Section::Rows;
                continue;
            }
            "bounds" => {
                section = Section::Bounds;
                continue;
            }
            "binaries" | "binary" | "bin" => {
                section = Section::Binaries;
                continue;
            }
            "end" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Preamble => {
                return Err(parse_err(lineno, "expected an objective sense header"))
            }
            Section::Done => return Err(parse_err(lineno, "content after End")),
            Section::Objective => {
                let body = match line.split_once(':') {
                    Some((_, b)) => b,
                    None => line,
                };
                let (terms, constant) = parse_terms(body, lineno)?;
                for (name, coeff) in terms {
                    *objective.entry(name).or_insert(0.0) += coeff;
                }
                obj_constant += constant;
            }
            Section::Rows => {
                let (name, body) = line
                    .split_once(':')
                    .ok_or_else(|| parse_err(lineno, "row without a name"))?;
                let (sense, split_at) = find_sense(body)
                    .ok_or_else(|| parse_err(lineno, "row without a comparison"))?;
                let (lhs, rhs_text) = body.split_at(split_at);
                let rhs_text = rhs_text
                    .trim_start_matches(['<', '>', '='])
                    .trim();
                let rhs: f64 = rhs_text
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad rhs {rhs_text:?}")))?;
                let (terms, constant) = parse_terms(lhs, lineno)?;
                let mut map = BTreeMap::new();
                for (n, c) in terms {
                    *map.entry(n).or_insert(0.0) += c;
                }
                rows.push(LpRow {
                    name: name.trim().to_string(),
                    terms: map,
                    sense,
                    rhs: rhs - constant,
                });
            }
            Section::Bounds => {
                let parts: Vec<&str> = line.split_whitespace().collect();
                match parts.as_slice() {
                    [lo, "<=", name, "<=", hi] => {
                        let lo: f64 = lo
                            .parse()
                            .map_err(|_| parse_err(lineno, "bad lower bound"))?;
                        let hi: f64 = hi
                            .parse()
                            .map_err(|_| parse_err(lineno, "bad upper bound"))?;
                        bounds.insert(name.to_string(), (lo, hi));
                    }
                    [name, "<=", hi] => {
                        let hi: f64 = hi
                            .parse()
                            .map_err(|_| parse_err(lineno, "bad upper bound"))?;
                        bounds.insert(name.to_string(), (0.0, hi));
                    }
                    [name, ">=", lo] => {
                        let lo: f64 = lo
                            .parse()
                            .map_err(|_| parse_err(lineno, "bad lower bound"))?;
                        bounds.insert(name.to_string(), (lo, f64::INFINITY));
                    }
                    _ => return Err(parse_err(lineno, "unrecognised bound line")),
                }
            }
            Section::Binaries => {
                for name in line.split_whitespace() {
                    binaries.insert(name.to_string());
                }
            }
        }
    }

    Ok(LpFile {
        maximize: maximize
            .ok_or_else(|| parse_err(0, "missing objective sense header"))?,
        objective,
        obj_constant,
        rows,
        bounds,
        binaries,
    })
}

fn find_sense(body: &str) -> Option<(Sense, usize)> {
    if let Some(i) = body.find("<=") {
        return Some((Sense::Le, i));
    }
    if let Some(i) = body.find(">=") {
        return Some((Sense::Ge, i));
    }
    body.find('=').map(|i| (Sense::Eq, i))
}

/// Parse `- 2 x_1 + 0.5 f_0_3 + 7` into named terms and a constant.
fn parse_terms(body: &str, lineno: usize) -> Result<(Vec<(String, f64)>, f64)> {
    let mut terms = Vec::new();
    let mut constant = 0.0f64;
    let mut sign = 1.0f64;
    let mut pending: Option<f64> = None;
    for token in body.split_whitespace() {
        match token {
            "+" => {
                if let Some(v) = pending.take() {
                    constant += sign * v;
                }
                sign = 1.0;
            }
            "-" => {
                if let Some(v) = pending.take() {
                    constant += sign * v;
                }
                sign = -1.0;
            }
            _ => {
                if let Ok(v) = token.parse::<f64>() {
                    if let Some(prev) = pending.take() {
                        constant += sign * prev;
                    }
                    pending = Some(v);
                } else {
                    let coeff = pending.take().unwrap_or(1.0);
                    if token
                        .chars()
                        .next()
                        .map(|c| !(c.is_ascii_alphabetic() || c == '_'))
                        .unwrap_or(true)
                    {
                        return Err(parse_err(lineno, format!("bad token {token:?}")));
                    }
                    terms.push((token.to_string(), sign * coeff));
                    sign = 1.0;
                }
            }
        }
    }
    if let Some(v) = pending.take() {
        constant += sign * v;
    }
    Ok((terms, constant))
}

/// Compare a parsed LP file against the in-memory instance. Returns the
/// list of mismatches (empty when the file matches).
pub fn cross_check(instance: &MilpInstance, file: &LpFile) -> Vec<String> {
    let lp = &instance.lp;
    let mut issues = Vec::new();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);

    if file.maximize != lp.maximize {
        issues.push("objective sense differs".into());
    }
    if !close(file.obj_constant, lp.obj_constant) {
        issues.push(format!(
            "objective constant {} differs from {}",
            file.obj_constant, lp.obj_constant
        ));
    }
    for col in 0..lp.obj.len() {
        let name = var_name(instance, col);
        let got = file.objective.get(&name).copied().unwrap_or(0.0);
        if !close(got, lp.obj[col]) {
            issues.push(format!("objective coefficient of {name}: {} vs {}", got, lp.obj[col]));
        }
        match file.bounds.get(&name) {
            None => issues.push(format!("missing bounds for {name}")),
            Some(&(lo, hi)) => {
                if !close(lo, lp.lower[col]) || !close(hi, lp.upper[col]) {
                    issues.push(format!(
                        "bounds of {name}: [{lo}, {hi}] vs [{}, {}]",
                        lp.lower[col], lp.upper[col]
                    ));
                }
            }
        }
    }
    for extra in file.objective.keys() {
        let known = file.bounds.contains_key(extra);
        if !known {
            issues.push(format!("objective names unknown variable {extra}"));
        }
    }

    let n_rows = lp.rhs.len();
    if file.rows.len() != n_rows {
        issues.push(format!("row count {} differs from {}", file.rows.len(), n_rows));
    }
    let mut expected_rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n_rows];
    for &(r, c, v) in &lp.entries {
        *expected_rows[r].entry(c).or_insert(0.0) += v;
    }
    let by_name: BTreeMap<&str, &LpRow> =
        file.rows.iter().map(|r| (r.name.as_str(), r)).collect();
    for r in 0..n_rows {
        let name = row_name(instance, r);
        let row = match by_name.get(name.as_str()) {
            Some(row) => row,
            None => {
                issues.push(format!("missing row {name}"));
                continue;
            }
        };
        if row.sense != lp.senses[r] {
            issues.push(format!("row {name}: sense differs"));
        }
        if !close(row.rhs, lp.rhs[r]) {
            issues.push(format!("row {name}: rhs {} vs {}", row.rhs, lp.rhs[r]));
        }
        for (&col, &v) in &expected_rows[r] {
            if v == 0.0 {
                continue;
            }
            let vn = var_name(instance, col);
            let got = row.terms.get(&vn).copied().unwrap_or(0.0);
            if !close(got, v) {
                issues.push(format!("row {name}: coefficient of {vn} is {got} vs {v}"));
            }
        }
        for (vn, &got) in &row.terms {
            if got == 0.0 {
                continue;
            }
            let expected = expected_rows[r]
                .iter()
                .find(|(&c, _)| var_name(instance, c) == *vn)
                .map(|(_, &v)| v)
                .unwrap_or(0.0);
            if expected == 0.0 {
                issues.push(format!("row {name}: unexpected term {vn}"));
            }
        }
    }

    let expected_binaries: BTreeSet<String> =
        instance.uav_edges.iter().map(|&e| format!("y_{e}")).collect();
    if file.binaries != expected_binaries {
        issues.push(format!(
            "binary set differs: {} names vs {}",
            file.binaries.len(),
            expected_binaries.len()
        ));
    }
    issues
}
