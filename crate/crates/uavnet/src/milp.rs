//! Multi-commodity-flow routing as a mixed-integer linear program.
//!
//! For a combined network graph, commodity set Q and parameters, the
//! instance has variables (column order is part of the file contract):
//!
//! * `f[q, e]` for q in 0..Q, e in 0..E: flow of commodity q on directed
//!   edge e, column `q * E + e`, bounds `[0, min(cap_e, d_q)]`;
//! * `x[q]`: supported demand of commodity q, column `Q * E + q`, bounds
//!   `[0, d_q]`;
//! * `y[t]` for the t-th UAV edge (air-to-ground or air-to-air, in edge
//!   order): activation of that edge, column `Q * E + Q + t`, binary.
//!
//! and rows:
//!
//! * conservation, row `q * V + v`: net outflow of commodity q at node v
//!   equals `+x_q` at the source, `-x_q` at the destination, `0` elsewhere
//!   (written with the x term moved to the left-hand side, rhs 0);
//! * capacity, row `Q * V + e`: total flow on edge e at most `cap_e` for
//!   ground edges, at most `cap_e * y_e` for UAV edges;
//! * throughput, row `Q * V + E + l`: total flow entering UAV l at most
//!   the UAV capacity (incoming traffic only, so relayed traffic is
//!   counted once per hop).
//!
//! The objective maximizes supported traffic against consumed power, both
//! normalized so the trade-off weight lambda is dimensionless:
//!
//! ```text
//! maximize sum_q x_q / D  -  lambda * sum_l P_l / (L * P0)
//! P_l = P0 + kappa * (flow into l),   D = total demand, L = UAV count
//! ```
//!
//! The static part contributes the constant `-lambda` (every placed UAV
//! burns `P0` regardless of routing) which is included in reported
//! objective values. With no UAVs the power term vanishes.
//!
//! Solving is exact: the LP relaxation runs through the bounded simplex in
//! [`crate::solver`] and a best-bound branch-and-bound closes the binaries.
//! An independent checker, [`verify_solution`], re-derives every constraint
//! family from the semantic data (edges, commodities, parameters) without
//! touching the solver's triplet matrix.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::{Map, Value};

use crate::canon;
use crate::error::{Error, Result};
use crate::graph::{EdgeKind, NetworkGraph};
use crate::params::Params;
use crate::solver::{LpProblem, Sense};

/// One origin-destination demand to be routed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Commodity {
    /// Source ground user (node id).
    pub src: usize,
    /// Destination ground user (node id).
    pub dst: usize,
    /// Demanded volume, Kbps.
    pub demand: f64,
}

/// A semantic edge copy kept alongside the LP so checkers need not touch
/// the graph again.
#[derive(Debug, Clone, Copy)]
pub struct MilpEdge {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
    pub is_uav_edge: bool,
}

#[derive(Debug, Clone)]
pub struct MilpInstance {
    pub edges: Vec<MilpEdge>,
    pub n_users: usize,
    pub n_uavs: usize,
    pub commodities: Vec<Commodity>,
    pub lambda: f64,
    pub kappa: f64,
    pub p0: f64,
    pub c_max: f64,
    /// Edge index of the t-th binary variable.
    pub uav_edges: Vec<usize>,
    /// The relaxation: binaries boxed to [0, 1].
    pub lp: LpProblem,
}

impl MilpInstance {
    pub fn n_nodes(&self) -> usize {
        self.n_users + self.n_uavs
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn n_commodities(&self) -> usize {
        self.commodities.len()
    }
    pub fn total_demand(&self) -> f64 {
        self.commodities.iter().map(|c| c.demand).sum()
    }

    /// Column of `f[q, e]`.
    pub fn col_f(&self, q: usize, e: usize) -> usize {
        q * self.n_edges() + e
    }
    /// Column of `x[q]`.
    pub fn col_x(&self, q: usize) -> usize {
        self.n_commodities() * self.n_edges() + q
    }
    /// Column of the t-th binary.
    pub fn col_y(&self, t: usize) -> usize {
        self.n_commodities() * (self.n_edges() + 1) + t
    }
    /// Total variable count: `Q*E + Q + U`.
    pub fn n_vars(&self) -> usize {
        self.n_commodities() * (self.n_edges() + 1) + self.uav_edges.len()
    }
    /// Total row count: `Q*V + E + L`.
    pub fn n_rows(&self) -> usize {
        self.n_commodities() * self.n_nodes() + self.n_edges() + self.n_uavs
    }
    pub fn row_conservation(&self, q: usize, node: usize) -> usize {
        q * self.n_nodes() + node
    }
    pub fn row_capacity(&self, e: usize) -> usize {
        self.n_commodities() * self.n_nodes() + e
    }
    pub fn row_throughput(&self, l: usize) -> usize {
        self.n_commodities() * self.n_nodes() + self.n_edges() + l
    }
}

/// Assemble the MILP for a graph and commodity set.
pub fn build_milp(
    graph: &NetworkGraph,
    commodities: Vec<Commodity>,
    params: &Params,
) -> MilpInstance {
    let edges: Vec<MilpEdge> = graph
        .edges
        .iter()
        .map(|e| MilpEdge {
            from: e.from,
            to: e.to,
            capacity: e.capacity,
            is_uav_edge: e.kind != EdgeKind::Ground,
        })
        .collect();
    let uav_edges: Vec<usize> =
        edges.iter().enumerate().filter(|(_, e)| e.is_uav_edge).map(|(i, _)| i).collect();
    let n_users = graph.n_users;
    let n_uavs = graph.n_uavs;
    let n_nodes = n_users + n_uavs;
    let n_e = edges.len();
    let n_q = commodities.len();
    let n_u = uav_edges.len();
    let total_demand: f64 = commodities.iter().map(|c| c.demand).sum();

    let n_vars = n_q * (n_e + 1) + n_u;
    let n_rows = n_q * n_nodes + n_e + n_uavs;

    let mut obj = vec![0.0f64; n_vars];
    let mut lower = vec![0.0f64; n_vars];
    let mut upper = vec![0.0f64; n_vars];
    let traffic_gain = if total_demand > 0.0 { 1.0 / total_demand } else { 0.0 };
    let power_cost = if n_uavs > 0 {
        params.lambda * params.power_per_kbps / (n_uavs as f64 * params.static_power)
    } else {
        0.0
    };
    for (q, c) in commodities.iter().enumerate() {
        for (e, edge) in edges.iter().enumerate() {
            let col = q * n_e + e;
            upper[col] = edge.capacity.min(c.demand);
            if edge.to >= n_users {
                obj[col] = -power_cost;
            }
        }
        let col = n_q * n_e + q;
        upper[col] = c.demand;
        obj[col] = traffic_gain;
    }
    for t in 0..n_u {
        let col = n_q * (n_e + 1) + t;
        lower[col] = 0.0;
        upper[col] = 1.0;
    }

    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut senses = vec![Sense::Le; n_rows];
    let rhs_len = n_rows;
    let mut rhs = vec![0.0f64; rhs_len];

    // Conservation rows.
    for (q, c) in commodities.iter().enumerate() {
        for node in 0..n_nodes {
            senses[q * n_nodes + node] = Sense::Eq;
        }
        for (e, edge) in edges.iter().enumerate() {
            entries.push((q * n_nodes + edge.from, q * n_e + e, 1.0));
            entries.push((q * n_nodes + edge.to, q * n_e + e, -1.0));
        }
        entries.push((q * n_nodes + c.src, n_q * n_e + q, -1.0));
        entries.push((q * n_nodes + c.dst, n_q * n_e + q, 1.0));
    }
    // Capacity rows.
    for (e, edge) in edges.iter().enumerate() {
        let row = n_q * n_nodes + e;
        for q in 0..n_q {
            entries.push((row, q * n_e + e, 1.0));
        }
        if edge.is_uav_edge {
            let t = uav_edges.binary_search(&e).expect("uav edge is indexed");
            entries.push((row, n_q * (n_e + 1) + t, -edge.capacity));
            rhs[row] = 0.0;
        } else {
            rhs[row] = edge.capacity;
        }
    }
    // Throughput rows: incoming flow per UAV.
    for l in 0..n_uavs {
        let row = n_q * n_nodes + n_e + l;
        let node = n_users + l;
        for (e, edge) in edges.iter().enumerate() {
            if edge.to == node {
                for q in 0..n_q {
                    entries.push((row, q * n_e + e, 1.0));
                }
            }
        }
        rhs[row] = params.uav_capacity;
    }

    let obj_constant = if n_uavs > 0 { -params.lambda } else { 0.0 };
    let lp = LpProblem {
        maximize: true,
        obj,
        obj_constant,
        lower,
        upper,
        senses,
        rhs,
        entries,
    };
    MilpInstance {
        edges,
        n_users,
        n_uavs,
        commodities,
        lambda: params.lambda,
        kappa: params.power_per_kbps,
        p0: params.static_power,
        c_max: params.uav_capacity,
        uav_edges,
        lp,
    }
}

/// Search outcome quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    FeasibleGap,
    Infeasible,
    Unknown,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::FeasibleGap => "feasible-gap",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unknown => "unknown",
        }
    }
    pub fn from_str(s: &str) -> Option<SolveStatus> {
        match s {
            "optimal" => Some(SolveStatus::Optimal),
            "feasible-gap" => Some(SolveStatus::FeasibleGap),
            "infeasible" => Some(SolveStatus::Infeasible),
            "unknown" => Some(SolveStatus::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BbOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Best proven bound on the optimum (upper bound when maximizing).
    pub bound: f64,
    pub status: SolveStatus,
    pub nodes: usize,
}

struct BbNode {
    bound: f64,
    id: usize,
    fixes: Vec<(usize, f64)>,
}

/// Exact 0/1 search over the given binary columns of a boxed LP.
///
/// Best-bound node selection (ties go to the oldest node), branching on the
/// most fractional binary (ties to the lowest column). A rounding heuristic
/// seeds the incumbent whenever the rounded point satisfies the original
/// rows, which closes purely-degenerate instances at the root. Search stops
/// when the remaining gap is at most `rel_gap * max(1, |incumbent|)` or the
/// node limit is reached.
pub fn branch_and_bound(
    lp: &LpProblem,
    binaries: &[usize],
    rel_gap: f64,
    node_limit: usize,
) -> Result<BbOutcome> {
    let sign = if lp.maximize { 1.0 } else { -1.0 };
    // Everything below maximizes `sign * objective`.
    let worth = |v: f64| sign * v;
    let gap_eps = |v: f64| rel_gap * v.abs().max(1.0);

    let mut work = lp.clone();
    let mut heap: Vec<BbNode> = Vec::new();
    let mut next_id = 0usize;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes_solved = 0usize;
    let mut status_on_stop = SolveStatus::Unknown;

    heap.push(BbNode { bound: f64::INFINITY, id: next_id, fixes: Vec::new() });
    next_id += 1;

    let pop_best = |heap: &mut Vec<BbNode>| -> Option<BbNode> {
        if heap.is_empty() {
            return None;
        }
        let mut best = 0;
        for i in 1..heap.len() {
            let a = &heap[i];
            let b = &heap[best];
            if a.bound > b.bound || (a.bound == b.bound && a.id < b.id) {
                best = i;
            }
        }
        Some(heap.swap_remove(best))
    };

    let mut final_bound = f64::NEG_INFINITY;
    while let Some(node) = pop_best(&mut heap) {
        if let Some((inc, _)) = &incumbent {
            // Best-first order: once the best open bound is within the gap
            // the search is complete.
            if node.bound <= worth(*inc) + gap_eps(*inc) {
                final_bound = final_bound.max(node.bound);
                status_on_stop = SolveStatus::Optimal;
                heap.clear();
                break;
            }
        }
        if nodes_solved >= node_limit {
            final_bound = final_bound.max(node.bound);
            status_on_stop = if incumbent.is_some() {
                SolveStatus::FeasibleGap
            } else {
                SolveStatus::Unknown
            };
            break;
        }
        nodes_solved += 1;

        for &(col, v) in &node.fixes {
            work.lower[col] = v;
            work.upper[col] = v;
        }
        let solved = work.solve();
        for &(col, _) in &node.fixes {
            work.lower[col] = lp.lower[col];
            work.upper[col] = lp.upper[col];
        }
        let sol = match solved {
            Ok(s) => s,
            Err(Error::LpInfeasible { .. }) => continue,
            Err(e) => return Err(e),
        };
        let node_bound = worth(sol.objective);
        if let Some((inc, _)) = &incumbent {
            if node_bound <= worth(*inc) + gap_eps(*inc) {
                continue;
            }
        }

        // Most fractional binary.
        let mut branch_col = None;
        let mut branch_frac = 1e-6;
        for &c in binaries {
            let v = sol.x[c];
            let frac = v.min(1.0 - v).max(0.0);
            if frac > branch_frac {
                branch_frac = frac;
                branch_col = Some(c);
            }
        }
        match branch_col {
            None => {
                // Integral: candidate incumbent.
                let better = match &incumbent {
                    None => true,
                    Some((inc, _)) => node_bound > worth(*inc),
                };
                if better {
                    incumbent = Some((sol.objective, sol.x.clone()));
                }
            }
            Some(col) => {
                // Rounding heuristic: snap binaries and keep the point if
                // it satisfies the original rows.
                for snapped in [snap_up(&sol.x, binaries), snap_nearest(&sol.x, binaries)] {
                    if row_violation(lp, &snapped) <= 1e-7 {
                        let obj: f64 = snapped
                            .iter()
                            .zip(&lp.obj)
                            .map(|(a, b)| a * b)
                            .sum::<f64>()
                            + lp.obj_constant;
                        let better = match &incumbent {
                            None => true,
                            Some((inc, _)) => worth(obj) > worth(*inc),
                        };
                        if better {
                            incumbent = Some((obj, snapped));
                        }
                    }
                }
                let mut lo = node.fixes.clone();
                lo.push((col, 0.0));
                heap.push(BbNode { bound: node_bound, id: next_id, fixes: lo });
                next_id += 1;
                let mut hi = node.fixes;
                hi.push((col, 1.0));
                heap.push(BbNode { bound: node_bound, id: next_id, fixes: hi });
                next_id += 1;
            }
        }
    }

    match incumbent {
        Some((obj, x)) => {
            let proven = if heap.is_empty() && status_on_stop != SolveStatus::FeasibleGap {
                SolveStatus::Optimal
            } else {
                status_on_stop
            };
            let bound = if proven == SolveStatus::Optimal {
                if final_bound.is_finite() { final_bound.max(worth(obj)) } else { worth(obj) }
            } else {
                final_bound
            };
            Ok(BbOutcome {
                x,
                objective: obj,
                bound: sign * bound,
                status: proven,
                nodes: nodes_solved,
            })
        }
        None => {
            let status = if status_on_stop == SolveStatus::Unknown && nodes_solved >= node_limit {
                SolveStatus::Unknown
            } else {
                SolveStatus::Infeasible
            };
            Ok(BbOutcome {
                x: vec![],
                objective: f64::NAN,
                bound: sign * final_bound,
                status,
                nodes: nodes_solved,
            })
        }
    }
}

fn snap_up(x: &[f64], binaries: &[usize]) -> Vec<f64> {
    let mut out = x.to_vec();
    for &c in binaries {
        out[c] = if x[c] > 1e-9 { 1.0 } else { 0.0 };
    }
    out
}

fn snap_nearest(x: &[f64], binaries: &[usize]) -> Vec<f64> {
    let mut out = x.to_vec();
    for &c in binaries {
        out[c] = if x[c] >= 0.5 { 1.0 } else { 0.0 };
    }
    out
}

/// Largest row violation of a candidate point (bounds are not checked;
/// callers snap only within bounds).
fn row_violation(lp: &LpProblem, x: &[f64]) -> f64 {
    let mut lhs = vec![0.0f64; lp.rhs.len()];
    for &(r, c, v) in &lp.entries {
        lhs[r] += v * x[c];
    }
    let mut worst = 0.0f64;
    for i in 0..lp.rhs.len() {
        let scale = lp.rhs[i].abs().max(1.0);
        let v = match lp.senses[i] {
            Sense::Le => lhs[i] - lp.rhs[i],
            Sense::Ge => lp.rhs[i] - lhs[i],
            Sense::Eq => (lhs[i] - lp.rhs[i]).abs(),
        };
        worst = worst.max(v / scale);
    }
    worst
}

/// A routed network: flows, supported volumes, activations, and power.
#[derive(Debug, Clone)]
pub struct RoutingSolution {
    /// (commodity, edge) -> Kbps, zero flows omitted.
    pub flows: BTreeMap<(usize, usize), f64>,
    /// Supported Kbps per commodity.
    pub supported: Vec<f64>,
    /// Activation per UAV edge, aligned with `MilpInstance::uav_edges`.
    pub activation: Vec<f64>,
    /// Watts per UAV.
    pub power: Vec<f64>,
    pub objective: f64,
    pub bound: f64,
    pub status: SolveStatus,
    pub nodes: usize,
}

impl RoutingSolution {
    pub fn total_supported(&self) -> f64 {
        self.supported.iter().sum()
    }
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// Interpret a branch-and-bound point as a routing solution.
pub fn solution_from_point(instance: &MilpInstance, x: &[f64]) -> RoutingSolution {
    solution_with_status(instance, x, f64::NAN, SolveStatus::Unknown, 0)
}

fn solution_with_status(
    instance: &MilpInstance,
    point: &[f64],
    bound: f64,
    status: SolveStatus,
    nodes: usize,
) -> RoutingSolution {
    let n_e = instance.n_edges();
    let mut flows = BTreeMap::new();
    for (q, c) in instance.commodities.iter().enumerate() {
        for e in 0..n_e {
            let v = point[instance.col_f(q, e)];
            if v > 1e-9 {
                flows.insert((q, e), v.min(c.demand.min(instance.edges[e].capacity)));
            }
        }
    }
    let supported: Vec<f64> = instance
        .commodities
        .iter()
        .enumerate()
        .map(|(q, c)| point[instance.col_x(q)].clamp(0.0, c.demand))
        .collect();
    let activation: Vec<f64> =
        (0..instance.uav_edges.len()).map(|t| point[instance.col_y(t)].round()).collect();
    let mut power = vec![0.0f64; instance.n_uavs];
    for (&(_, e), &kbps) in &flows {
        let to = instance.edges[e].to;
        if to >= instance.n_users {
            power[to - instance.n_users] += instance.kappa * kbps;
        }
    }
    for p in power.iter_mut() {
        *p += instance.p0;
    }
    let objective = objective_of(instance, point);
    RoutingSolution {
        flows,
        supported,
        activation,
        power,
        objective,
        bound,
        status,
        nodes,
    }
}

fn objective_of(instance: &MilpInstance, point: &[f64]) -> f64 {
    point.iter().zip(&instance.lp.obj).map(|(a, b)| a * b).sum::<f64>()
        + instance.lp.obj_constant
}

/// Build and exactly solve the routing MILP.
pub fn route(
    graph: &NetworkGraph,
    commodities: Vec<Commodity>,
    params: &Params,
) -> Result<(MilpInstance, RoutingSolution)> {
    let instance = build_milp(graph, commodities, params);
    let binaries: Vec<usize> =
        (0..instance.uav_edges.len()).map(|t| instance.col_y(t)).collect();
    let outcome = branch_and_bound(&instance.lp, &binaries, 1e-6, 100_000)?;
    let solution = match outcome.status {
        SolveStatus::Optimal | SolveStatus::FeasibleGap => solution_with_status(
            &instance,
            &outcome.x,
            outcome.bound,
            outcome.status,
            outcome.nodes,
        ),
        // The all-zero point is always feasible for routing instances, so
        // these arms signal a genuine solver defect.
        SolveStatus::Infeasible | SolveStatus::Unknown => {
            return Err(Error::Internal(format!(
                "routing search ended {} although the zero routing is feasible",
                outcome.status.as_str()
            )))
        }
    };
    Ok((instance, solution))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowRec {
    q: usize,
    edge: usize,
    kbps: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SupportedRec {
    q: usize,
    kbps: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ActivationRec {
    edge: usize,
    y: u8,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerRec {
    uav: usize,
    watts: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RoutingFile {
    status: String,
    objective: f64,
    bound: f64,
    nodes: usize,
    flows: Vec<FlowRec>,
    supported: Vec<SupportedRec>,
    activation: Vec<ActivationRec>,
    power: Vec<PowerRec>,
    /// Accepted and ignored: producer provenance only.
    #[serde(default, rename = "meta")]
    _meta: Option<Value>,
}

/// Serialize a routing solution. Activations are keyed by global edge
/// index; flows below 1e-9 Kbps are omitted.
pub fn routing_to_json(
    instance: &MilpInstance,
    solution: &RoutingSolution,
    meta: Option<Value>,
) -> Result<Value> {
    let mut root = Map::new();
    root.insert("status".into(), Value::String(solution.status.as_str().into()));
    root.insert("objective".into(), canon::num(solution.objective)?);
    root.insert("bound".into(), canon::num(solution.bound)?);
    root.insert("nodes".into(), Value::from(solution.nodes as u64));
    let flows: Vec<Value> = solution
        .flows
        .iter()
        .map(|(&(q, e), &kbps)| {
            let mut m = Map::new();
            m.insert("q".into(), Value::from(q as u64));
            m.insert("edge".into(), Value::from(e as u64));
            m.insert("kbps".into(), canon::num(kbps)?);
            Ok(Value::Object(m))
        })
        .collect::<Result<_>>()?;
    root.insert("flows".into(), Value::Array(flows));
    let supported: Vec<Value> = solution
        .supported
        .iter()
        .enumerate()
        .map(|(q, &kbps)| {
            let mut m = Map::new();
            m.insert("q".into(), Value::from(q as u64));
            m.insert("kbps".into(), canon::num(kbps)?);
            Ok(Value::Object(m))
        })
        .collect::<Result<_>>()?;
    root.insert("supported".into(), Value::Array(supported));
    let activation: Vec<Value> = solution
        .activation
        .iter()
        .enumerate()
        .map(|(t, &y)| {
            let mut m = Map::new();
            m.insert("edge".into(), Value::from(instance.uav_edges[t] as u64));
            m.insert("y".into(), Value::from(if y >= 0.5 { 1u64 } else { 0u64 }));
            Value::Object(m)
        })
        .collect();
    root.insert("activation".into(), Value::Array(activation));
    let power: Vec<Value> = solution
        .power
        .iter()
        .enumerate()
        .map(|(l, &watts)| {
            let mut m = Map::new();
            m.insert("uav".into(), Value::from(l as u64));
            m.insert("watts".into(), canon::num(watts)?);
            Ok(Value::Object(m))
        })
        .collect::<Result<_>>()?;
    root.insert("power".into(), Value::Array(power));
    if let Some(meta) = meta {
        root.insert("meta".into(), meta);
    }
    Ok(Value::Object(root))
}

/// Parse a routing file against its instance, validating indices.
pub fn routing_from_json(value: Value, instance: &MilpInstance) -> Result<RoutingSolution> {
    let file: RoutingFile = serde_json::from_value(value).map_err(|e| Error::Parse {
        path: "routing".into(),
        message: e.to_string(),
    })?;
    let status = SolveStatus::from_str(&file.status).ok_or_else(|| Error::Validation {
        field: "status".into(),
        message: format!("unknown status {:?}", file.status),
    })?;
    let n_q = instance.n_commodities();
    let n_e = instance.n_edges();
    let mut flows = BTreeMap::new();
    for rec in &file.flows {
        if rec.q >= n_q || rec.edge >= n_e {
            return Err(Error::Validation {
                field: "flows".into(),
                message: format!("flow ({}, {}) outside instance", rec.q, rec.edge),
            });
        }
        if flows.insert((rec.q, rec.edge), rec.kbps).is_some() {
            return Err(Error::Validation {
                field: "flows".into(),
                message: format!("duplicate flow entry ({}, {})", rec.q, rec.edge),
            });
        }
    }
    let mut supported = vec![0.0f64; n_q];
    for rec in &file.supported {
        if rec.q >= n_q {
            return Err(Error::Validation {
                field: "supported".into(),
                message: format!("commodity {} outside instance", rec.q),
            });
        }
        supported[rec.q] = rec.kbps;
    }
    let mut activation = vec![0.0f64; instance.uav_edges.len()];
    for rec in &file.activation {
        let t = instance.uav_edges.iter().position(|&e| e == rec.edge).ok_or_else(|| {
            Error::Validation {
                field: "activation".into(),
                message: format!("edge {} is not a UAV edge", rec.edge),
            }
        })?;
        activation[t] = rec.y as f64;
    }
    let mut power = vec![0.0f64; instance.n_uavs];
    for rec in &file.power {
        if rec.uav >= instance.n_uavs {
            return Err(Error::Validation {
                field: "power".into(),
                message: format!("uav {} outside instance", rec.uav),
            });
        }
        power[rec.uav] = rec.watts;
    }
    Ok(RoutingSolution {
        flows,
        supported,
        activation,
        power,
        objective: file.objective,
        bound: file.bound,
        status,
        nodes: file.nodes,
    })
}

/// Write a routing solution in canonical form.
pub fn save_routing(
    path: &Path,
    instance: &MilpInstance,
    solution: &RoutingSolution,
    meta: Option<Value>,
) -> Result<()> {
    canon::write_canonical(path, &routing_to_json(instance, solution, meta)?)
}

/// Read a routing solution, validated against its instance.
pub fn load_routing(path: &Path, instance: &MilpInstance) -> Result<RoutingSolution> {
    routing_from_json(canon::read_json(path)?, instance)
}

/// Violation summary for one constraint family.
#[derive(Debug, Clone)]
pub struct FamilyReport {
    pub family: &'static str,
    /// Largest scaled violation (raw violation / max(1, row scale)).
    pub max_violation: f64,
    /// Number of checks beyond tolerance.
    pub violations: usize,
    /// Human-readable location of the worst violation.
    pub worst: String,
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub pass: bool,
    pub tol: f64,
    pub families: Vec<FamilyReport>,
}

impl VerificationReport {
    pub fn family(&self, name: &str) -> &FamilyReport {
        self.families.iter().find(|f| f.family == name).expect("family exists")
    }
    /// Locations of all violations in one family (recomputed lazily by the
    /// checker and stored in `worst` only for the maximum; this lists the
    /// count).
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for f in &self.families {
            s.push_str(&format!(
                "{:<13} max {:.3e} ({} beyond tol) at {}\n",
                f.family, f.max_violation, f.violations, f.worst
            ));
        }
        s
    }
}

struct FamilyAcc {
    family: &'static str,
    max_violation: f64,
    violations: usize,
    worst: String,
    tol: f64,
    locations: Vec<String>,
}

impl FamilyAcc {
    fn new(family: &'static str, tol: f64) -> FamilyAcc {
        FamilyAcc {
            family,
            max_violation: 0.0,
            violations: 0,
            worst: "-".into(),
            tol,
            locations: Vec::new(),
        }
    }
    fn check(&mut self, scaled_violation: f64, location: impl Fn() -> String) {
        if scaled_violation > self.max_violation {
            self.max_violation = scaled_violation;
            self.worst = location();
        }
        if scaled_violation > self.tol {
            self.violations += 1;
            self.locations.push(location());
        }
    }
    fn into_report(self) -> FamilyReport {
        FamilyReport {
            family: self.family,
            max_violation: self.max_violation,
            violations: self.violations,
            worst: self.worst,
        }
    }
}

/// Independently check a routing solution against the instance semantics.
///
/// Every constraint family is recomputed from the commodity and edge data;
/// nothing is shared with the solver's matrix. Violations are scaled by
/// `max(1, natural row magnitude)` before comparison with `tol`.
pub fn verify_solution(
    instance: &MilpInstance,
    solution: &RoutingSolution,
    tol: f64,
) -> VerificationReport {
    let n_nodes = instance.n_nodes();
    let n_e = instance.n_edges();
    let n_q = instance.n_commodities();

    let mut conservation = FamilyAcc::new("conservation", tol);
    let mut capacity = FamilyAcc::new("capacity", tol);
    let mut throughput = FamilyAcc::new("throughput", tol);
    let mut bounds = FamilyAcc::new("bounds", tol);
    let mut integrality = FamilyAcc::new("integrality", tol);
    let mut objective = FamilyAcc::new("objective", tol);

    // Conservation: net outflow per (commodity, node).
    for (q, c) in instance.commodities.iter().enumerate() {
        let mut net = vec![0.0f64; n_nodes];
        for (&(fq, e), &kbps) in &solution.flows {
            if fq != q {
                continue;
            }
            net[instance.edges[e].from] += kbps;
            net[instance.edges[e].to] -= kbps;
        }
        let x = solution.supported.get(q).copied().unwrap_or(0.0);
        for node in 0..n_nodes {
            let target = if node == c.src {
                x
            } else if node == c.dst {
                -x
            } else {
                0.0
            };
            let raw = (net[node] - target).abs();
            let scale = c.demand.max(1.0);
            conservation.check(raw / scale, || format!("commodity {q} node {node}"));
        }
    }

    // Capacity: per-edge total flow against cap (ground) or cap*y (UAV).
    let y_of_edge = |e: usize| -> Option<f64> {
        instance
            .uav_edges
            .iter()
            .position(|&ue| ue == e)
            .map(|t| solution.activation.get(t).copied().unwrap_or(0.0))
    };
    for e in 0..n_e {
        let total: f64 = (0..n_q)
            .map(|q| solution.flows.get(&(q, e)).copied().unwrap_or(0.0))
            .sum();
        let limit = match y_of_edge(e) {
            Some(y) => instance.edges[e].capacity * y,
            None => instance.edges[e].capacity,
        };
        let scale = instance.edges[e].capacity.max(1.0);
        capacity.check((total - limit).max(0.0) / scale, || {
            format!("edge {e} ({} -> {})", instance.edges[e].from, instance.edges[e].to)
        });
    }

    // Throughput: incoming flow per UAV.
    for l in 0..instance.n_uavs {
        let node = instance.n_users + l;
        let mut incoming = 0.0f64;
        for (&(_, e), &kbps) in &solution.flows {
            if instance.edges[e].to == node {
                incoming += kbps;
            }
        }
        let scale = instance.c_max.max(1.0);
        throughput.check((incoming - instance.c_max).max(0.0) / scale, || format!("uav {l}"));
    }

    // Bounds on flows and supported volumes.
    for (&(q, e), &kbps) in &solution.flows {
        let scale = instance.commodities[q].demand.max(1.0);
        bounds.check((-kbps).max(0.0) / scale, || format!("flow q={q} e={e}"));
        let _ = e;
    }
    for (q, c) in instance.commodities.iter().enumerate() {
        let x = solution.supported.get(q).copied().unwrap_or(0.0);
        let scale = c.demand.max(1.0);
        let raw = (-x).max(0.0).max((x - c.demand).max(0.0));
        bounds.check(raw / scale, || format!("supported q={q}"));
    }

    // Integrality of activations.
    for (t, &y) in solution.activation.iter().enumerate() {
        let nearest = y.round().clamp(0.0, 1.0);
        integrality.check((y - nearest).abs(), || {
            format!("y for edge {}", instance.uav_edges[t])
        });
    }

    // Objective recomputation from the reported quantities.
    let d_tot = instance.total_demand();
    let traffic = if d_tot > 0.0 { solution.total_supported() / d_tot } else { 0.0 };
    let power_norm = if instance.n_uavs > 0 {
        instance.lambda * solution.total_power()
            / (instance.n_uavs as f64 * instance.p0)
    } else {
        0.0
    };
    let recomputed = traffic - power_norm;
    if solution.objective.is_finite() {
        objective.check(
            (recomputed - solution.objective).abs() / solution.objective.abs().max(1.0),
            || "objective".into(),
        );
    }

    let families = vec![
        conservation.into_report(),
        capacity.into_report(),
        throughput.into_report(),
        bounds.into_report(),
        integrality.into_report(),
        objective.into_report(),
    ];
    let pass = families.iter().all(|f| f.max_violation <= tol);
    VerificationReport { pass, tol, families }
}

/// Violation locations in a family, for tests and diagnostics.
pub fn violation_locations(
    instance: &MilpInstance,
    solution: &RoutingSolution,
    tol: f64,
    family: &str,
) -> Vec<String> {
    let n_nodes = instance.n_nodes();
    let mut out = Vec::new();
    if family == "conservation" {
        for (q, c) in instance.commodities.iter().enumerate() {
            let mut net = vec![0.0f64; n_nodes];
            for (&(fq, e), &kbps) in &solution.flows {
                if fq == q {
                    net[instance.edges[e].from] += kbps;
                    net[instance.edges[e].to] -= kbps;
                }
            }
            let x = solution.supported.get(q).copied().unwrap_or(0.0);
            for node in 0..n_nodes {
                let target = if node == c.src {
                    x
                } else if node == c.dst {
                    -x
                } else {
                    0.0
                };
                if (net[node] - target).abs() / c.demand.max(1.0) > tol {
                    out.push(format!("commodity {q} node {node}"));
                }
            }
        }
    }
    out
}
