//! End-to-end planning and routing pipeline, plus experiment sweeps.
//!
//! A sweep runs the full pipeline over a grid of (seed, demand entries,
//! mode) combinations on generated scenarios and tabulates the unsupported
//! traffic fraction, total UAV power, and fleet size. Modes:
//!
//! * `no-uav`: route on the ground network alone;
//! * `uav-lambda0`: plan a fleet, route with the power weight set to zero;
//! * `uav-energy-aware`: plan the same fleet, route with the configured
//!   power weight.
//!
//! Output is deterministic byte-for-byte: rows are ordered by (seed, od
//! entries, mode) and runtimes are recorded as zero unless measurement is
//! explicitly requested, so repeat runs produce identical files.

use std::collections::BTreeMap;

use serde_json::{Map, Value};

use crate::canon;
use crate::error::{Error, Result};
use crate::generate::{generate_scenario, GenSpec};
use crate::graph::build_graph;
use crate::milp::{route, Commodity, MilpInstance, RoutingSolution};
use crate::placement::{initial_placement, merge_uavs};
use crate::plan::Placement;
use crate::relay::connect_placement;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    NoUav,
    UavLambda0,
    UavEnergyAware,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::NoUav, Mode::UavLambda0, Mode::UavEnergyAware];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::NoUav => "no-uav",
            Mode::UavLambda0 => "uav-lambda0",
            Mode::UavEnergyAware => "uav-energy-aware",
        }
    }

    pub fn from_str(s: &str) -> Option<Mode> {
        match s {
            "no-uav" => Some(Mode::NoUav),
            "uav-lambda0" => Some(Mode::UavLambda0),
            "uav-energy-aware" => Some(Mode::UavEnergyAware),
            _ => None,
        }
    }
}

/// Fraction of demanded traffic left unsupported: `1 - sum(x) / sum(d)`,
/// clamped to `[0, 1]` (solver round-off can leave values a hair outside).
pub fn unsupported_fraction(supported: &[f64], demands: &[f64]) -> Result<f64> {
    let total: f64 = demands.iter().sum();
    if total <= 0.0 {
        return Err(Error::Validation {
            field: "demand".into(),
            message: "unsupported fraction needs positive total demand".into(),
        });
    }
    let carried: f64 = supported.iter().sum();
    let eta = 1.0 - carried / total;
    Ok(eta.clamp(0.0, 1.0))
}

/// Plan a fleet for a scenario: size and place service UAVs, merge
/// redundant ones, then insert relays until the air mesh is connected.
pub fn plan_scenario(scenario: &Scenario) -> Result<Placement> {
    let selection = crate::cluster::select_k(scenario)?;
    let placed = initial_placement(scenario, &selection.clustering)?;
    let merged = merge_uavs(scenario, &placed)?;
    connect_placement(scenario, &merged)
}

/// One pipeline evaluation.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub mode: Mode,
    pub eta: f64,
    pub total_power_w: f64,
    pub uav_count: usize,
    /// True when fleet planning failed and routing fell back to the
    /// ground network.
    pub planning_failed: bool,
    pub placement: Option<Placement>,
    pub instance: MilpInstance,
    pub solution: RoutingSolution,
}

fn commodities_of(scenario: &Scenario) -> Vec<Commodity> {
    scenario
        .commodities()
        .iter()
        .map(|d| Commodity { src: d.src, dst: d.dst, demand: d.kbps })
        .collect()
}

/// Run plan and route for one scenario and mode. An already-computed
/// placement can be supplied to share planning across modes.
pub fn run_pipeline(
    scenario: &Scenario,
    mode: Mode,
    shared_plan: Option<&Placement>,
) -> Result<PipelineOutcome> {
    let commodities = commodities_of(scenario);
    let demands: Vec<f64> = commodities.iter().map(|c| c.demand).collect();

    let (placement, planning_failed) = match mode {
        Mode::NoUav => (None, false),
        Mode::UavLambda0 | Mode::UavEnergyAware => match shared_plan {
            Some(p) => (Some(p.clone()), false),
            None => match plan_scenario(scenario) {
                Ok(p) => (Some(p), false),
                Err(Error::Io { .. }) | Err(Error::Internal(_)) => {
                    return Err(plan_scenario(scenario).unwrap_err())
                }
                Err(_) => (None, true),
            },
        },
    };

    let mut params = scenario.params.clone();
    if mode == Mode::UavLambda0 {
        params.lambda = 0.0;
    }
    let graph = build_graph(scenario, placement.as_ref());
    let (instance, solution) = route(&graph, commodities, &params)?;
    let eta = unsupported_fraction(&solution.supported, &demands)?;
    Ok(PipelineOutcome {
        mode,
        eta,
        total_power_w: solution.total_power(),
        uav_count: placement.as_ref().map_or(0, |p| p.uavs.len()),
        planning_failed,
        placement,
        instance,
        solution,
    })
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    /// Scenario template; `seed` and `od_pairs` are overridden per cell.
    pub base: GenSpec,
    /// Parameter template; `seed` is overridden per cell.
    pub params: crate::params::Params,
    pub seeds: Vec<u64>,
    pub od_counts: Vec<usize>,
    pub modes: Vec<Mode>,
    /// Record wall-clock runtimes. Off by default so that repeated sweeps
    /// write byte-identical files.
    pub measure_runtime: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            base: GenSpec::default(),
            params: crate::params::Params::default(),
            seeds: (1..=10).collect(),
            od_counts: vec![5, 10, 20, 40],
            modes: Mode::ALL.to_vec(),
            measure_runtime: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub seed: u64,
    pub n_od: usize,
    pub mode: Mode,
    pub eta: f64,
    pub total_power_w: f64,
    pub uav_count: usize,
    pub runtime_ms: u64,
    pub planning_failed: bool,
}

/// Per (od count, mode) aggregate over seeds.
#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub n_od: usize,
    pub mode: Mode,
    pub eta_mean: f64,
    pub eta_std: f64,
    pub power_mean: f64,
    pub power_std: f64,
    pub uav_mean: f64,
    pub runtime_mean: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub summaries: Vec<SweepSummary>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Run the full grid. Scenarios are generated per (seed, od count); the
/// fleet plan is shared between the two UAV modes of a cell.
pub fn sweep(opts: &SweepOptions) -> Result<SweepResult> {
    let mut rows = Vec::new();
    for &seed in &opts.seeds {
        for &n_od in &opts.od_counts {
            let mut spec = opts.base.clone();
            spec.seed = seed;
            spec.od_pairs = n_od;
            let mut params = opts.params.clone();
            params.seed = seed;
            let scenario = generate_scenario(&spec, &params)?;

            let wants_uav = opts
                .modes
                .iter()
                .any(|m| matches!(m, Mode::UavLambda0 | Mode::UavEnergyAware));
            let shared_plan = if wants_uav { plan_scenario(&scenario).ok() } else { None };

            let mut modes = opts.modes.clone();
            modes.sort();
            modes.dedup();
            for mode in modes {
                let started = std::time::Instant::now();
                let outcome = run_pipeline(&scenario, mode, shared_plan.as_ref())?;
                let runtime_ms = if opts.measure_runtime {
                    started.elapsed().as_millis() as u64
                } else {
                    0
                };
                rows.push(SweepRow {
                    seed,
                    n_od,
                    mode,
                    eta: outcome.eta,
                    total_power_w: outcome.total_power_w,
                    uav_count: outcome.uav_count,
                    runtime_ms,
                    planning_failed: outcome.planning_failed
                        || (mode != Mode::NoUav && shared_plan.is_none()),
                });
            }
        }
    }

    let mut cells: BTreeMap<(usize, Mode), Vec<&SweepRow>> = BTreeMap::new();
    for row in &rows {
        cells.entry((row.n_od, row.mode)).or_default().push(row);
    }
    let summaries = cells
        .into_iter()
        .map(|((n_od, mode), cell)| {
            let (eta_mean, eta_std) =
                mean_std(&cell.iter().map(|r| r.eta).collect::<Vec<_>>());
            let (power_mean, power_std) =
                mean_std(&cell.iter().map(|r| r.total_power_w).collect::<Vec<_>>());
            let (uav_mean, _) =
                mean_std(&cell.iter().map(|r| r.uav_count as f64).collect::<Vec<_>>());
            let (runtime_mean, _) =
                mean_std(&cell.iter().map(|r| r.runtime_ms as f64).collect::<Vec<_>>());
            SweepSummary {
                n_od,
                mode,
                eta_mean,
                eta_std,
                power_mean,
                power_std,
                uav_mean,
                runtime_mean,
            }
        })
        .collect();
    Ok(SweepResult { rows, summaries })
}

/// Render a sweep as CSV: one row per cell plus `mean` summary rows.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from("seed,n_od,mode,eta,total_power_w,uav_count,runtime_ms\n");
    for r in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.seed,
            r.n_od,
            r.mode.as_str(),
            canon::fmt_f64(r.eta),
            canon::fmt_f64(r.total_power_w),
            r.uav_count,
            r.runtime_ms
        ));
    }
    for s in &result.summaries {
        out.push_str(&format!(
            "mean,{},{},{},{},{},{}\n",
            s.n_od,
            s.mode.as_str(),
            canon::fmt_f64(s.eta_mean),
            canon::fmt_f64(s.power_mean),
            canon::fmt_f64(s.uav_mean),
            canon::fmt_f64(s.runtime_mean)
        ));
    }
    out
}

/// JSON mirror of the CSV with standard deviations included.
pub fn sweep_json(result: &SweepResult, meta: Option<Value>) -> Result<Value> {
    let mut root = Map::new();
    let rows: Vec<Value> = result
        .rows
        .iter()
        .map(|r| {
            let mut m = Map::new();
            m.insert("seed".into(), Value::from(r.seed));
            m.insert("n_od".into(), Value::from(r.n_od as u64));
            m.insert("mode".into(), Value::String(r.mode.as_str().into()));
            m.insert("eta".into(), canon::num(r.eta)?);
            m.insert("total_power_w".into(), canon::num(r.total_power_w)?);
            m.insert("uav_count".into(), Value::from(r.uav_count as u64));
            m.insert("runtime_ms".into(), Value::from(r.runtime_ms));
            m.insert("planning_failed".into(), Value::Bool(r.planning_failed));
            Ok(Value::Object(m))
        })
        .collect::<Result<_>>()?;
    root.insert("rows".into(), Value::Array(rows));
    let summary: Vec<Value> = result
        .summaries
        .iter()
        .map(|s| {
            let mut m = Map::new();
            m.insert("n_od".into(), Value::from(s.n_od as u64));
            m.insert("mode".into(), Value::String(s.mode.as_str().into()));
            m.insert("eta_mean".into(), canon::num(s.eta_mean)?);
            m.insert("eta_std".into(), canon::num(s.eta_std)?);
            m.insert("total_power_w_mean".into(), canon::num(s.power_mean)?);
            m.insert("total_power_w_std".into(), canon::num(s.power_std)?);
            m.insert("uav_count_mean".into(), canon::num(s.uav_mean)?);
            m.insert("runtime_ms_mean".into(), canon::num(s.runtime_mean)?);
            Ok(Value::Object(m))
        })
        .collect::<Result<_>>()?;
    root.insert("summary".into(), Value::Array(summary));
    if let Some(meta) = meta {
        root.insert("meta".into(), meta);
    }
    Ok(Value::Object(root))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::milp::verify_solution;
    use crate::params::Params;
    use crate::scenario::Demand;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unsupported_fraction_endpoints_and_midpoint() {
        assert_abs_diff_eq!(
            unsupported_fraction(&[400.0], &[400.0]).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            unsupported_fraction(&[0.0, 0.0], &[100.0, 300.0]).unwrap(),
            1.0
        );
        assert_abs_diff_eq!(
            unsupported_fraction(&[100.0, 200.0], &[100.0, 300.0]).unwrap(),
            0.25
        );
    }

    #[test]
    fn unsupported_fraction_rejects_zero_demand_and_clamps() {
        assert!(unsupported_fraction(&[], &[]).is_err());
        assert_abs_diff_eq!(
            unsupported_fraction(&[100.000001], &[100.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn mode_strings_round_trip() {
        for mode in Mode::ALL {
            assert_eq!(Mode::from_str(mode.as_str()), Some(mode));
        }
        assert_eq!(Mode::from_str("none"), None);
    }

    fn linked_pair() -> Scenario {
        Scenario::new(
            vec![Point::new(0.0, 0.0), Point::new(80.0, 0.0)],
            vec![(0, 1)],
            vec![Demand { src: 0, dst: 1, kbps: 900.0 }],
            Params::default(),
        )
        .unwrap()
    }

    #[test]
    fn ground_only_pipeline_routes_without_uavs() {
        let s = linked_pair();
        let out = run_pipeline(&s, Mode::NoUav, None).unwrap();
        assert_eq!(out.uav_count, 0);
        assert!(!out.planning_failed);
        assert_abs_diff_eq!(out.eta, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out.total_power_w, 0.0);
        assert!(verify_solution(&out.instance, &out.solution, 1e-6).pass);
    }

    #[test]
    fn uav_pipeline_plans_and_routes_an_islanded_scenario() {
        // Two user islands out of ground range force a served fleet.
        let s = Scenario::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(40.0, 0.0),
                Point::new(400.0, 0.0),
                Point::new(440.0, 0.0),
            ],
            vec![(0, 1), (2, 3)],
            vec![
                Demand { src: 0, dst: 2, kbps: 600.0 },
                Demand { src: 3, dst: 1, kbps: 400.0 },
            ],
            Params::default(),
        )
        .unwrap();
        let out = run_pipeline(&s, Mode::UavLambda0, None).unwrap();
        assert!(out.uav_count >= 1);
        assert!(!out.planning_failed);
        assert_abs_diff_eq!(out.eta, 0.0, epsilon = 1e-9);
        let report = verify_solution(&out.instance, &out.solution, 1e-6);
        assert!(report.pass, "{}", report.summary());

        // The same plan priced with a steep power weight sheds traffic.
        let mut pricey = s.clone();
        pricey.params.lambda = 1000.0;
        let aware = run_pipeline(
            &pricey,
            Mode::UavEnergyAware,
            out.placement.as_ref(),
        )
        .unwrap();
        assert!(aware.eta >= out.eta - 1e-9);
        assert!(aware.total_power_w <= out.total_power_w + 1e-9);
    }

    fn tiny_sweep_options() -> SweepOptions {
        SweepOptions {
            base: GenSpec {
                clusters: 2,
                users: 8,
                spread: 60.0,
                spacing: 260.0,
                ground_range: 120.0,
                od_pairs: 2,
                demand_min: 100.0,
                demand_max: 400.0,
                area: 600.0,
                seed: 1,
            },
            seeds: vec![1, 2],
            od_counts: vec![2, 3],
            ..SweepOptions::default()
        }
    }

    #[test]
    fn sweep_produces_ordered_rows_and_summaries() {
        let result = sweep(&tiny_sweep_options()).unwrap();
        assert_eq!(result.rows.len(), 2 * 2 * 3);
        assert_eq!(result.summaries.len(), 2 * 3);
        let order: Vec<(u64, usize, Mode)> =
            result.rows.iter().map(|r| (r.seed, r.n_od, r.mode)).collect();
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(order, sorted, "rows come out in (seed, n_od, mode) order");
        for r in &result.rows {
            assert!(r.eta >= 0.0 && r.eta <= 1.0);
            assert_eq!(r.runtime_ms, 0);
            if r.mode == Mode::NoUav {
                assert_eq!(r.uav_count, 0);
                assert_eq!(r.total_power_w, 0.0);
            } else {
                assert!(r.uav_count >= 1);
            }
        }
    }

    #[test]
    fn sweep_csv_shape_and_header_are_stable() {
        let result = sweep(&tiny_sweep_options()).unwrap();
        let csv = sweep_csv(&result);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "seed,n_od,mode,eta,total_power_w,uav_count,runtime_ms");
        assert_eq!(lines.len(), 1 + 12 + 6);
        assert!(lines[1].starts_with("1,2,no-uav,"));
        assert!(lines[13].starts_with("mean,2,no-uav,"));
        assert!(csv.ends_with('\n'));
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), 7);
        }
    }

    #[test]
    fn sweep_repeats_are_byte_identical() {
        let opts = tiny_sweep_options();
        let a = sweep(&opts).unwrap();
        let b = sweep(&opts).unwrap();
        assert_eq!(sweep_csv(&a), sweep_csv(&b));
        let ja = canon::to_canonical_string(&sweep_json(&a, None).unwrap()).unwrap();
        let jb = canon::to_canonical_string(&sweep_json(&b, None).unwrap()).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn lambda_zero_and_energy_aware_share_one_plan() {
        let result = sweep(&tiny_sweep_options()).unwrap();
        for pair in result.rows.chunks(3) {
            let l0 = &pair[1];
            let aware = &pair[2];
            assert_eq!(l0.mode, Mode::UavLambda0);
            assert_eq!(aware.mode, Mode::UavEnergyAware);
            assert_eq!(l0.uav_count, aware.uav_count, "same fleet in both UAV modes");
        }
    }
}
