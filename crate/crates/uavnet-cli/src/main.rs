//! Command line front end: generate scenarios, plan UAV fleets, route
//! demand, evaluate and verify results, and run experiment sweeps.
//!
//! Exit codes: 0 on success, 1 on domain errors (including failed
//! verification), 2 on command line usage errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use uavnet::canon;
use uavnet::experiments::{sweep, sweep_csv, sweep_json, Mode, SweepOptions};
use uavnet::generate::{generate_scenario, GenSpec};
use uavnet::graph::build_graph;
use uavnet::lpfile;
use uavnet::milp::{self, Commodity, MilpInstance};
use uavnet::params::Params;
use uavnet::plan::Placement;
use uavnet::scenario::Scenario;

#[derive(Parser)]
#[command(
    name = "uavnet",
    version,
    about = "Plan UAV-assisted networks and route demand through them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a clustered random scenario file.
    Generate(GenerateArgs),
    /// Size, place, merge, and connect a UAV fleet for a scenario.
    Plan(PlanArgs),
    /// Route all demand over the combined network, exactly.
    Route(RouteArgs),
    /// Summarize a routing result against its scenario.
    Eval(EvalArgs),
    /// Run the full pipeline over a seed and demand grid.
    Sweep(SweepArgs),
    /// Re-check a routing result constraint by constraint.
    Verify(VerifyArgs),
}

/// Parameter resolution, lowest to highest precedence: built-in defaults,
/// config file (--config or $UAVNET_CONFIG), the scenario file's own
/// params block, then --param/--lambda overrides.
#[derive(Args)]
struct ParamArgs {
    /// JSON object with sparse parameter defaults.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one parameter as key=value; repeatable, last wins.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    param: Vec<String>,
    /// Shortcut for --param lambda=<value>.
    #[arg(long)]
    lambda: Option<f64>,
}

impl ParamArgs {
    fn resolve(&self, scenario_params: Option<&Value>) -> anyhow::Result<Params> {
        let mut params = Params::default();
        let config_path = self
            .config
            .clone()
            .or_else(|| std::env::var_os("UAVNET_CONFIG").map(PathBuf::from));
        if let Some(path) = config_path {
            let value = canon::read_json(&path)
                .with_context(|| format!("reading config {}", path.display()))?;
            params.overlay_json(&value, "config.")?;
        }
        if let Some(sp) = scenario_params {
            params.overlay_json(sp, "params.")?;
        }
        for kv in &self.param {
            let (key, value) = kv.split_once('=').ok_or_else(|| {
                anyhow::anyhow!("--param expects key=value, got {kv:?}")
            })?;
            params.apply_override(key.trim(), value.trim())?;
        }
        if let Some(lambda) = self.lambda {
            params.apply_override("lambda", &lambda.to_string())?;
        }
        params.validate("params.")?;
        Ok(params)
    }
}

/// Load a scenario while letting CLI and config parameters override the
/// file's params block. The resolved block replaces the raw one before
/// validation so every consumer sees the same values.
fn load_scenario(path: &Path, args: &ParamArgs) -> anyhow::Result<Scenario> {
    let mut value = canon::read_json(path)
        .with_context(|| format!("reading scenario {}", path.display()))?;
    let raw_params = value.get("params").cloned();
    let resolved = args.resolve(raw_params.as_ref())?;
    value["params"] = resolved.to_json()?;
    Ok(Scenario::from_value(value, &path.display().to_string())?)
}

fn instance_for(
    scenario: &Scenario,
    placement: Option<&Placement>,
) -> (MilpInstance, Vec<f64>) {
    let graph = build_graph(scenario, placement);
    let commodities: Vec<Commodity> = scenario
        .commodities()
        .iter()
        .map(|d| Commodity { src: d.src, dst: d.dst, demand: d.kbps })
        .collect();
    let demands: Vec<f64> = commodities.iter().map(|c| c.demand).collect();
    (milp::build_milp(&graph, commodities, &scenario.params), demands)
}

#[derive(Args)]
struct GenFlags {
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    #[arg(long, default_value_t = 40)]
    users: usize,
    /// Disk radius of one cluster, metres.
    #[arg(long, default_value_t = 120.0)]
    spread: f64,
    /// Distance between neighbouring cluster centres, metres.
    #[arg(long, default_value_t = 450.0)]
    spacing: f64,
    /// Ground link discovery range, metres.
    #[arg(long, default_value_t = 150.0)]
    ground_range: f64,
    /// Number of origin-destination demand entries.
    #[arg(long, default_value_t = 20)]
    od_pairs: usize,
    #[arg(long, default_value_t = 100.0)]
    demand_min: f64,
    #[arg(long, default_value_t = 800.0)]
    demand_max: f64,
    /// Nominal square area side, metres.
    #[arg(long, default_value_t = 1000.0)]
    area: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl GenFlags {
    fn to_spec(&self) -> GenSpec {
        GenSpec {
            clusters: self.clusters,
            users: self.users,
            spread: self.spread,
            spacing: self.spacing,
            ground_range: self.ground_range,
            od_pairs: self.od_pairs,
            demand_min: self.demand_min,
            demand_max: self.demand_max,
            area: self.area,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Output scenario file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[command(flatten)]
    gen: GenFlags,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,
    /// Output plan file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct RouteArgs {
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,
    /// Fleet plan; omit to route on the ground network alone.
    #[arg(long, value_name = "FILE")]
    plan: Option<PathBuf>,
    /// Output routing file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Also write the instance as LP-format text.
    #[arg(long, value_name = "FILE")]
    export_lp: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,
    #[arg(long, value_name = "FILE")]
    plan: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    routing: PathBuf,
    /// Also write the metrics to a file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Directory for sweep.csv and sweep.json.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Seeds, as a comma list or an inclusive range: "1,2,5" or "1-10".
    #[arg(long, default_value = "1-10")]
    seeds: String,
    /// Demand entry counts, comma separated.
    #[arg(long, default_value = "5,10,20,40")]
    od_counts: String,
    /// Modes, comma separated: no-uav, uav-lambda0, uav-energy-aware.
    #[arg(long, default_value = "no-uav,uav-lambda0,uav-energy-aware")]
    modes: String,
    /// Record wall-clock runtimes (makes output machine-dependent).
    #[arg(long)]
    measure_runtime: bool,
    #[command(flatten)]
    gen: GenFlags,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,
    #[arg(long, value_name = "FILE")]
    plan: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    routing: PathBuf,
    /// Cross-check an exported LP file against the rebuilt instance.
    #[arg(long, value_name = "FILE")]
    lp: Option<PathBuf>,
    /// Scaled violation tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[command(flatten)]
    params: ParamArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            let code = err
                .downcast_ref::<uavnet::Error>()
                .map(|e| e.code())
                .unwrap_or("cli");
            eprintln!("error: {code}: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Generate(args) => cmd_generate(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Route(args) => cmd_route(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn cmd_generate(args: GenerateArgs) -> anyhow::Result<ExitCode> {
    let spec = args.gen.to_spec();
    let mut params = args.params.resolve(None)?;
    if !args.params.param.iter().any(|kv| kv.starts_with("seed=")) {
        params.seed = spec.seed;
    }
    let scenario = generate_scenario(&spec, &params)?;
    scenario.save(&args.out)?;
    println!(
        "scenario: {} users, {} links, {} demand entries, {} Kbps total -> {}",
        scenario.users.len(),
        scenario.ground_links.len(),
        scenario.demand.len(),
        canon::fmt_f64(scenario.total_demand()),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_plan(args: PlanArgs) -> anyhow::Result<ExitCode> {
    let scenario = load_scenario(&args.scenario, &args.params)?;
    let mut placement = uavnet::experiments::plan_scenario(&scenario)?;
    placement.meta = Some(json!({
        "command": "plan",
        "scenario": args.scenario.display().to_string(),
        "params": scenario.params.to_json()?,
    }));
    placement.save(&args.out)?;
    println!(
        "plan: {} service UAVs + {} relays -> {}",
        placement.n_service_uavs(),
        placement.n_relays(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn load_plan(path: &Path, scenario: &Scenario) -> anyhow::Result<Placement> {
    let placement = Placement::load(path)
        .with_context(|| format!("reading plan {}", path.display()))?;
    placement.validate(scenario, &scenario.params)?;
    Ok(placement)
}

fn cmd_route(args: RouteArgs) -> anyhow::Result<ExitCode> {
    let scenario = load_scenario(&args.scenario, &args.params)?;
    let placement = match &args.plan {
        Some(path) => Some(load_plan(path, &scenario)?),
        None => None,
    };
    let graph = build_graph(&scenario, placement.as_ref());
    let commodities: Vec<Commodity> = scenario
        .commodities()
        .iter()
        .map(|d| Commodity { src: d.src, dst: d.dst, demand: d.kbps })
        .collect();
    let demands: Vec<f64> = commodities.iter().map(|c| c.demand).collect();
    let (instance, solution) = milp::route(&graph, commodities, &scenario.params)?;
    if let Some(lp_path) = &args.export_lp {
        std::fs::write(lp_path, lpfile::export_lp(&instance))
            .with_context(|| format!("writing {}", lp_path.display()))?;
    }
    let meta = json!({
        "command": "route",
        "scenario": args.scenario.display().to_string(),
        "plan": args.plan.as_ref().map(|p| p.display().to_string()),
        "params": scenario.params.to_json()?,
    });
    milp::save_routing(&args.out, &instance, &solution, Some(meta))?;
    let eta = uavnet::experiments::unsupported_fraction(&solution.supported, &demands)?;
    println!(
        "routing: status={} objective={} eta={} power={} W -> {}",
        solution.status.as_str(),
        canon::fmt_f64(solution.objective),
        canon::fmt_f64(eta),
        canon::fmt_f64(solution.total_power()),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<ExitCode> {
    let scenario = load_scenario(&args.scenario, &args.params)?;
    let placement = match &args.plan {
        Some(path) => Some(load_plan(path, &scenario)?),
        None => None,
    };
    let (instance, demands) = instance_for(&scenario, placement.as_ref());
    let solution = milp::load_routing(&args.routing, &instance)?;
    let eta = uavnet::experiments::unsupported_fraction(&solution.supported, &demands)?;

    let mut metrics = Map::new();
    metrics.insert("eta".into(), canon::num(eta)?);
    metrics.insert("supported_kbps".into(), canon::num(solution.total_supported())?);
    metrics.insert("total_demand_kbps".into(), canon::num(demands.iter().sum())?);
    metrics.insert("total_power_w".into(), canon::num(solution.total_power())?);
    metrics.insert("uav_count".into(), Value::from(instance.n_uavs as u64));
    metrics.insert("status".into(), Value::String(solution.status.as_str().into()));
    metrics.insert("objective".into(), canon::num(solution.objective)?);
    let value = Value::Object(metrics);
    print!("{}", canon::to_canonical_string(&value)?);
    if let Some(out) = &args.out {
        canon::write_canonical(out, &value)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_u64_list(text: &str) -> anyhow::Result<Vec<u64>> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once('-') {
        if let (Ok(a), Ok(b)) = (a.trim().parse::<u64>(), b.trim().parse::<u64>()) {
            if a > b {
                anyhow::bail!("empty range {text:?}");
            }
            return Ok((a..=b).collect());
        }
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| anyhow::anyhow!("expected an integer, got {t:?}"))
        })
        .collect()
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let seeds = parse_u64_list(&args.seeds).context("parsing --seeds")?;
    let od_counts: Vec<usize> = parse_u64_list(&args.od_counts)
        .context("parsing --od-counts")?
        .into_iter()
        .map(|v| v as usize)
        .collect();
    let modes: Vec<Mode> = args
        .modes
        .split(',')
        .map(|m| {
            Mode::from_str(m.trim())
                .ok_or_else(|| anyhow::anyhow!("unknown mode {:?}", m.trim()))
        })
        .collect::<anyhow::Result<_>>()?;
    let params = args.params.resolve(None)?;
    let opts = SweepOptions {
        base: args.gen.to_spec(),
        params,
        seeds: seeds.clone(),
        od_counts: od_counts.clone(),
        modes,
        measure_runtime: args.measure_runtime,
    };
    let result = sweep(&opts)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let csv_path = args.out_dir.join("sweep.csv");
    let json_path = args.out_dir.join("sweep.json");
    std::fs::write(&csv_path, sweep_csv(&result))
        .with_context(|| format!("writing {}", csv_path.display()))?;
    let meta = json!({
        "command": "sweep",
        "base": opts.base.to_json(),
        "params": opts.params.to_json()?,
        "seeds": seeds,
        "od_counts": od_counts.iter().map(|&v| v as u64).collect::<Vec<_>>(),
        "modes": opts.modes.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
    });
    canon::write_canonical(&json_path, &sweep_json(&result, Some(meta))?)?;
    for s in &result.summaries {
        println!(
            "n_od={:<3} {:<17} eta={} power={} W uavs={}",
            s.n_od,
            s.mode.as_str(),
            canon::fmt_f64(s.eta_mean),
            canon::fmt_f64(s.power_mean),
            canon::fmt_f64(s.uav_mean)
        );
    }
    println!("sweep: {} rows -> {}", result.rows.len(), args.out_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let scenario = load_scenario(&args.scenario, &args.params)?;
    let placement = match &args.plan {
        Some(path) => Some(load_plan(path, &scenario)?),
        None => None,
    };
    let (instance, _) = instance_for(&scenario, placement.as_ref());
    let solution = milp::load_routing(&args.routing, &instance)?;
    let report = milp::verify_solution(&instance, &solution, args.tol);
    let mut ok = report.pass;
    for family in &report.families {
        println!(
            "{:<13} max {:.3e} {}",
            family.family,
            family.max_violation,
            if family.max_violation <= args.tol {
                "ok".to_string()
            } else {
                format!("FAIL ({} beyond tol) at {}", family.violations, family.worst)
            }
        );
    }
    if let Some(lp_path) = &args.lp {
        let text = std::fs::read_to_string(lp_path)
            .with_context(|| format!("reading {}", lp_path.display()))?;
        let parsed = lpfile::parse_lp(&text)?;
        let issues = lpfile::cross_check(&instance, &parsed);
        if issues.is_empty() {
            println!("lp export    consistent with the instance");
        } else {
            ok = false;
            for issue in issues.iter().take(10) {
                println!("lp export    MISMATCH: {issue}");
            }
            if issues.len() > 10 {
                println!("lp export    ... and {} more", issues.len() - 10);
            }
        }
    }
    if ok {
        println!("verification: PASS (tol {:e})", args.tol);
        Ok(ExitCode::SUCCESS)
    } else {
        println!("verification: FAIL (tol {:e})", args.tol);
        Ok(ExitCode::from(1))
    }
}
