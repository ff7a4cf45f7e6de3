//! End-to-end tests of the command line interface, driving the built
//! binary exactly as a user would.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_uavnet"));
    cmd.env_remove("UAVNET_CONFIG");
    cmd
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().expect("binary runs");
    (
        status.code().expect("exit code"),
        String::from_utf8(stdout).expect("utf-8 stdout"),
        String::from_utf8(stderr).expect("utf-8 stderr"),
    )
}

fn docs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs")
}

fn generate_small(dir: &Path) -> PathBuf {
    let scenario = dir.join("scenario.json");
    let (code, _, stderr) = run(bin()
        .arg("generate")
        .args(["--users", "12", "--clusters", "2", "--od-pairs", "4"])
        .args(["--spread", "80", "--spacing", "400", "--area", "800"])
        .args(["--seed", "3"])
        .arg("--out")
        .arg(&scenario));
    assert_eq!(code, 0, "{stderr}");
    scenario
}

#[test]
fn pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = generate_small(dir.path());
    let plan = dir.path().join("plan.json");
    let routing = dir.path().join("routing.json");

    let (code, stdout, stderr) =
        run(bin().arg("plan").arg("--scenario").arg(&scenario).arg("--out").arg(&plan));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("service UAVs"), "{stdout}");

    let (code, stdout, stderr) = run(bin()
        .arg("route")
        .arg("--scenario")
        .arg(&scenario)
        .arg("--plan")
        .arg(&plan)
        .arg("--out")
        .arg(&routing));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("status=optimal"), "{stdout}");

    let (code, stdout, stderr) = run(bin()
        .arg("eval")
        .arg("--scenario")
        .arg(&scenario)
        .arg("--plan")
        .arg(&plan)
        .arg("--routing")
        .arg(&routing));
    assert_eq!(code, 0, "{stderr}");
    let metrics: serde_json::Value = serde_json::from_str(&stdout).expect("eval emits JSON");
    let eta = metrics["eta"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&eta));
    assert_eq!(metrics["status"], "optimal");

    let (code, stdout, _) = run(bin()
        .arg("verify")
        .arg("--scenario")
        .arg(&scenario)
        .arg("--plan")
        .arg(&plan)
        .arg("--routing")
        .arg(&routing));
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("verification: PASS"), "{stdout}");
}

#[test]
fn identical_invocations_write_identical_bytes() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [dir_a.path(), dir_b.path()] {
        let scenario = generate_small(dir);
        let plan = dir.join("plan.json");
        let routing = dir.join("routing.json");
        let (code, _, stderr) =
            run(bin().arg("plan").arg("--scenario").arg(&scenario).arg("--out").arg(&plan));
        assert_eq!(code, 0, "{stderr}");
        let (code, _, stderr) = run(bin()
            .arg("route")
            .arg("--scenario")
            .arg(&scenario)
            .arg("--plan")
            .arg(&plan)
            .arg("--out")
            .arg(&routing)
            .arg("--export-lp")
            .arg(dir.join("instance.lp")));
        assert_eq!(code, 0, "{stderr}");
    }
    for name in ["scenario.json", "instance.lp"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    // Plan and routing files embed the paths they were invoked with;
    // compare them after masking the temp directories.
    let mask = |dir: &Path, name: &str| {
        std::fs::read_to_string(dir.join(name))
            .unwrap()
            .replace(&dir.display().to_string(), "DIR")
    };
    for name in ["plan.json", "routing.json"] {
        assert_eq!(
            mask(dir_a.path(), name),
            mask(dir_b.path(), name),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn lambda_flag_beats_scenario_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = generate_small(dir.path());
    let plan = dir.path().join("plan.json");
    run(bin().arg("plan").arg("--scenario").arg(&scenario).arg("--out").arg(&plan));

    let eval_eta = |routing: &Path| -> f64 {
        let (code, stdout, stderr) = run(bin()
            .arg("eval")
            .arg("--scenario")
            .arg(&scenario)
            .arg("--plan")
            .arg(&plan)
            .arg("--routing")
            .arg(routing));
        assert_eq!(code, 0, "{stderr}");
        serde_json::from_str::<serde_json::Value>(&stdout).unwrap()["eta"]
            .as_f64()
            .unwrap()
    };

    let route_with = |out: &Path, extra: &[&str]| {
        let (code, _, stderr) = run(bin()
            .arg("route")
            .arg("--scenario")
            .arg(&scenario)
            .arg("--plan")
            .arg(&plan)
            .arg("--out")
            .arg(out)
            .args(extra));
        assert_eq!(code, 0, "{stderr}");
    };

    let free = dir.path().join("routing_free.json");
    let pricey = dir.path().join("routing_pricey.json");
    let via_param = dir.path().join("routing_param.json");
    route_with(&free, &["--lambda", "0"]);
    route_with(&pricey, &["--lambda", "50"]);
    route_with(&via_param, &["--param", "lambda=50"]);
    let (eta_free, eta_pricey) = (eval_eta(&free), eval_eta(&pricey));
    assert!(
        eta_free < eta_pricey,
        "free routing carries more: {eta_free} vs {eta_pricey}"
    );
    assert_eq!(eval_eta(&via_param), eta_pricey, "--param lambda matches --lambda");
}

#[test]
fn config_file_fills_parameter_defaults_and_flags_beat_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, "{\"lambda\": 0.25, \"altitude\": 90.0}").unwrap();

    let lambda_of = |path: &Path| -> f64 {
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        doc["params"]["lambda"].as_f64().unwrap()
    };

    let from_config = dir.path().join("from_config.json");
    let (code, _, stderr) = run(bin()
        .arg("generate")
        .args(["--users", "6", "--clusters", "1", "--od-pairs", "2"])
        .arg("--out")
        .arg(&from_config)
        .env("UAVNET_CONFIG", &config));
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(lambda_of(&from_config), 0.25);

    let overridden = dir.path().join("overridden.json");
    let (code, _, stderr) = run(bin()
        .arg("generate")
        .args(["--users", "6", "--clusters", "1", "--od-pairs", "2"])
        .arg("--out")
        .arg(&overridden)
        .args(["--lambda", "50"])
        .env("UAVNET_CONFIG", &config));
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(lambda_of(&overridden), 50.0, "flag beats config");

    // A scenario's own params block shadows the ambient config: routing
    // the 0.25-lambda scenario under a zero-lambda config must still
    // price the relays.
    let zero = dir.path().join("zero.json");
    std::fs::write(&zero, "{\"lambda\": 0.0}").unwrap();
    let plan = dir.path().join("plan.json");
    run(bin().arg("plan").arg("--scenario").arg(&from_config).arg("--out").arg(&plan));
    let routing = dir.path().join("routing.json");
    let (code, stdout, stderr) = run(bin()
        .arg("route")
        .arg("--scenario")
        .arg(&from_config)
        .arg("--plan")
        .arg(&plan)
        .arg("--out")
        .arg(&routing)
        .env("UAVNET_CONFIG", &zero));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("status=optimal"), "{stdout}");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&routing).unwrap()).unwrap();
    assert_eq!(doc["meta"]["params"]["lambda"].as_f64().unwrap(), 0.25);
}

#[test]
fn sweep_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let (code, stdout, stderr) = run(bin()
        .arg("sweep")
        .arg("--out-dir")
        .arg(&out)
        .args(["--seeds", "1-2", "--od-counts", "2,3"])
        .args(["--users", "8", "--clusters", "2", "--spread", "60"])
        .args(["--spacing", "260", "--ground-range", "120", "--area", "600"]));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("sweep: 12 rows"), "{stdout}");
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("seed,n_od,mode,eta,total_power_w,uav_count,runtime_ms\n"));
    assert_eq!(csv.lines().count(), 1 + 12 + 6);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 12);
    assert_eq!(json["summary"].as_array().unwrap().len(), 6);
    assert_eq!(json["meta"]["command"], "sweep");
}

#[test]
fn exported_lp_matches_the_committed_golden_file() {
    let docs = docs_dir();
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("instance.lp");
    let routing = dir.path().join("routing.json");
    let (code, _, stderr) = run(bin()
        .arg("route")
        .arg("--scenario")
        .arg(docs.join("fixtures/bridge_scenario.json"))
        .arg("--plan")
        .arg(docs.join("fixtures/bridge_plan.json"))
        .arg("--out")
        .arg(&routing)
        .arg("--export-lp")
        .arg(&lp));
    assert_eq!(code, 0, "{stderr}");
    let fresh = std::fs::read(&lp).unwrap();
    let golden = std::fs::read(docs.join("golden_route.lp")).unwrap();
    assert_eq!(fresh, golden, "LP export drifted from docs/golden_route.lp");

    let (code, stdout, _) = run(bin()
        .arg("verify")
        .arg("--scenario")
        .arg(docs.join("fixtures/bridge_scenario.json"))
        .arg("--plan")
        .arg(docs.join("fixtures/bridge_plan.json"))
        .arg("--routing")
        .arg(&routing)
        .arg("--lp")
        .arg(docs.join("golden_route.lp")));
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("lp export    consistent"), "{stdout}");
}

#[test]
fn verify_rejects_a_corrupted_routing_file() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = generate_small(dir.path());
    let plan = dir.path().join("plan.json");
    let routing = dir.path().join("routing.json");
    run(bin().arg("plan").arg("--scenario").arg(&scenario).arg("--out").arg(&plan));
    run(bin()
        .arg("route")
        .arg("--scenario")
        .arg(&scenario)
        .arg("--plan")
        .arg(&plan)
        .arg("--out")
        .arg(&routing)
        .args(["--lambda", "0"]));

    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&routing).unwrap()).unwrap();
    let flows = doc["flows"].as_array_mut().expect("routed flows");
    assert!(!flows.is_empty());
    let kbps = flows[0]["kbps"].as_f64().unwrap();
    flows[0]["kbps"] = serde_json::json!(kbps + 40.0);
    std::fs::write(&routing, serde_json::to_string(&doc).unwrap()).unwrap();

    let (code, stdout, _) = run(bin()
        .arg("verify")
        .arg("--scenario")
        .arg(&scenario)
        .arg("--plan")
        .arg(&plan)
        .arg("--routing")
        .arg(&routing));
    assert_eq!(code, 1);
    assert!(stdout.contains("verification: FAIL"), "{stdout}");
    assert!(stdout.contains("conservation"), "{stdout}");
}

#[test]
fn errors_use_stable_codes_and_exit_statuses() {
    let dir = tempfile::tempdir().unwrap();

    let (code, _, stderr) = run(bin()
        .arg("route")
        .arg("--scenario")
        .arg(dir.path().join("missing.json"))
        .arg("--out")
        .arg(dir.path().join("x.json")));
    assert_eq!(code, 1);
    assert!(stderr.starts_with("error: io:"), "{stderr}");

    let (code, _, stderr) = run(bin()
        .arg("generate")
        .arg("--out")
        .arg(dir.path().join("s.json"))
        .args(["--param", "no_such_knob=3"]));
    assert_eq!(code, 1);
    assert!(stderr.starts_with("error: validation:"), "{stderr}");

    let (code, _, _) = run(bin().arg("route").arg("--definitely-not-a-flag"));
    assert_eq!(code, 2);

    let (code, _, stderr) = run(bin()
        .arg("generate")
        .arg("--out")
        .arg(dir.path().join("s2.json"))
        .args(["--demand-min", "500", "--demand-max", "100"]));
    assert_eq!(code, 1);
    assert!(stderr.starts_with("error: validation:"), "{stderr}");
}
