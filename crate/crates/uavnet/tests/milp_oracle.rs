//! Branch-and-bound against exhaustive 0/1 enumeration.
//!
//! The enumeration side fixes every binary pattern explicitly and solves
//! the remaining LP with the independent dense simplex from the shared
//! test-support module, so the two optima come from disjoint code paths.

mod common;

use common::{enumerate_best, random_routing_case};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uavnet::milp::{branch_and_bound, build_milp, route, verify_solution, Commodity, SolveStatus};
use uavnet::solver::LpProblem;

/// Routing MILPs with at most 8 activation binaries: the exact search must
/// match brute-force enumeration, and every incumbent must pass the
/// independent checker.
#[test]
fn routing_search_matches_enumeration_on_100_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let mut done = 0usize;
    let mut with_binaries = 0usize;
    while done < 100 {
        let Some((scenario, placement)) = random_routing_case(&mut rng) else {
            continue;
        };
        let graph = uavnet::graph::build_graph(&scenario, Some(&placement));
        let commodities: Vec<Commodity> = scenario
            .commodities()
            .iter()
            .map(|d| Commodity { src: d.src, dst: d.dst, demand: d.kbps })
            .collect();
        let instance = build_milp(&graph, commodities, &scenario.params);
        if instance.uav_edges.len() > 8 {
            continue;
        }
        if !instance.uav_edges.is_empty() {
            with_binaries += 1;
        }

        let (inst, solution) = route(&graph, instance.commodities.clone(), &scenario.params)
            .expect("routing instances are always feasible");
        assert_eq!(solution.status, SolveStatus::Optimal, "case {done}");
        let report = verify_solution(&inst, &solution, 1e-6);
        assert!(report.pass, "case {done}:\n{}", report.summary());

        let binaries: Vec<usize> =
            (0..inst.uav_edges.len()).map(|t| inst.col_y(t)).collect();
        let best = enumerate_best(&inst.lp, &binaries)
            .expect("the zero routing is feasible for every pattern");
        let tol = 1e-6 * best.abs().max(1.0);
        assert!(
            (solution.objective - best).abs() <= tol,
            "case {done}: search {} vs enumeration {}",
            solution.objective,
            best
        );
        done += 1;
    }
    assert!(with_binaries >= 60, "most cases exercise binaries: {with_binaries}");
}

/// Generic boxed MILPs with random costs on the binaries, where branching
/// genuinely happens: also compared against enumeration.
#[test]
fn generic_binary_programs_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1213);
    let mut branched = 0usize;
    for trial in 0..100 {
        let m = 2 + (trial % 5);
        let n = 4 + (trial % 7);
        let mut lp = common::random_feasible_lp(&mut rng, m, n);
        for c in 0..n {
            if !lp.upper[c].is_finite() {
                lp.upper[c] = lp.lower[c] + 20.0;
            }
        }
        let k = (2 + trial % 4).min(n);
        let binaries: Vec<usize> = (0..k).collect();
        for &c in &binaries {
            lp.lower[c] = 0.0;
            lp.upper[c] = 1.0;
            lp.obj[c] = rng.gen_range(-6.0..6.0f64);
        }
        let out = branch_and_bound(&lp, &binaries, 1e-9, 10_000).unwrap();
        let best = enumerate_best(&lp, &binaries);
        match best {
            None => assert_eq!(
                out.status,
                SolveStatus::Infeasible,
                "trial {trial}: enumeration found nothing"
            ),
            Some(best) => {
                assert_eq!(out.status, SolveStatus::Optimal, "trial {trial}");
                let tol = 1e-6 * best.abs().max(1.0);
                assert!(
                    (out.objective - best).abs() <= tol,
                    "trial {trial}: search {} vs enumeration {}",
                    out.objective,
                    best
                );
                let worth = if lp.maximize { 1.0 } else { -1.0 };
                assert!(
                    worth * out.bound >= worth * out.objective - tol,
                    "trial {trial}: bound {} does not dominate {}",
                    out.bound,
                    out.objective
                );
            }
        }
        if out.nodes > 1 {
            branched += 1;
        }
    }

    // Random knapsacks: fractional relaxations whose proof of optimality
    // requires descending the tree.
    for trial in 0..30 {
        let k = 5 + (trial % 4);
        let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(1.0..9.0f64)).collect();
        let values: Vec<f64> = (0..k).map(|_| rng.gen_range(1.0..9.0f64)).collect();
        let budget = 0.45 * weights.iter().sum::<f64>();
        let lp = LpProblem {
            maximize: true,
            obj: values,
            obj_constant: 0.0,
            lower: vec![0.0; k],
            upper: vec![1.0; k],
            senses: vec![uavnet::solver::Sense::Le],
            rhs: vec![budget],
            entries: weights.iter().enumerate().map(|(c, &w)| (0, c, w)).collect(),
        };
        let binaries: Vec<usize> = (0..k).collect();
        let out = branch_and_bound(&lp, &binaries, 1e-9, 10_000).unwrap();
        let best = enumerate_best(&lp, &binaries).expect("zero pick is feasible");
        assert_eq!(out.status, SolveStatus::Optimal, "knapsack {trial}");
        assert!(
            (out.objective - best).abs() <= 1e-6 * best.abs().max(1.0),
            "knapsack {trial}: search {} vs enumeration {}",
            out.objective,
            best
        );
        if out.nodes > 1 {
            branched += 1;
        }
    }
    assert!(branched >= 30, "enough trials require branching: {branched}");
}
