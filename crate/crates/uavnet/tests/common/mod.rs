//! Shared test support: a reference LP solver and random instance
//! generators used to cross-check the production solver.
//!
//! The reference solver is a deliberately plain dense tableau-style
//! bounded-variable simplex with Bland's rule everywhere: no factorization,
//! no pricing heuristics, an explicitly maintained basis inverse. It shares
//! only the `LpProblem` input type with the production code so the two
//! implementations can disagree honestly.

#![allow(dead_code)]

use uavnet::geom::Point;
use uavnet::params::Params;
use uavnet::plan::{Placement, Uav};
use uavnet::scenario::{Demand, Scenario};
use uavnet::solver::{LpProblem, Sense};

#[derive(Debug, Clone)]
pub enum RefOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

#[derive(Clone, Copy, PartialEq)]
enum St {
    Basic,
    Lower,
    Upper,
}

struct Dense {
    m: usize,
    n_total: usize,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

enum End {
    Optimal,
    Unbounded,
}

/// One Bland-rule bounded simplex run on the prepared dense form.
fn run_simplex(
    p: &Dense,
    c: &[f64],
    basis: &mut [usize],
    stat: &mut [St],
    x: &mut [f64],
    b_inv: &mut [Vec<f64>],
) -> End {
    let m = p.m;
    for _round in 0..50_000 {
        // Duals y = c_B' B^{-1}.
        let mut y = vec![0.0f64; m];
        for k in 0..m {
            let mut s = 0.0;
            for i in 0..m {
                s += c[basis[i]] * b_inv[i][k];
            }
            y[k] = s;
        }
        // Bland entering: the lowest-index variable with an improving
        // reduced cost, given which bound it currently sits at.
        let mut entering = None;
        for j in 0..p.n_total {
            if stat[j] == St::Basic || p.hi[j] - p.lo[j] < 1e-15 {
                continue;
            }
            let mut d = c[j];
            for i in 0..m {
                d -= y[i] * p.a[i][j];
            }
            let improving = match stat[j] {
                St::Lower => d < -1e-9,
                St::Upper => d > 1e-9,
                St::Basic => false,
            };
            if improving {
                entering = Some(j);
                break;
            }
        }
        let Some(q) = entering else { return End::Optimal };
        let sigma = if stat[q] == St::Lower { 1.0 } else { -1.0 };
        // Direction w = B^{-1} A_q.
        let mut w = vec![0.0f64; m];
        for i in 0..m {
            let mut s = 0.0;
            for k in 0..m {
                s += b_inv[i][k] * p.a[k][q];
            }
            w[i] = s;
        }
        // Ratio test: the entering variable's own range competes with every
        // basic variable's slack to its nearest blocking bound.
        let mut t_best = p.hi[q] - p.lo[q];
        // (row, leaves_to_upper)
        let mut leaving: Option<(usize, bool)> = None;
        for i in 0..m {
            let v = basis[i];
            let delta = sigma * w[i];
            let (t, to_upper) = if delta > 1e-11 {
                ((x[v] - p.lo[v]) / delta, false)
            } else if delta < -1e-11 {
                if p.hi[v].is_infinite() {
                    continue;
                }
                ((p.hi[v] - x[v]) / -delta, true)
            } else {
                continue;
            };
            let t = t.max(0.0);
            let take = if t < t_best - 1e-12 {
                true
            } else if t < t_best + 1e-12 {
                // Bland tie-break: smallest basic variable index leaves.
                match leaving {
                    None => t < t_best,
                    Some((r, _)) => v < basis[r],
                }
            } else {
                false
            };
            if take {
                t_best = t.min(t_best);
                leaving = Some((i, to_upper));
            }
        }
        if t_best.is_infinite() {
            return End::Unbounded;
        }
        let t = t_best.max(0.0);
        for i in 0..m {
            x[basis[i]] -= t * sigma * w[i];
        }
        x[q] += sigma * t;
        match leaving {
            None => {
                // Bound flip: q runs to its opposite bound.
                stat[q] = if sigma > 0.0 { St::Upper } else { St::Lower };
                x[q] = if sigma > 0.0 { p.hi[q] } else { p.lo[q] };
            }
            Some((r, to_upper)) => {
                let out = basis[r];
                x[out] = if to_upper { p.hi[out] } else { p.lo[out] };
                stat[out] = if to_upper { St::Upper } else { St::Lower };
                stat[q] = St::Basic;
                basis[r] = q;
                // Pivot the explicit inverse.
                let piv = w[r];
                for k in 0..m {
                    b_inv[r][k] /= piv;
                }
                for i in 0..m {
                    if i != r && w[i] != 0.0 {
                        let f = w[i];
                        for k in 0..m {
                            b_inv[i][k] -= f * b_inv[r][k];
                        }
                    }
                }
            }
        }
    }
    panic!("reference simplex exceeded its iteration budget");
}

/// Solve an `LpProblem` with the reference method.
pub fn solve_reference(lp: &LpProblem) -> RefOutcome {
    let n = lp.obj.len();
    let m = lp.rhs.len();
    if m == 0 {
        // Pure bound optimization: each variable sits at whichever bound
        // its (sense-adjusted) cost prefers.
        let mut x = vec![0.0; n];
        for j in 0..n {
            let c = if lp.maximize { -lp.obj[j] } else { lp.obj[j] };
            x[j] = if c >= 0.0 { lp.lower[j] } else { lp.upper[j] };
            if x[j].is_infinite() {
                return RefOutcome::Unbounded;
            }
        }
        let objective: f64 =
            x.iter().zip(&lp.obj).map(|(a, b)| a * b).sum::<f64>() + lp.obj_constant;
        return RefOutcome::Optimal { x, objective };
    }

    // Canonical form: every row an equality with a slack; >= rows negated.
    let n_total = n + 2 * m; // structurals, slacks, artificials
    let mut a = vec![vec![0.0f64; n_total]; m];
    let mut b = lp.rhs.clone();
    let mut sign = vec![1.0f64; m];
    for i in 0..m {
        if matches!(lp.senses[i], Sense::Ge) {
            sign[i] = -1.0;
            b[i] = -b[i];
        }
    }
    for &(r, col, v) in &lp.entries {
        a[r][col] += sign[r] * v;
    }
    let mut lo = lp.lower.clone();
    let mut hi = lp.upper.clone();
    for i in 0..m {
        a[i][n + i] = 1.0;
        lo.push(0.0);
        hi.push(match lp.senses[i] {
            Sense::Eq => 0.0,
            _ => f64::INFINITY,
        });
    }
    // Artificial columns are shaped later; keep them fixed at zero for now.
    for _ in 0..m {
        lo.push(0.0);
        hi.push(0.0);
    }

    let mut x = vec![0.0f64; n_total];
    for j in 0..n {
        x[j] = lo[j];
    }
    let mut stat = vec![St::Lower; n_total];
    let mut basis: Vec<usize> = (0..m).map(|i| n + i).collect();
    let mut b_inv: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|k| if i == k { 1.0 } else { 0.0 }).collect())
        .collect();

    // Slack-basis values; rows whose slack violates its bounds get an
    // artificial that absorbs the residual.
    let mut needs_phase1 = false;
    let mut phase1_cost = vec![0.0f64; n_total];
    for i in 0..m {
        let mut resid = b[i];
        for j in 0..n {
            resid -= a[i][j] * x[j];
        }
        let s = n + i;
        if resid >= lo[s] - 1e-9 && resid <= hi[s] + 1e-9 {
            x[s] = resid;
            stat[s] = St::Basic;
            continue;
        }
        needs_phase1 = true;
        x[s] = if resid < lo[s] { lo[s] } else { hi[s] };
        stat[s] = if resid < lo[s] { St::Lower } else { St::Upper };
        let rem = resid - x[s];
        let art = n + m + i;
        let sigma = if rem >= 0.0 { 1.0 } else { -1.0 };
        a[i][art] = sigma;
        hi[art] = f64::INFINITY;
        x[art] = rem.abs();
        stat[art] = St::Basic;
        basis[i] = art;
        b_inv[i][i] = sigma;
        phase1_cost[art] = 1.0;
    }

    let dense = Dense { m, n_total, a, b, lo, hi };

    if needs_phase1 {
        match run_simplex(&dense, &phase1_cost, &mut basis, &mut stat, &mut x, &mut b_inv) {
            End::Unbounded => unreachable!("phase 1 objective is bounded below by zero"),
            End::Optimal => {}
        }
        let infeas: f64 = (0..m).map(|i| x[n + m + i].max(0.0)).sum();
        let scale = 1.0 + dense.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if infeas > 1e-7 * scale {
            return RefOutcome::Infeasible;
        }
    }
    // Freeze artificials at zero for phase 2.
    let mut dense = dense;
    for i in 0..m {
        let art = n + m + i;
        dense.hi[art] = 0.0;
        if stat[art] != St::Basic {
            x[art] = 0.0;
        }
    }

    let mut c = vec![0.0f64; n_total];
    for j in 0..n {
        c[j] = if lp.maximize { -lp.obj[j] } else { lp.obj[j] };
    }
    match run_simplex(&dense, &c, &mut basis, &mut stat, &mut x, &mut b_inv) {
        End::Unbounded => RefOutcome::Unbounded,
        End::Optimal => {
            let objective: f64 = (0..n).map(|j| lp.obj[j] * x[j]).sum::<f64>() + lp.obj_constant;
            RefOutcome::Optimal { x: x[..n].to_vec(), objective }
        }
    }
}

/// Evaluate feasibility of a candidate point directly from the problem
/// data. Returns the largest constraint or bound violation.
pub fn max_violation(lp: &LpProblem, x: &[f64]) -> f64 {
    let m = lp.rhs.len();
    let mut lhs = vec![0.0f64; m];
    for &(r, c, v) in &lp.entries {
        lhs[r] += v * x[c];
    }
    let mut worst = 0.0f64;
    for i in 0..m {
        let viol = match lp.senses[i] {
            Sense::Le => lhs[i] - lp.rhs[i],
            Sense::Ge => lp.rhs[i] - lhs[i],
            Sense::Eq => (lhs[i] - lp.rhs[i]).abs(),
        };
        worst = worst.max(viol);
    }
    for j in 0..x.len() {
        worst = worst.max(lp.lower[j] - x[j]).max(x[j] - lp.upper[j]);
    }
    worst
}

/// Random LP with a feasible point built in: row senses and right-hand
/// sides are chosen consistent with a known interior candidate.
pub fn random_feasible_lp(rng: &mut impl rand::Rng, m: usize, n: usize) -> LpProblem {
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut witness = Vec::with_capacity(n);
    for _ in 0..n {
        let lo = (rng.gen::<f64>() * 4.0) - 2.0;
        let span = 0.5 + rng.gen::<f64>() * 6.0;
        lower.push(lo);
        upper.push(if rng.gen::<f64>() < 0.15 { f64::INFINITY } else { lo + span });
        let frac = rng.gen::<f64>();
        witness.push(lo + frac * span.min(4.0));
    }
    let mut entries = Vec::new();
    let mut senses = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for row in 0..m {
        let mut lhs = 0.0;
        let mut nnz = 0;
        for col in 0..n {
            if rng.gen::<f64>() < 0.4 {
                let v = (rng.gen::<f64>() * 6.0) - 3.0;
                if v.abs() < 0.05 {
                    continue;
                }
                entries.push((row, col, v));
                lhs += v * witness[col];
                nnz += 1;
            }
        }
        if nnz == 0 {
            let col = rng.gen_range(0..n);
            entries.push((row, col, 1.0));
            lhs += witness[col];
        }
        let roll = rng.gen::<f64>();
        if roll < 0.4 {
            senses.push(Sense::Le);
            rhs.push(lhs + rng.gen::<f64>() * 3.0);
        } else if roll < 0.8 {
            senses.push(Sense::Ge);
            rhs.push(lhs - rng.gen::<f64>() * 3.0);
        } else {
            senses.push(Sense::Eq);
            rhs.push(lhs);
        }
    }
    let obj: Vec<f64> = (0..n).map(|_| (rng.gen::<f64>() * 4.0) - 2.0).collect();
    LpProblem {
        maximize: rng.gen::<bool>(),
        obj,
        obj_constant: 0.0,
        lower,
        upper,
        senses,
        rhs,
        entries,
    }
}

/// Best objective over all binary patterns, solved by the reference
/// simplex. `None` when every pattern is infeasible.
pub fn enumerate_best(lp: &LpProblem, binaries: &[usize]) -> Option<f64> {
    let k = binaries.len();
    assert!(k <= 16, "enumeration stays tractable");
    let mut best: Option<f64> = None;
    for pattern in 0u32..(1 << k) {
        let mut fixed = lp.clone();
        for (t, &col) in binaries.iter().enumerate() {
            let v = if pattern & (1 << t) != 0 { 1.0 } else { 0.0 };
            fixed.lower[col] = v;
            fixed.upper[col] = v;
        }
        if let RefOutcome::Optimal { objective, .. } = solve_reference(&fixed) {
            let better = match best {
                None => true,
                Some(b) => {
                    if lp.maximize {
                        objective > b
                    } else {
                        objective < b
                    }
                }
            };
            if better {
                best = Some(objective);
            }
        }
    }
    best
}

/// Small random routing instance: a handful of users with short ground
/// links, a demand or two, and hand-placed UAVs. `None` when the draw
/// produced no demand.
pub fn random_routing_case(rng: &mut impl rand::Rng) -> Option<(Scenario, Placement)> {
    let n_users = rng.gen_range(2..=4);
    let mut positions = Vec::new();
    for _ in 0..n_users {
        positions.push(Point::new(
            rng.gen_range(-250.0..250.0),
            rng.gen_range(-250.0..250.0),
        ));
    }
    let mut links = Vec::new();
    for i in 0..n_users {
        for j in (i + 1)..n_users {
            if positions[i].dist(&positions[j]) <= 150.0 && rng.gen_bool(0.7) {
                links.push((i, j));
            }
        }
    }
    let mut demand = Vec::new();
    let n_od = rng.gen_range(1..=3);
    for _ in 0..n_od {
        let src = rng.gen_range(0..n_users);
        let mut dst = rng.gen_range(0..n_users);
        if src == dst {
            dst = (dst + 1) % n_users;
        }
        if demand.iter().any(|d: &Demand| d.src == src && d.dst == dst) {
            continue;
        }
        demand.push(Demand {
            src,
            dst,
            kbps: (rng.gen_range(100.0..3000.0f64) * 1e3).round() / 1e3,
        });
    }
    if demand.is_empty() {
        return None;
    }
    let mut params = Params::default();
    params.lambda = [0.0, 0.5, 2.0, 8.0][rng.gen_range(0..4)];
    let scenario = Scenario::new(positions, links, demand, params).ok()?;

    let n_uavs = rng.gen_range(1..=2);
    let mut uavs = Vec::new();
    for _ in 0..n_uavs {
        uavs.push(Uav {
            pos: Point::new(rng.gen_range(-300.0..300.0), rng.gen_range(-300.0..300.0)),
            is_relay: false,
        });
    }
    let placement = Placement {
        uavs,
        altitude: scenario.params.altitude,
        association: vec![0; n_users],
        merge_log: vec![],
        meta: None,
    };
    Some((scenario, placement))
}

/// Random LP made infeasible by a pair of contradictory rows over the same
/// variable subset.
pub fn random_infeasible_lp(rng: &mut impl rand::Rng, m: usize, n: usize) -> LpProblem {
    let mut lp = random_feasible_lp(rng, m, n);
    // sum of a random nonempty subset <= t and >= t + margin cannot both
    // hold, whatever the bounds.
    let count = 1 + rng.gen_range(0..n);
    let row_a = lp.rhs.len();
    let mut ub = 0.0;
    for col in 0..count {
        lp.entries.push((row_a, col, 1.0));
        lp.entries.push((row_a + 1, col, 1.0));
        ub += if lp.upper[col].is_finite() { lp.upper[col] } else { 1e6 };
    }
    lp.senses.push(Sense::Le);
    lp.rhs.push(-1.0 - lp.lower.iter().map(|v| v.abs()).sum::<f64>() - ub.abs());
    lp.senses.push(Sense::Ge);
    lp.rhs.push(*lp.rhs.last().unwrap() + 10.0 + ub.abs() * 2.0);
    lp
}
