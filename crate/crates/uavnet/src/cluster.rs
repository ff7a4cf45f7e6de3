//! Demand-weighted clustering of ground users.
//!
//! The planner groups users with k-means where each user is weighted by its
//! total outgoing demand, so heavy sources pull their serving UAV towards
//! them. Initial centroids come from a density grid: the bounding box is cut
//! into `grid_g x grid_g` cells, cells are ranked by contained weight, and
//! the weighted means of the top `k` cells seed the iteration.
//!
//! Everything here is deterministic. Distance ties assign to the lowest
//! cluster index, grid ties rank by `(row, col)`, and empty clusters are
//! repaired by moving the user with the largest weighted squared distance to
//! its current centroid (ties to the lowest user id) out of a cluster that
//! can spare one.
//!
//! `select_k` searches upward from the capacity lower bound
//! `ceil(total_demand / uav_capacity)` for the smallest k whose clustering
//! satisfies both feasibility rules: every cluster's demand fits one UAV and
//! every member lies within air-to-ground range of its cluster centroid.

use crate::error::{Error, Result};
use crate::geom::{Bbox, Point};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy)]
pub struct KmeansOptions {
    /// Stop when the objective improves by less than this between iterations.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        KmeansOptions { tol: 1e-6, max_iter: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct Clustering {
    pub k: usize,
    pub centroids: Vec<Point>,
    /// `assign[i]` is the cluster of point `i`.
    pub assign: Vec<usize>,
    /// Weighted within-cluster sum of squared distances (m^2 * Kbps).
    pub objective: f64,
    /// Objective after each completed iteration, non-increasing.
    pub objective_trace: Vec<f64>,
}

/// Largest grid the automatic doubling in `select_k` will try before falling
/// back to seeding centroids on the heaviest users directly. Beyond this the
/// grid cannot separate points that share coordinates anyway.
const MAX_GRID: usize = 2048;

fn validate_inputs(points: &[Point], weights: &[f64], k: usize) -> Result<()> {
    if points.len() != weights.len() {
        return Err(Error::Internal(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    if k == 0 || k > points.len() {
        return Err(Error::Validation {
            field: "k".into(),
            message: format!("k must be in 1..={}, got {k}", points.len()),
        });
    }
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::Validation {
                field: format!("weights[{i}]"),
                message: format!("must be non-negative and finite, got {w}"),
            });
        }
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::AllWeightsZero);
    }
    Ok(())
}

/// Seed `k` centroids from the weight-densest grid cells.
///
/// Cells are ranked by total contained weight, ties broken by `(row, col)`.
/// Each chosen cell contributes the weighted mean of its points (unweighted
/// mean if the cell holds only zero-weight users). Errors if fewer than `k`
/// cells are occupied; the caller can retry with a finer grid.
pub fn density_box_init(
    points: &[Point],
    weights: &[f64],
    k: usize,
    grid_g: usize,
) -> Result<Vec<Point>> {
    validate_inputs(points, weights, k)?;
    if grid_g == 0 {
        return Err(Error::Validation {
            field: "grid_g".into(),
            message: "grid must have at least one cell".into(),
        });
    }
    let bb = Bbox::of(points.iter()).expect("points is non-empty");
    let cell_w = bb.width() / grid_g as f64;
    let cell_h = bb.height() / grid_g as f64;
    let cell_of = |p: &Point| -> (usize, usize) {
        let col = if cell_w > 0.0 {
            (((p.x - bb.min_x) / cell_w) as usize).min(grid_g - 1)
        } else {
            0
        };
        let row = if cell_h > 0.0 {
            (((p.y - bb.min_y) / cell_h) as usize).min(grid_g - 1)
        } else {
            0
        };
        (row, col)
    };

    #[derive(Default)]
    struct Cell {
        weight: f64,
        wx: f64,
        wy: f64,
        count: usize,
        sx: f64,
        sy: f64,
    }
    let mut cells: std::collections::BTreeMap<(usize, usize), Cell> = Default::default();
    for (p, &w) in points.iter().zip(weights) {
        let c = cells.entry(cell_of(p)).or_default();
        c.weight += w;
        c.wx += w * p.x;
        c.wy += w * p.y;
        c.count += 1;
        c.sx += p.x;
        c.sy += p.y;
    }
    if cells.len() < k {
        return Err(Error::GridTooCoarse { k, occupied: cells.len(), grid_g });
    }
    let mut ranked: Vec<(&(usize, usize), &Cell)> = cells.iter().collect();
    // Heaviest first; (row, col) breaks ties deterministically.
    ranked.sort_by(|a, b| b.1.weight.partial_cmp(&a.1.weight).unwrap().then(a.0.cmp(b.0)));
    Ok(ranked[..k]
        .iter()
        .map(|(_, c)| {
            if c.weight > 0.0 {
                Point::new(c.wx / c.weight, c.wy / c.weight)
            } else {
                Point::new(c.sx / c.count as f64, c.sy / c.count as f64)
            }
        })
        .collect())
}

/// Lloyd iteration with per-user weights.
///
/// Each pass assigns users to their nearest centroid (squared distance,
/// ties to the lowest cluster index), repairs any empty cluster, then moves
/// centroids to the weighted mean of their members. The objective trace is
/// non-increasing; iteration stops when the improvement drops below
/// `opts.tol`, the assignment stabilises, or `opts.max_iter` passes ran.
pub fn weighted_kmeans(
    points: &[Point],
    weights: &[f64],
    init: &[Point],
    opts: &KmeansOptions,
) -> Result<Clustering> {
    let k = init.len();
    validate_inputs(points, weights, k)?;
    let n = points.len();
    let mut centroids: Vec<Point> = init.to_vec();
    let mut assign = vec![0usize; n];
    let mut prev_assign: Option<Vec<usize>> = None;
    let mut prev_obj = f64::INFINITY;
    let mut trace = Vec::new();

    for _ in 0..opts.max_iter {
        // Assignment step.
        for (i, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = p.dist_sq(&centroids[0]);
            for (c, ctr) in centroids.iter().enumerate().skip(1) {
                let d = p.dist_sq(ctr);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            assign[i] = best;
        }

        // Repair empty clusters before the centroid update so every cluster
        // stays populated. The donor is the user with the largest weighted
        // squared distance to its current centroid, drawn from clusters that
        // keep at least one member.
        let mut counts = vec![0usize; k];
        for &a in &assign {
            counts[a] += 1;
        }
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            let mut donor: Option<(f64, usize)> = None;
            for (i, p) in points.iter().enumerate() {
                if counts[assign[i]] < 2 {
                    continue;
                }
                let score = weights[i] * p.dist_sq(&centroids[assign[i]]);
                let better = match donor {
                    None => true,
                    Some((best, _)) => score > best,
                };
                if better {
                    donor = Some((score, i));
                }
            }
            let (_, i) =
                donor.expect("a cluster with two members exists whenever one is empty");
            counts[assign[i]] -= 1;
            assign[i] = empty;
            counts[empty] = 1;
        }

        // Centroid update: weighted mean, falling back to the unweighted
        // mean for clusters whose members all have zero weight.
        let mut wsum = vec![0.0f64; k];
        let mut wx = vec![0.0f64; k];
        let mut wy = vec![0.0f64; k];
        let mut cnt = vec![0usize; k];
        let mut sx = vec![0.0f64; k];
        let mut sy = vec![0.0f64; k];
        for (i, p) in points.iter().enumerate() {
            let c = assign[i];
            wsum[c] += weights[i];
            wx[c] += weights[i] * p.x;
            wy[c] += weights[i] * p.y;
            cnt[c] += 1;
            sx[c] += p.x;
            sy[c] += p.y;
        }
        for c in 0..k {
            centroids[c] = if wsum[c] > 0.0 {
                Point::new(wx[c] / wsum[c], wy[c] / wsum[c])
            } else {
                Point::new(sx[c] / cnt[c] as f64, sy[c] / cnt[c] as f64)
            };
        }

        let obj: f64 =
            points.iter().enumerate().map(|(i, p)| weights[i] * p.dist_sq(&centroids[assign[i]])).sum();
        trace.push(obj);

        let stable = prev_assign.as_deref() == Some(assign.as_slice());
        let converged = prev_obj - obj < opts.tol;
        prev_obj = obj;
        prev_assign = Some(assign.clone());
        if stable || converged {
            break;
        }
    }

    Ok(Clustering { k, centroids, assign, objective: prev_obj, objective_trace: trace })
}

/// Result of the k search: the accepted clustering plus the grid it used.
#[derive(Debug, Clone)]
pub struct KSelection {
    pub clustering: Clustering,
    pub k: usize,
    pub grid_g: usize,
}

fn capacity_lower_bound(total_demand: f64, uav_capacity: f64) -> usize {
    // Demands live on a 1e-6 grid, so nudge before ceil to keep exact
    // multiples of the capacity from rounding up.
    let k = ((total_demand / uav_capacity) - 1e-9).ceil() as isize;
    k.max(1) as usize
}

/// Smallest k, starting from the capacity lower bound, whose demand-weighted
/// clustering satisfies both per-cluster feasibility rules:
///
/// (a) cluster demand `<= uav_capacity`,
/// (b) every member within air-to-ground range of the cluster centroid
///     (slant distance at the configured altitude).
///
/// The density grid starts at `ceil(sqrt(2k))` and doubles whenever it has
/// fewer occupied cells than k; if even [`MAX_GRID`] cannot separate k cells
/// (co-located users), centroids are seeded on the k heaviest users instead.
pub fn select_k(scenario: &Scenario) -> Result<KSelection> {
    let points: Vec<Point> = scenario.users.iter().map(|u| u.pos).collect();
    let weights: Vec<f64> = scenario.users.iter().map(|u| u.demand_out).collect();
    let params = &scenario.params;
    let n = points.len();
    let k_min = capacity_lower_bound(scenario.total_demand(), params.uav_capacity);
    if k_min > n {
        return Err(Error::Infeasible(format!(
            "capacity lower bound {k_min} exceeds the {n} users"
        )));
    }

    let opts = KmeansOptions::default();
    let mut last_err = None;
    for k in k_min..=n {
        let mut grid_g = ((2.0 * k as f64).sqrt().ceil()) as usize;
        let init = loop {
            match density_box_init(&points, &weights, k, grid_g) {
                Ok(init) => break init,
                Err(Error::GridTooCoarse { .. }) if grid_g < MAX_GRID => grid_g *= 2,
                Err(Error::GridTooCoarse { .. }) => break heaviest_users_init(&points, &weights, k),
                Err(e) => return Err(e),
            }
        };
        let clustering = weighted_kmeans(&points, &weights, &init, &opts)?;

        let mut demand = vec![0.0f64; k];
        for (i, &c) in clustering.assign.iter().enumerate() {
            demand[c] += weights[i];
        }
        let capacity_ok = demand.iter().all(|&d| d <= params.uav_capacity);
        let coverage_ok = clustering.assign.iter().enumerate().all(|(i, &c)| {
            points[i].dist_3d(&clustering.centroids[c], params.altitude) <= params.a2g_range
        });
        if capacity_ok && coverage_ok {
            return Ok(KSelection { clustering, k, grid_g });
        }
        last_err = Some((k, capacity_ok, coverage_ok));
    }
    let detail = match last_err {
        Some((k, cap, cov)) => format!(
            "k = {k}: capacity {}, coverage {}",
            if cap { "ok" } else { "violated" },
            if cov { "ok" } else { "violated" }
        ),
        None => "no k tried".into(),
    };
    Err(Error::Infeasible(format!(
        "no cluster count up to {n} satisfies capacity and coverage (last {detail})"
    )))
}

/// Fallback seeding when the grid cannot produce k occupied cells: the k
/// heaviest users (ties to the lowest id) become the initial centroids.
fn heaviest_users_init(points: &[Point], weights: &[f64], k: usize) -> Vec<Point> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap().then(a.cmp(&b)));
    order[..k].iter().map(|&i| points[i]).collect()
}
