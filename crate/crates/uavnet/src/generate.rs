//! Synthetic scenario generation.
//!
//! Users are drawn in circular clusters: cluster centres sit equally spaced
//! on a circle whose chord between neighbours equals `spacing`, centred in
//! the nominal area, and each user is placed uniformly in a disk of radius
//! `spread` around its centre. Ground links are discovered between every
//! pair of users within `ground_range` (cross-cluster links included if the
//! geometry allows them; with `spacing > ground_range + 2 * spread` none can
//! form). Each cluster is redrawn, deterministically, until its own users
//! form a connected ground graph.
//!
//! Origin-destination pairs are sampled uniformly without replacement from
//! all ordered user pairs, and each sampled pair gets a demand drawn
//! uniformly from `[demand_min, demand_max]`. All sampled coordinates and
//! demands are rounded to six decimals so the in-memory scenario equals its
//! serialized form exactly.
//!
//! Draw order is fixed (cluster 0 positions, cluster 1, ..., OD pairs,
//! demands), so a given `(spec, seed)` always yields the same scenario.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::params::Params;
use crate::scenario::{Demand, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::collections::BTreeSet;

/// Attempts per cluster before giving up on intra-cluster connectivity.
const MAX_CLUSTER_REDRAWS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub clusters: usize,
    pub users: usize,
    /// Disk radius of a cluster, metres.
    pub spread: f64,
    /// Distance between neighbouring cluster centres, metres.
    pub spacing: f64,
    /// Ground link discovery range, metres.
    pub ground_range: f64,
    /// Number of origin-destination demand entries.
    pub od_pairs: usize,
    pub demand_min: f64,
    pub demand_max: f64,
    /// Nominal square area side, metres. The cluster layout is centred in it.
    pub area: f64,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            clusters: 3,
            users: 40,
            spread: 120.0,
            spacing: 450.0,
            ground_range: 150.0,
            od_pairs: 20,
            demand_min: 100.0,
            demand_max: 800.0,
            area: 1000.0,
            seed: 1,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| Error::Validation { field: field.into(), message };
        if self.clusters == 0 {
            return Err(bad("clusters", "must be at least 1".into()));
        }
        if self.users < self.clusters {
            return Err(bad(
                "users",
                format!("need at least one user per cluster ({} clusters)", self.clusters),
            ));
        }
        if !(self.spread >= 0.0) {
            return Err(bad("spread", format!("must be non-negative, got {}", self.spread)));
        }
        if self.clusters > 1 && !(self.spacing > 0.0) {
            return Err(bad("spacing", format!("must be positive, got {}", self.spacing)));
        }
        if !(self.ground_range > 0.0) {
            return Err(bad("ground_range", format!("must be positive, got {}", self.ground_range)));
        }
        if !(self.demand_min > 0.0) || self.demand_max < self.demand_min {
            return Err(bad(
                "demand_min",
                format!("need 0 < demand_min <= demand_max, got [{}, {}]", self.demand_min, self.demand_max),
            ));
        }
        let max_pairs = self.users * (self.users - 1);
        if self.od_pairs > max_pairs {
            return Err(bad(
                "od_pairs",
                format!("{} exceeds the {} ordered user pairs", self.od_pairs, max_pairs),
            ));
        }
        Ok(())
    }

    /// Users per cluster: an even split with the remainder going to the last
    /// clusters, e.g. 40 users over 3 clusters gives 13/13/14.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let base = self.users / self.clusters;
        let rem = self.users % self.clusters;
        (0..self.clusters).map(|i| base + usize::from(i >= self.clusters - rem)).collect()
    }

    /// Cluster centres equally spaced on a circle with neighbour chord
    /// `spacing`, centred in the area square. One cluster sits at the centre.
    pub fn cluster_centers(&self) -> Vec<Point> {
        let mid = self.area / 2.0;
        if self.clusters == 1 {
            return vec![Point::new(mid, mid)];
        }
        let radius = self.spacing / (2.0 * (std::f64::consts::PI / self.clusters as f64).sin());
        (0..self.clusters)
            .map(|i| {
                let angle = 2.0 * std::f64::consts::PI * i as f64 / self.clusters as f64;
                Point::new(mid + radius * angle.cos(), mid + radius * angle.sin())
            })
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "clusters": self.clusters,
            "users": self.users,
            "spread": self.spread,
            "spacing": self.spacing,
            "ground_range": self.ground_range,
            "od_pairs": self.od_pairs,
            "demand_min": self.demand_min,
            "demand_max": self.demand_max,
            "area": self.area,
            "seed": self.seed,
        })
    }
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Uniform point in a disk of radius `r` around `center`, rounded to the
/// serialization grid.
fn draw_in_disk(rng: &mut ChaCha8Rng, center: Point, r: f64) -> Point {
    let radius = r * rng.gen::<f64>().sqrt();
    let angle = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    Point::new(round6(center.x + radius * angle.cos()), round6(center.y + radius * angle.sin()))
}

fn cluster_is_connected(points: &[Point], range: f64) -> bool {
    let n = points.len();
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut reached = 1;
    while let Some(v) = stack.pop() {
        for w in 0..n {
            if !seen[w] && points[v].dist(&points[w]) <= range {
                seen[w] = true;
                reached += 1;
                stack.push(w);
            }
        }
    }
    reached == n
}

/// Sample `n` distinct values from `0..m` (Floyd's algorithm), ascending.
fn sample_indices(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<usize> {
    let mut chosen = BTreeSet::new();
    for i in (m - n)..m {
        let t = rng.gen_range(0..=i);
        if !chosen.insert(t) {
            chosen.insert(i);
        }
    }
    chosen.into_iter().collect()
}

/// Ordered pair with index `idx` in the diagonal-free enumeration of
/// `users x users`.
fn pair_of_index(idx: usize, n_users: usize) -> (usize, usize) {
    let src = idx / (n_users - 1);
    let t = idx % (n_users - 1);
    let dst = if t >= src { t + 1 } else { t };
    (src, dst)
}

pub fn generate_scenario(spec: &GenSpec, params: &Params) -> Result<Scenario> {
    spec.validate()?;
    params.validate("params.")?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let centers = spec.cluster_centers();
    let sizes = spec.cluster_sizes();

    let mut positions: Vec<Point> = Vec::with_capacity(spec.users);
    for (c, (&size, center)) in sizes.iter().zip(&centers).enumerate() {
        let mut attempt = 0;
        let pts = loop {
            let pts: Vec<Point> =
                (0..size).map(|_| draw_in_disk(&mut rng, *center, spec.spread)).collect();
            if cluster_is_connected(&pts, spec.ground_range) {
                break pts;
            }
            attempt += 1;
            if attempt >= MAX_CLUSTER_REDRAWS {
                return Err(Error::Infeasible(format!(
                    "cluster {c} did not form a connected ground graph after {MAX_CLUSTER_REDRAWS} draws \
                     (spread {}, ground_range {})",
                    spec.spread, spec.ground_range
                )));
            }
        };
        positions.extend(pts);
    }

    // Link discovery over all pairs; cross-cluster links form if geometry allows.
    let mut links = Vec::new();
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            if positions[i].dist(&positions[j]) <= spec.ground_range {
                links.push((i, j));
            }
        }
    }

    let max_pairs = spec.users * (spec.users - 1);
    let demand: Vec<Demand> = if spec.od_pairs == 0 {
        Vec::new()
    } else {
        sample_indices(&mut rng, max_pairs, spec.od_pairs)
            .into_iter()
            .map(|idx| {
                let (src, dst) = pair_of_index(idx, spec.users);
                let kbps =
                    round6(spec.demand_min + rng.gen::<f64>() * (spec.demand_max - spec.demand_min));
                Demand { src, dst, kbps }
            })
            .collect()
    };

    let mut scenario = Scenario::new(positions, links, demand, params.clone())?;
    scenario.meta = Some(json!({
        "command": "generate",
        "gen": spec.to_json(),
    }));
    Ok(scenario)
}
