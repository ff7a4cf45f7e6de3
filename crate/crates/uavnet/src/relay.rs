//! Relay UAV insertion for network connectivity.
//!
//! After service UAVs are placed, the network may still split into several
//! connected components (cluster islands too far apart for air-to-air
//! links). This module adds relay UAVs at the shared altitude until the
//! whole graph is one component.
//!
//! Two procedures cooperate:
//!
//! * [`mst_relay_positions`] is the baseline: build a minimum spanning tree
//!   over the components (edge length = closest anchor pair) and fill each
//!   tree edge with equally spaced relays. It always succeeds and its relay
//!   count is an upper bound for the main procedure.
//! * [`connect_placement`] searches for a smaller relay set with a
//!   deterministic-annealing sweep: m tentative relays relax towards soft
//!   assignments over the anchors while the temperature drops, and after
//!   every temperature step the candidate network is tested for
//!   connectivity. The first connected configuration wins. If no m up to
//!   the baseline count connects, the baseline positions are used, so the
//!   result never needs more relays than the spanning-tree bound.
//!
//! Anchors are the horizontal projections of the UAVs in each component;
//! a component without UAVs (possible only for hand-built placements) is
//! anchored at its lowest-id ground user, whose reach is the smaller
//! air-to-ground radius. No randomness is involved anywhere: annealing
//! starts from a golden-angle jitter pattern around the anchor centroid.

use crate::error::{Error, Result};
use crate::geom::{Bbox, Point};
use crate::graph::{build_graph, NodeFilter};
use crate::plan::{Placement, Uav};
use crate::scenario::Scenario;

/// Cooling schedule for the annealing connector.
#[derive(Debug, Clone, Copy)]
pub struct DaSchedule {
    /// Starting temperature, squared distance units.
    pub t0: f64,
    /// Multiplicative cooling factor per temperature step.
    pub alpha: f64,
    /// Stop once the temperature falls below this.
    pub t_min: f64,
    /// Position updates per temperature step.
    pub iters_per_t: usize,
}

impl DaSchedule {
    /// Schedule scaled to the instance: start at the squared diagonal of
    /// the bounding box around users and UAVs so the first steps see an
    /// effectively uniform assignment.
    pub fn for_instance(scenario: &Scenario, placement: &Placement) -> DaSchedule {
        let pts = scenario
            .users
            .iter()
            .map(|u| u.pos)
            .chain(placement.uavs.iter().map(|u| u.pos))
            .collect::<Vec<_>>();
        let diag = Bbox::of(pts.iter()).map(|b| b.diagonal()).unwrap_or(1.0);
        DaSchedule { t0: (diag * diag).max(1.0), alpha: 0.9, t_min: 1e-3, iters_per_t: 30 }
    }
}

/// An attachment point a relay can connect to, with the horizontal radius
/// at which the connection forms.
#[derive(Debug, Clone, Copy)]
struct Anchor {
    pos: Point,
    radius: f64,
    component: usize,
}

/// Horizontal reach of an air-to-ground link at the flying altitude.
fn a2g_horizontal(scenario: &Scenario) -> f64 {
    let p = &scenario.params;
    (p.a2g_range * p.a2g_range - p.altitude * p.altitude).sqrt()
}

/// Anchors of every component of the current network, flattened.
/// Returns the number of components alongside.
fn component_anchors(scenario: &Scenario, placement: &Placement) -> (usize, Vec<Anchor>) {
    let g = build_graph(scenario, Some(placement));
    let comps = g.connected_components(NodeFilter::All);
    let n_users = scenario.users.len();
    let gu_radius = a2g_horizontal(scenario);
    let mut anchors = Vec::new();
    for (ci, comp) in comps.iter().enumerate() {
        let uavs: Vec<usize> =
            comp.iter().filter(|&&n| n >= n_users).map(|&n| n - n_users).collect();
        if uavs.is_empty() {
            let gu = comp[0];
            anchors.push(Anchor {
                pos: scenario.users[gu].pos,
                radius: gu_radius,
                component: ci,
            });
        } else {
            for l in uavs {
                anchors.push(Anchor {
                    pos: placement.uavs[l].pos,
                    radius: scenario.params.a2a_range,
                    component: ci,
                });
            }
        }
    }
    (comps.len(), anchors)
}

/// Relays that connect the network by filling minimum-spanning-tree edges.
///
/// Components are joined by a Prim spanning tree whose edge weight is the
/// distance of the closest anchor pair. Each tree edge of length `d` and
/// link radius `r` (the smaller of its endpoint radii, at most the
/// air-to-air range) is split into `ceil(d / r)` hops with a relay at every
/// interior division point; at least one relay is placed per edge so the
/// bridge exists even for short gaps.
///
/// Returns an empty list when the network is already connected.
pub fn mst_relay_positions(scenario: &Scenario, placement: &Placement) -> Result<Vec<Point>> {
    let (n_comps, anchors) = component_anchors(scenario, placement);
    if n_comps <= 1 {
        return Ok(Vec::new());
    }
    let a2a = scenario.params.a2a_range;

    // Closest anchor pair per component pair, ties to the lower anchor
    // indices (anchors are already in deterministic component order).
    let dist = |a: &Anchor, b: &Anchor| a.pos.dist(&b.pos);
    let mut in_tree = vec![false; n_comps];
    in_tree[0] = true;
    let mut relays = Vec::new();
    for _ in 1..n_comps {
        let mut best: Option<(f64, usize, usize)> = None;
        for (ai, a) in anchors.iter().enumerate() {
            if !in_tree[a.component] {
                continue;
            }
            for (bi, b) in anchors.iter().enumerate() {
                if in_tree[b.component] {
                    continue;
                }
                let d = dist(a, b);
                let better = match best {
                    None => true,
                    Some((bd, ..)) => d < bd,
                };
                if better {
                    best = Some((d, ai, bi));
                }
            }
        }
        let (d, ai, bi) = best.ok_or_else(|| {
            Error::Internal("spanning tree ran out of components".into())
        })?;
        let (a, b) = (&anchors[ai], &anchors[bi]);
        in_tree[b.component] = true;

        let r = a.radius.min(b.radius).min(a2a);
        let mut segments = (d / r).ceil() as usize;
        if (segments as f64) * r < d {
            segments += 1;
        }
        // Even a short gap needs one physical relay to form the bridge.
        let n_rel = (segments.saturating_sub(1)).max(1);
        let hops = (n_rel + 1) as f64;
        for s in 1..=n_rel {
            let t = s as f64 / hops;
            relays.push(Point::new(
                a.pos.x + t * (b.pos.x - a.pos.x),
                a.pos.y + t * (b.pos.y - a.pos.y),
            ));
        }
    }
    Ok(relays)
}

fn with_relays(placement: &Placement, relays: &[Point]) -> Placement {
    let mut p = placement.clone();
    p.uavs.extend(relays.iter().map(|&pos| Uav { pos, is_relay: true }));
    p
}

fn is_connected(scenario: &Scenario, placement: &Placement) -> bool {
    build_graph(scenario, Some(placement)).connected_components(NodeFilter::All).len() <= 1
}

/// Golden-angle jitter pattern: distinct deterministic offsets that break
/// the symmetry of the annealing fixed point.
fn jitter(r: usize) -> Point {
    const GOLDEN_ANGLE: f64 = 2.399963229728653;
    let theta = GOLDEN_ANGLE * r as f64;
    let eps = 1e-3 * (r + 1) as f64;
    Point::new(eps * theta.cos(), eps * theta.sin())
}

/// Run the annealing relaxation for `m` relays, checking connectivity after
/// every temperature step. Returns the first connected relay set found.
fn anneal_m_relays(
    scenario: &Scenario,
    placement: &Placement,
    anchors: &[Anchor],
    m: usize,
    schedule: &DaSchedule,
) -> Option<Vec<Point>> {
    let centroid = {
        let n = anchors.len() as f64;
        let sx: f64 = anchors.iter().map(|a| a.pos.x).sum();
        let sy: f64 = anchors.iter().map(|a| a.pos.y).sum();
        Point::new(sx / n, sy / n)
    };
    let mut relays: Vec<Point> = (0..m)
        .map(|r| {
            let j = jitter(r);
            Point::new(centroid.x + j.x, centroid.y + j.y)
        })
        .collect();

    let mut t = schedule.t0;
    while t > schedule.t_min {
        for _ in 0..schedule.iters_per_t {
            // Soft assignment: each anchor spreads responsibility over the
            // relays with Gibbs weights exp(-d^2 / T); relays move to the
            // responsibility-weighted anchor mean.
            let mut wsum = vec![0.0f64; m];
            let mut wx = vec![0.0f64; m];
            let mut wy = vec![0.0f64; m];
            for a in anchors {
                let d2: Vec<f64> = relays.iter().map(|r| a.pos.dist_sq(r)).collect();
                let d2_min = d2.iter().cloned().fold(f64::INFINITY, f64::min);
                let w: Vec<f64> = d2.iter().map(|&d| (-(d - d2_min) / t).exp()).collect();
                let z: f64 = w.iter().sum();
                for r in 0..m {
                    let p = w[r] / z;
                    wsum[r] += p;
                    wx[r] += p * a.pos.x;
                    wy[r] += p * a.pos.y;
                }
            }
            for r in 0..m {
                if wsum[r] > 1e-12 {
                    relays[r] = Point::new(wx[r] / wsum[r], wy[r] / wsum[r]);
                }
            }
        }
        let candidate = with_relays(placement, &relays);
        if is_connected(scenario, &candidate) {
            return Some(relays);
        }
        t *= schedule.alpha;
    }
    None
}

/// Connect the network with as few relays as the annealing search finds.
///
/// Tries m = 1, 2, ... relays with [`anneal_m_relays`], capped at the
/// spanning-tree baseline count; when the search finds nothing smaller, the
/// baseline positions themselves are used. The returned placement is
/// therefore always connected and never uses more relays than
/// [`mst_relay_positions`] would.
pub fn connect_placement(scenario: &Scenario, placement: &Placement) -> Result<Placement> {
    if is_connected(scenario, placement) {
        return Ok(placement.clone());
    }
    let baseline = mst_relay_positions(scenario, placement)?;
    debug_assert!(!baseline.is_empty());
    let (_, anchors) = component_anchors(scenario, placement);
    let schedule = DaSchedule::for_instance(scenario, placement);

    for m in 1..=baseline.len() {
        if let Some(relays) = anneal_m_relays(scenario, placement, &anchors, m, &schedule) {
            let connected = with_relays(placement, &relays);
            connected.validate(scenario, &scenario.params)?;
            return Ok(connected);
        }
    }
    let connected = with_relays(placement, &baseline);
    if !is_connected(scenario, &connected) {
        return Err(Error::RelayBudget {
            budget: baseline.len(),
            components: component_anchors(scenario, &connected).0,
        });
    }
    connected.validate(scenario, &scenario.params)?;
    Ok(connected)
}
