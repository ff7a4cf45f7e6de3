//! UAV placement: one UAV per cluster, then greedy merging.
//!
//! `initial_placement` hovers one UAV over each cluster centroid at the
//! configured altitude. `merge_uavs` then repeatedly fuses pairs of service
//! UAVs while a merge is admissible, shrinking the fleet. A pair may merge
//! when the union of their users still fits one UAV's capacity and every
//! user in the union stays within air-to-ground range of the merged
//! position (the demand-weighted centroid of the union).
//!
//! Among admissible pairs the greedy step picks the one whose merged UAV
//! has the smallest maximum slant distance to its users, i.e. the most
//! compact result; ties fall to the lexicographically smallest index pair,
//! which keeps the whole procedure deterministic.

use crate::cluster::Clustering;
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::plan::{MergeRecord, Placement, Uav};
use crate::scenario::Scenario;

/// One UAV per cluster at the demand-weighted centroid.
///
/// Fails if any user ends up outside air-to-ground range of its UAV, so the
/// clustering must already satisfy the coverage rule.
pub fn initial_placement(scenario: &Scenario, clustering: &Clustering) -> Result<Placement> {
    if clustering.assign.len() != scenario.users.len() {
        return Err(Error::Internal(format!(
            "clustering assigns {} users, scenario has {}",
            clustering.assign.len(),
            scenario.users.len()
        )));
    }
    let placement = Placement {
        uavs: clustering
            .centroids
            .iter()
            .map(|&pos| Uav { pos, is_relay: false })
            .collect(),
        altitude: scenario.params.altitude,
        association: clustering.assign.clone(),
        merge_log: Vec::new(),
        meta: None,
    };
    placement.validate(scenario, &scenario.params)?;
    Ok(placement)
}

/// Weighted centroid of a member union, its total demand, and the largest
/// slant distance from any member to that centroid.
fn merged_profile(scenario: &Scenario, members: &[usize]) -> (Point, f64, f64) {
    let mut wsum = 0.0;
    let mut wx = 0.0;
    let mut wy = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for &u in members {
        let user = &scenario.users[u];
        wsum += user.demand_out;
        wx += user.demand_out * user.pos.x;
        wy += user.demand_out * user.pos.y;
        sx += user.pos.x;
        sy += user.pos.y;
    }
    let pos = if wsum > 0.0 {
        Point::new(wx / wsum, wy / wsum)
    } else {
        let n = members.len() as f64;
        Point::new(sx / n, sy / n)
    };
    let alt = scenario.params.altitude;
    let max_slant = members
        .iter()
        .map(|&u| scenario.users[u].pos.dist_3d(&pos, alt))
        .fold(0.0, f64::max);
    (pos, wsum, max_slant)
}

/// Greedily merge service UAVs until no admissible pair remains.
///
/// Returns a new placement whose merge log records each fused pair with the
/// indices they had at the moment of merging. Must run before relays are
/// added; relay UAVs carry no users and cannot be merged.
pub fn merge_uavs(scenario: &Scenario, placement: &Placement) -> Result<Placement> {
    if placement.uavs.iter().any(|u| u.is_relay) {
        return Err(Error::Validation {
            field: "placement.uavs".into(),
            message: "merging runs before relay insertion; relays present".into(),
        });
    }
    let params = &scenario.params;
    let mut uavs: Vec<Point> = placement.uavs.iter().map(|u| u.pos).collect();
    let mut assign = placement.association.clone();
    let mut log = placement.merge_log.clone();

    loop {
        let k = uavs.len();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (u, &c) in assign.iter().enumerate() {
            members[c].push(u);
        }
        // Best admissible pair: smallest merged max-slant, ties on (i, j).
        let mut best: Option<(f64, usize, usize, Point)> = None;
        for i in 0..k {
            for j in (i + 1)..k {
                let union: Vec<usize> =
                    members[i].iter().chain(members[j].iter()).copied().collect();
                let (pos, demand, max_slant) = merged_profile(scenario, &union);
                if demand > params.uav_capacity || max_slant > params.a2g_range {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some((s, ..)) => max_slant < *s,
                };
                if better {
                    best = Some((max_slant, i, j, pos));
                }
            }
        }
        let Some((_, i, j, pos)) = best else { break };
        log.push(MergeRecord { i, j, pos });
        // UAV i becomes the merged one, UAV j disappears, higher indices
        // shift down by one.
        uavs[i] = pos;
        uavs.remove(j);
        for a in assign.iter_mut() {
            if *a == j {
                *a = i;
            } else if *a > j {
                *a -= 1;
            }
        }
    }

    let merged = Placement {
        uavs: uavs.into_iter().map(|pos| Uav { pos, is_relay: false }).collect(),
        altitude: placement.altitude,
        association: assign,
        merge_log: log,
        meta: placement.meta.clone(),
    };
    merged.validate(scenario, &scenario.params)?;
    Ok(merged)
}
