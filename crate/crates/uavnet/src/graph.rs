//! Disk-model network graph over ground users and UAVs.
//!
//! Link rules:
//! * ground <-> ground: exactly the scenario's discovered `ground_links`,
//! * ground <-> UAV: slant (3D) distance at the shared altitude within
//!   `a2g_range`,
//! * UAV <-> UAV: horizontal distance within `a2a_range`.
//!
//! All range comparisons are boundary-inclusive. Every undirected adjacency
//! appears as two antiparallel directed edges of equal capacity, so flow
//! problems can treat the edge list as a directed graph directly.
//!
//! Node ids: users occupy `0..n_users`, UAV `l` is node `n_users + l`. Edge
//! order is deterministic: ground edges first (sorted link order, low-to-high
//! then high-to-low), then air-to-ground (by user id, then UAV index), then
//! air-to-air (by UAV index pair).

use crate::plan::Placement;
use crate::scenario::Scenario;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Ground,
    AirToGround,
    AirToAir,
}

impl EdgeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeKind::Ground => "ground",
            EdgeKind::AirToGround => "a2g",
            EdgeKind::AirToAir => "a2a",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
    pub capacity: f64,
}

#[derive(Debug, Clone)]
pub struct NetworkGraph {
    pub n_users: usize,
    pub n_uavs: usize,
    pub edges: Vec<Edge>,
    /// Outgoing edge indices per node, in global edge order.
    pub out_edges: Vec<Vec<usize>>,
    /// Incoming edge indices per node, in global edge order.
    pub in_edges: Vec<Vec<usize>>,
}

/// Node subset selector for component queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeFilter {
    All,
    UsersOnly,
    UavsOnly,
}

impl NodeFilter {
    fn admits(&self, node: NodeId, n_users: usize) -> bool {
        match self {
            NodeFilter::All => true,
            NodeFilter::UsersOnly => node < n_users,
            NodeFilter::UavsOnly => node >= n_users,
        }
    }
}

impl NetworkGraph {
    pub fn n_nodes(&self) -> usize {
        self.n_users + self.n_uavs
    }

    pub fn is_uav_node(&self, node: NodeId) -> bool {
        node >= self.n_users
    }

    pub fn uav_node(&self, l: usize) -> NodeId {
        self.n_users + l
    }

    /// Connected components of the undirected view, restricted to the nodes
    /// admitted by `filter`. Components are sorted by their smallest member
    /// and members are ascending, so output order is deterministic.
    pub fn connected_components(&self, filter: NodeFilter) -> Vec<Vec<NodeId>> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        for start in 0..n {
            if seen[start] || !filter.admits(start, self.n_users) {
                continue;
            }
            let mut queue = std::collections::VecDeque::from([start]);
            seen[start] = true;
            let mut members = Vec::new();
            while let Some(v) = queue.pop_front() {
                members.push(v);
                // Antiparallel edges make out-neighbours sufficient.
                for &e in &self.out_edges[v] {
                    let w = self.edges[e].to;
                    if !seen[w] && filter.admits(w, self.n_users) {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        components.sort_by_key(|c| c[0]);
        components
    }

    fn push_pair(&mut self, a: NodeId, b: NodeId, kind: EdgeKind, capacity: f64) {
        for (from, to) in [(a, b), (b, a)] {
            let idx = self.edges.len();
            self.edges.push(Edge { from, to, kind, capacity });
            self.out_edges[from].push(idx);
            self.in_edges[to].push(idx);
        }
    }
}

/// Assemble the combined graph for a scenario and an optional placement.
/// Without a placement the graph is the bare ground network.
pub fn build_graph(scenario: &Scenario, placement: Option<&Placement>) -> NetworkGraph {
    let params = &scenario.params;
    let n_users = scenario.n_users();
    let n_uavs = placement.map_or(0, |p| p.uavs.len());
    let n = n_users + n_uavs;
    let mut g = NetworkGraph {
        n_users,
        n_uavs,
        edges: Vec::new(),
        out_edges: vec![Vec::new(); n],
        in_edges: vec![Vec::new(); n],
    };

    for &(i, j) in &scenario.ground_links {
        g.push_pair(i, j, EdgeKind::Ground, params.ground_capacity);
    }

    if let Some(plan) = placement {
        for (gu, user) in scenario.users.iter().enumerate() {
            for (l, uav) in plan.uavs.iter().enumerate() {
                if user.pos.dist_3d(&uav.pos, plan.altitude) <= params.a2g_range {
                    g.push_pair(gu, g.uav_node(l), EdgeKind::AirToGround, params.a2g_capacity);
                }
            }
        }
        for l in 0..plan.uavs.len() {
            for m in (l + 1)..plan.uavs.len() {
                if plan.uavs[l].pos.dist(&plan.uavs[m].pos) <= params.a2a_range {
                    g.push_pair(g.uav_node(l), g.uav_node(m), EdgeKind::AirToAir, params.a2a_capacity);
                }
            }
        }
    }

    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::params::Params;
    use crate::plan::Uav;
    use crate::scenario::Demand;

    fn scenario_with(positions: Vec<Point>, links: Vec<(usize, usize)>) -> Scenario {
        let demand = vec![Demand { src: 0, dst: positions.len() - 1, kbps: 100.0 }];
        Scenario::new(positions, links, demand, Params::default()).unwrap()
    }

    fn place(uavs: Vec<(f64, f64, bool)>, association: Vec<usize>) -> Placement {
        Placement {
            uavs: uavs
                .into_iter()
                .map(|(x, y, r)| Uav { pos: Point::new(x, y), is_relay: r })
                .collect(),
            altitude: 100.0,
            association,
            merge_log: vec![],
            meta: None,
        }
    }

    /// Slant range check: a user 290 m from the UAV's ground projection at
    /// altitude 100 sits sqrt(290^2 + 100^2) = 306.757... m away, beyond the
    /// 300 m a2g range, so no link forms even though 290 < 300 horizontally.
    #[test]
    fn slant_distance_decides_a2g() {
        let s = scenario_with(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)], vec![(0, 1)]);
        let p = place(vec![(290.0, 0.0, false)], vec![0, 0]);
        assert!((290.0f64 * 290.0 + 100.0 * 100.0).sqrt() > 300.0);
        let g = build_graph(&s, Some(&p));
        assert!(g.edges.iter().all(|e| e.kind != EdgeKind::AirToGround));
    }

    /// Boundary inclusive: altitude 180 and horizontal offset 240 give an
    /// exact slant distance of 300 (a 3-4-5 triple scaled by 60).
    #[test]
    fn a2g_boundary_is_inclusive() {
        let mut s = scenario_with(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)], vec![(0, 1)]);
        s.params.altitude = 180.0;
        let mut p = place(vec![(240.0, 0.0, false)], vec![0, 0]);
        p.altitude = 180.0;
        let g = build_graph(&s, Some(&p));
        let a2g: Vec<_> = g.edges.iter().filter(|e| e.kind == EdgeKind::AirToGround).collect();
        // User 0 at exactly 300 m slant: linked. User 1 at 239 m horizontal: linked.
        assert_eq!(a2g.len(), 4);
    }

    #[test]
    fn a2a_uses_horizontal_distance() {
        let s = scenario_with(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)], vec![(0, 1)]);
        let p = place(vec![(0.0, 0.0, false), (500.0, 0.0, true)], vec![0, 0]);
        let g = build_graph(&s, Some(&p));
        assert!(g.edges.iter().any(|e| e.kind == EdgeKind::AirToAir));
        let p2 = place(vec![(0.0, 0.0, false), (500.1, 0.0, true)], vec![0, 0]);
        let g2 = build_graph(&s, Some(&p2));
        assert!(g2.edges.iter().all(|e| e.kind != EdgeKind::AirToAir));
    }

    #[test]
    fn edges_come_in_antiparallel_pairs_with_kind_capacities() {
        let s = scenario_with(
            vec![Point::new(0.0, 0.0), Point::new(50.0, 0.0), Point::new(900.0, 0.0)],
            vec![(0, 1)],
        );
        let p = place(vec![(25.0, 0.0, false), (900.0, 0.0, false)], vec![0, 0, 1]);
        let g = build_graph(&s, Some(&p));
        assert_eq!(g.edges.len() % 2, 0);
        for pair in g.edges.chunks(2) {
            assert_eq!(pair[0].from, pair[1].to);
            assert_eq!(pair[0].to, pair[1].from);
            assert_eq!(pair[0].capacity, pair[1].capacity);
            assert_eq!(pair[0].kind, pair[1].kind);
        }
        for e in &g.edges {
            let expect = match e.kind {
                EdgeKind::Ground => 2000.0,
                EdgeKind::AirToGround => 5000.0,
                EdgeKind::AirToAir => 20000.0,
            };
            assert_eq!(e.capacity, expect);
        }
    }

    #[test]
    fn components_respect_filter() {
        // Two ground islands; one UAV covers users 0 and 1, bridging them.
        let s = scenario_with(
            vec![Point::new(0.0, 0.0), Point::new(400.0, 0.0), Point::new(420.0, 0.0)],
            vec![(1, 2)],
        );
        let p = place(vec![(200.0, 0.0, false)], vec![0, 0, 0]);
        let g = build_graph(&s, Some(&p));
        let all = g.connected_components(NodeFilter::All);
        assert_eq!(all.len(), 1);
        let ground = g.connected_components(NodeFilter::UsersOnly);
        assert_eq!(ground, vec![vec![0], vec![1, 2]]);
        let air = g.connected_components(NodeFilter::UavsOnly);
        assert_eq!(air, vec![vec![3]]);
    }

    #[test]
    fn no_placement_means_ground_only() {
        let s = scenario_with(vec![Point::new(0.0, 0.0), Point::new(10.0, 0.0)], vec![(0, 1)]);
        let g = build_graph(&s, None);
        assert_eq!(g.n_uavs, 0);
        assert_eq!(g.edges.len(), 2);
        assert!(g.edges.iter().all(|e| e.kind == EdgeKind::Ground));
    }
}
