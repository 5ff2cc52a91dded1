//! Brute-force reference solvers over explicit time-expanded graphs.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::model::{Agent, ConstraintIndex};
use crate::time::Time;

/// Smallest horizon (absolute time) the single-agent oracle accepts.
pub fn min_horizon(graph: &Graph, cons: &ConstraintIndex, now: Time) -> Time {
    cons.max_time().unwrap_or(0).max(now) + graph.num_vertices() as Time + 1
}

/// Optimal cost `arrival - now` for one agent, by layered BFS over
/// `(t, v)` for `t` in `now..=horizon`. A garage agent may enter at its
/// start vertex at any unconstrained time `t >= now`.
pub fn oracle_time_expanded(
    graph: &Graph,
    agent: &Agent,
    cons: &ConstraintIndex,
    now: Time,
    horizon: Time,
) -> Result<Option<u64>> {
    let need = min_horizon(graph, cons, now);
    if horizon < need {
        return Err(Error::Usage(format!("oracle horizon {horizon} below {need}")));
    }
    let n = graph.num_vertices();
    let mut layer = vec![false; n];
    if let Some(v) = agent.current {
        if cons.vertex_blocked(v, now) {
            return Ok(None);
        }
        layer[v.index()] = true;
    }
    let mut next = vec![false; n];
    for t in now..=horizon {
        if !agent.in_scene() && !cons.vertex_blocked(agent.start, t) {
            layer[agent.start.index()] = true;
        }
        if layer[agent.goal.index()] {
            return Ok(Some(u64::from(t - now)));
        }
        next.iter_mut().for_each(|x| *x = false);
        for u in 0..n {
            if !layer[u] {
                continue;
            }
            let u = VertexId(u as u32);
            if !cons.vertex_blocked(u, t + 1) {
                next[u.index()] = true;
            }
            for &w in graph.successors(u) {
                if !cons.vertex_blocked(w, t + 1) && !cons.edge_blocked(u, w, t + 1) {
                    next[w.index()] = true;
                }
            }
        }
        std::mem::swap(&mut layer, &mut next);
    }
    Ok(None)
}

/// Shortest constrained time from TS state `(t, v)` to `goal`.
pub fn oracle_distance_to_goal(
    graph: &Graph,
    v: VertexId,
    t: Time,
    goal: VertexId,
    cons: &ConstraintIndex,
) -> Option<u64> {
    let probe = Agent::new(u32::MAX, t, v, goal).at(v);
    oracle_time_expanded(graph, &probe, cons, t, min_horizon(graph, cons, t))
        .expect("horizon chosen by min_horizon")
}

pub const JOINT_MAX_AGENTS: usize = 3;
pub const JOINT_MAX_VERTICES: usize = 9;
pub const JOINT_MAX_HORIZON: Time = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Slot {
    Garage,
    At(u32),
    Done,
}

/// Minimal sum of costs for all agents together, by Dijkstra over joint
/// states `(t, slots)` with `t <= now + horizon`.
///
/// Agents are garage-resident or at `current` at `now`; `blocked` lists
/// vertex-time pairs nobody may occupy. Each step costs the number of
/// agents not yet at their goal.
pub fn oracle_joint_bfs(
    graph: &Graph,
    agents: &[Agent],
    blocked: &[(VertexId, Time)],
    now: Time,
    horizon: Time,
) -> Result<Option<u64>> {
    if agents.len() > JOINT_MAX_AGENTS
        || graph.num_vertices() > JOINT_MAX_VERTICES
        || horizon > JOINT_MAX_HORIZON
    {
        return Err(Error::Usage(format!(
            "joint oracle limited to {JOINT_MAX_AGENTS} agents, {JOINT_MAX_VERTICES} vertices, horizon {JOINT_MAX_HORIZON}"
        )));
    }
    let is_blocked = |v: u32, t: Time| blocked.contains(&(VertexId(v), t));
    let finished = |i: usize, s: Slot| match s {
        Slot::Done => true,
        Slot::At(v) => v == agents[i].goal.0,
        Slot::Garage => false,
    };

    // Initial slots: in-scene agents are placed, garage agents may enter now.
    let mut options: Vec<Vec<Slot>> = Vec::new();
    for a in agents {
        options.push(match a.current {
            Some(v) => vec![Slot::At(v.0)],
            None => vec![Slot::Garage, Slot::At(a.start.0)],
        });
    }
    let mut heap = BinaryHeap::new();
    let mut best: FxHashMap<(Time, Vec<Slot>), u64> = FxHashMap::default();
    for combo in product(&options) {
        if valid_layer(&combo, &combo, now, &is_blocked, true) {
            best.insert((now, combo.clone()), 0);
            heap.push(Reverse((0u64, now, combo)));
        }
    }

    while let Some(Reverse((cost, t, slots))) = heap.pop() {
        if best.get(&(t, slots.clone())).is_some_and(|&c| c < cost) {
            continue;
        }
        if (0..slots.len()).all(|i| finished(i, slots[i])) {
            return Ok(Some(cost));
        }
        if t >= now + horizon {
            continue;
        }
        let step = (0..slots.len()).filter(|&i| !finished(i, slots[i])).count() as u64;
        let moves: Vec<Vec<Slot>> = slots
            .iter()
            .enumerate()
            .map(|(i, &s)| match s {
                Slot::Done => vec![Slot::Done],
                Slot::At(v) if v == agents[i].goal.0 => vec![Slot::Done],
                Slot::Garage => vec![Slot::Garage, Slot::At(agents[i].start.0)],
                Slot::At(v) => std::iter::once(Slot::At(v))
                    .chain(graph.successors(VertexId(v)).iter().map(|w| Slot::At(w.0)))
                    .collect(),
            })
            .collect();
        for next in product(&moves) {
            if !valid_layer(&slots, &next, t + 1, &is_blocked, false) {
                continue;
            }
            let c = cost + step;
            let key = (t + 1, next);
            if best.get(&key).is_none_or(|&old| c < old) {
                best.insert(key.clone(), c);
                heap.push(Reverse((c, key.0, key.1)));
            }
        }
    }
    Ok(None)
}

fn valid_layer(
    prev: &[Slot],
    next: &[Slot],
    t: Time,
    is_blocked: &impl Fn(u32, Time) -> bool,
    initial: bool,
) -> bool {
    for i in 0..next.len() {
        let Slot::At(v) = next[i] else { continue };
        if is_blocked(v, t) {
            return false;
        }
        for j in i + 1..next.len() {
            if next[j] == Slot::At(v) {
                return false;
            }
            if initial {
                continue;
            }
            if let (Slot::At(pi), Slot::At(pj), Slot::At(nj)) = (prev[i], prev[j], next[j]) {
                if pi == nj && pj == v && pi != v {
                    return false;
                }
            }
        }
    }
    true
}

fn product(options: &[Vec<Slot>]) -> Vec<Vec<Slot>> {
    let mut out = vec![Vec::with_capacity(options.len())];
    for opts in options {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                opts.iter().map(move |&o| {
                    let mut p = prefix.clone();
                    p.push(o);
                    p
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GridMap;
    use crate::model::{Constraint, ConstraintSet};

    fn corridor(n: u32) -> Graph {
        let mut edges = Vec::new();
        for i in 0..n - 1 {
            edges.push((i, i + 1));
            edges.push((i + 1, i));
        }
        Graph::from_edges(n as usize, &edges).unwrap()
    }

    fn idx(cs: &[Constraint]) -> ConstraintIndex {
        ConstraintIndex::new(&cs.iter().copied().collect::<ConstraintSet>())
    }

    #[test]
    fn corridor_costs() {
        let g = corridor(4);
        let a = Agent::new(0, 0, VertexId(0), VertexId(3)).at(VertexId(0));
        let none = idx(&[]);
        assert_eq!(oracle_time_expanded(&g, &a, &none, 0, 10).unwrap(), Some(3));
        let c = idx(&[Constraint::Vertex { time: 1, vertex: VertexId(1) }]);
        assert_eq!(oracle_time_expanded(&g, &a, &c, 0, 10).unwrap(), Some(4));
    }

    #[test]
    fn garage_waits_for_start() {
        let g = corridor(4);
        let a = Agent::new(0, 0, VertexId(0), VertexId(3));
        let c = idx(&[
            Constraint::Vertex { time: 0, vertex: VertexId(0) },
            Constraint::Vertex { time: 1, vertex: VertexId(0) },
        ]);
        assert_eq!(oracle_time_expanded(&g, &a, &c, 0, 10).unwrap(), Some(2 + 3));
    }

    #[test]
    fn short_horizon_rejected() {
        let g = corridor(4);
        let a = Agent::new(0, 0, VertexId(0), VertexId(3));
        let c = idx(&[Constraint::Vertex { time: 6, vertex: VertexId(0) }]);
        assert!(oracle_time_expanded(&g, &a, &c, 0, 10).is_err());
        assert!(oracle_time_expanded(&g, &a, &c, 0, 11).is_ok());
    }

    #[test]
    fn edge_constraint_forces_wait() {
        let g = corridor(3);
        let a = Agent::new(0, 0, VertexId(0), VertexId(2)).at(VertexId(0));
        let c = idx(&[Constraint::Edge { time: 1, from: VertexId(0), to: VertexId(1) }]);
        assert_eq!(oracle_time_expanded(&g, &a, &c, 0, 10).unwrap(), Some(3));
    }

    #[test]
    fn joint_disjoint_corridors_sum() {
        let g = GridMap::from_rows(&["...", "@@@", "..."]).unwrap().to_graph();
        let a = Agent::new(0, 0, g.vertex_at(0, 0).unwrap(), g.vertex_at(2, 0).unwrap());
        let b = Agent::new(1, 0, g.vertex_at(2, 2).unwrap(), g.vertex_at(0, 2).unwrap());
        assert_eq!(oracle_joint_bfs(&g, &[a, b], &[], 0, 12).unwrap(), Some(4));
    }

    #[test]
    fn joint_swap_with_nook_costs_more() {
        // row 0: corridor of 4, row 1: nook under column 1
        let g = GridMap::from_rows(&["....", "@.@@"]).unwrap().to_graph();
        let left = g.vertex_at(0, 0).unwrap();
        let right = g.vertex_at(3, 0).unwrap();
        let a = Agent::new(0, 0, left, right).at(left);
        let b = Agent::new(1, 0, right, left).at(right);
        let joint = oracle_joint_bfs(&g, &[a, b], &[], 0, 12).unwrap().unwrap();
        assert!(joint > 6, "joint optimum {joint}");
    }

    #[test]
    fn joint_rejects_large_instances() {
        let g = corridor(10);
        let a = Agent::new(0, 0, VertexId(0), VertexId(9));
        assert!(oracle_joint_bfs(&g, &[a], &[], 0, 12).is_err());
        let g = corridor(3);
        let a = Agent::new(0, 0, VertexId(0), VertexId(2));
        assert!(oracle_joint_bfs(&g, &[a], &[], 0, 13).is_err());
    }

    #[test]
    fn joint_goal_at_now_is_free() {
        let g = corridor(3);
        let a = Agent::new(0, 0, VertexId(0), VertexId(2)).at(VertexId(2));
        assert_eq!(oracle_joint_bfs(&g, &[a], &[], 4, 12).unwrap(), Some(0));
    }

    #[test]
    fn joint_blocked_entry() {
        let g = corridor(3);
        let a = Agent::new(0, 0, VertexId(0), VertexId(2));
        let blocked = [(VertexId(0), 0)];
        assert_eq!(oracle_joint_bfs(&g, &[a], &blocked, 0, 12).unwrap(), Some(3));
    }
}
