//! Random graphs, constraints and instances shared by the integration tests.
#![allow(dead_code)]

use omapf::model::ConstraintIndex;
use omapf::{Agent, Constraint, ConstraintSet, Graph, GridMap, HeuristicKind, OnlineInstance, Path, VertexId};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Grid with random blocked cells; may be disconnected.
pub fn random_grid(rng: &mut ChaCha8Rng, width: u32, height: u32, density: f64) -> Graph {
    loop {
        let mut map = GridMap::open(width, height);
        for y in 0..height {
            for x in 0..width {
                if rng.gen_bool(density) {
                    map.set_blocked(x, y, true);
                }
            }
        }
        if map.free_cells() >= 2 {
            return map.to_graph();
        }
    }
}

/// Sparse directed graph; about half the arcs have a reverse twin.
pub fn random_digraph(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for _ in 0..rng.gen_range(1..=3) {
            let w = rng.gen_range(0..n as u32);
            if w == u {
                continue;
            }
            edges.push((u, w));
            if rng.gen_bool(0.5) {
                edges.push((w, u));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Graph::from_edges(n, &edges).expect("valid digraph")
}

/// A grid of at most 7x7 or a digraph of at most 49 vertices, with the
/// heuristic it supports.
pub fn random_graph(rng: &mut ChaCha8Rng) -> (Graph, HeuristicKind) {
    if rng.gen_bool(0.5) {
        let w = rng.gen_range(2..=7);
        let h = rng.gen_range(1..=7);
        let density = rng.gen_range(0.0..0.3);
        (random_grid(rng, w, h, density), HeuristicKind::Manhattan)
    } else {
        let n = rng.gen_range(2..=49);
        (random_digraph(rng, n), HeuristicKind::Exact)
    }
}

pub fn random_vertex(rng: &mut ChaCha8Rng, graph: &Graph) -> VertexId {
    VertexId(rng.gen_range(0..graph.num_vertices() as u32))
}

/// Up to `max_vertex` vertex and `max_edge` edge constraints with times
/// around `now`; some fall before it.
pub fn random_constraints(
    rng: &mut ChaCha8Rng,
    graph: &Graph,
    now: u32,
    max_vertex: usize,
    max_edge: usize,
) -> ConstraintSet {
    let mut set = ConstraintSet::new();
    let lo = now.saturating_sub(2);
    let hi = now + 12;
    for _ in 0..rng.gen_range(0..=max_vertex) {
        set.insert(Constraint::Vertex {
            time: rng.gen_range(lo..=hi),
            vertex: random_vertex(rng, graph),
        });
    }
    for _ in 0..rng.gen_range(0..=max_edge) {
        let from = random_vertex(rng, graph);
        let Some(&to) = graph.successors(from).choose(rng) else { continue };
        set.insert(Constraint::Edge {
            time: rng.gen_range(lo.max(1)..=hi),
            from,
            to,
        });
    }
    set
}

/// An agent planned at `now`: in the scene at a random vertex, or in the
/// garage with a start time at or before `now`.
pub fn random_agent(rng: &mut ChaCha8Rng, graph: &Graph, now: u32) -> Agent {
    let goal = random_vertex(rng, graph);
    let other = |rng: &mut ChaCha8Rng| loop {
        let v = random_vertex(rng, graph);
        if v != goal {
            return v;
        }
    };
    let start = other(rng);
    if rng.gen_bool(0.5) {
        let current = other(rng);
        Agent::new(0, now.saturating_sub(rng.gen_range(0..4)), start, goal).at(current)
    } else {
        Agent::new(0, now.saturating_sub(rng.gen_range(0..3)), start, goal)
    }
}

fn random_agents(rng: &mut ChaCha8Rng, graph: &Graph, k: usize, waves: &[u32]) -> Vec<Agent> {
    (0..k)
        .map(|i| {
            let start = random_vertex(rng, graph);
            let goal = loop {
                let g = random_vertex(rng, graph);
                if g != start {
                    break g;
                }
            };
            Agent::new(i as u32, *waves.choose(rng).expect("a wave"), start, goal)
        })
        .collect()
}

/// Strongly connected stand-in: every free grid cell reaches every other.
fn connected(graph: &Graph) -> bool {
    graph.distances_from(VertexId(0)).iter().all(|&d| d != omapf::time::INF)
}

/// At most 9 cells, 1 to 3 agents, 1 or 2 arrival waves.
pub fn tiny_instance(rng: &mut ChaCha8Rng, id: usize) -> OnlineInstance {
    let graph = loop {
        let (w, h) = *[(3, 3), (2, 4), (4, 2), (3, 2), (2, 3), (2, 2)].choose(rng).expect("shape");
        let g = random_grid(rng, w, h, 0.12);
        if g.num_vertices() >= 3 && connected(&g) {
            break g;
        }
    };
    let first = rng.gen_range(0..3);
    let waves: Vec<u32> = if rng.gen_bool(0.5) { vec![first] } else { vec![first, first + rng.gen_range(1..4)] };
    let k = rng.gen_range(1..=3);
    let agents = random_agents(rng, &graph, k, &waves);
    OnlineInstance::new(format!("tiny{id:04}"), graph, agents).expect("valid tiny instance")
}

/// An 8x8 grid with a few obstacles and 2 to 6 agents arriving over time.
pub fn medium_instance(rng: &mut ChaCha8Rng, id: usize) -> OnlineInstance {
    let graph = loop {
        let g = random_grid(rng, 8, 8, 0.1);
        if connected(&g) {
            break g;
        }
    };
    let waves: Vec<u32> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..10)).collect();
    let k = rng.gen_range(2..=6);
    let agents = random_agents(rng, &graph, k, &waves);
    OnlineInstance::new(format!("medium{id:04}"), graph, agents).expect("valid medium instance")
}

/// Checks that `path` is a legal plan for `agent` from `now` under `cons`.
pub fn check_path(graph: &Graph, agent: &Agent, cons: &ConstraintSet, now: u32, path: &Path) -> Result<(), String> {
    if !path.is_well_formed(graph) {
        return Err(format!("path {:?} uses a missing edge", path.vertices));
    }
    if path.last() != agent.goal {
        return Err("path does not end at the goal".into());
    }
    match agent.current {
        Some(v) if path.at(now) != Some(v) => return Err(format!("path is not at {v} at {now}")),
        None if path.start_time < now || path.vertices[0] != agent.start => {
            return Err("garage agent must enter at its start vertex no earlier than now".into())
        }
        _ => {}
    }
    if !path.satisfies_from(cons, now) {
        return Err("path violates a constraint".into());
    }
    let idx = ConstraintIndex::new(cons);
    let from = path.start_time.max(now);
    if (from..=path.arrival_time()).any(|t| path.at(t).is_some_and(|v| idx.vertex_blocked(v, t))) {
        return Err("path occupies a blocked vertex".into());
    }
    Ok(())
}
