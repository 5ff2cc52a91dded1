//! Agents, constraints, conflicts, paths and cost accounting.

use std::collections::BTreeMap;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::time::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// An agent `(t^s, v^s, v^g)` plus where it currently is.
///
/// `current` is `None` while the agent waits in the garage (and after it has
/// disappeared at its goal).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agent {
    pub id: AgentId,
    pub start_time: Time,
    pub start: VertexId,
    pub goal: VertexId,
    pub current: Option<VertexId>,
}

impl Agent {
    pub fn new(id: u32, start_time: Time, start: VertexId, goal: VertexId) -> Agent {
        Agent {
            id: AgentId(id),
            start_time,
            start,
            goal,
            current: None,
        }
    }

    pub fn in_scene(&self) -> bool {
        self.current.is_some()
    }

    pub fn at(mut self, v: VertexId) -> Agent {
        self.current = Some(v);
        self
    }

    /// The vertex the search has to reach: `v^c` in scene, `v^s` in the garage.
    pub fn anchor(&self) -> VertexId {
        self.current.unwrap_or(self.start)
    }
}

/// A forbidden time-space event for one agent.
///
/// Ordering is the canonical one: vertex constraints before edge
/// constraints, then by time, then by vertex ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Constraint {
    /// Must not occupy `vertex` at `time`.
    Vertex { time: Time, vertex: VertexId },
    /// Must not traverse `from -> to` arriving at `time`.
    Edge {
        time: Time,
        from: VertexId,
        to: VertexId,
    },
}

impl Constraint {
    pub fn time(&self) -> Time {
        match *self {
            Constraint::Vertex { time, .. } | Constraint::Edge { time, .. } => time,
        }
    }

    pub fn validate(&self, graph: &Graph) -> Result<()> {
        match *self {
            Constraint::Vertex { vertex, .. } => graph.check(vertex),
            Constraint::Edge { from, to, .. } => {
                graph.check(from)?;
                graph.check(to)?;
                if graph.has_edge(from, to) {
                    Ok(())
                } else {
                    Err(Error::Usage(format!("edge constraint on missing edge {from}->{to}")))
                }
            }
        }
    }
}

/// Sorted, deduplicated constraints of one agent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConstraintSet {
    items: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Constraint> {
        self.items.iter()
    }

    /// Returns `false` if the constraint was already present.
    pub fn insert(&mut self, c: Constraint) -> bool {
        match self.items.binary_search(&c) {
            Ok(_) => false,
            Err(pos) => {
                self.items.insert(pos, c);
                true
            }
        }
    }

    pub fn with(&self, c: Constraint) -> ConstraintSet {
        let mut out = self.clone();
        out.insert(c);
        out
    }

    pub fn contains(&self, c: &Constraint) -> bool {
        self.items.binary_search(c).is_ok()
    }

    pub fn is_subset_of(&self, other: &ConstraintSet) -> bool {
        self.items.iter().all(|c| other.contains(c))
    }

    /// Constraints that can still matter from time `t` on.
    pub fn from_time(&self, t: Time) -> ConstraintSet {
        ConstraintSet {
            items: self.items.iter().copied().filter(|c| c.time() >= t).collect(),
        }
    }

    /// Length-prefixed little-endian encoding of the sorted constraints.
    /// Two sets holding the same constraints always produce the same key.
    pub fn canonical_key(&self) -> Vec<u8> {
        let mut key = Vec::with_capacity(4 + self.items.len() * 13);
        key.extend_from_slice(&(self.items.len() as u32).to_le_bytes());
        for c in &self.items {
            match *c {
                Constraint::Vertex { time, vertex } => {
                    key.push(0);
                    key.extend_from_slice(&time.to_le_bytes());
                    key.extend_from_slice(&vertex.0.to_le_bytes());
                }
                Constraint::Edge { time, from, to } => {
                    key.push(1);
                    key.extend_from_slice(&time.to_le_bytes());
                    key.extend_from_slice(&from.0.to_le_bytes());
                    key.extend_from_slice(&to.0.to_le_bytes());
                }
            }
        }
        key
    }
}

impl FromIterator<Constraint> for ConstraintSet {
    fn from_iter<I: IntoIterator<Item = Constraint>>(iter: I) -> Self {
        let mut items: Vec<Constraint> = iter.into_iter().collect();
        items.sort_unstable();
        items.dedup();
        ConstraintSet { items }
    }
}

/// Lookup tables over a [`ConstraintSet`] for the searches.
#[derive(Debug, Clone, Default)]
pub struct ConstraintIndex {
    vertex: FxHashMap<VertexId, Vec<Time>>,
    edge: FxHashMap<(VertexId, VertexId), Vec<Time>>,
    max_time: Option<Time>,
}

impl ConstraintIndex {
    pub fn new(set: &ConstraintSet) -> Self {
        let mut idx = ConstraintIndex::default();
        // Set iteration is sorted by time within each kind, so the per-key
        // vectors come out sorted.
        for c in set.iter() {
            match *c {
                Constraint::Vertex { time, vertex } => {
                    idx.vertex.entry(vertex).or_default().push(time)
                }
                Constraint::Edge { time, from, to } => {
                    idx.edge.entry((from, to)).or_default().push(time)
                }
            }
            idx.max_time = Some(idx.max_time.map_or(c.time(), |m| m.max(c.time())));
        }
        idx
    }

    /// Sorted times at which `v` is forbidden.
    #[inline]
    pub fn vertex_times(&self, v: VertexId) -> &[Time] {
        self.vertex.get(&v).map_or(&[], Vec::as_slice)
    }

    /// Sorted arrival times at which `from -> to` is forbidden.
    #[inline]
    pub fn edge_times(&self, from: VertexId, to: VertexId) -> &[Time] {
        if self.edge.is_empty() {
            return &[];
        }
        self.edge.get(&(from, to)).map_or(&[], Vec::as_slice)
    }

    #[inline]
    pub fn vertex_blocked(&self, v: VertexId, t: Time) -> bool {
        self.vertex.get(&v).is_some_and(|ts| ts.binary_search(&t).is_ok())
    }

    #[inline]
    pub fn edge_blocked(&self, from: VertexId, to: VertexId, t: Time) -> bool {
        self.edge_times(from, to).binary_search(&t).is_ok()
    }

    /// Latest constrained time, if any constraint exists.
    pub fn max_time(&self) -> Option<Time> {
        self.max_time
    }
}

/// One vertex per time step, starting at `start_time`.
///
/// For a garage agent `start_time` is the entry time; the agent occupies
/// nothing before it. The agent disappears after the last vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    pub start_time: Time,
    pub vertices: Vec<VertexId>,
}

impl Path {
    pub fn new(start_time: Time, vertices: Vec<VertexId>) -> Path {
        assert!(!vertices.is_empty(), "path must hold at least one vertex");
        Path {
            start_time,
            vertices,
        }
    }

    pub fn arrival_time(&self) -> Time {
        self.start_time + self.vertices.len() as Time - 1
    }

    pub fn last(&self) -> VertexId {
        *self.vertices.last().expect("non-empty path")
    }

    /// Vertex occupied at `t`, or `None` before entry / after arrival.
    #[inline]
    pub fn at(&self, t: Time) -> Option<VertexId> {
        if t < self.start_time {
            return None;
        }
        self.vertices.get((t - self.start_time) as usize).copied()
    }

    /// Goal-arrival time minus `now`; garage waiting after `now` counts.
    pub fn cost(&self, now: Time) -> u64 {
        u64::from(self.arrival_time().saturating_sub(now))
    }

    /// Consecutive vertices are equal (wait) or joined by a forward edge.
    pub fn is_well_formed(&self, graph: &Graph) -> bool {
        self.vertices.iter().all(|v| graph.check(*v).is_ok())
            && self
                .vertices
                .windows(2)
                .all(|w| w[0] == w[1] || graph.has_edge(w[0], w[1]))
    }

    /// Whether the path from time `from` onward violates none of `cons`.
    pub fn satisfies_from(&self, cons: &ConstraintSet, from: Time) -> bool {
        cons.iter().all(|c| match *c {
            Constraint::Vertex { time, vertex } => time < from || self.at(time) != Some(vertex),
            Constraint::Edge { time, from: u, to: v } => {
                time <= from
                    || time <= self.start_time
                    || !(self.at(time - 1) == Some(u) && self.at(time) == Some(v))
            }
        })
    }

    pub fn satisfies(&self, cons: &ConstraintSet) -> bool {
        self.satisfies_from(cons, 0)
    }

    /// The part of the path from `t` on (garage waiting before entry stays
    /// implicit).
    pub fn suffix_from(&self, t: Time) -> Path {
        if t <= self.start_time {
            return self.clone();
        }
        let skip = ((t - self.start_time) as usize).min(self.vertices.len() - 1);
        Path::new(self.start_time + skip as Time, self.vertices[skip..].to_vec())
    }
}

/// The plans of all agents computed at one replanning time point.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanSnapshot {
    pub time: Time,
    pub paths: BTreeMap<AgentId, Arc<Path>>,
}

impl PlanSnapshot {
    pub fn as_slice_refs(&self) -> Vec<(AgentId, &Path)> {
        self.paths.iter().map(|(a, p)| (*a, p.as_ref())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConflictKind {
    Vertex(VertexId),
    /// The first agent moves `.0 -> .1`, the second `.1 -> .0`.
    Edge(VertexId, VertexId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Conflict {
    pub time: Time,
    pub agents: (AgentId, AgentId),
    pub kind: ConflictKind,
}

/// Earliest vertex or edge conflict among `paths`.
///
/// Agents occupy nothing before their path starts (garage) or after its
/// last vertex (disappeared at goal). Ties at one time go to the smaller
/// agent pair, then vertex before edge.
pub fn find_earliest_conflict(paths: &[(AgentId, &Path)]) -> Option<Conflict> {
    if paths.len() < 2 {
        return None;
    }
    let t_lo = paths.iter().map(|(_, p)| p.start_time).min()?;
    let t_hi = paths.iter().map(|(_, p)| p.arrival_time()).max()?;
    let mut occupied: FxHashMap<VertexId, AgentId> = FxHashMap::default();
    let mut moves: FxHashMap<(VertexId, VertexId), AgentId> = FxHashMap::default();
    for t in t_lo..=t_hi {
        occupied.clear();
        moves.clear();
        let mut best: Option<Conflict> = None;
        let mut consider = |c: Conflict| {
            if best.is_none_or(|b| (c.agents, c.kind) < (b.agents, b.kind)) {
                best = Some(c);
            }
        };
        for &(id, path) in paths {
            let Some(v) = path.at(t) else { continue };
            if let Some(&other) = occupied.get(&v) {
                consider(Conflict {
                    time: t,
                    agents: ordered(other, id),
                    kind: ConflictKind::Vertex(v),
                });
            } else {
                occupied.insert(v, id);
            }
            if t > path.start_time {
                let u = path.at(t - 1).expect("in scene at t-1");
                if u != v {
                    if let Some(&other) = moves.get(&(v, u)) {
                        let (a, b) = ordered(other, id);
                        let kind = if a == id {
                            ConflictKind::Edge(u, v)
                        } else {
                            ConflictKind::Edge(v, u)
                        };
                        consider(Conflict {
                            time: t,
                            agents: (a, b),
                            kind,
                        });
                    }
                    moves.insert((u, v), id);
                }
            }
        }
        // A third agent on an occupied vertex pairs with the first occupant
        // above; pairs among later occupants are found at the next CT level.
        if best.is_some() {
            return best;
        }
    }
    None
}

fn ordered(a: AgentId, b: AgentId) -> (AgentId, AgentId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Standard two-way split of a conflict into per-agent constraints.
pub fn split_conflict(c: &Conflict) -> [(AgentId, Constraint); 2] {
    let (a, b) = c.agents;
    match c.kind {
        ConflictKind::Vertex(v) => [
            (a, Constraint::Vertex { time: c.time, vertex: v }),
            (b, Constraint::Vertex { time: c.time, vertex: v }),
        ],
        ConflictKind::Edge(u, v) => [
            (a, Constraint::Edge { time: c.time, from: u, to: v }),
            (b, Constraint::Edge { time: c.time, from: v, to: u }),
        ],
    }
}

/// Sum of per-agent costs measured from `now`.
pub fn soc(plans: &[(&Agent, &Path)], now: Time) -> Result<u64> {
    let mut total = 0;
    for (agent, path) in plans {
        if path.last() != agent.goal {
            return Err(Error::Usage(format!(
                "path of {} ends at {} instead of its goal {}",
                agent.id,
                path.last(),
                agent.goal
            )));
        }
        total += path.cost(now);
    }
    Ok(total)
}

/// Spliced actual trajectories, one per agent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutePlan {
    pub trajectories: BTreeMap<AgentId, Path>,
}

impl ExecutePlan {
    /// Keeps everything strictly before `now` and continues with `plan`.
    pub fn splice(&mut self, agent: AgentId, now: Time, plan: &Path) {
        let next = match self.trajectories.get(&agent) {
            Some(old) if old.start_time < now && plan.start_time == now => {
                let keep = (now - old.start_time) as usize;
                let mut vertices = old.vertices[..keep.min(old.vertices.len())].to_vec();
                vertices.extend_from_slice(&plan.vertices);
                Path::new(old.start_time, vertices)
            }
            _ => plan.clone(),
        };
        self.trajectories.insert(agent, next);
    }

    /// Rebuilds the execute plan from the per-iteration snapshots.
    pub fn replay<'a>(snapshots: impl IntoIterator<Item = &'a PlanSnapshot>) -> ExecutePlan {
        let mut ex = ExecutePlan::default();
        for snap in snapshots {
            for (agent, path) in &snap.paths {
                ex.splice(*agent, snap.time, path);
            }
        }
        ex
    }

    pub fn entry_time(&self, agent: AgentId) -> Option<Time> {
        self.trajectories.get(&agent).map(|p| p.start_time)
    }

    pub fn arrival_time(&self, agent: AgentId) -> Option<Time> {
        self.trajectories.get(&agent).map(Path::arrival_time)
    }

    pub fn audit(&self) -> Option<Conflict> {
        let refs: Vec<_> = self.trajectories.iter().map(|(a, p)| (*a, p)).collect();
        find_earliest_conflict(&refs)
    }
}
