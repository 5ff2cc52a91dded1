//! Solver variants A1-A4 and their low-level planners.
//!
//! * A1: conflict tree + forward A* over `(time, vertex)` states.
//! * A2: conflict tree + backward interval search with a fresh context per call.
//! * A3: A2, but an agent keeps the rest of its previous path when that is
//!   still valid and optimal.
//! * A4: A2 with planning contexts stored and reused across calls.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::context_store::PlanningContext;
use crate::error::{Error, Result};
use crate::graph::{Graph, HeuristicKind, VertexHeuristic, VertexId};
use crate::model::{Agent, AgentId, ConstraintIndex, ConstraintSet, Path};
use crate::scbs::{LowLevelPlanner, LowLevelStats, PlanRequest};
use crate::srsipp::{cost_bound, srsipp_search, SearchContext, SearchOutcome, SearchParams};
use crate::time::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    A1,
    A2,
    A3,
    A4,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::A1, Variant::A2, Variant::A3, Variant::A4];

    pub fn name(self) -> &'static str {
        match self {
            Variant::A1 => "A1",
            Variant::A2 => "A2",
            Variant::A3 => "A3",
            Variant::A4 => "A4",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a1" => Ok(Variant::A1),
            "a2" => Ok(Variant::A2),
            "a3" => Ok(Variant::A3),
            "a4" => Ok(Variant::A4),
            _ => Err(Error::Usage(format!("unknown solver '{s}' (expected a1, a2, a3 or a4)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub variant: Variant,
    pub heuristic: HeuristicKind,
    /// Wall-clock limit for a whole online run, in seconds.
    pub time_limit: f64,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(variant: Variant) -> Self {
        SolverConfig {
            variant,
            heuristic: HeuristicKind::Manhattan,
            time_limit: 30.0,
            seed: 0,
        }
    }

    pub fn time_limit(&self) -> Option<Duration> {
        (self.time_limit.is_finite() && self.time_limit > 0.0).then(|| Duration::from_secs_f64(self.time_limit))
    }

    pub fn planner(&self) -> Box<dyn LowLevelPlanner + Send> {
        match self.variant {
            Variant::A1 => Box::new(AstarPlanner::new(self.heuristic)),
            Variant::A2 => Box::new(RsippPlanner::new(self.heuristic)),
            Variant::A3 => Box::new(ShortcutPlanner::new(self.heuristic)),
            Variant::A4 => Box::new(ReusePlanner::new(self.heuristic)),
        }
    }
}

/// Exact-distance tables, computed once per vertex.
#[derive(Debug, Clone)]
pub struct HeuristicCache {
    kind: HeuristicKind,
    from: FxHashMap<VertexId, Arc<Vec<u32>>>,
    to: FxHashMap<VertexId, Arc<Vec<u32>>>,
}

impl HeuristicCache {
    pub fn new(kind: HeuristicKind) -> Self {
        HeuristicCache {
            kind,
            from: FxHashMap::default(),
            to: FxHashMap::default(),
        }
    }

    /// Lower bound on the distance from `source` to each vertex.
    pub fn from_source<'g>(&mut self, graph: &'g Graph, source: VertexId) -> VertexHeuristic<'g> {
        match self.kind {
            HeuristicKind::Manhattan if graph.is_grid() => VertexHeuristic::Manhattan { graph, target: source },
            _ => VertexHeuristic::Table(
                self.from
                    .entry(source)
                    .or_insert_with(|| Arc::new(graph.distances_from(source)))
                    .clone(),
            ),
        }
    }

    /// Lower bound on the distance from each vertex to `target`.
    pub fn to_target<'g>(&mut self, graph: &'g Graph, target: VertexId) -> VertexHeuristic<'g> {
        match self.kind {
            HeuristicKind::Manhattan if graph.is_grid() => VertexHeuristic::Manhattan { graph, target },
            _ => VertexHeuristic::Table(
                self.to
                    .entry(target)
                    .or_insert_with(|| Arc::new(graph.exact_h(target)))
                    .clone(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstarOutcome {
    pub path: Option<Path>,
    pub expansions: u64,
}

const GARAGE: u32 = u32::MAX;

/// Forward A* over `(time, vertex)` states from `(now, v^c)`, or from a
/// virtual garage node for agents that have not entered yet.
///
/// Ties on `f` go to the larger `g`.
pub fn astar_ts(
    graph: &Graph,
    agent: &Agent,
    cons: &ConstraintIndex,
    now: Time,
    h: &VertexHeuristic,
    deadline: Option<Instant>,
) -> Result<AstarOutcome> {
    let mut out = AstarOutcome {
        path: None,
        expansions: 0,
    };
    let bound = cost_bound(graph, cons, now);
    let h_of = |v: u32| u64::from(h.eval(VertexId(if v == GARAGE { agent.start.0 } else { v })));
    // (f, Reverse(g)) min-heap keyed by (time, vertex)
    let mut open: BinaryHeap<Reverse<(u64, Reverse<u64>, Time, u32)>> = BinaryHeap::new();
    let mut parent: FxHashMap<(Time, u32), (Time, u32)> = FxHashMap::default();
    let mut closed: FxHashSet<(Time, u32)> = FxHashSet::default();
    let root = match agent.current {
        Some(v) if cons.vertex_blocked(v, now) => return Ok(out),
        Some(v) => v.0,
        None => GARAGE,
    };
    open.push(Reverse((h_of(root), Reverse(0), now, root)));
    let push = |open: &mut BinaryHeap<_>, parent: &mut FxHashMap<_, _>, from, t: Time, v: u32| {
        let g = u64::from(t - now);
        let f = g + h_of(v);
        if f > bound || parent.contains_key(&(t, v)) {
            return;
        }
        parent.insert((t, v), from);
        open.push(Reverse((f, Reverse(g), t, v)));
    };
    while let Some(Reverse((_, _, t, v))) = open.pop() {
        if !closed.insert((t, v)) {
            continue;
        }
        out.expansions += 1;
        if out.expansions % 1024 == 0 && deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(Error::Timeout);
        }
        if v == GARAGE {
            if !cons.vertex_blocked(agent.start, t) {
                push(&mut open, &mut parent, (t, v), t, agent.start.0);
            }
            push(&mut open, &mut parent, (t, v), t + 1, GARAGE);
            continue;
        }
        let u = VertexId(v);
        if u == agent.goal {
            out.path = Some(rebuild(&parent, (t, v), root));
            return Ok(out);
        }
        let t1 = t + 1;
        if !cons.vertex_blocked(u, t1) {
            push(&mut open, &mut parent, (t, v), t1, v);
        }
        for &w in graph.successors(u) {
            if !cons.vertex_blocked(w, t1) && !cons.edge_blocked(u, w, t1) {
                push(&mut open, &mut parent, (t, v), t1, w.0);
            }
        }
    }
    Ok(out)
}

fn rebuild(parent: &FxHashMap<(Time, u32), (Time, u32)>, end: (Time, u32), root: u32) -> Path {
    let mut rev = vec![end];
    let mut cur = end;
    while let Some(&p) = parent.get(&cur) {
        if p.1 == GARAGE {
            break;
        }
        rev.push(p);
        cur = p;
    }
    debug_assert!(root == GARAGE || rev.last().map(|x| x.1) == Some(root));
    rev.reverse();
    Path::new(rev[0].0, rev.into_iter().map(|(_, v)| VertexId(v)).collect())
}

/// Backward interval search on a fresh context.
pub fn rsipp(
    graph: &Graph,
    agent: &Agent,
    cons: &ConstraintIndex,
    now: Time,
    h: &VertexHeuristic,
    goal_floor: Option<&VertexHeuristic>,
    deadline: Option<Instant>,
) -> Result<SearchOutcome> {
    let mut ctx = SearchContext::new();
    srsipp_search(
        &mut ctx,
        &SearchParams {
            graph,
            agent,
            cons,
            now,
            h_v: h,
            goal_floor,
            deadline,
            run_to_exhaustion: false,
        },
    )
}

/// A1's low level.
pub struct AstarPlanner {
    cache: HeuristicCache,
    stats: LowLevelStats,
}

impl AstarPlanner {
    pub fn new(kind: HeuristicKind) -> Self {
        AstarPlanner {
            cache: HeuristicCache::new(kind),
            stats: LowLevelStats::default(),
        }
    }
}

impl LowLevelPlanner for AstarPlanner {
    fn plan(&mut self, req: &PlanRequest) -> Result<Option<Path>> {
        let h = self.cache.to_target(req.graph, req.agent.goal);
        let out = astar_ts(req.graph, req.agent, &ConstraintIndex::new(req.cons), req.now, &h, req.deadline)?;
        self.stats.calls += 1;
        self.stats.expansions += out.expansions;
        Ok(out.path)
    }

    fn stats(&self) -> LowLevelStats {
        self.stats
    }
}

/// A2's low level.
pub struct RsippPlanner {
    cache: HeuristicCache,
    stats: LowLevelStats,
}

impl RsippPlanner {
    pub fn new(kind: HeuristicKind) -> Self {
        RsippPlanner {
            cache: HeuristicCache::new(kind),
            stats: LowLevelStats::default(),
        }
    }
}

impl LowLevelPlanner for RsippPlanner {
    fn plan(&mut self, req: &PlanRequest) -> Result<Option<Path>> {
        let h = self.cache.from_source(req.graph, req.agent.anchor());
        let floor = self.cache.to_target(req.graph, req.agent.goal);
        let cons = ConstraintIndex::new(req.cons);
        let out = rsipp(req.graph, req.agent, &cons, req.now, &h, Some(&floor), req.deadline)?;
        self.stats.calls += 1;
        self.stats.expansions += out.expansions;
        Ok(out.path)
    }

    fn stats(&self) -> LowLevelStats {
        self.stats
    }
}

/// A3's low level: reuse the previous iteration's path when it is still
/// optimal, fall back to a fresh search otherwise.
pub struct ShortcutPlanner {
    inner: RsippPlanner,
    previous: BTreeMap<AgentId, (Arc<Path>, ConstraintSet)>,
    shortcuts: u64,
}

impl ShortcutPlanner {
    pub fn new(kind: HeuristicKind) -> Self {
        ShortcutPlanner {
            inner: RsippPlanner::new(kind),
            previous: BTreeMap::new(),
            shortcuts: 0,
        }
    }
}

/// The rest of `prev` from `now` if it can stand in for a fresh optimal
/// search under `cons`.
///
/// The old path was optimal under `prev_cons`. If every old constraint that
/// still matters is also in `cons`, the new optimum costs at least as much,
/// so a suffix that satisfies `cons` is optimal again.
pub fn a3_reuse_shortcut(
    prev: &Path,
    prev_cons: &ConstraintSet,
    agent: &Agent,
    cons: &ConstraintSet,
    now: Time,
) -> Option<Path> {
    if prev.last() != agent.goal || prev.arrival_time() < now {
        return None;
    }
    let suffix = match agent.current {
        Some(v) => {
            let s = prev.suffix_from(now);
            (s.start_time == now && s.vertices[0] == v).then_some(s)?
        }
        None => (prev.start_time >= now).then(|| prev.clone())?,
    };
    (prev_cons.from_time(now).is_subset_of(cons) && suffix.satisfies_from(cons, now)).then_some(suffix)
}

impl LowLevelPlanner for ShortcutPlanner {
    fn plan(&mut self, req: &PlanRequest) -> Result<Option<Path>> {
        if let Some((prev, prev_cons)) = self.previous.get(&req.agent.id) {
            if let Some(p) = a3_reuse_shortcut(prev, prev_cons, req.agent, req.cons, req.now) {
                self.shortcuts += 1;
                return Ok(Some(p));
            }
        }
        self.inner.plan(req)
    }

    fn stats(&self) -> LowLevelStats {
        LowLevelStats {
            shortcuts: self.shortcuts,
            ..self.inner.stats()
        }
    }

    fn end_iteration(&mut self, _now: Time, plans: &[(AgentId, Arc<Path>, Arc<ConstraintSet>)]) {
        self.previous = plans
            .iter()
            .map(|(a, p, c)| (*a, (p.clone(), c.as_ref().clone())))
            .collect();
    }

    fn forget_agent(&mut self, agent: AgentId) {
        self.previous.remove(&agent);
    }
}

/// A4's low level: backward search resumed from the stored planning context.
pub struct ReusePlanner {
    cache: HeuristicCache,
    store: PlanningContext,
    stats: LowLevelStats,
    /// Latest `now` the store was purged for.
    purged_at: Time,
}

impl ReusePlanner {
    pub fn new(kind: HeuristicKind) -> Self {
        Self::with_store(kind, PlanningContext::new())
    }

    pub fn with_store(kind: HeuristicKind, store: PlanningContext) -> Self {
        ReusePlanner {
            cache: HeuristicCache::new(kind),
            store,
            stats: LowLevelStats::default(),
            purged_at: 0,
        }
    }

    pub fn store(&self) -> &PlanningContext {
        &self.store
    }
}

impl LowLevelPlanner for ReusePlanner {
    fn plan(&mut self, req: &PlanRequest) -> Result<Option<Path>> {
        if req.now > self.purged_at {
            self.store.purge_before(req.now);
            self.purged_at = req.now;
        }
        let h = self.cache.from_source(req.graph, req.agent.anchor());
        let floor = self.cache.to_target(req.graph, req.agent.goal);
        let mut ctx = self.store.get_ipc(req.agent.id, req.cons)?;
        let result = srsipp_search(
            &mut ctx,
            &SearchParams {
                graph: req.graph,
                agent: req.agent,
                cons: &ConstraintIndex::new(req.cons),
                now: req.now,
                h_v: &h,
                goal_floor: Some(&floor),
                deadline: req.deadline,
                run_to_exhaustion: false,
            },
        );
        match result {
            Ok(out) => {
                self.store.put_ipc(req.agent.id, req.cons, ctx)?;
                self.stats.calls += 1;
                self.stats.expansions += out.expansions;
                self.stats.ctx_hits = self.store.hits();
                self.stats.ctx_misses = self.store.misses();
                Ok(out.path)
            }
            Err(e) => {
                // A search cut short leaves a half-updated context; drop it.
                self.store.put_ipc(req.agent.id, req.cons, SearchContext::new())?;
                Err(e)
            }
        }
    }

    fn stats(&self) -> LowLevelStats {
        self.stats
    }

    fn forget_agent(&mut self, agent: AgentId) {
        self.store.purge_agent(agent);
    }
}
