//! Conflict-tree search whose low-level calls go through a pluggable
//! [`LowLevelPlanner`]; the context-reusing planner turns it into SCBS.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{
    find_earliest_conflict, split_conflict, Agent, AgentId, Conflict, Constraint, ConstraintSet, Path,
    PlanSnapshot,
};
use crate::time::Time;

/// One single-agent planning request.
pub struct PlanRequest<'a> {
    pub graph: &'a Graph,
    pub agent: &'a Agent,
    pub cons: &'a ConstraintSet,
    pub now: Time,
    pub deadline: Option<Instant>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LowLevelStats {
    pub calls: u64,
    pub expansions: u64,
    pub ctx_hits: u64,
    pub ctx_misses: u64,
    /// Calls answered from a previous iteration's path (A3).
    pub shortcuts: u64,
}

impl LowLevelStats {
    pub fn since(&self, earlier: &LowLevelStats) -> LowLevelStats {
        LowLevelStats {
            calls: self.calls - earlier.calls,
            expansions: self.expansions - earlier.expansions,
            ctx_hits: self.ctx_hits - earlier.ctx_hits,
            ctx_misses: self.ctx_misses - earlier.ctx_misses,
            shortcuts: self.shortcuts - earlier.shortcuts,
        }
    }
}

/// Single-agent solver used inside the conflict tree.
pub trait LowLevelPlanner {
    /// Optimal path from `(now, anchor)` under `cons`, or `None`.
    fn plan(&mut self, req: &PlanRequest) -> Result<Option<Path>>;

    /// Cumulative counters.
    fn stats(&self) -> LowLevelStats;

    /// Called with the chosen plan of every agent after an iteration.
    fn end_iteration(&mut self, _now: Time, _plans: &[(AgentId, Arc<Path>, Arc<ConstraintSet>)]) {}

    /// The agent left the scene for good.
    fn forget_agent(&mut self, _agent: AgentId) {}
}

/// A conflict-tree node; agents are indexed as in the solve call.
#[derive(Debug, Clone)]
pub struct CtNode {
    pub cons: Vec<Arc<ConstraintSet>>,
    pub paths: Vec<Arc<Path>>,
    pub cost: u64,
    pub n_cons: usize,
    pub id: u64,
    pub parent: Option<u64>,
}

struct Queued(CtNode);

impl Ord for Queued {
    // min cost, then fewer constraints, then FIFO
    fn cmp(&self, other: &Self) -> Ordering {
        let key = |n: &CtNode| (n.cost, n.n_cons, n.id);
        key(&other.0).cmp(&key(&self.0))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ScbsStats {
    pub ct_nodes: u64,
    pub ct_expanded: u64,
    pub low_level: LowLevelStats,
}

#[derive(Debug, Clone)]
pub struct ScbsSolution {
    pub snapshot: PlanSnapshot,
    pub soc: u64,
    /// Constraint set each chosen path was planned under.
    pub cons: BTreeMap<AgentId, Arc<ConstraintSet>>,
    pub stats: ScbsStats,
}

/// Inputs of one conflict-tree solve.
pub struct ScbsProblem<'a> {
    pub graph: &'a Graph,
    pub agents: &'a [Agent],
    pub now: Time,
    /// Constraints every root node starts with, per agent index.
    pub root_cons: Vec<ConstraintSet>,
    pub deadline: Option<Instant>,
}

/// Best-first conflict-tree search for a conflict-free, SOC-optimal plan.
pub fn scbs_solve(
    prob: &ScbsProblem,
    planner: &mut dyn LowLevelPlanner,
    mut trace: Option<&mut dyn Write>,
) -> Result<ScbsSolution> {
    let n = prob.agents.len();
    if prob.root_cons.len() != n {
        return Err(Error::Usage("root constraints must match the agent list".into()));
    }
    let before = planner.stats();
    let mut stats = ScbsStats::default();
    let mut root = CtNode {
        cons: Vec::with_capacity(n),
        paths: Vec::with_capacity(n),
        cost: 0,
        n_cons: 0,
        id: 0,
        parent: None,
    };
    for (agent, cons) in prob.agents.iter().zip(&prob.root_cons) {
        let req = PlanRequest {
            graph: prob.graph,
            agent,
            cons,
            now: prob.now,
            deadline: prob.deadline,
        };
        let path = planner.plan(&req)?.ok_or(Error::Unsolvable(agent.id.0))?;
        root.cost += path.cost(prob.now);
        root.n_cons += cons.len();
        root.cons.push(Arc::new(cons.clone()));
        root.paths.push(Arc::new(path));
    }
    stats.ct_nodes = 1;
    trace_line(&mut trace, &root, None);

    let mut open = BinaryHeap::new();
    open.push(Queued(root));
    let mut next_id = 1;
    let mut last_cost = 0;
    while let Some(Queued(node)) = open.pop() {
        debug_assert!(node.cost >= last_cost, "conflict-tree pops must be monotone");
        last_cost = node.cost;
        if prob.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(Error::Timeout);
        }
        let refs: Vec<(AgentId, &Path)> = prob
            .agents
            .iter()
            .zip(&node.paths)
            .map(|(a, p)| (a.id, p.as_ref()))
            .collect();
        let Some(conflict) = find_earliest_conflict(&refs) else {
            stats.low_level = planner.stats().since(&before);
            return Ok(finish(prob, node, stats));
        };
        stats.ct_expanded += 1;
        for child in ct_expand(prob, &node, &conflict, planner, &mut next_id)? {
            stats.ct_nodes += 1;
            trace_line(&mut trace, &child, Some(&conflict));
            open.push(Queued(child));
        }
    }
    let blocked = prob.agents.first().map_or(0, |a| a.id.0);
    Err(Error::Unsolvable(blocked))
}

/// Children of `node` for the two sides of `conflict`; a side whose agent
/// has no path under the extra constraint is dropped.
pub fn ct_expand(
    prob: &ScbsProblem,
    node: &CtNode,
    conflict: &Conflict,
    planner: &mut dyn LowLevelPlanner,
    next_id: &mut u64,
) -> Result<Vec<CtNode>> {
    let mut children = Vec::with_capacity(2);
    for (agent_id, c) in split_conflict(conflict) {
        let i = prob
            .agents
            .iter()
            .position(|a| a.id == agent_id)
            .ok_or_else(|| Error::Internal(format!("conflict names unknown {agent_id}")))?;
        if let Some(child) = child_with(prob, node, i, c, planner, *next_id)? {
            *next_id += 1;
            children.push(child);
        }
    }
    Ok(children)
}

fn child_with(
    prob: &ScbsProblem,
    node: &CtNode,
    i: usize,
    c: Constraint,
    planner: &mut dyn LowLevelPlanner,
    id: u64,
) -> Result<Option<CtNode>> {
    let cons = node.cons[i].with(c);
    let agent = &prob.agents[i];
    let req = PlanRequest {
        graph: prob.graph,
        agent,
        cons: &cons,
        now: prob.now,
        deadline: prob.deadline,
    };
    let Some(path) = planner.plan(&req)? else {
        return Ok(None);
    };
    debug_assert!(path.satisfies(&cons), "low-level path violates its constraints");
    let mut child = node.clone();
    child.cost = node.cost - node.paths[i].cost(prob.now) + path.cost(prob.now);
    child.n_cons = node.n_cons + 1;
    child.cons[i] = Arc::new(cons);
    child.paths[i] = Arc::new(path);
    child.id = id;
    child.parent = Some(node.id);
    Ok(Some(child))
}

fn finish(prob: &ScbsProblem, node: CtNode, stats: ScbsStats) -> ScbsSolution {
    let mut snapshot = PlanSnapshot {
        time: prob.now,
        paths: BTreeMap::new(),
    };
    let mut cons = BTreeMap::new();
    for ((agent, path), c) in prob.agents.iter().zip(node.paths).zip(node.cons) {
        snapshot.paths.insert(agent.id, path);
        cons.insert(agent.id, c);
    }
    ScbsSolution {
        snapshot,
        soc: node.cost,
        cons,
        stats,
    }
}

fn trace_line(trace: &mut Option<&mut dyn Write>, node: &CtNode, conflict: Option<&Conflict>) {
    let Some(w) = trace.as_mut() else { return };
    let parent = node.parent.map_or("-".to_string(), |p| p.to_string());
    let conflict = conflict.map_or("-".to_string(), |c| {
        format!("t={} {}-{} {:?}", c.time, c.agents.0, c.agents.1, c.kind)
    });
    let _ = writeln!(w, "node={} parent={parent} cost={} cons={} conflict={conflict}", node.id, node.cost, node.n_cons);
}
