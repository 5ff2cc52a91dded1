use std::time::Instant;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexHeuristic, VertexId};
use crate::model::{Agent, ConstraintIndex, Path};
use crate::time::{Interval, Time};

use super::context::{SearchContext, StateId, StateStatus};
use super::intervals::{dummy_son, filter_edge_times};

/// Everything one backward search needs besides its context.
pub struct SearchParams<'a> {
    pub graph: &'a Graph,
    pub agent: &'a Agent,
    pub cons: &'a ConstraintIndex,
    pub now: Time,
    /// Estimate of the distance from the agent's anchor vertex to a vertex.
    pub h_v: &'a VertexHeuristic<'a>,
    /// Lower bound on the unconstrained distance from a vertex to the goal.
    /// A state whose `g` meets it is exact over its whole interval.
    pub goal_floor: Option<&'a VertexHeuristic<'a>>,
    pub deadline: Option<Instant>,
    /// Keep expanding after the first successful stop check until OPEN has
    /// nothing left below the cost bound (used to audit stop decisions).
    pub run_to_exhaustion: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub path: Option<Path>,
    /// States closed by this call.
    pub expansions: u64,
    /// With `run_to_exhaustion`, the best terminal cost found after the
    /// search ran past its stop point.
    pub exhaustive_cost: Option<u64>,
}

/// A closed state at the anchor vertex that can still be reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub id: StateId,
    pub vertex: VertexId,
    pub interval: Interval,
    pub g: Time,
}

impl Candidate {
    /// Cost from `(now, anchor)`: wait until `t_l` if needed, then `g`.
    pub fn total_cost(&self, now: Time) -> u64 {
        u64::from(self.interval.lo.saturating_sub(now)) + u64::from(self.g)
    }
}

/// Decides whether the search may stop.
///
/// In scene: stop iff a candidate covers `now`. In the garage: stop iff the
/// cheapest candidate (ties: earlier `t_l`, then smaller vertex id) costs
/// at most `f_min`.
pub fn stop_check(cands: &[Candidate], f_min: u64, in_scene: bool, now: Time) -> Option<Candidate> {
    if cands.is_empty() {
        return None;
    }
    if in_scene {
        return cands.iter().find(|c| c.interval.contains(now)).copied();
    }
    let best = cands
        .iter()
        .min_by_key(|c| (c.total_cost(now), c.interval.lo, c.vertex))
        .copied()?;
    (best.total_cost(now) <= f_min).then_some(best)
}

fn candidates(ctx: &SearchContext, anchor: VertexId, now: Time, out: &mut Vec<Candidate>) {
    out.clear();
    out.extend(ctx.states_at(anchor).filter_map(|(id, s)| {
        (s.status == StateStatus::Closed && s.interval.hi >= now).then_some(Candidate {
            id,
            vertex: s.vertex,
            interval: s.interval,
            g: s.g,
        })
    }));
}

/// Upper bound on any optimal cost from `now`: wait out every constraint,
/// then follow a simple path.
pub fn cost_bound(graph: &Graph, cons: &ConstraintIndex, now: Time) -> u64 {
    let last = cons.max_time().map_or(0, |t| t + 1).max(now);
    u64::from(last - now) + graph.num_vertices() as u64
}

/// Backward search over time-interval-space states from the agent's goal
/// to its current state, resuming from whatever OPEN/CLOSED `ctx` holds.
///
/// `ctx` must only ever be used with one agent and one constraint set;
/// `now` must not decrease between calls on the same context.
pub fn srsipp_search(ctx: &mut SearchContext, p: &SearchParams) -> Result<SearchOutcome> {
    let agent = p.agent;
    let now = p.now;
    let anchor = agent.anchor();
    let in_scene = agent.in_scene();
    let mut outcome = SearchOutcome {
        path: None,
        expansions: 0,
        exhaustive_cost: None,
    };
    if now < agent.start_time {
        return Err(Error::Usage(format!("{} searched at {now} before its start time", agent.id)));
    }
    if in_scene && p.cons.vertex_blocked(anchor, now) {
        return Ok(outcome);
    }
    ctx.searches += 1;
    ctx.reprioritize(now, anchor, |v| p.h_v.eval(v));
    ctx.ensure_created(agent.goal, agent.goal, p.cons, agent.start_time, now, p.h_v.eval(agent.goal));

    let mut cands = Vec::new();
    candidates(ctx, anchor, now, &mut cands);
    let mut stopped = stop_check(&cands, ctx.peek_f(), in_scene, now);
    if stopped.is_some() && !p.run_to_exhaustion {
        outcome.path = Some(build_path(ctx, stopped.unwrap(), agent, now)?);
        return Ok(outcome);
    }

    let bound = cost_bound(p.graph, p.cons, now);
    let mut pieces = Vec::new();
    let mut changed = Vec::new();
    loop {
        let f_min = ctx.peek_f();
        if f_min == u64::MAX || f_min > bound {
            break;
        }
        let id = ctx.pop().expect("peeked entry");
        let s = ctx.state(id);
        // too early to reach from the anchor; stays so as the agent moves on
        let reach = crate::time::add(now, p.h_v.eval(s.vertex));
        if s.interval.hi < reach {
            ctx.state_mut(id).status = StateStatus::Expired;
            continue;
        }
        ctx.expire_prefix(id, reach);
        let s = ctx.state(id);
        if outcome.expansions % 256 == 255 {
            if let Some(d) = p.deadline {
                if Instant::now() >= d {
                    return Err(Error::Timeout);
                }
            }
        }
        let vertex = s.vertex;
        let popped_f = s.f();
        let g_exact = p.goal_floor.is_some_and(|f| s.g <= f.eval(vertex));
        ctx.close_prefix(id, now, p.h_v.eval(vertex), g_exact);
        outcome.expansions += 1;

        let s = ctx.state(id);
        let (interval, g) = (s.interval, s.g);
        if let Some(dummy) = dummy_son(interval, agent.start_time).filter(|d| d.hi >= now) {
            let preds = p.graph.predecessors(vertex);
            for &pred in preds.iter().chain(std::iter::once(&vertex)) {
                if pred == vertex {
                    pieces.clear();
                    pieces.push(dummy);
                } else {
                    filter_edge_times(dummy, p.cons.edge_times(pred, vertex), &mut pieces);
                }
                if pieces.is_empty() {
                    continue;
                }
                let h_pred = p.h_v.eval(pred);
                ctx.ensure_created(pred, agent.goal, p.cons, agent.start_time, now, h_pred);
                for &piece in &pieces {
                    ctx.improve(pred, piece, g + 1, id, now, h_pred, &mut changed);
                }
                changed.clear();
            }
        }

        if vertex == anchor {
            candidates(ctx, anchor, now, &mut cands);
        }
        if stopped.is_none() {
            stopped = stop_check(&cands, popped_f, in_scene, now);
            if stopped.is_some() && !p.run_to_exhaustion {
                break;
            }
        }
    }

    if p.run_to_exhaustion {
        candidates(ctx, anchor, now, &mut cands);
        outcome.exhaustive_cost = stop_check(&cands, u64::MAX, in_scene, now).map(|c| c.total_cost(now));
    }
    if stopped.is_none() {
        // OPEN ran dry (or past the bound): every remaining candidate is final.
        stopped = stop_check(&cands, u64::MAX, in_scene, now);
    }
    if let Some(term) = stopped {
        outcome.path = Some(build_path(ctx, term, agent, now)?);
    }
    Ok(outcome)
}

/// Follows parent links from the terminal state to a goal interval and
/// emits one vertex per time step, starting at `max(t_l, now)`.
pub fn build_path(ctx: &SearchContext, terminal: Candidate, agent: &Agent, now: Time) -> Result<Path> {
    let mut t = terminal.interval.lo.max(now);
    let mut id = terminal.id;
    let start = t;
    let mut vertices = Vec::with_capacity(terminal.g as usize + 1);
    loop {
        let s = ctx.state(id);
        if !s.interval.contains(t) {
            return Err(Error::Internal(format!(
                "path reconstruction left {} at t={t} (state #{id} {})",
                s.vertex, s.interval
            )));
        }
        vertices.push(s.vertex);
        if s.g == 0 {
            if s.vertex != agent.goal {
                return Err(Error::Internal(format!("zero-cost state #{id} off the goal")));
            }
            break;
        }
        id = s.parent.ok_or_else(|| Error::Internal(format!("state #{id} (g={}) has no parent", s.g)))?;
        t += 1;
        if vertices.len() > terminal.g as usize + 1 {
            return Err(Error::Internal("parent chain longer than g".into()));
        }
    }
    debug_assert_eq!(vertices.len(), terminal.g as usize + 1);
    Ok(Path::new(start, vertices))
}
