//! Event-driven online simulation: replan every agent whenever new agents
//! arrive, splicing the results into the execute plan.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::baselines::{SolverConfig, Variant};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::model::{Agent, AgentId, Constraint, ConstraintSet, ExecutePlan, PlanSnapshot};
use crate::scbs::{scbs_solve, LowLevelPlanner, LowLevelStats, ScbsProblem};
use crate::time::Time;

#[derive(Debug, Clone)]
pub struct OnlineInstance {
    pub id: String,
    pub graph: Graph,
    /// Sorted by start time, then id.
    pub agents: Vec<Agent>,
}

impl OnlineInstance {
    pub fn new(id: impl Into<String>, graph: Graph, mut agents: Vec<Agent>) -> Result<Self> {
        for a in &agents {
            graph.check(a.start)?;
            graph.check(a.goal)?;
            if a.current.is_some() {
                return Err(Error::Usage(format!("{} must start in the garage", a.id)));
            }
        }
        agents.sort_by_key(|a| (a.start_time, a.id));
        for w in agents.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::Usage(format!("duplicate agent id {}", w[0].id)));
            }
        }
        Ok(OnlineInstance {
            id: id.into(),
            graph,
            agents,
        })
    }

    /// Distinct start times, ascending.
    pub fn arrival_times(&self) -> Vec<Time> {
        let mut ts: Vec<Time> = self.agents.iter().map(|a| a.start_time).collect();
        ts.dedup();
        ts
    }
}

/// Everything recorded about one replanning iteration.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub t: Time,
    pub soc: u64,
    pub ll_expansions: u64,
    pub ll_calls: u64,
    pub ct_nodes: u64,
    pub ctx_hits: u64,
    pub wall_time_s: f64,
    /// Agents as planned: in-scene agents carry their current vertex.
    pub agents: Vec<Agent>,
    /// Root constraints per entry of `agents`.
    pub root_cons: Vec<ConstraintSet>,
    pub snapshot: PlanSnapshot,
}

pub struct SimulationState {
    pub now: Option<Time>,
    pub active: Vec<Agent>,
    pub execute: ExecutePlan,
    pub planner: Box<dyn LowLevelPlanner + Send>,
    pub records: Vec<IterationRecord>,
}

impl SimulationState {
    pub fn new(planner: Box<dyn LowLevelPlanner + Send>) -> Self {
        SimulationState {
            now: None,
            active: Vec::new(),
            execute: ExecutePlan::default(),
            planner,
            records: Vec::new(),
        }
    }
}

/// Agents whose goal arrival is at or before `t_new` leave; the ones that
/// arrive exactly at `t_new` still occupy their goal then.
fn retire(state: &mut SimulationState, t_new: Time) -> Vec<VertexId> {
    let mut ghosts = Vec::new();
    let execute = &state.execute;
    let planner = &mut state.planner;
    state.active.retain(|a| match execute.arrival_time(a.id) {
        Some(arrival) if arrival <= t_new => {
            if arrival == t_new {
                ghosts.push(a.goal);
            }
            planner.forget_agent(a.id);
            false
        }
        _ => true,
    });
    ghosts
}

/// One replanning iteration at `t_new` with the agents arriving then.
pub fn sr_step(
    state: &mut SimulationState,
    graph: &Graph,
    t_new: Time,
    arriving: &[Agent],
    deadline: Option<Instant>,
) -> Result<()> {
    if state.now.is_some_and(|t| t_new <= t) {
        return Err(Error::Usage(format!("replanning time {t_new} does not advance")));
    }
    if let Some(a) = arriving.iter().find(|a| a.start_time != t_new) {
        return Err(Error::Usage(format!("{} starts at {} but arrives at {t_new}", a.id, a.start_time)));
    }
    let started = Instant::now();
    let ghosts = retire(state, t_new);
    for a in &mut state.active {
        let entered = state.execute.entry_time(a.id).is_some_and(|e| e < t_new);
        a.current = if entered { state.execute.trajectories[&a.id].at(t_new) } else { None };
        if entered && a.current.is_none() {
            return Err(Error::Internal(format!("{} entered but has no position at {t_new}", a.id)));
        }
    }
    state.active.extend(arriving.iter().cloned().map(|mut a| {
        a.current = None;
        a
    }));

    let root_cons: Vec<ConstraintSet> = state
        .active
        .iter()
        .map(|a| {
            let mut c = ConstraintSet::new();
            if a.current.is_none() && ghosts.contains(&a.start) {
                c.insert(Constraint::Vertex { time: t_new, vertex: a.start });
            }
            c
        })
        .collect();
    let prob = ScbsProblem {
        graph,
        agents: &state.active,
        now: t_new,
        root_cons: root_cons.clone(),
        deadline,
    };
    let sol = scbs_solve(&prob, state.planner.as_mut(), None)?;
    for (agent, path) in &sol.snapshot.paths {
        state.execute.splice(*agent, t_new, path);
    }
    let plans: Vec<(AgentId, Arc<_>, Arc<ConstraintSet>)> = sol
        .snapshot
        .paths
        .iter()
        .map(|(a, p)| (*a, p.clone(), sol.cons[a].clone()))
        .collect();
    state.planner.end_iteration(t_new, &plans);
    state.now = Some(t_new);
    state.records.push(IterationRecord {
        t: t_new,
        soc: sol.soc,
        ll_expansions: sol.stats.low_level.expansions,
        ll_calls: sol.stats.low_level.calls,
        ct_nodes: sol.stats.ct_nodes,
        ctx_hits: sol.stats.low_level.ctx_hits,
        wall_time_s: started.elapsed().as_secs_f64(),
        agents: state.active.clone(),
        root_cons,
        snapshot: sol.snapshot,
    });
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunFailure {
    Timeout,
    Unsolvable,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationReport {
    pub t: Time,
    pub soc: u64,
    pub ll_expansions: u64,
    pub ct_nodes: u64,
    pub ctx_hits: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub instance: String,
    pub solver: Variant,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<RunFailure>,
    /// Wall-clock time; the time limit itself when the run timed out.
    pub total_time_s: f64,
    pub iterations: Vec<IterationReport>,
    /// Low-level totals over the whole run, including an unfinished iteration.
    pub low_level: LowLevelStats,
    pub execute_plan: BTreeMap<AgentId, crate::model::Path>,
    #[serde(skip)]
    pub records: Vec<IterationRecord>,
}

impl RunReport {
    pub fn total_expansions(&self) -> u64 {
        self.low_level.expansions
    }

    pub fn total_ll_calls(&self) -> u64 {
        self.low_level.calls
    }

    pub fn total_ctx_hits(&self) -> u64 {
        self.low_level.ctx_hits
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One JSON line per iteration: `{t, paths: {agent: [vertex|null, ...]}, soc}`.
    /// Entries run from `t` to the agent's arrival; `null` means in the garage.
    pub fn plan_dump(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&plan_dump_line(&r.snapshot, r.soc).to_string());
            out.push('\n');
        }
        out
    }
}

pub fn plan_dump_line(snapshot: &PlanSnapshot, soc: u64) -> Value {
    let paths: serde_json::Map<String, Value> = snapshot
        .paths
        .iter()
        .map(|(a, p)| {
            let cells: Vec<Value> = (snapshot.time..=p.arrival_time())
                .map(|t| p.at(t).map_or(Value::Null, |v| json!(v.0)))
                .collect();
            (a.0.to_string(), Value::Array(cells))
        })
        .collect();
    json!({ "t": snapshot.time, "paths": paths, "soc": soc })
}

/// Runs every replanning iteration of `instance` under the solver's time limit.
pub fn run_online(instance: &OnlineInstance, config: &SolverConfig) -> Result<RunReport> {
    let started = Instant::now();
    let limit = config.time_limit();
    let deadline = limit.map(|l| started + l);
    let mut state = SimulationState::new(config.planner());
    let mut failure = None;
    let mut rest = instance.agents.as_slice();
    while let Some(first) = rest.first() {
        let t = first.start_time;
        let n = rest.iter().take_while(|a| a.start_time == t).count();
        let (arriving, tail) = rest.split_at(n);
        rest = tail;
        match sr_step(&mut state, &instance.graph, t, arriving, deadline) {
            Ok(()) => {}
            Err(Error::Timeout) => {
                failure = Some(RunFailure::Timeout);
                break;
            }
            Err(Error::Unsolvable(_)) => {
                failure = Some(RunFailure::Unsolvable);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let total_time_s = match (failure, limit) {
        (Some(RunFailure::Timeout), Some(l)) => l.as_secs_f64(),
        _ => elapsed,
    };
    Ok(RunReport {
        instance: instance.id.clone(),
        solver: config.variant,
        success: failure.is_none(),
        failure,
        total_time_s,
        iterations: state
            .records
            .iter()
            .map(|r| IterationReport {
                t: r.t,
                soc: r.soc,
                ll_expansions: r.ll_expansions,
                ct_nodes: r.ct_nodes,
                ctx_hits: r.ctx_hits,
            })
            .collect(),
        low_level: state.planner.stats(),
        execute_plan: state.execute.trajectories,
        records: state.records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GridMap;
    use crate::model::Path;

    fn ring() -> Graph {
        // columns A..D are x = 0..3, rows 1..4 are y = 0..3
        GridMap::from_rows(&["....", ".@@.", ".@@.", "...."]).unwrap().to_graph()
    }

    fn cell(g: &Graph, name: &str) -> VertexId {
        let b = name.as_bytes();
        g.vertex_at(u32::from(b[0] - b'A'), u32::from(b[1] - b'1')).unwrap()
    }

    fn cells(g: &Graph, names: &[&str]) -> Vec<VertexId> {
        names.iter().map(|n| cell(g, n)).collect()
    }

    /// a1 left A4 for B4 at t = 0 along the upper route to D1.
    fn figure_state(g: &Graph, variant: Variant) -> SimulationState {
        let mut state = SimulationState::new(SolverConfig::new(variant).planner());
        let a1 = Agent::new(1, 0, cell(g, "A4"), cell(g, "D1"));
        let p1 = Path::new(0, cells(g, &["A4", "B4", "C4", "D4", "D3", "D2", "D1"]));
        state.execute.splice(a1.id, 0, &p1);
        state.active.push(a1);
        state.now = Some(0);
        state
    }

    #[test]
    fn single_agent_follows_a_shortest_path() {
        let g = ring();
        let inst = OnlineInstance::new("one", g.clone(), vec![Agent::new(0, 2, cell(&g, "A1"), cell(&g, "D4"))]).unwrap();
        for v in Variant::ALL {
            let r = run_online(&inst, &SolverConfig::new(v)).unwrap();
            assert!(r.success);
            let p = &r.execute_plan[&AgentId(0)];
            assert_eq!(p.start_time, 2);
            assert_eq!(p.vertices.len(), 7, "{v}");
            assert!(p.is_well_formed(&g));
        }
    }

    #[test]
    fn figure_instance_one_keeps_the_plan() {
        let g = ring();
        for v in Variant::ALL {
            let mut state = figure_state(&g, v);
            let a2 = Agent::new(2, 1, cell(&g, "C1"), cell(&g, "A2"));
            sr_step(&mut state, &g, 1, &[a2], None).unwrap();
            let a1 = &state.execute.trajectories[&AgentId(1)];
            assert_eq!(a1.arrival_time(), 6, "{v}");
            assert_eq!(a1.vertices, cells(&g, &["A4", "B4", "C4", "D4", "D3", "D2", "D1"]));
            assert_eq!(state.records[0].soc, 5 + 3);
        }
    }

    #[test]
    fn figure_instance_two_detours() {
        let g = ring();
        for v in Variant::ALL {
            let mut state = figure_state(&g, v);
            let a2 = Agent::new(2, 1, cell(&g, "D2"), cell(&g, "C4"));
            sr_step(&mut state, &g, 1, &[a2], None).unwrap();
            let a1 = &state.execute.trajectories[&AgentId(1)];
            assert_eq!(a1.arrival_time(), 8, "{v}");
            assert_eq!(a1.vertices, cells(&g, &["A4", "B4", "A4", "A3", "A2", "A1", "B1", "C1", "D1"]));
            assert_eq!(state.records[0].soc, 7 + 3);
            assert_eq!(state.execute.audit(), None);
        }
    }

    #[test]
    fn two_waves_give_two_snapshots() {
        let g = ring();
        let agents = vec![
            Agent::new(0, 1, cell(&g, "A1"), cell(&g, "D4")),
            Agent::new(1, 1, cell(&g, "D1"), cell(&g, "A4")),
            Agent::new(2, 4, cell(&g, "A4"), cell(&g, "D1")),
        ];
        let inst = OnlineInstance::new("waves", g, agents).unwrap();
        let r = run_online(&inst, &SolverConfig::new(Variant::A4)).unwrap();
        assert!(r.success);
        assert_eq!(r.iterations.iter().map(|i| i.t).collect::<Vec<_>>(), [1, 4]);
        assert_eq!(r.records[0].agents.len(), 2);
        assert!(r.records[1].agents.len() <= 3);
    }

    #[test]
    fn agent_at_goal_on_arrival_time_leaves_a_ghost() {
        let g = GridMap::from_rows(&["...."]).unwrap().to_graph();
        let v = |x| g.vertex_at(x, 0).unwrap();
        let agents = vec![Agent::new(0, 0, v(0), v(3)), Agent::new(1, 3, v(3), v(0))];
        let inst = OnlineInstance::new("ghost", g.clone(), agents).unwrap();
        for variant in Variant::ALL {
            let r = run_online(&inst, &SolverConfig::new(variant)).unwrap();
            let last = &r.records[1];
            assert_eq!(last.t, 3);
            assert_eq!(last.agents.iter().map(|a| a.id).collect::<Vec<_>>(), [AgentId(1)]);
            assert!(last.root_cons[0].contains(&Constraint::Vertex { time: 3, vertex: v(3) }));
            assert_eq!(r.execute_plan[&AgentId(1)].start_time, 4, "{variant}");
            assert_eq!(last.soc, 4);
        }
    }

    #[test]
    fn executed_prefix_never_changes() {
        let g = GridMap::from_rows(&[".....", ".@.@.", ".....", ".@...", "....."]).unwrap().to_graph();
        let v = |x, y| g.vertex_at(x, y).unwrap();
        let agents = vec![
            Agent::new(0, 0, v(0, 0), v(4, 4)),
            Agent::new(1, 0, v(4, 0), v(0, 4)),
            Agent::new(2, 2, v(0, 4), v(4, 0)),
            Agent::new(3, 3, v(4, 4), v(0, 0)),
            Agent::new(4, 5, v(2, 0), v(2, 4)),
        ];
        let inst = OnlineInstance::new("prefix", g, agents).unwrap();
        let mut state = SimulationState::new(SolverConfig::new(Variant::A4).planner());
        let mut rest = inst.agents.as_slice();
        while let Some(first) = rest.first() {
            let t = first.start_time;
            let n = rest.iter().take_while(|a| a.start_time == t).count();
            let before = state.execute.clone();
            sr_step(&mut state, &inst.graph, t, &rest[..n], None).unwrap();
            rest = &rest[n..];
            for (id, old) in &before.trajectories {
                let new = &state.execute.trajectories[id];
                for tau in 0..t {
                    assert_eq!(old.at(tau), new.at(tau), "{id} changed at {tau} when replanning at {t}");
                }
            }
            assert_eq!(state.execute.audit(), None);
        }
        assert_eq!(state.records.len(), 4);
    }

    #[test]
    fn rejects_time_going_backwards() {
        let g = ring();
        let mut state = figure_state(&g, Variant::A1);
        assert!(matches!(sr_step(&mut state, &g, 0, &[], None), Err(Error::Usage(_))));
        let late = Agent::new(5, 9, cell(&g, "A1"), cell(&g, "B1"));
        assert!(matches!(sr_step(&mut state, &g, 3, &[late], None), Err(Error::Usage(_))));
    }

    #[test]
    fn plan_dump_marks_garage_waits() {
        let g = GridMap::from_rows(&["...."]).unwrap().to_graph();
        let mut snapshot = PlanSnapshot { time: 2, paths: BTreeMap::new() };
        snapshot.paths.insert(AgentId(0), Arc::new(Path::new(3, vec![VertexId(0), VertexId(1)])));
        let line = plan_dump_line(&snapshot, 2).to_string();
        assert_eq!(line, r#"{"paths":{"0":[null,0,1]},"soc":2,"t":2}"#);
        assert_eq!(g.num_vertices(), 4);
    }
}
