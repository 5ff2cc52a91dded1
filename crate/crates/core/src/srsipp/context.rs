//! Reusable OPEN/CLOSED state of one `(agent, constraint set)` search.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rustc_hash::FxHashMap;

use crate::graph::VertexId;
use crate::model::ConstraintIndex;
use crate::time::{Interval, Time, INF};

use super::intervals::{build_safe_intervals, h_tis};

pub type StateId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateStatus {
    /// In OPEN (or waiting there with `g = inf`).
    Open,
    /// Finalized; never modified again.
    Closed,
    /// Popped with `t_r < now + h_v`; unreachable now and later.
    Expired,
    /// Replaced by split fragments.
    Dead,
}

/// A time-interval-space state: every time point of `interval` at `vertex`
/// shares the cost-to-goal `g`.
#[derive(Debug, Clone)]
pub struct TisState {
    pub vertex: VertexId,
    pub interval: Interval,
    pub g: Time,
    /// `h` as of the last push into OPEN.
    pub h: u32,
    /// The closed state whose dummy son last improved `g`.
    pub parent: Option<StateId>,
    pub status: StateStatus,
    version: u32,
}

impl TisState {
    pub fn f(&self) -> u64 {
        if self.g == INF {
            u64::MAX
        } else {
            u64::from(self.g) + u64::from(self.h)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct OpenEntry {
    pub f: u64,
    pub g: Time,
    pub t_l: Time,
    pub vertex: u32,
    pub id: StateId,
    pub version: u32,
}

impl Ord for OpenEntry {
    // BinaryHeap is a max-heap: "greater" pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .cmp(&self.f)
            .then_with(|| self.g.cmp(&other.g))
            .then_with(|| other.t_l.cmp(&self.t_l))
            .then_with(|| other.vertex.cmp(&self.vertex))
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// OPEN, CLOSED and the created-interval registry of one search lineage.
///
/// Per created vertex, the live states partition `[t^s, inf)` minus the
/// vertex-constrained times and are kept sorted by start time.
#[derive(Debug, Clone, Default)]
pub struct SearchContext {
    states: Vec<TisState>,
    by_vertex: FxHashMap<VertexId, Vec<StateId>>,
    pub(crate) open: BinaryHeap<OpenEntry>,
    /// Number of searches that have run on this context.
    pub searches: u32,
    /// `(now, anchor)` the OPEN priorities were computed for.
    prioritized_for: Option<(Time, VertexId)>,
}

impl SearchContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// True if no search has touched this context.
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, id: StateId) -> &TisState {
        &self.states[id as usize]
    }

    pub(crate) fn state_mut(&mut self, id: StateId) -> &mut TisState {
        &mut self.states[id as usize]
    }

    pub fn is_created(&self, v: VertexId) -> bool {
        self.by_vertex.contains_key(&v)
    }

    /// Live states at `v`, ascending by start time.
    pub fn states_at(&self, v: VertexId) -> impl Iterator<Item = (StateId, &TisState)> + '_ {
        self.by_vertex
            .get(&v)
            .into_iter()
            .flatten()
            .map(move |&id| (id, &self.states[id as usize]))
    }

    pub fn created_vertices(&self) -> Vec<VertexId> {
        let mut vs: Vec<_> = self.by_vertex.keys().copied().collect();
        vs.sort_unstable();
        vs
    }

    pub fn closed_states(&self) -> impl Iterator<Item = (StateId, &TisState)> + '_ {
        self.by_vertex.values().flatten().filter_map(move |&id| {
            let s = &self.states[id as usize];
            (s.status == StateStatus::Closed).then_some((id, s))
        })
    }

    pub fn open_len(&self) -> usize {
        self.by_vertex
            .values()
            .flatten()
            .filter(|&&id| {
                let s = &self.states[id as usize];
                s.status == StateStatus::Open && s.g != INF
            })
            .count()
    }

    pub fn resident_states(&self) -> usize {
        self.by_vertex.values().map(Vec::len).sum()
    }

    /// State at `v` whose interval contains `t`.
    pub fn covering(&self, v: VertexId, t: Time) -> Option<StateId> {
        let ids = self.by_vertex.get(&v)?;
        let pos = ids.partition_point(|&id| self.states[id as usize].interval.lo <= t);
        let id = *ids.get(pos.checked_sub(1)?)?;
        self.states[id as usize].interval.contains(t).then_some(id)
    }

    fn alloc(&mut self, vertex: VertexId, interval: Interval, g: Time, parent: Option<StateId>) -> StateId {
        let id = self.states.len() as StateId;
        self.states.push(TisState {
            vertex,
            interval,
            g,
            h: 0,
            parent,
            status: StateStatus::Open,
            version: 0,
        });
        id
    }

    /// Pushes `id` into OPEN with a fresh `h`; stale heap entries of the
    /// same state are invalidated by the version bump.
    pub(crate) fn push(&mut self, id: StateId, now: Time, h_v: u32) {
        let s = &mut self.states[id as usize];
        debug_assert_eq!(s.status, StateStatus::Open);
        if s.g == INF {
            return;
        }
        s.version = s.version.wrapping_add(1);
        s.h = h_tis(s.interval, now, h_v);
        self.open.push(OpenEntry {
            f: s.f(),
            g: s.g,
            t_l: s.interval.lo,
            vertex: s.vertex.0,
            id,
            version: s.version,
        });
    }

    pub(crate) fn is_current(&self, e: &OpenEntry) -> bool {
        let s = &self.states[e.id as usize];
        s.status == StateStatus::Open && s.version == e.version
    }

    /// Drops stale heap entries and recomputes `h`/`f` of everything in
    /// OPEN for a new current state. A no-op when the state is unchanged.
    pub(crate) fn reprioritize(&mut self, now: Time, anchor: VertexId, h_v: impl Fn(VertexId) -> u32) {
        if self.prioritized_for.replace((now, anchor)) == Some((now, anchor)) {
            return;
        }
        let entries = std::mem::take(&mut self.open).into_vec();
        let mut fresh = Vec::with_capacity(entries.len());
        for e in entries {
            if !self.is_current(&e) {
                continue;
            }
            let s = &mut self.states[e.id as usize];
            s.h = h_tis(s.interval, now, h_v(s.vertex));
            fresh.push(OpenEntry {
                f: s.f(),
                ..e
            });
        }
        self.open = BinaryHeap::from(fresh);
    }

    /// Minimum `f` in OPEN, discarding stale entries on the way.
    pub(crate) fn peek_f(&mut self) -> u64 {
        while let Some(top) = self.open.peek() {
            if self.is_current(top) {
                return top.f;
            }
            self.open.pop();
        }
        u64::MAX
    }

    pub(crate) fn pop(&mut self) -> Option<StateId> {
        while let Some(top) = self.open.pop() {
            if self.is_current(&top) {
                return Some(top.id);
            }
        }
        None
    }

    /// Creates the maximal safe intervals at `v` unless already present.
    /// Intervals on `goal` start with `g = 0` and go straight into OPEN.
    pub(crate) fn ensure_created(
        &mut self,
        v: VertexId,
        goal: VertexId,
        cons: &ConstraintIndex,
        t_start: Time,
        now: Time,
        h_v: u32,
    ) {
        if self.by_vertex.contains_key(&v) {
            return;
        }
        let g = if v == goal { 0 } else { INF };
        let ids: Vec<StateId> = build_safe_intervals(v, cons, t_start)
            .into_iter()
            .map(|iv| self.alloc(v, iv, g, None))
            .collect();
        if g == 0 {
            for &id in &ids {
                if self.states[id as usize].interval.hi >= now {
                    self.push(id, now, h_v);
                }
            }
        }
        self.by_vertex.insert(v, ids);
    }

    /// Splits the time points of `id` before `reach` off into an expired
    /// state, so a closed state never holds a `g` that is only an upper bound.
    pub(crate) fn expire_prefix(&mut self, id: StateId, reach: Time) {
        let (vertex, interval, g, parent) = {
            let s = &self.states[id as usize];
            (s.vertex, s.interval, s.g, s.parent)
        };
        if interval.lo >= reach {
            return;
        }
        self.states[id as usize].interval = Interval::new(reach, interval.hi);
        let head = self.alloc(vertex, Interval::new(interval.lo, reach - 1), g, parent);
        self.states[head as usize].status = StateStatus::Expired;
        let ids = self.by_vertex.get_mut(&vertex).expect("created vertex");
        let pos = ids.iter().position(|&x| x == id).expect("state listed at its vertex");
        ids.insert(pos, head);
    }

    /// Closes the popped state `id`, keeping only the prefix whose time
    /// points share the popped `f`; later time points stay in OPEN as a new
    /// state with the same `g`. Returns the suffix, if any.
    ///
    /// With `g_exact` (g already equals a lower bound on the distance to the
    /// goal) no time point can do better and the whole interval closes.
    pub(crate) fn close_prefix(&mut self, id: StateId, now: Time, h_v: u32, g_exact: bool) -> Option<StateId> {
        let (vertex, interval, g, parent, h) = {
            let s = &self.states[id as usize];
            (s.vertex, s.interval, s.g, s.parent, h_tis(s.interval, now, h_v))
        };
        let cert = crate::time::add(now, h);
        self.states[id as usize].status = StateStatus::Closed;
        self.states[id as usize].h = h;
        if g_exact || cert >= interval.hi {
            return None;
        }
        self.states[id as usize].interval = Interval::new(interval.lo, cert);
        let rest = self.alloc(vertex, Interval::new(cert + 1, interval.hi), g, parent);
        let ids = self.by_vertex.get_mut(&vertex).expect("created vertex");
        let pos = ids.iter().position(|&x| x == id).expect("state listed at its vertex");
        ids.insert(pos + 1, rest);
        self.push(rest, now, h_v);
        Some(rest)
    }

    /// Lowers `g` to `cost` on the parts of open states at `v` covered by
    /// `dummy`, splitting partially covered states at the coverage
    /// boundaries. Closed states are never touched. Returns the states whose
    /// `g` changed.
    pub(crate) fn improve(
        &mut self,
        v: VertexId,
        dummy: Interval,
        cost: Time,
        parent: StateId,
        now: Time,
        h_v: u32,
        changed: &mut Vec<StateId>,
    ) {
        let Some(ids) = self.by_vertex.get(&v) else { return };
        let start = ids
            .partition_point(|&id| self.states[id as usize].interval.lo <= dummy.lo)
            .saturating_sub(1);
        let mut end = start;
        let mut touched = false;
        while end < ids.len() {
            let s = &self.states[ids[end] as usize];
            if s.interval.lo > dummy.hi {
                break;
            }
            if s.interval.overlaps(&dummy) && s.status == StateStatus::Open && s.g > cost && s.interval.hi >= now {
                touched = true;
            }
            end += 1;
        }
        if !touched {
            return;
        }
        let old: Vec<StateId> = ids[start..end].to_vec();
        let mut replacement = Vec::with_capacity(old.len() + 2);
        for id in old {
            let s = self.states[id as usize].clone();
            let improvable = s.status == StateStatus::Open && s.g > cost && s.interval.hi >= now;
            let Some(cover) = s.interval.intersect(&dummy).filter(|_| improvable) else {
                replacement.push(id);
                continue;
            };
            let mut mid_reuses_id = true;
            if s.interval.lo < cover.lo {
                // Left part keeps id, g and start time, so its heap entry stays valid.
                self.states[id as usize].interval = Interval::new(s.interval.lo, cover.lo - 1);
                replacement.push(id);
                mid_reuses_id = false;
            }
            let mid = if mid_reuses_id {
                let st = &mut self.states[id as usize];
                st.interval = cover;
                st.g = cost;
                st.parent = Some(parent);
                id
            } else {
                self.alloc(v, cover, cost, Some(parent))
            };
            self.push(mid, now, h_v);
            replacement.push(mid);
            changed.push(mid);
            if cover.hi < s.interval.hi {
                let right = self.alloc(v, Interval::new(cover.hi + 1, s.interval.hi), s.g, s.parent);
                self.push(right, now, h_v);
                replacement.push(right);
            }
        }
        self.by_vertex
            .get_mut(&v)
            .expect("created vertex")
            .splice(start..end, replacement);
    }

    /// Checks that every created vertex is partitioned into disjoint
    /// ascending states covering `[t_start, inf)` minus its vertex
    /// constraints.
    pub fn check_partition(&self, cons: &ConstraintIndex, t_start: Time) -> Result<(), String> {
        for (&v, ids) in &self.by_vertex {
            let safe = build_safe_intervals(v, cons, t_start);
            let mut pieces: Vec<Interval> = ids.iter().map(|&id| self.states[id as usize].interval).collect();
            for w in pieces.windows(2) {
                if w[0].hi >= w[1].lo {
                    return Err(format!("{v}: overlapping or unsorted {} {}", w[0], w[1]));
                }
            }
            for &id in ids {
                if self.states[id as usize].status == StateStatus::Dead {
                    return Err(format!("{v}: dead state {id} still listed"));
                }
            }
            // merge touching pieces and compare with the safe intervals
            let mut merged: Vec<Interval> = Vec::new();
            for p in pieces.drain(..) {
                match merged.last_mut() {
                    Some(last) if last.hi != INF && last.hi + 1 == p.lo => last.hi = p.hi,
                    _ => merged.push(p),
                }
            }
            if merged != safe {
                return Err(format!("{v}: pieces {merged:?} != safe intervals {safe:?}"));
            }
        }
        Ok(())
    }

    /// Line-oriented interval table: one line per state, grouped by vertex.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        for v in self.created_vertices() {
            for (id, s) in self.states_at(v) {
                let status = match s.status {
                    StateStatus::Open => "open",
                    StateStatus::Closed => "closed",
                    StateStatus::Expired => "expired",
                    StateStatus::Dead => "dead",
                };
                let g = if s.g == INF { "inf".to_string() } else { s.g.to_string() };
                let f = if s.g == INF { "inf".to_string() } else { s.f().to_string() };
                let _ = writeln!(out, "{v} #{id} {} g={g} h={} f={f} {status}", s.interval, s.h);
            }
        }
        out
    }
}
