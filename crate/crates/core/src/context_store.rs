//! Two-level planning-context table: agent -> constraint-set key -> search
//! context, with exclusive checkout between `get_ipc` and `put_ipc`.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AgentId, ConstraintSet};
use crate::srsipp::SearchContext;
use crate::time::Time;

/// Stored states above which [`PlanningContext::put_ipc`] evicts every
/// context planned under a non-empty constraint set. Roughly 2 GB.
pub const DEFAULT_STATE_BUDGET: u64 = 20_000_000;

#[derive(Debug)]
enum Slot {
    Stored(SearchContext),
    CheckedOut,
}

#[derive(Debug)]
struct Entry {
    slot: Slot,
    /// Earliest constrained time of the key's set.
    min_time: Option<Time>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StoreMetrics {
    pub hits: u64,
    pub misses: u64,
    pub entries: u64,
    pub resident_states: u64,
    pub evictions: u64,
}

#[derive(Debug)]
pub struct PlanningContext {
    table: BTreeMap<AgentId, FxHashMap<Vec<u8>, Entry>>,
    hits: u64,
    misses: u64,
    evictions: u64,
    /// States held by stored (not checked-out) contexts.
    resident: u64,
    budget: u64,
    /// Every lookup misses; stored contexts are dropped on put.
    disabled: bool,
}

impl Default for PlanningContext {
    fn default() -> Self {
        Self::with_budget(DEFAULT_STATE_BUDGET)
    }
}

impl PlanningContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_budget(max_resident_states: u64) -> Self {
        PlanningContext {
            table: BTreeMap::new(),
            hits: 0,
            misses: 0,
            evictions: 0,
            resident: 0,
            budget: max_resident_states,
            disabled: false,
        }
    }

    /// A store that never returns a previous context.
    pub fn always_miss() -> Self {
        PlanningContext {
            disabled: true,
            ..Self::default()
        }
    }

    /// Checks out the context for `(agent, cons)`, or a fresh one on a miss.
    pub fn get_ipc(&mut self, agent: AgentId, cons: &ConstraintSet) -> Result<SearchContext> {
        let key = cons.canonical_key();
        let per_agent = self.table.entry(agent).or_default();
        let Some(entry) = per_agent.get_mut(&key) else {
            let min_time = cons.iter().map(|c| c.time()).min();
            per_agent.insert(key, Entry { slot: Slot::CheckedOut, min_time });
            self.misses += 1;
            return Ok(SearchContext::new());
        };
        match std::mem::replace(&mut entry.slot, Slot::CheckedOut) {
            Slot::CheckedOut => Err(Error::Usage(format!(
                "planning context of {agent} for {} constraints is already checked out",
                cons.len()
            ))),
            Slot::Stored(ctx) => {
                self.resident -= ctx.resident_states() as u64;
                if self.disabled {
                    self.misses += 1;
                    Ok(SearchContext::new())
                } else {
                    self.hits += 1;
                    Ok(ctx)
                }
            }
        }
    }

    /// Returns a checked-out context to the store.
    pub fn put_ipc(&mut self, agent: AgentId, cons: &ConstraintSet, ctx: SearchContext) -> Result<()> {
        let key = cons.canonical_key();
        let stray = || Error::Usage(format!("put_ipc for {agent} without a matching get_ipc"));
        let per_agent = self.table.get_mut(&agent).ok_or_else(stray)?;
        let entry = per_agent
            .get_mut(&key)
            .filter(|e| matches!(e.slot, Slot::CheckedOut))
            .ok_or_else(stray)?;
        if self.disabled {
            per_agent.remove(&key);
            return Ok(());
        }
        self.resident += ctx.resident_states() as u64;
        entry.slot = Slot::Stored(ctx);
        if self.resident > self.budget {
            self.evict_constrained();
        }
        Ok(())
    }

    /// Drops every stored context whose constraint set holds a constraint
    /// before `now`. Conflicts and root constraints of a search at `now` or
    /// later never reach back before it, so those keys cannot come up again.
    pub fn purge_before(&mut self, now: Time) {
        self.retain(|e| e.min_time.is_none_or(|t| t >= now));
    }

    fn evict_constrained(&mut self) {
        self.evictions += 1;
        self.retain(|e| e.min_time.is_none());
    }

    /// Keeps checked-out entries and the stored ones `keep` accepts.
    fn retain(&mut self, keep: impl Fn(&Entry) -> bool) {
        let mut freed = 0;
        for per_agent in self.table.values_mut() {
            per_agent.retain(|_, e| match &e.slot {
                Slot::CheckedOut => true,
                Slot::Stored(ctx) => {
                    let k = keep(e);
                    if !k {
                        freed += ctx.resident_states() as u64;
                    }
                    k
                }
            });
        }
        self.resident -= freed;
    }

    /// Drops every context of `agent`.
    pub fn purge_agent(&mut self, agent: AgentId) {
        if let Some(per_agent) = self.table.remove(&agent) {
            for e in per_agent.values() {
                if let Slot::Stored(ctx) = &e.slot {
                    self.resident -= ctx.resident_states() as u64;
                }
            }
        }
    }

    pub fn contains(&self, agent: AgentId, cons: &ConstraintSet) -> bool {
        self.table
            .get(&agent)
            .is_some_and(|m| m.contains_key(&cons.canonical_key()))
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.table.keys().copied()
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn metrics(&self) -> StoreMetrics {
        StoreMetrics {
            hits: self.hits,
            misses: self.misses,
            entries: self.table.values().map(|m| m.len() as u64).sum(),
            resident_states: self.resident,
            evictions: self.evictions,
        }
    }
}
