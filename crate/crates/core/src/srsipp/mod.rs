//! Backward safe-interval search over time-interval-space states whose
//! OPEN/CLOSED lists survive between calls.
//!
//! The search runs from the goal toward the agent's current state. Because
//! the goal never changes for an agent, a context built for one current
//! state stays valid for later ones under the same constraint set: closed
//! states keep their exact cost-to-goal, and open states only need their
//! heuristic refreshed.
//!
//! A popped state is closed only on the time points whose point-wise
//! evaluation `g + max(t - now, h_v)` does not exceed the popped `f`; the
//! remaining later time points go back to OPEN. Closing the whole interval
//! would freeze `g` for time points that a later, cheaper route could still
//! reach, which breaks reuse once `now` moves forward.

mod context;
mod intervals;
mod search;

pub use context::{SearchContext, StateId, StateStatus, TisState};
pub use intervals::{build_safe_intervals, dummy_son, filter_edge_times, h_tis};
pub use search::{build_path, cost_bound, srsipp_search, stop_check, Candidate, SearchOutcome, SearchParams};
