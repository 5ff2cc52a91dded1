//! Online multi-agent path finding with sustainable replanning.
//!
//! Layers, bottom up: [`srsipp`] (backward interval search with reusable
//! contexts), [`context_store`], [`scbs`] (conflict tree), [`sim`] (online
//! replanning loop), plus the comparison solvers in [`baselines`], brute
//! force references in [`oracle`] and the benchmark harness in [`bench`].

pub mod baselines;
pub mod bench;
pub mod context_store;
pub mod error;
pub mod graph;
pub mod io;
pub mod model;
pub mod oracle;
pub mod scbs;
pub mod sim;
pub mod srsipp;
pub mod time;

pub use baselines::{SolverConfig, Variant};
pub use error::{Error, Result};
pub use graph::{Graph, GridMap, HeuristicKind, VertexId};
pub use model::{Agent, AgentId, Constraint, ConstraintSet, ExecutePlan, Path, PlanSnapshot};
pub use sim::{run_online, OnlineInstance, RunReport};
