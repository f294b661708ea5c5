//! Deterministic simulated concurrency: processes, schedulers, base objects
//! and history recording.

mod explore;
mod history;
mod primitives;
mod runtime;
mod scheduler;

pub use explore::{explore, ExploreStats, Flow};
pub use history::{Event, EventKind, History, HistoryError, LpMarker, Operation};
pub use primitives::{Barrier, ConsensusCell, Register};
pub use runtime::{
    Ctx, FailureKind, ObjectError, OpCost, ProcessFuture, RunFailure, RunOutcome, Sim, SimOptions,
    DEFAULT_MAX_STEPS,
};
pub use scheduler::{
    ChoiceScheduler, CrashPlan, Decision, RandomScheduler, ReplayScheduler, SchedView, Schedule,
    Scheduler, ScriptedScheduler,
};
