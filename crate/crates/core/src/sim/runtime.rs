//! Single-threaded executor that interleaves process programs one shared
//! access at a time.
//!
//! A process is an ordinary future. It yields to the scheduler by awaiting
//! [`Ctx::step`] right before each access to a shared object; the code between
//! two yields runs atomically. Crashing a process drops its future, so a crash
//! can only ever happen between two accesses.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::future::Future;
use std::pin::Pin;
use std::rc::Rc;
use std::task::{Context, Poll, Waker};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::history::{Event, EventKind, History, LpMarker};
use super::scheduler::{Decision, SchedView, Schedule, Scheduler};
use crate::ops::{Call, Ret};
use crate::value::ProcessId;

pub const DEFAULT_MAX_STEPS: u64 = 10_000;

/// A misuse of a shared object. These indicate a bug in a program or a
/// construction, never an ordinary operation outcome.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ObjectError {
    #[error("{caller} wrote register owned by {writer}")]
    WriterViolation { writer: ProcessId, caller: ProcessId },
    #[error("{caller} is not a participant of consensus cell {cell}")]
    ParticipantViolation { cell: usize, caller: ProcessId },
    #[error("{caller} proposed twice to consensus cell {cell}")]
    RepeatedProposal { cell: usize, caller: ProcessId },
    #[error("consensus cell with {participants} participants exceeds configured power {power}")]
    PowerExceeded { participants: usize, power: usize },
    #[error("slot {index} of {object} received two different records")]
    UniquenessViolation { object: String, index: usize },
    #[error("{0}")]
    Invariant(String),
}

pub type ProcessFuture = Pin<Box<dyn Future<Output = Result<(), ObjectError>>>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Scheduler decisions allowed before the run counts as a liveness failure.
    pub max_steps: u64,
    /// Largest participant set a consensus cell may be created with.
    pub consensus_power: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            max_steps: DEFAULT_MAX_STEPS,
            consensus_power: 0,
        }
    }
}

/// Shared accesses performed by one completed operation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCost {
    pub process: ProcessId,
    pub object: String,
    pub op: String,
    pub accesses: u64,
}

struct OpenOp {
    op: &'static str,
    accesses_at_invoke: u64,
}

#[derive(Default)]
struct State {
    events: Vec<Event>,
    accesses: BTreeMap<ProcessId, u64>,
    open: HashMap<(ProcessId, String), OpenOp>,
    op_costs: Vec<OpCost>,
    waiting: BTreeMap<ProcessId, Rc<dyn Fn() -> bool>>,
    consensus_cells: usize,
    consensus_proposals: usize,
}

struct Shared {
    opts: SimOptions,
    st: RefCell<State>,
}

/// A process's handle on the simulator.
#[derive(Clone)]
pub struct Ctx {
    pid: ProcessId,
    shared: Rc<Shared>,
}

impl Ctx {
    pub fn pid(&self) -> ProcessId {
        self.pid
    }

    pub fn options(&self) -> SimOptions {
        self.shared.opts
    }

    /// Yields to the scheduler; the next shared access happens when it resumes.
    pub fn step(&self) -> StepFuture {
        StepFuture {
            ctx: self.clone(),
            yielded: false,
        }
    }

    /// Blocks until `pred` holds. Blocked processes are not offered to the scheduler.
    pub fn wait_until(&self, pred: impl Fn() -> bool + 'static) -> WaitFuture {
        WaitFuture {
            ctx: self.clone(),
            pred: Rc::new(pred),
        }
    }

    /// Shared accesses this process has performed so far.
    pub fn accesses(&self) -> u64 {
        self.shared.st.borrow().accesses.get(&self.pid).copied().unwrap_or(0)
    }

    fn push_event(&self, object: &str, kind: EventKind) {
        let mut st = self.shared.st.borrow_mut();
        let event_id = st.events.len() as u64;
        st.events.push(Event {
            event_id,
            process: self.pid,
            object: object.to_owned(),
            kind,
        });
    }

    pub fn invoke(&self, object: &str, call: Call) {
        let accesses = self.accesses();
        let op = call.name();
        self.push_event(object, EventKind::Invoke(call));
        self.shared.st.borrow_mut().open.insert(
            (self.pid, object.to_owned()),
            OpenOp { op, accesses_at_invoke: accesses },
        );
    }

    pub fn respond(&self, object: &str, ret: Ret) {
        let accesses = self.accesses();
        let open = self
            .shared
            .st
            .borrow_mut()
            .open
            .remove(&(self.pid, object.to_owned()));
        let op = open.as_ref().map(|o| o.op).unwrap_or("unknown");
        if let Some(o) = &open {
            self.shared.st.borrow_mut().op_costs.push(OpCost {
                process: self.pid,
                object: object.to_owned(),
                op: o.op.to_owned(),
                accesses: accesses - o.accesses_at_invoke,
            });
        }
        self.push_event(object, EventKind::Respond { op: op.to_owned(), ret });
    }

    pub fn mark_lp(&self, object: &str, marker: LpMarker) {
        self.push_event(object, EventKind::Lp(marker));
    }

    pub(crate) fn register_consensus_cell(&self, participants: usize) -> Result<usize, ObjectError> {
        let power = self.shared.opts.consensus_power;
        if participants > power {
            return Err(ObjectError::PowerExceeded { participants, power });
        }
        let mut st = self.shared.st.borrow_mut();
        st.consensus_cells += 1;
        Ok(st.consensus_cells - 1)
    }

    pub(crate) fn count_proposal(&self) {
        self.shared.st.borrow_mut().consensus_proposals += 1;
    }
}

pub struct StepFuture {
    ctx: Ctx,
    yielded: bool,
}

impl Future for StepFuture {
    type Output = ();

    fn poll(mut self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<()> {
        if self.yielded {
            let pid = self.ctx.pid;
            *self.ctx.shared.st.borrow_mut().accesses.entry(pid).or_insert(0) += 1;
            Poll::Ready(())
        } else {
            self.yielded = true;
            Poll::Pending
        }
    }
}

pub struct WaitFuture {
    ctx: Ctx,
    pred: Rc<dyn Fn() -> bool>,
}

impl Future for WaitFuture {
    type Output = ();

    fn poll(self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<()> {
        let ready = (self.pred)();
        let mut st = self.ctx.shared.st.borrow_mut();
        if ready {
            st.waiting.remove(&self.ctx.pid);
            Poll::Ready(())
        } else {
            st.waiting.insert(self.ctx.pid, self.pred.clone());
            Poll::Pending
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureKind {
    /// The step budget ran out with processes still running.
    Budget { max_steps: u64 },
    /// Every live process is blocked.
    Deadlock,
    /// A program returned an error.
    ProcessError { process: ProcessId, error: ObjectError },
    /// The scheduler stopped before all processes finished (e.g. a replay ran out).
    Stopped,
    /// The scheduler picked a process that could not move.
    InvalidDecision { decision: Decision },
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub history: History,
    pub schedule: Schedule,
    pub op_costs: Vec<OpCost>,
    pub accesses: BTreeMap<ProcessId, u64>,
    pub consensus_cells: usize,
    pub consensus_proposals: usize,
    pub steps: u64,
}

#[derive(Clone, Debug)]
pub struct RunFailure {
    pub kind: FailureKind,
    pub history: History,
    pub schedule: Schedule,
}

enum Proc {
    Running(ProcessFuture),
    Done,
    Crashed,
}

/// A set of processes ready to be interleaved.
pub struct Sim {
    shared: Rc<Shared>,
    procs: BTreeMap<ProcessId, Proc>,
    error: Option<(ProcessId, ObjectError)>,
}

fn poll_once(fut: &mut ProcessFuture) -> Poll<Result<(), ObjectError>> {
    let mut cx = Context::from_waker(Waker::noop());
    fut.as_mut().poll(&mut cx)
}

impl Sim {
    pub fn new(opts: SimOptions) -> Self {
        Sim {
            shared: Rc::new(Shared {
                opts,
                st: RefCell::new(State::default()),
            }),
            procs: BTreeMap::new(),
            error: None,
        }
    }

    /// A context for `pid`, usable to build objects before spawning.
    pub fn ctx(&self, pid: ProcessId) -> Ctx {
        Ctx {
            pid,
            shared: self.shared.clone(),
        }
    }

    /// Starts `pid`'s program and runs its local prefix up to the first yield.
    pub fn spawn<F, Fut>(&mut self, pid: ProcessId, program: F)
    where
        F: FnOnce(Ctx) -> Fut,
        Fut: Future<Output = Result<(), ObjectError>> + 'static,
    {
        assert!(!self.procs.contains_key(&pid), "{pid} spawned twice");
        let mut fut: ProcessFuture = Box::pin(program(self.ctx(pid)));
        let proc = match poll_once(&mut fut) {
            Poll::Pending => Proc::Running(fut),
            Poll::Ready(Ok(())) => Proc::Done,
            Poll::Ready(Err(e)) => {
                self.error.get_or_insert((pid, e));
                Proc::Done
            }
        };
        self.procs.insert(pid, proc);
    }

    fn enabled(&self, live: &[ProcessId]) -> Vec<ProcessId> {
        let waiting = self.shared.st.borrow().waiting.clone();
        live.iter()
            .copied()
            .filter(|p| waiting.get(p).is_none_or(|pred| pred()))
            .collect()
    }

    fn finish(self, decisions: Vec<Decision>, seed: u64, kind: Option<FailureKind>, steps: u64) -> Result<RunOutcome, RunFailure> {
        drop(self.procs);
        let st = self.shared.st.take();
        let history = History { events: st.events };
        let schedule = Schedule { seed, decisions };
        match kind {
            Some(kind) => Err(RunFailure { kind, history, schedule }),
            None => Ok(RunOutcome {
                history,
                schedule,
                op_costs: st.op_costs,
                accesses: st.accesses,
                consensus_cells: st.consensus_cells,
                consensus_proposals: st.consensus_proposals,
                steps,
            }),
        }
    }

    /// Runs until every process has finished or crashed.
    pub fn run(mut self, sched: &mut dyn Scheduler) -> Result<RunOutcome, RunFailure> {
        let seed = sched.seed();
        let mut decisions = Vec::new();
        let mut own_steps: BTreeMap<ProcessId, u64> = BTreeMap::new();
        let max_steps = self.shared.opts.max_steps;
        loop {
            if let Some((process, error)) = self.error.take() {
                let steps = decisions.len() as u64;
                return self.finish(decisions, seed, Some(FailureKind::ProcessError { process, error }), steps);
            }
            let live: Vec<ProcessId> = self
                .procs
                .iter()
                .filter(|(_, p)| matches!(p, Proc::Running(_)))
                .map(|(pid, _)| *pid)
                .collect();
            let steps = decisions.len() as u64;
            if live.is_empty() {
                return self.finish(decisions, seed, None, steps);
            }
            if steps >= max_steps {
                return self.finish(decisions, seed, Some(FailureKind::Budget { max_steps }), steps);
            }
            let enabled = self.enabled(&live);
            let view = SchedView {
                enabled: &enabled,
                live: &live,
                own_steps: &own_steps,
            };
            let Some(decision) = sched.decide(&view) else {
                let kind = if enabled.is_empty() {
                    FailureKind::Deadlock
                } else {
                    FailureKind::Stopped
                };
                return self.finish(decisions, seed, Some(kind), steps);
            };
            match decision {
                Decision::Step(pid) if enabled.contains(&pid) => {
                    let Some(Proc::Running(fut)) = self.procs.get_mut(&pid) else {
                        unreachable!("enabled processes are running")
                    };
                    match poll_once(fut) {
                        Poll::Pending => {}
                        Poll::Ready(res) => {
                            if let Err(e) = res {
                                self.error = Some((pid, e));
                            }
                            self.procs.insert(pid, Proc::Done);
                        }
                    }
                    *own_steps.entry(pid).or_insert(0) += 1;
                }
                Decision::Crash(pid) if live.contains(&pid) => {
                    self.procs.insert(pid, Proc::Crashed);
                    let mut st = self.shared.st.borrow_mut();
                    st.waiting.remove(&pid);
                    let event_id = st.events.len() as u64;
                    st.events.push(Event {
                        event_id,
                        process: pid,
                        object: String::new(),
                        kind: EventKind::Crash,
                    });
                }
                _ => {
                    decisions.push(decision);
                    let steps = decisions.len() as u64;
                    return self.finish(decisions, seed, Some(FailureKind::InvalidDecision { decision }), steps);
                }
            }
            decisions.push(decision);
        }
    }

    /// Crashed processes so far (only meaningful before `run`).
    pub fn crashed(&self) -> BTreeSet<ProcessId> {
        self.procs
            .iter()
            .filter(|(_, p)| matches!(p, Proc::Crashed))
            .map(|(pid, _)| *pid)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scheduler::{RandomScheduler, ReplayScheduler};
    use std::cell::Cell;

    fn counter_sim(shared: Rc<Cell<u32>>, n: u32, per_proc: u32) -> Sim {
        let mut sim = Sim::new(SimOptions::default());
        for i in 1..=n {
            let c = shared.clone();
            sim.spawn(ProcessId(i), move |ctx| async move {
                for _ in 0..per_proc {
                    ctx.step().await;
                    c.set(c.get() + 1);
                }
                Ok(())
            });
        }
        sim
    }

    #[test]
    fn runs_to_completion_and_counts_accesses() {
        let c = Rc::new(Cell::new(0));
        let out = counter_sim(c.clone(), 3, 4).run(&mut RandomScheduler::new(1)).unwrap();
        assert_eq!(c.get(), 12);
        assert_eq!(out.steps, 12);
        assert!(out.accesses.values().all(|&a| a == 4));
    }

    #[test]
    fn replay_reproduces_schedule() {
        let out = counter_sim(Rc::new(Cell::new(0)), 3, 3).run(&mut RandomScheduler::new(5)).unwrap();
        let again = counter_sim(Rc::new(Cell::new(0)), 3, 3)
            .run(&mut ReplayScheduler::new(out.schedule.clone()))
            .unwrap();
        assert_eq!(out.schedule.decisions, again.schedule.decisions);
    }

    #[test]
    fn budget_overrun_is_reported() {
        let mut sim = Sim::new(SimOptions { max_steps: 5, ..Default::default() });
        sim.spawn(ProcessId(1), |ctx| async move {
            loop {
                ctx.step().await;
            }
        });
        let err = sim.run(&mut RandomScheduler::new(0)).unwrap_err();
        assert_eq!(err.kind, FailureKind::Budget { max_steps: 5 });
    }

    #[test]
    fn blocked_processes_deadlock() {
        let mut sim = Sim::new(SimOptions::default());
        sim.spawn(ProcessId(1), |ctx| async move {
            ctx.wait_until(|| false).await;
            Ok(())
        });
        let err = sim.run(&mut RandomScheduler::new(0)).unwrap_err();
        assert_eq!(err.kind, FailureKind::Deadlock);
    }

    #[test]
    fn crash_drops_the_process() {
        let c = Rc::new(Cell::new(0));
        let mut sched = RandomScheduler::new(0).with_crashes([(ProcessId(2), 1)].into());
        let out = counter_sim(c.clone(), 2, 3).run(&mut sched).unwrap();
        assert_eq!(c.get(), 3 + 1);
        assert_eq!(out.history.crashed(), [ProcessId(2)].into());
    }
}
