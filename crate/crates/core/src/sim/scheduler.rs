//! Schedulers pick, at every point, which process moves next or crashes.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::value::ProcessId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Step(ProcessId),
    Crash(ProcessId),
}

/// A replayable run: the seed it came from and every decision taken.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub seed: u64,
    pub decisions: Vec<Decision>,
}

/// Crash `process` once it has taken `after` of its own steps.
pub type CrashPlan = BTreeMap<ProcessId, u64>;

/// What a scheduler may look at.
pub struct SchedView<'a> {
    /// Processes that can take a step now, ascending.
    pub enabled: &'a [ProcessId],
    /// Processes that have neither finished nor crashed, ascending.
    pub live: &'a [ProcessId],
    /// Decisions so far taken by each process.
    pub own_steps: &'a BTreeMap<ProcessId, u64>,
}

impl SchedView<'_> {
    fn due_crash(&self, plan: &CrashPlan) -> Option<ProcessId> {
        plan.iter()
            .find(|(p, after)| {
                self.live.contains(p) && self.own_steps.get(p).copied().unwrap_or(0) >= **after
            })
            .map(|(p, _)| *p)
    }
}

pub trait Scheduler {
    fn seed(&self) -> u64 {
        0
    }

    /// Next decision, or `None` to stop the run early.
    fn decide(&mut self, view: &SchedView<'_>) -> Option<Decision>;
}

/// Uniform choice among enabled processes, driven by a seeded ChaCha stream.
pub struct RandomScheduler {
    seed: u64,
    rng: ChaCha8Rng,
    crashes: CrashPlan,
}

impl RandomScheduler {
    pub fn new(seed: u64) -> Self {
        RandomScheduler {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            crashes: CrashPlan::new(),
        }
    }

    pub fn with_crashes(mut self, crashes: CrashPlan) -> Self {
        self.crashes = crashes;
        self
    }
}

impl Scheduler for RandomScheduler {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn decide(&mut self, view: &SchedView<'_>) -> Option<Decision> {
        if let Some(p) = view.due_crash(&self.crashes) {
            self.crashes.remove(&p);
            return Some(Decision::Crash(p));
        }
        if view.enabled.is_empty() {
            return None;
        }
        let i = self.rng.gen_range(0..view.enabled.len());
        Some(Decision::Step(view.enabled[i]))
    }
}

/// Feeds back a recorded schedule.
pub struct ReplayScheduler {
    schedule: Schedule,
    next: usize,
}

impl ReplayScheduler {
    pub fn new(schedule: Schedule) -> Self {
        ReplayScheduler { schedule, next: 0 }
    }
}

impl Scheduler for ReplayScheduler {
    fn seed(&self) -> u64 {
        self.schedule.seed
    }

    fn decide(&mut self, _view: &SchedView<'_>) -> Option<Decision> {
        let d = self.schedule.decisions.get(self.next).copied();
        self.next += 1;
        d
    }
}

/// Follows a fixed list of processes, then hands over to a fallback.
pub struct ScriptedScheduler<S> {
    script: Vec<ProcessId>,
    next: usize,
    fallback: S,
}

impl<S: Scheduler> ScriptedScheduler<S> {
    pub fn new(script: Vec<ProcessId>, fallback: S) -> Self {
        ScriptedScheduler { script, next: 0, fallback }
    }
}

impl<S: Scheduler> Scheduler for ScriptedScheduler<S> {
    fn seed(&self) -> u64 {
        self.fallback.seed()
    }

    fn decide(&mut self, view: &SchedView<'_>) -> Option<Decision> {
        while let Some(&p) = self.script.get(self.next) {
            self.next += 1;
            if view.enabled.contains(&p) {
                return Some(Decision::Step(p));
            }
        }
        self.fallback.decide(view)
    }
}

/// Takes a prescribed index into the enabled list at each branching point and
/// the first option past the prescription, recording what it saw. Used for
/// depth-first enumeration by re-execution.
pub struct ChoiceScheduler {
    prescribed: Vec<usize>,
    pub(crate) trace: Vec<(usize, usize)>,
    crashes: CrashPlan,
}

impl ChoiceScheduler {
    pub fn new(prescribed: Vec<usize>, crashes: CrashPlan) -> Self {
        ChoiceScheduler {
            prescribed,
            trace: Vec::new(),
            crashes,
        }
    }

    /// Prefix for the next unexplored run, or `None` when the tree is exhausted.
    pub fn next_prefix(trace: &[(usize, usize)]) -> Option<Vec<usize>> {
        let pos = trace.iter().rposition(|&(i, n)| i + 1 < n)?;
        let mut prefix: Vec<usize> = trace[..pos].iter().map(|&(i, _)| i).collect();
        prefix.push(trace[pos].0 + 1);
        Some(prefix)
    }
}

impl Scheduler for ChoiceScheduler {
    fn decide(&mut self, view: &SchedView<'_>) -> Option<Decision> {
        if let Some(p) = view.due_crash(&self.crashes) {
            self.crashes.remove(&p);
            return Some(Decision::Crash(p));
        }
        if view.enabled.is_empty() {
            return None;
        }
        let n = view.enabled.len();
        let i = self.prescribed.get(self.trace.len()).copied().unwrap_or(0).min(n - 1);
        self.trace.push((i, n));
        Some(Decision::Step(view.enabled[i]))
    }
}
