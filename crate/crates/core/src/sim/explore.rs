//! Depth-first enumeration of every interleaving, by re-execution.

use super::runtime::{RunFailure, RunOutcome, Sim};
use super::scheduler::{ChoiceScheduler, CrashPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreStats {
    pub runs: usize,
    /// Whether the whole schedule tree was covered.
    pub complete: bool,
}

/// Runs `build()` once per distinct schedule until the tree is exhausted,
/// `visit` returns [`Flow::Stop`], or `max_runs` is reached.
pub fn explore(
    mut build: impl FnMut() -> Sim,
    crashes: &CrashPlan,
    max_runs: usize,
    mut visit: impl FnMut(Result<RunOutcome, RunFailure>) -> Flow,
) -> ExploreStats {
    let mut prefix = Vec::new();
    let mut runs = 0;
    loop {
        let mut sched = ChoiceScheduler::new(prefix, crashes.clone());
        let res = build().run(&mut sched);
        runs += 1;
        if visit(res) == Flow::Stop {
            return ExploreStats { runs, complete: false };
        }
        match ChoiceScheduler::next_prefix(&sched.trace) {
            None => return ExploreStats { runs, complete: true },
            Some(p) if runs < max_runs => prefix = p,
            Some(_) => return ExploreStats { runs, complete: false },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::runtime::SimOptions;
    use crate::value::ProcessId;
    use std::collections::BTreeSet;

    /// Multinomial coefficient: the number of interleavings of the given step counts.
    fn interleavings(counts: &[u64]) -> u64 {
        let fact = |n: u64| (1..=n).product::<u64>();
        fact(counts.iter().sum()) / counts.iter().map(|&c| fact(c)).product::<u64>()
    }

    #[test]
    fn enumerates_every_interleaving_once() {
        for counts in [vec![2, 2], vec![1, 2, 2], vec![3, 1, 2]] {
            let mut seen = BTreeSet::new();
            let stats = explore(
                || {
                    let mut sim = Sim::new(SimOptions::default());
                    for (i, &c) in counts.iter().enumerate() {
                        sim.spawn(ProcessId(i as u32 + 1), move |ctx| async move {
                            for _ in 0..c {
                                ctx.step().await;
                            }
                            Ok(())
                        });
                    }
                    sim
                },
                &CrashPlan::new(),
                usize::MAX,
                |res| {
                    assert!(seen.insert(res.unwrap().schedule.decisions));
                    Flow::Continue
                },
            );
            assert!(stats.complete);
            assert_eq!(stats.runs as u64, interleavings(&counts));
        }
    }
}
