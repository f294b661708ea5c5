//! Aggregation of many runs of one scenario into a machine-readable report.

use serde::{Deserialize, Serialize};

use crate::scenario::{CheckResult, CheckStatus, ExhaustiveReport, ObjectChoice, RunReport, RunStatus, Scenario};
use crate::sim::Schedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Seeded,
    Exhaustive,
}

/// Verdict of one run. For exhaustive campaigns `seed` is the run's index in enumeration order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunVerdict {
    pub seed: u64,
    pub status: RunStatus,
    /// Checks that did not pass; empty for a clean run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub findings: Vec<CheckResult>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub runs: usize,
    pub passed: usize,
    pub violations: usize,
    pub overruns: usize,
    /// Runs where at least one check was skipped.
    pub unchecked: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirstFailure {
    pub seed: u64,
    pub status: RunStatus,
    pub findings: Vec<CheckResult>,
    /// Replaying this schedule reproduces the failing history exactly.
    pub schedule: Schedule,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExhaustiveSummary {
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub over_bound: Option<u64>,
    pub step_bound: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub scenario: String,
    pub object: ObjectChoice,
    pub mode: Mode,
    pub totals: Totals,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exhaustive: Option<ExhaustiveSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<FirstFailure>,
    pub runs: Vec<RunVerdict>,
}

fn verdict(r: &RunReport) -> RunVerdict {
    RunVerdict {
        seed: r.seed,
        status: r.status,
        findings: r.checks.iter().filter(|c| c.status != CheckStatus::Pass).cloned().collect(),
    }
}

fn tally(totals: &mut Totals, r: &RunReport) {
    totals.runs += 1;
    match r.status {
        RunStatus::Pass => totals.passed += 1,
        RunStatus::Violation => totals.violations += 1,
        RunStatus::Overrun => totals.overruns += 1,
    }
    if r.checks.iter().any(|c| c.status == CheckStatus::Skipped) {
        totals.unchecked += 1;
    }
}

fn first_failure(r: &RunReport) -> FirstFailure {
    FirstFailure {
        seed: r.seed,
        status: r.status,
        findings: verdict(r).findings,
        schedule: r.schedule.clone(),
    }
}

impl CampaignReport {
    /// Builds a seeded-campaign report. Runs may arrive in any order.
    pub fn seeded(sc: &Scenario, mut runs: Vec<RunReport>) -> (Self, Option<RunReport>) {
        runs.sort_by_key(|r| r.seed);
        let mut totals = Totals::default();
        runs.iter().for_each(|r| tally(&mut totals, r));
        let failing = runs.iter().find(|r| r.status != RunStatus::Pass).cloned();
        let report = CampaignReport {
            scenario: sc.name.clone(),
            object: sc.object,
            mode: Mode::Seeded,
            totals,
            exhaustive: None,
            first_failure: failing.as_ref().map(first_failure),
            runs: runs.iter().map(verdict).collect(),
        };
        (report, failing)
    }

    /// Builds an exhaustive-campaign report. Only failing runs are listed individually.
    pub fn exhaustive(sc: &Scenario, ex: &ExhaustiveReport) -> (Self, Option<RunReport>) {
        let mut totals = Totals { runs: ex.passed, passed: ex.passed, ..Default::default() };
        ex.failures.iter().for_each(|r| tally(&mut totals, r));
        let failing = ex.failures.first().cloned();
        let report = CampaignReport {
            scenario: sc.name.clone(),
            object: sc.object,
            mode: Mode::Exhaustive,
            totals,
            exhaustive: Some(ExhaustiveSummary {
                complete: ex.complete,
                over_bound: ex.over_bound,
                step_bound: sc.schedule.step_bound,
            }),
            first_failure: failing.as_ref().map(first_failure),
            runs: ex.failures.iter().map(verdict).collect(),
        };
        (report, failing)
    }

    /// No violations and no overruns.
    pub fn clean(&self) -> bool {
        self.totals.violations == 0 && self.totals.overruns == 0
    }
}
