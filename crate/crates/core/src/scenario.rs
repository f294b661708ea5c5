//! Scenario files: which object to build, what each process runs, and how to
//! schedule it. Running one schedule yields a [`RunReport`] with every check
//! that applies to the object.
//!
//! The grammar is documented in `docs/scenario-format.md`.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allowlist::AllowList;
use crate::apps::{unicity_violations, AnonAt, Ballot, EVote, Token, Wallet, WalletMap};
use crate::crypto::{
    blind_sign_roundtrip, hash_parts, BlindSigKeys, BlindingNonce, Issuer, ProofMode, Signature,
};
use crate::denylist::{DenyList, DenyListVariant};
use crate::lincheck::{
    check, find_flicker, ArraySpec, CheckError, ConsensusSpec, ProofListSpec, SequentialSpec, DEFAULT_OP_BOUND,
};
use crate::model::{ConfigError, ObjectKind, SystemConfig};
use crate::ops::{Call, Ret};
use crate::reductions::{self, AnonAtConsensus, AtomicEVote, SharedToken};
use crate::sim::{
    Barrier, CrashPlan, Ctx, EventKind, FailureKind, History, ObjectError, RandomScheduler, ReplayScheduler,
    RunFailure, RunOutcome, Schedule, Scheduler, Sim, SimOptions, DEFAULT_MAX_STEPS,
};
use crate::snapshot::{RecordedSnapshot, SnapshotArray, SnapshotKind};
use crate::value::{ProcessId, Value};

/// Name under which the object under test is recorded.
pub const OBJECT: &str = "object";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectChoice {
    Allowlist,
    Denylist,
    /// Deny-list whose consensus array is replaced by local decisions.
    DenylistLocal,
    Snapshot,
    ConsensusDenylist,
    ConsensusAnonAt,
    ConsensusEvote,
    AnonAt,
    Evote,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OpSpec {
    Append(String),
    Prove(String),
    Read,
    Update(String),
    Scan,
    Propose(String),
    Transfer { token: String, to: String },
    Vote { token: String, choice: String },
    VoteCount,
    Barrier,
}

impl OpSpec {
    fn name(&self) -> &'static str {
        match self {
            OpSpec::Append(_) => "append",
            OpSpec::Prove(_) => "prove",
            OpSpec::Read => "read",
            OpSpec::Update(_) => "update",
            OpSpec::Scan => "scan",
            OpSpec::Propose(_) => "propose",
            OpSpec::Transfer { .. } => "transfer",
            OpSpec::Vote { .. } => "vote",
            OpSpec::VoteCount => "vote_count",
            OpSpec::Barrier => "barrier",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Program {
    pub id: u32,
    #[serde(default)]
    pub ops: Vec<OpSpec>,
    /// Crash the process once it has taken this many steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crash_after: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulePolicy {
    /// Half-open seed range `[start, end)`.
    #[serde(default = "default_seeds")]
    pub seeds: [u64; 2],
    #[serde(default)]
    pub exhaustive: bool,
    /// Exhaustive mode gives up on scenarios with a run longer than this many shared accesses.
    #[serde(default = "default_step_bound")]
    pub step_bound: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default = "default_op_bound")]
    pub op_bound: usize,
}

fn default_seeds() -> [u64; 2] {
    [0, 100]
}
fn default_step_bound() -> u64 {
    10
}
fn default_max_steps() -> u64 {
    DEFAULT_MAX_STEPS
}
fn default_op_bound() -> usize {
    DEFAULT_OP_BOUND
}

impl Default for SchedulePolicy {
    fn default() -> Self {
        SchedulePolicy {
            seeds: default_seeds(),
            exhaustive: false,
            step_bound: default_step_bound(),
            max_steps: default_max_steps(),
            op_bound: default_op_bound(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnonAtSetup {
    /// Wallet id to the processes allowed to spend from it.
    #[serde(default)]
    pub wallets: BTreeMap<String, Vec<u32>>,
    /// Initial token name to the wallet that owns it.
    #[serde(default)]
    pub tokens: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EVoteSetup {
    #[serde(default = "default_issuer_seed")]
    pub issuer_seed: String,
    /// Ballot tokens the issuer signs. Ballots for any other token carry a forged signature.
    #[serde(default)]
    pub signed: Vec<String>,
}

fn default_issuer_seed() -> String {
    "issuer".to_owned()
}

impl Default for EVoteSetup {
    fn default() -> Self {
        EVoteSetup { issuer_seed: default_issuer_seed(), signed: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub object: ObjectChoice,
    pub n: u32,
    #[serde(default)]
    pub snapshots: SnapshotKind,
    /// Defaults to every process.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub managers: Option<Vec<u32>>,
    /// Defaults to every process.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verifiers: Option<Vec<u32>>,
    #[serde(default)]
    pub proof_mode: ProofMode,
    /// Values listed from the start (allow-list only).
    #[serde(default)]
    pub genesis: Vec<String>,
    #[serde(default, rename = "process")]
    pub processes: Vec<Program>,
    #[serde(default)]
    pub schedule: SchedulePolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anon_at: Option<AnonAtSetup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evote: Option<EVoteSetup>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let sc: Scenario = toml::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios serialize")
    }

    pub fn system_config(&self) -> Result<SystemConfig, ConfigError> {
        let all = || (1..=self.n).collect::<Vec<_>>();
        let managers = self.managers.clone().unwrap_or_else(all);
        let verifiers = self.verifiers.clone().unwrap_or_else(all);
        Ok(SystemConfig::new(self.n, managers, verifiers)?.with_proof_mode(self.proof_mode))
    }

    pub fn crash_plan(&self) -> CrashPlan {
        self.processes
            .iter()
            .filter_map(|p| p.crash_after.map(|c| (ProcessId(p.id), c)))
            .collect()
    }

    fn allowed_ops(&self) -> &'static [&'static str] {
        match self.object {
            ObjectChoice::Allowlist | ObjectChoice::Denylist | ObjectChoice::DenylistLocal => {
                &["append", "prove", "read", "barrier"]
            }
            ObjectChoice::Snapshot => &["update", "scan", "barrier"],
            ObjectChoice::ConsensusDenylist | ObjectChoice::ConsensusAnonAt | ObjectChoice::ConsensusEvote => {
                &["propose"]
            }
            ObjectChoice::AnonAt => &["transfer", "barrier"],
            ObjectChoice::Evote => &["vote", "vote_count", "barrier"],
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.system_config()?;
        let mut seen = BTreeSet::new();
        for prog in &self.processes {
            if prog.id == 0 || prog.id > self.n {
                return Err(invalid(format!("process {} is outside 1..={}", prog.id, self.n)));
            }
            if !seen.insert(prog.id) {
                return Err(invalid(format!("process {} has two programs", prog.id)));
            }
            for op in &prog.ops {
                if !self.allowed_ops().contains(&op.name()) {
                    return Err(invalid(format!(
                        "process {}: operation `{}` does not apply to {:?} objects",
                        prog.id,
                        op.name(),
                        self.object
                    )));
                }
            }
        }
        if !self.genesis.is_empty() && self.object != ObjectChoice::Allowlist {
            return Err(invalid("genesis values are only supported for allowlist objects"));
        }
        if self.schedule.seeds[0] > self.schedule.seeds[1] {
            return Err(invalid("schedule.seeds must be [start, end] with start <= end"));
        }
        if self.object == ObjectChoice::AnonAt {
            let setup = self.anon_at.clone().unwrap_or_default();
            for (token, wallet) in &setup.tokens {
                if !setup.wallets.contains_key(wallet) {
                    return Err(invalid(format!("token {token} belongs to unknown wallet {wallet}")));
                }
            }
            for prog in &self.processes {
                for op in &prog.ops {
                    if let OpSpec::Transfer { token, to } = op {
                        if !setup.tokens.contains_key(token) {
                            return Err(invalid(format!("process {}: unknown token {token}", prog.id)));
                        }
                        if !setup.wallets.contains_key(to) {
                            return Err(invalid(format!("process {}: unknown wallet {to}", prog.id)));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn seeds(&self) -> std::ops::Range<u64> {
        self.schedule.seeds[0]..self.schedule.seeds[1]
    }

    fn sim_options(&self) -> SimOptions {
        let power = match self.object {
            ObjectChoice::Allowlist | ObjectChoice::Snapshot | ObjectChoice::ConsensusEvote => 0,
            ObjectChoice::Denylist | ObjectChoice::DenylistLocal => {
                self.verifiers.as_ref().map_or(self.n as usize, |v| v.iter().collect::<BTreeSet<_>>().len())
            }
            ObjectChoice::ConsensusDenylist | ObjectChoice::ConsensusAnonAt | ObjectChoice::AnonAt | ObjectChoice::Evote => {
                self.n as usize
            }
        };
        SimOptions { max_steps: self.schedule.max_steps, consensus_power: power }
    }
}

fn wallet(id: &str) -> Wallet {
    Wallet::from_secret(id, Value::from(format!("sk-{id}")))
}

fn genesis_token(name: &str, owner: &Wallet) -> Token {
    Token::mint(Value::from(format!("serial-{name}")), owner.pk.clone())
}

fn ballot(token: &str, choice: &str, issuer: &Issuer, signed: &BTreeSet<String>) -> Ballot {
    let t = Value::from(token);
    let signature = if signed.contains(token) {
        blind_sign_roundtrip(&t, issuer, &BlindingNonce(Value::from(format!("blind-{token}")))).1
    } else {
        Signature { mac: hash_parts("forged", &[t.as_bytes()]), blinding: Value::from("none") }
    };
    Ballot { token: t, signature, choice: Value::from(choice) }
}

/// The object under test, kept alive past the run for audits.
enum Target {
    Allow(Rc<AllowList>),
    Deny(Rc<DenyList>),
    Snapshot(Rc<RecordedSnapshot>),
    ConsDeny { dl: Rc<DenyList>, as_list: Rc<SnapshotArray<Option<Value>>> },
    ConsAnonAt(Rc<AnonAtConsensus>),
    ConsEVote(Rc<AtomicEVote>),
    AnonAt { anon: Rc<AnonAt>, tokens: Rc<BTreeMap<String, (Token, Wallet)>> },
    EVote { evote: Rc<EVote>, issuer: Rc<Issuer>, signed: Rc<BTreeSet<String>> },
}

impl Target {
    fn build(sc: &Scenario) -> Self {
        let cfg = sc.system_config().expect("validated scenario");
        let n = sc.n;
        match sc.object {
            ObjectChoice::Allowlist => {
                let genesis = sc.genesis.iter().map(|s| Value::from(s.as_str())).collect();
                Target::Allow(Rc::new(AllowList::with_genesis(OBJECT, cfg, sc.snapshots, genesis)))
            }
            ObjectChoice::Denylist => Target::Deny(Rc::new(DenyList::new(OBJECT, cfg, sc.snapshots))),
            ObjectChoice::DenylistLocal => Target::Deny(Rc::new(DenyList::with_variant(
                OBJECT,
                cfg,
                sc.snapshots,
                DenyListVariant::LocalDecisions,
            ))),
            ObjectChoice::Snapshot => Target::Snapshot(Rc::new(RecordedSnapshot::new(OBJECT, sc.snapshots, n as usize))),
            ObjectChoice::ConsensusDenylist => {
                let cfg = SystemConfig::new(n, 1..=n, 1..=n).expect("n >= 1").with_proof_mode(sc.proof_mode);
                Target::ConsDeny {
                    dl: Rc::new(DenyList::new("dl", cfg, sc.snapshots)),
                    as_list: Rc::new(SnapshotArray::new(sc.snapshots, n as usize, None)),
                }
            }
            ObjectChoice::ConsensusAnonAt => {
                let source = wallet("shared");
                let token = genesis_token("shared", &source);
                let wallets = WalletMap(
                    [
                        ("shared".to_owned(), (1..=n).map(ProcessId).collect()),
                        ("sink".to_owned(), BTreeSet::new()),
                    ]
                    .into(),
                );
                let anon = AnonAt::new("anon-at", n, wallets, [token.id.clone()].into(), sc.snapshots, sc.proof_mode);
                Target::ConsAnonAt(Rc::new(AnonAtConsensus {
                    object: OBJECT.to_owned(),
                    anon,
                    shared: SharedToken { token, source, recipient: wallet("sink").pk },
                    rm_ledger: SnapshotArray::new(sc.snapshots, n as usize, None),
                    v_ledger: SnapshotArray::new(sc.snapshots, n as usize, None),
                    uncommit_hits: Default::default(),
                }))
            }
            ObjectChoice::ConsensusEvote => Target::ConsEVote(Rc::new(AtomicEVote::default())),
            ObjectChoice::AnonAt => {
                let setup = sc.anon_at.clone().unwrap_or_default();
                let wallets = WalletMap(
                    setup
                        .wallets
                        .iter()
                        .map(|(w, ps)| (w.clone(), ps.iter().copied().map(ProcessId).collect()))
                        .collect(),
                );
                let tokens: BTreeMap<String, (Token, Wallet)> = setup
                    .tokens
                    .iter()
                    .map(|(t, w)| {
                        let owner = wallet(w);
                        (t.clone(), (genesis_token(t, &owner), owner))
                    })
                    .collect();
                let genesis = tokens.values().map(|(t, _)| t.id.clone()).collect();
                Target::AnonAt {
                    anon: Rc::new(AnonAt::new(OBJECT, n, wallets, genesis, sc.snapshots, sc.proof_mode)),
                    tokens: Rc::new(tokens),
                }
            }
            ObjectChoice::Evote => {
                let setup = sc.evote.clone().unwrap_or_default();
                let issuer = Issuer::new(BlindSigKeys::setup(setup.issuer_seed.as_bytes()));
                Target::EVote {
                    evote: Rc::new(EVote::new(OBJECT, n, issuer.public(), sc.snapshots, sc.proof_mode)),
                    issuer: Rc::new(issuer),
                    signed: Rc::new(setup.signed.into_iter().collect()),
                }
            }
        }
    }

    fn clone_handle(&self) -> Self {
        match self {
            Target::Allow(a) => Target::Allow(a.clone()),
            Target::Deny(d) => Target::Deny(d.clone()),
            Target::Snapshot(s) => Target::Snapshot(s.clone()),
            Target::ConsDeny { dl, as_list } => Target::ConsDeny { dl: dl.clone(), as_list: as_list.clone() },
            Target::ConsAnonAt(c) => Target::ConsAnonAt(c.clone()),
            Target::ConsEVote(e) => Target::ConsEVote(e.clone()),
            Target::AnonAt { anon, tokens } => Target::AnonAt { anon: anon.clone(), tokens: tokens.clone() },
            Target::EVote { evote, issuer, signed } => Target::EVote {
                evote: evote.clone(),
                issuer: issuer.clone(),
                signed: signed.clone(),
            },
        }
    }

    async fn exec(&self, ctx: &Ctx, op: &OpSpec, index: usize) -> Result<(), ObjectError> {
        let val = |s: &String| Value::from(s.as_str());
        match (self, op) {
            (Target::Allow(a), OpSpec::Append(v)) => a.append(ctx, val(v)).await.map(drop),
            (Target::Allow(a), OpSpec::Prove(v)) => a.prove(ctx, val(v)).await.map(drop),
            (Target::Allow(a), OpSpec::Read) => a.read(ctx).await.map(drop),
            (Target::Deny(d), OpSpec::Append(v)) => d.append(ctx, val(v)).await.map(drop),
            (Target::Deny(d), OpSpec::Prove(v)) => d.prove(ctx, val(v)).await.map(drop),
            (Target::Deny(d), OpSpec::Read) => d.read(ctx).await.map(drop),
            (Target::Snapshot(s), OpSpec::Update(v)) => s.update(ctx, val(v)).await,
            (Target::Snapshot(s), OpSpec::Scan) => {
                s.scan(ctx).await;
                Ok(())
            }
            (Target::ConsDeny { dl, as_list }, OpSpec::Propose(v)) => {
                reductions::propose_via_denylist(ctx, OBJECT, dl, as_list, val(v)).await.map(drop)
            }
            (Target::ConsAnonAt(c), OpSpec::Propose(v)) => c.propose(ctx, val(v)).await.map(drop),
            (Target::ConsEVote(e), OpSpec::Propose(v)) => {
                reductions::propose_via_evote(ctx, OBJECT, e, val(v)).await.map(drop)
            }
            (Target::AnonAt { anon, tokens }, OpSpec::Transfer { token, to }) => {
                let (t, from) = &tokens[token];
                let seed = Value::from(format!("seed-{}-{index}", ctx.pid().0));
                anon.transfer(ctx, t, from, &wallet(to).pk, &seed).await.map(drop)
            }
            (Target::EVote { evote, issuer, signed }, OpSpec::Vote { token, choice }) => {
                evote.vote(ctx, &ballot(token, choice, issuer, signed)).await.map(drop)
            }
            (Target::EVote { evote, .. }, OpSpec::VoteCount) => evote.vote_count(ctx).await.map(drop),
            (_, op) => Err(ObjectError::Invariant(format!("operation {} does not apply here", op.name()))),
        }
    }
}

/// A ready-to-run simulator for `sc` plus a handle on its object.
pub struct Prepared {
    pub sim: Sim,
    target: Target,
}

pub fn prepare(sc: &Scenario) -> Prepared {
    let target = Target::build(sc);
    let mut sim = Sim::new(sc.sim_options());
    // The i-th barrier of each program waits for every program that has at least i+1 barriers.
    let barrier_counts: Vec<usize> = sc
        .processes
        .iter()
        .map(|p| p.ops.iter().filter(|o| **o == OpSpec::Barrier).count())
        .collect();
    let max_barriers = barrier_counts.iter().copied().max().unwrap_or(0);
    let barriers: Rc<Vec<Barrier>> = Rc::new(
        (0..max_barriers)
            .map(|i| Barrier::new(barrier_counts.iter().filter(|&&c| c > i).count()))
            .collect(),
    );
    for prog in &sc.processes {
        let target = target.clone_handle();
        let ops = prog.ops.clone();
        let barriers = barriers.clone();
        sim.spawn(ProcessId(prog.id), move |ctx| async move {
            let mut next_barrier = 0;
            for (i, op) in ops.iter().enumerate() {
                if *op == OpSpec::Barrier {
                    barriers[next_barrier].wait(&ctx).await;
                    next_barrier += 1;
                } else {
                    target.exec(&ctx, op, i).await?;
                }
            }
            Ok(())
        });
    }
    Prepared { sim, target }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The check could not run on this history (e.g. too many operations).
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub status: CheckStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    fn new(check: &str, ok: bool, detail: impl FnOnce() -> String) -> Self {
        CheckResult {
            check: check.to_owned(),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            detail: (!ok).then(detail),
        }
    }

    fn skipped(check: &str, why: String) -> Self {
        CheckResult { check: check.to_owned(), status: CheckStatus::Skipped, detail: Some(why) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Pass,
    Violation,
    /// The step budget ran out.
    Overrun,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub seed: u64,
    pub status: RunStatus,
    pub checks: Vec<CheckResult>,
    pub history: History,
    pub schedule: Schedule,
    pub failure: Option<FailureKind>,
    /// Total shared accesses over all processes.
    pub accesses: u64,
    pub consensus_cells: usize,
}

impl RunReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == name)
    }

    pub fn passed(&self, name: &str) -> bool {
        self.check(name).is_some_and(|c| c.status == CheckStatus::Pass)
    }
}

fn lincheck<S: SequentialSpec>(name: &str, spec: &S, history: &History, object: &str, bound: usize) -> CheckResult {
    match check(spec, &history.operations(object), bound) {
        Ok(v) => CheckResult::new(name, v.linearizable, || {
            v.violation.map(|x| x.description).unwrap_or_default()
        }),
        Err(e @ CheckError::BoundExceeded { .. }) => CheckResult::skipped(name, e.to_string()),
    }
}

fn flicker_check(history: &History, object: &str) -> CheckResult {
    let flicker = find_flicker(history, object);
    CheckResult::new("anti_flickering", flicker.is_none(), || format!("{flicker:?}"))
}

fn consensus_checks(history: &History, crashed: &BTreeSet<ProcessId>, bound: usize) -> Vec<CheckResult> {
    let ops = history.operations(OBJECT);
    let proposed: BTreeSet<&Value> = ops
        .iter()
        .filter_map(|o| match &o.call {
            Call::Propose(v) => Some(v),
            _ => None,
        })
        .collect();
    let decided: Vec<(ProcessId, &Value)> = ops
        .iter()
        .filter_map(|o| match &o.ret {
            Some(Ret::Decided(d)) => Some((o.process, d)),
            _ => None,
        })
        .collect();
    let distinct: BTreeSet<&Value> = decided.iter().map(|(_, d)| *d).collect();
    let undecided: Vec<ProcessId> = ops
        .iter()
        .filter(|o| !crashed.contains(&o.process) && !matches!(o.ret, Some(Ret::Decided(_))))
        .map(|o| o.process)
        .collect();
    vec![
        CheckResult::new("validity", distinct.iter().all(|d| proposed.contains(d)), || {
            format!("decided {distinct:?}, proposed {proposed:?}")
        }),
        CheckResult::new("agreement", distinct.len() <= 1, || format!("decisions {decided:?}")),
        CheckResult::new("termination", undecided.is_empty(), || {
            format!("correct processes without a decision: {undecided:?}")
        }),
        lincheck("linearizable", &ConsensusSpec, history, OBJECT, bound),
    ]
}

impl Target {
    fn checks(&self, sc: &Scenario, history: &History, crashed: &BTreeSet<ProcessId>) -> Vec<CheckResult> {
        let bound = sc.schedule.op_bound;
        let cfg = sc.system_config().expect("validated scenario");
        match self {
            Target::Allow(a) => {
                let spec = ProofListSpec::new(cfg, ObjectKind::AllowList).with_genesis(a.genesis().clone());
                vec![lincheck("linearizable", &spec, history, OBJECT, bound)]
            }
            Target::Deny(_) => {
                let spec = ProofListSpec::new(cfg, ObjectKind::DenyList);
                vec![lincheck("linearizable", &spec, history, OBJECT, bound), flicker_check(history, OBJECT)]
            }
            Target::Snapshot(_) => {
                vec![lincheck("linearizable", &ArraySpec { width: sc.n as usize }, history, OBJECT, bound)]
            }
            Target::ConsDeny { dl, .. } => {
                let mut out = consensus_checks(history, crashed, bound);
                let first_decision = history
                    .events
                    .iter()
                    .find(|e| e.object == OBJECT && matches!(&e.kind, EventKind::Respond { ret: Ret::Decided(_), .. }))
                    .map(|e| e.event_id);
                let first_valid = history
                    .events
                    .iter()
                    .find(|e| e.object == dl.name() && matches!(&e.kind, EventKind::Lp(m) if m.valid))
                    .map(|e| e.event_id);
                let ok = match (first_decision, first_valid) {
                    (None, _) => true,
                    (Some(d), Some(p)) => p < d,
                    (Some(_), None) => false,
                };
                out.push(CheckResult::new("valid_prove_before_decision", ok, || {
                    format!("first decision at event {first_decision:?}, first valid PROVE at {first_valid:?}")
                }));
                out
            }
            Target::ConsAnonAt(c) => {
                let mut out = consensus_checks(history, crashed, bound);
                let hits = c.uncommit_hits.borrow();
                let ok = hits.values().all(|&h| h == 1);
                out.push(CheckResult::new("uncommit_exactly_once", ok, || format!("{hits:?}")));
                out
            }
            Target::ConsEVote(_) => consensus_checks(history, crashed, bound),
            Target::AnonAt { anon, .. } => {
                let spends = anon.double_spends();
                let nihilo = anon.ex_nihilo(history);
                vec![
                    CheckResult::new("double_spend", spends.is_empty(), || format!("parents spent twice: {spends:?}")),
                    CheckResult::new("ex_nihilo", nihilo.is_empty(), || format!("unbacked tokens: {nihilo:?}")),
                    flicker_check(history, anon.deny_list().name()),
                ]
            }
            Target::EVote { evote, signed, .. } => {
                let tally = evote.peek_tally();
                let dup = unicity_violations(&tally);
                let signed: BTreeSet<Value> = signed.iter().map(|s| Value::from(s.as_str())).collect();
                let unsigned: Vec<&Value> = tally.iter().map(|e| &e.token).filter(|t| !signed.contains(*t)).collect();
                vec![
                    CheckResult::new("vote_unicity", dup.is_empty(), || format!("tokens with two choices: {dup:?}")),
                    CheckResult::new("right_to_vote", unsigned.is_empty(), || format!("unsigned tokens counted: {unsigned:?}")),
                    flicker_check(history, evote.deny_list().name()),
                ]
            }
        }
    }

    /// Final counted ballots, for e-vote scenarios.
    fn tally(&self) -> Option<Vec<crate::ops::TallyEntry>> {
        match self {
            Target::EVote { evote, .. } => Some(evote.peek_tally()),
            _ => None,
        }
    }
}

/// Runs one schedule of `sc` and evaluates every applicable check.
pub fn run_with(sc: &Scenario, sched: &mut dyn Scheduler) -> RunReport {
    let Prepared { sim, target } = prepare(sc);
    let res = sim.run(sched);
    evaluate(sc, &target, sched.seed(), res)
}

fn evaluate(sc: &Scenario, target: &Target, seed: u64, res: Result<RunOutcome, RunFailure>) -> RunReport {
    match res {
        Ok(out) => {
            let crashed = out.history.crashed();
            let mut checks = target.checks(sc, &out.history, &crashed);
            if sc.object == ObjectChoice::Allowlist {
                checks.push(CheckResult::new("no_consensus", out.consensus_cells == 0, || {
                    format!("{} consensus cells created", out.consensus_cells)
                }));
            }
            let failed = checks.iter().any(|c| c.status == CheckStatus::Fail);
            RunReport {
                seed,
                status: if failed { RunStatus::Violation } else { RunStatus::Pass },
                checks,
                accesses: out.accesses.values().sum(),
                consensus_cells: out.consensus_cells,
                history: out.history,
                schedule: out.schedule,
                failure: None,
            }
        }
        Err(f) => {
            let status = match f.kind {
                FailureKind::Budget { .. } => RunStatus::Overrun,
                _ => RunStatus::Violation,
            };
            RunReport {
                seed,
                status,
                checks: vec![CheckResult::new("run_completed", false, || format!("{:?}", f.kind))],
                history: f.history,
                schedule: f.schedule,
                failure: Some(f.kind),
                accesses: 0,
                consensus_cells: 0,
            }
        }
    }
}

/// Runs `sc` under the seeded random scheduler, honouring its crash plan.
pub fn run_seed(sc: &Scenario, seed: u64) -> RunReport {
    run_with(sc, &mut RandomScheduler::new(seed).with_crashes(sc.crash_plan()))
}

/// Re-executes a recorded schedule.
pub fn replay(sc: &Scenario, schedule: &Schedule) -> RunReport {
    run_with(sc, &mut ReplayScheduler::new(schedule.clone()))
}

/// Like [`run_with`], also returning the final e-vote tally when the object is an e-vote.
pub fn run_for_tally(sc: &Scenario, sched: &mut dyn Scheduler) -> (RunReport, Option<Vec<crate::ops::TallyEntry>>) {
    let Prepared { sim, target } = prepare(sc);
    let res = sim.run(sched);
    let report = evaluate(sc, &target, sched.seed(), res);
    (report, target.tally())
}

/// Outcome of enumerating every schedule of a scenario.
#[derive(Clone, Debug)]
pub struct ExhaustiveReport {
    pub runs: usize,
    pub complete: bool,
    /// Set when some run needed more shared accesses than the step bound allows.
    pub over_bound: Option<u64>,
    pub passed: usize,
    pub failures: Vec<RunReport>,
}

/// Enumerates every schedule of `sc` (with its crash plan), stopping after
/// `max_failures` failing runs or once a run exceeds the step bound.
pub fn run_exhaustive(sc: &Scenario, max_runs: usize, max_failures: usize) -> ExhaustiveReport {
    let crashes = sc.crash_plan();
    let mut report = ExhaustiveReport { runs: 0, complete: false, over_bound: None, passed: 0, failures: Vec::new() };
    let targets: RefCell<Vec<Target>> = RefCell::new(Vec::new());
    let stats = crate::sim::explore(
        || {
            let Prepared { sim, target } = prepare(sc);
            targets.borrow_mut().push(target);
            sim
        },
        &crashes,
        max_runs,
        |res| {
            let target = targets.borrow_mut().pop().expect("built before each run");
            let index = report.runs as u64;
            report.runs += 1;
            let mut run = evaluate(sc, &target, index, res);
            run.schedule.seed = index;
            if run.failure.is_none() && run.accesses > sc.schedule.step_bound {
                report.over_bound = Some(run.accesses);
                return crate::sim::Flow::Stop;
            }
            if run.status == RunStatus::Pass {
                report.passed += 1;
            } else {
                report.failures.push(run);
                if report.failures.len() >= max_failures {
                    return crate::sim::Flow::Stop;
                }
            }
            crate::sim::Flow::Continue
        },
    );
    report.complete = stats.complete;
    report
}

/// Checks a recorded history of `sc`'s object against its sequential
/// specification. `None` for objects whose correctness is judged by audits
/// rather than by a sequential specification.
pub fn linearizability_verdict(sc: &Scenario, history: &History) -> Option<Result<crate::lincheck::Verdict, CheckError>> {
    let ops = history.operations(OBJECT);
    let bound = sc.schedule.op_bound;
    let cfg = sc.system_config().ok()?;
    Some(match sc.object {
        ObjectChoice::Allowlist => {
            let genesis = sc.genesis.iter().map(|s| Value::from(s.as_str())).collect();
            check(&ProofListSpec::new(cfg, ObjectKind::AllowList).with_genesis(genesis), &ops, bound)
        }
        ObjectChoice::Denylist | ObjectChoice::DenylistLocal => {
            check(&ProofListSpec::new(cfg, ObjectKind::DenyList), &ops, bound)
        }
        ObjectChoice::Snapshot => check(&ArraySpec { width: sc.n as usize }, &ops, bound),
        ObjectChoice::ConsensusDenylist | ObjectChoice::ConsensusAnonAt | ObjectChoice::ConsensusEvote => {
            check(&ConsensusSpec, &ops, bound)
        }
        ObjectChoice::AnonAt | ObjectChoice::Evote => return None,
    })
}
