//! Domain vocabulary and the sequential reference semantics of the proof-list
//! object: the transition function, both language instantiations, and the
//! anti-flickering predicate.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{self, Commitment, ProofBlob, ProofMode, Statement};
use crate::value::{ProcessId, Value};

/// Which values are members of the universe.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Universe {
    /// Every byte string.
    #[default]
    Any,
    /// Exactly the listed values.
    Finite(BTreeSet<Value>),
    /// Byte strings of at most this many bytes.
    MaxLen(usize),
}

impl Universe {
    pub fn contains(&self, v: &Value) -> bool {
        match self {
            Universe::Any => true,
            Universe::Finite(set) => set.contains(v),
            Universe::MaxLen(n) => v.len() <= *n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("system needs at least one process")]
    NoProcesses,
    #[error("{role} set is empty")]
    EmptyRole { role: &'static str },
    #[error("{role} {pid} is outside 1..={n}")]
    OutOfRange { role: &'static str, pid: ProcessId, n: u32 },
}

/// Static membership of a run: process count, managers, verifiers, and the value universe.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n: u32,
    pub managers: BTreeSet<ProcessId>,
    pub verifiers: BTreeSet<ProcessId>,
    #[serde(default)]
    pub universe: Universe,
    #[serde(default)]
    pub proof_mode: ProofMode,
}

impl SystemConfig {
    pub fn new(
        n: u32,
        managers: impl IntoIterator<Item = u32>,
        verifiers: impl IntoIterator<Item = u32>,
    ) -> Result<Self, ConfigError> {
        let cfg = SystemConfig {
            n,
            managers: managers.into_iter().map(ProcessId).collect(),
            verifiers: verifiers.into_iter().map(ProcessId).collect(),
            universe: Universe::Any,
            proof_mode: ProofMode::Explicit,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_universe(mut self, universe: Universe) -> Self {
        self.universe = universe;
        self
    }

    pub fn with_proof_mode(mut self, mode: ProofMode) -> Self {
        self.proof_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::NoProcesses);
        }
        for (role, set) in [("manager", &self.managers), ("verifier", &self.verifiers)] {
            if set.is_empty() {
                return Err(ConfigError::EmptyRole { role });
            }
            if let Some(&pid) = set.iter().find(|p| p.0 == 0 || p.0 > self.n) {
                return Err(ConfigError::OutOfRange { role, pid, n: self.n });
            }
        }
        Ok(())
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> {
        (1..=self.n).map(ProcessId)
    }

    pub fn is_manager(&self, p: ProcessId) -> bool {
        self.managers.contains(&p)
    }

    pub fn is_verifier(&self, p: ProcessId) -> bool {
        self.verifiers.contains(&p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectKind {
    AllowList,
    DenyList,
}

impl ObjectKind {
    pub fn statement(self) -> Statement {
        match self {
            ObjectKind::AllowList => Statement::Membership,
            ObjectKind::DenyList => Statement::NonMembership,
        }
    }
}

/// Lamport-style timestamp. Field order makes the derived ordering compare
/// the counter first and break ties by process id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp {
    pub counter: u64,
    pub process: ProcessId,
}

/// An entry of the PROVE queue: who asked, when, and a commitment to the value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QueueEntry {
    pub ts: Timestamp,
    pub commitment: Commitment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Seq(u64),
    Entry(QueueEntry),
}

/// One entry of the proofs array.
///
/// Two records are equal when prover, applied set and proof agree; the label
/// only tells records apart for diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProofRecord {
    pub prover: ProcessId,
    pub applied_set: BTreeSet<Value>,
    pub proof: ProofBlob,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

impl ProofRecord {
    fn key(&self) -> (ProcessId, &BTreeSet<Value>, &ProofBlob) {
        (self.prover, &self.applied_set, &self.proof)
    }
}

impl PartialEq for ProofRecord {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for ProofRecord {}

impl PartialOrd for ProofRecord {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ProofRecord {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl Hash for ProofRecord {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

/// Compares two READ results as multisets.
pub fn same_records(a: &[ProofRecord], b: &[ProofRecord]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut a: Vec<&ProofRecord> = a.iter().collect();
    let mut b: Vec<&ProofRecord> = b.iter().collect();
    a.sort();
    b.sort();
    a == b
}

/// Abstract state of a proof-list object.
///
/// `applied_sets` remembers, per value, the set every earlier verifier PROVE
/// of that value was evaluated against (valid or not). It is what the
/// anti-flickering predicate ranges over; the allow-list never consults it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeqState {
    pub listed_values: BTreeSet<Value>,
    pub proofs: Vec<ProofRecord>,
    #[serde(default)]
    pub applied_sets: BTreeMap<Value, BTreeSet<BTreeSet<Value>>>,
}

impl SeqState {
    pub fn with_listed(listed: impl IntoIterator<Item = Value>) -> Self {
        SeqState {
            listed_values: listed.into_iter().collect(),
            ..Default::default()
        }
    }

    pub fn sets_seen(&self, v: &Value) -> Vec<BTreeSet<Value>> {
        self.applied_sets.get(v).map(|s| s.iter().cloned().collect()).unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequentialOp {
    Append(Value),
    Prove(Value),
    Read,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequentialResponse {
    True,
    False,
    Proved {
        set: BTreeSet<Value>,
        proof: ProofBlob,
    },
    Records(Vec<ProofRecord>),
}

/// v ∈ 𝒜 for allow-lists, v ∉ 𝒜 for deny-lists.
pub fn language_check(kind: ObjectKind, v: &Value, set: &BTreeSet<Value>) -> bool {
    match kind {
        ObjectKind::AllowList => set.contains(v),
        ObjectKind::DenyList => !set.contains(v),
    }
}

/// True iff `v` is absent from every set a previous PROVE of `v` was applied to.
pub fn anti_flicker_check(v: &Value, sets_seen: &[BTreeSet<Value>]) -> bool {
    sets_seen.iter().all(|s| !s.contains(v))
}

/// Whether `C(v, Ŝ)` holds for `kind` in `state`.
pub fn flicker_guard(kind: ObjectKind, state: &SeqState, v: &Value) -> bool {
    match kind {
        ObjectKind::AllowList => true,
        ObjectKind::DenyList => state
            .applied_sets
            .get(v)
            .is_none_or(|sets| sets.iter().all(|s| !s.contains(v))),
    }
}

/// Applies one operation to `state`, taking 𝒜 to be the current listed values.
pub fn delta_apply(
    state: &SeqState,
    caller: ProcessId,
    op: &SequentialOp,
    cfg: &SystemConfig,
    kind: ObjectKind,
) -> (SeqState, SequentialResponse) {
    match op {
        SequentialOp::Append(v) => {
            if cfg.is_manager(caller) && cfg.universe.contains(v) {
                let mut next = state.clone();
                next.listed_values.insert(v.clone());
                (next, SequentialResponse::True)
            } else {
                (state.clone(), SequentialResponse::False)
            }
        }
        SequentialOp::Prove(v) => {
            if !cfg.is_verifier(caller) {
                return (state.clone(), SequentialResponse::False);
            }
            let set = state.listed_values.clone();
            let mut next = state.clone();
            let ok = language_check(kind, v, &set) && flicker_guard(kind, state, v);
            if kind == ObjectKind::DenyList {
                next.applied_sets.entry(v.clone()).or_default().insert(set.clone());
            }
            if !ok {
                return (next, SequentialResponse::False);
            }
            let proof = match kind {
                ObjectKind::AllowList => crypto::prove_membership(v, &set, cfg.proof_mode),
                ObjectKind::DenyList => crypto::prove_nonmembership(v, &set, cfg.proof_mode),
            }
            .expect("language check guarantees the statement holds");
            next.proofs.push(ProofRecord {
                prover: caller,
                applied_set: set.clone(),
                proof: proof.clone(),
                label: Some(Label::Seq(state.proofs.len() as u64)),
            });
            (next, SequentialResponse::Proved { set, proof })
        }
        SequentialOp::Read => (
            state.clone(),
            SequentialResponse::Records(state.proofs.clone()),
        ),
    }
}
