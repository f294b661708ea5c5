//! Sequential specifications of the recorded objects.

use std::collections::BTreeSet;

use crate::crypto;
use crate::model::{flicker_guard, language_check, same_records, ObjectKind, ProofRecord, SeqState, SystemConfig};
use crate::ops::{Call, Ret};
use crate::sim::Operation;
use crate::value::{ProcessId, Value};

use super::SequentialSpec;

/// Allow-list or deny-list semantics.
///
/// A valid PROVE may carry any applied set contained in the listed values at
/// its linearization point, not only the full listed set: implementations
/// read their own view of the list, which can lag behind other managers'
/// completed appends when the PROVE overlaps them. An invalid PROVE must be
/// justified by the full listed set.
#[derive(Clone, Debug)]
pub struct ProofListSpec {
    pub cfg: SystemConfig,
    pub kind: ObjectKind,
    pub genesis: BTreeSet<Value>,
}

impl ProofListSpec {
    pub fn new(cfg: SystemConfig, kind: ObjectKind) -> Self {
        ProofListSpec { cfg, kind, genesis: BTreeSet::new() }
    }

    pub fn with_genesis(mut self, genesis: BTreeSet<Value>) -> Self {
        self.genesis = genesis;
        self
    }

    fn prove(&self, state: &SeqState, caller: ProcessId, v: &Value, ret: &Ret) -> Option<SeqState> {
        if !self.cfg.is_verifier(caller) {
            return ret.is_false().then(|| state.clone());
        }
        let lv = &state.listed_values;
        let mut next = state.clone();
        let applied = match ret {
            Ret::Bool(false) => {
                if language_check(self.kind, v, lv) && flicker_guard(self.kind, state, v) {
                    return None;
                }
                lv.clone()
            }
            Ret::Proved { set, proof } => {
                let legal = set.is_subset(lv)
                    && language_check(self.kind, v, set)
                    && flicker_guard(self.kind, state, v)
                    && proof.statement() == self.kind.statement()
                    && proof.concerns(v)
                    && crypto::verify(proof, set);
                if !legal {
                    return None;
                }
                let record = ProofRecord {
                    prover: caller,
                    applied_set: set.clone(),
                    proof: proof.clone(),
                    label: None,
                };
                let at = next.proofs.binary_search(&record).unwrap_or_else(|e| e);
                next.proofs.insert(at, record);
                set.clone()
            }
            _ => return None,
        };
        if self.kind == ObjectKind::DenyList {
            next.applied_sets.entry(v.clone()).or_default().insert(applied);
        }
        Some(next)
    }
}

impl SequentialSpec for ProofListSpec {
    type State = SeqState;

    fn initial(&self) -> SeqState {
        SeqState::with_listed(self.genesis.iter().cloned())
    }

    fn step(&self, state: &SeqState, caller: ProcessId, call: &Call, ret: &Ret) -> Option<SeqState> {
        match call {
            Call::Append(v) => {
                let ok = self.cfg.is_manager(caller) && self.cfg.universe.contains(v);
                if *ret != Ret::Bool(ok) {
                    return None;
                }
                let mut next = state.clone();
                if ok {
                    next.listed_values.insert(v.clone());
                }
                Some(next)
            }
            Call::Prove(v) => self.prove(state, caller, v, ret),
            Call::Read => match ret {
                Ret::Records(r) if same_records(r, &state.proofs) => Some(state.clone()),
                _ => None,
            },
            _ => None,
        }
    }

    fn pending_candidates(&self, op: &Operation, history: &[Operation]) -> Vec<Ret> {
        match &op.call {
            Call::Append(v) => vec![Ret::Bool(self.cfg.is_manager(op.process) && self.cfg.universe.contains(v))],
            // Only a valid PROVE that some READ observed can matter; leaving a
            // pending PROVE out is otherwise always at least as permissive.
            Call::Prove(v) => {
                let mut seen: Vec<Ret> = Vec::new();
                for r in history.iter().filter_map(|o| match &o.ret {
                    Some(Ret::Records(r)) => Some(r),
                    _ => None,
                }) {
                    for rec in r.iter().filter(|rec| rec.prover == op.process && rec.proof.concerns(v)) {
                        let ret = Ret::Proved { set: rec.applied_set.clone(), proof: rec.proof.clone() };
                        if !seen.contains(&ret) {
                            seen.push(ret);
                        }
                    }
                }
                seen
            }
            _ => Vec::new(),
        }
    }
}

/// Single-writer snapshot array of `width` slots; process p owns slot p-1.
#[derive(Clone, Debug)]
pub struct ArraySpec {
    pub width: usize,
}

impl SequentialSpec for ArraySpec {
    type State = Vec<Option<Value>>;

    fn initial(&self) -> Self::State {
        vec![None; self.width]
    }

    fn step(&self, state: &Self::State, caller: ProcessId, call: &Call, ret: &Ret) -> Option<Self::State> {
        match (call, ret) {
            (Call::Update(v), Ret::Ack) if caller.slot() < self.width => {
                let mut next = state.clone();
                next[caller.slot()] = Some(v.clone());
                Some(next)
            }
            (Call::Scan, Ret::View(view)) if view == state => Some(state.clone()),
            _ => None,
        }
    }

    fn pending_candidates(&self, op: &Operation, _history: &[Operation]) -> Vec<Ret> {
        match op.call {
            Call::Update(_) => vec![Ret::Ack],
            _ => Vec::new(),
        }
    }
}

/// Consensus: the first proposal decides, and every PROPOSE returns the decision.
#[derive(Clone, Debug, Default)]
pub struct ConsensusSpec;

impl SequentialSpec for ConsensusSpec {
    type State = Option<Value>;

    fn initial(&self) -> Self::State {
        None
    }

    fn step(&self, state: &Self::State, _caller: ProcessId, call: &Call, ret: &Ret) -> Option<Self::State> {
        match (call, ret, state) {
            (Call::Propose(v), Ret::Decided(d), None) if d == v => Some(Some(v.clone())),
            (Call::Propose(_), Ret::Decided(d), Some(x)) if d == x => Some(Some(x.clone())),
            _ => None,
        }
    }

    fn pending_candidates(&self, op: &Operation, _history: &[Operation]) -> Vec<Ret> {
        match &op.call {
            Call::Propose(v) => vec![Ret::Decided(v.clone())],
            _ => Vec::new(),
        }
    }
}
