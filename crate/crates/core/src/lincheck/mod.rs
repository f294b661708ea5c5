//! Linearizability checking of recorded histories against sequential specifications.
//!
//! The search is the Wing–Gong / Lowe depth-first search over linearization
//! orders, memoizing (linearized set, abstract state) pairs. Pending
//! operations are optional: each one is either left out or given one of the
//! responses its specification proposes for it.

mod scan;
mod specs;

use std::collections::HashSet;
use std::fmt::Debug;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ops::{Call, Ret};
use crate::sim::{History, Operation};
use crate::value::ProcessId;

pub use scan::{find_flicker, scan_anti_flickering, Flicker};
pub use specs::{ArraySpec, ConsensusSpec, ProofListSpec};

/// Largest history the checker accepts by default.
pub const DEFAULT_OP_BOUND: usize = 20;

pub trait SequentialSpec {
    type State: Clone + Eq + Hash + Debug;

    fn initial(&self) -> Self::State;

    /// State after `caller` performs `call` and observes `ret`, or `None` if
    /// that response is not legal in `state`.
    fn step(&self, state: &Self::State, caller: ProcessId, call: &Call, ret: &Ret) -> Option<Self::State>;

    /// Responses worth trying for a pending operation. Leaving the operation
    /// out is always tried as well, so only responses that can matter to the
    /// rest of `history` need to be listed.
    fn pending_candidates(&self, op: &Operation, history: &[Operation]) -> Vec<Ret>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("history has {ops} operations, the checker bound is {bound}")]
    BoundExceeded { ops: usize, bound: usize },
}

/// One operation of a witness linearization.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessStep {
    pub op: usize,
    pub process: ProcessId,
    pub call: Call,
    pub ret: Ret,
    /// Whether the response was chosen for a pending operation.
    pub completed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Longest legal linearization prefix found, as operation ids.
    pub longest_prefix: Vec<usize>,
    /// Operations that must still be placed after that prefix.
    pub unplaced: Vec<usize>,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub linearizable: bool,
    pub witness: Vec<WitnessStep>,
    pub violation: Option<Violation>,
}

/// Every completion of `ops`: each pending operation is either dropped or
/// given one of its candidate responses. Operation ids are kept.
pub fn complete_history<S: SequentialSpec>(spec: &S, ops: &[Operation]) -> Vec<Vec<Operation>> {
    let mut out = vec![Vec::new()];
    for op in ops {
        if !op.is_pending() {
            out.iter_mut().for_each(|h| h.push(op.clone()));
            continue;
        }
        let cands = spec.pending_candidates(op, ops);
        let mut next = Vec::with_capacity(out.len() * (cands.len() + 1));
        for h in &out {
            next.push(h.clone());
            for ret in &cands {
                let mut h = h.clone();
                h.push(Operation {
                    ret: Some(ret.clone()),
                    responded_at: Some(u64::MAX),
                    ..op.clone()
                });
                next.push(h);
            }
        }
        out = next;
    }
    out
}

struct Search<'a, S: SequentialSpec> {
    spec: &'a S,
    ops: &'a [Operation],
    cands: Vec<Vec<Ret>>,
    preds: Vec<u32>,
    required: u32,
    seen: HashSet<(u32, S::State)>,
    path: Vec<(usize, Ret)>,
    best: Vec<usize>,
}

impl<S: SequentialSpec> Search<'_, S> {
    fn dfs(&mut self, done: u32, state: &S::State) -> bool {
        if self.path.len() > self.best.len() {
            self.best = self.path.iter().map(|(i, _)| *i).collect();
        }
        if done & self.required == self.required {
            return true;
        }
        if !self.seen.insert((done, state.clone())) {
            return false;
        }
        for i in 0..self.ops.len() {
            let bit = 1u32 << i;
            if done & bit != 0 || self.preds[i] & !done != 0 {
                continue;
            }
            for k in 0..self.cands[i].len() {
                let ret = &self.cands[i][k];
                let op = &self.ops[i];
                if let Some(next) = self.spec.step(state, op.process, &op.call, ret) {
                    self.path.push((i, ret.clone()));
                    if self.dfs(done | bit, &next) {
                        return true;
                    }
                    self.path.pop();
                }
            }
        }
        false
    }
}

/// Decides whether `ops` (one object's operations) is linearizable.
pub fn check<S: SequentialSpec>(spec: &S, ops: &[Operation], bound: usize) -> Result<Verdict, CheckError> {
    let bound = bound.min(32);
    if ops.len() > bound {
        return Err(CheckError::BoundExceeded { ops: ops.len(), bound });
    }
    let cands: Vec<Vec<Ret>> = ops
        .iter()
        .map(|op| match &op.ret {
            Some(r) => vec![r.clone()],
            None => spec.pending_candidates(op, ops),
        })
        .collect();
    let preds = ops
        .iter()
        .map(|b| {
            ops.iter()
                .enumerate()
                .filter(|(_, a)| a.precedes(b))
                .fold(0u32, |m, (j, _)| m | 1 << j)
        })
        .collect();
    let required = ops
        .iter()
        .enumerate()
        .filter(|(_, op)| !op.is_pending())
        .fold(0u32, |m, (j, _)| m | 1 << j);
    let mut search = Search {
        spec,
        ops,
        cands,
        preds,
        required,
        seen: HashSet::new(),
        path: Vec::new(),
        best: Vec::new(),
    };
    let initial = spec.initial();
    if search.dfs(0, &initial) {
        let witness = search
            .path
            .into_iter()
            .map(|(i, ret)| WitnessStep {
                op: ops[i].id,
                process: ops[i].process,
                call: ops[i].call.clone(),
                ret,
                completed: ops[i].is_pending(),
            })
            .collect();
        return Ok(Verdict { linearizable: true, witness, violation: None });
    }
    let placed: u32 = search.best.iter().fold(0, |m, &i| m | 1 << i);
    let unplaced: Vec<usize> = (0..ops.len())
        .filter(|&i| required & (1 << i) != 0 && placed & (1 << i) == 0)
        .collect();
    let describe = |i: &usize| {
        let op = &ops[*i];
        match &op.ret {
            Some(r) => format!("#{} {} {}({:?}) -> {:?}", op.id, op.process, op.call.name(), op.call, r),
            None => format!("#{} {} {}({:?}) pending", op.id, op.process, op.call.name(), op.call),
        }
    };
    let description = format!(
        "no legal order; after {} operations none of [{}] can be placed next",
        search.best.len(),
        unplaced.iter().map(describe).collect::<Vec<_>>().join("; ")
    );
    Ok(Verdict {
        linearizable: false,
        witness: Vec::new(),
        violation: Some(Violation {
            longest_prefix: search.best.iter().map(|&i| ops[i].id).collect(),
            unplaced: unplaced.iter().map(|&i| ops[i].id).collect(),
            description,
        }),
    })
}

/// Checks the operations `history` recorded on `object`.
pub fn check_object<S: SequentialSpec>(
    spec: &S,
    history: &History,
    object: &str,
    bound: usize,
) -> Result<Verdict, CheckError> {
    check(spec, &history.operations(object), bound)
}

/// Replays a witness through the specification; true iff every step is legal
/// and the witness respects real-time order among the operations of `ops`.
pub fn replay_witness<S: SequentialSpec>(spec: &S, ops: &[Operation], witness: &[WitnessStep]) -> bool {
    let mut state = spec.initial();
    for w in witness {
        let Some(op) = ops.iter().find(|o| o.id == w.op) else {
            return false;
        };
        if op.process != w.process || op.call != w.call || op.ret.as_ref().is_some_and(|r| *r != w.ret) {
            return false;
        }
        match spec.step(&state, w.process, &w.call, &w.ret) {
            Some(s) => state = s,
            None => return false,
        }
    }
    let pos = |id: usize| witness.iter().position(|w| w.op == id);
    for a in ops {
        for b in ops {
            if let (true, Some(pa), Some(pb)) = (a.precedes(b), pos(a.id), pos(b.id)) {
                if pa > pb {
                    return false;
                }
            }
        }
        if !a.is_pending() && pos(a.id).is_none() {
            return false;
        }
    }
    true
}
