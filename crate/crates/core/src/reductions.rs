//! Consensus from the objects: k-consensus from one k-deny-list plus a
//! snapshot, from an anonymous asset transfer object, and from an e-vote
//! object. Each `propose_*` records a PROPOSE/DECIDED pair on a consensus
//! object name so the run can be checked against the consensus specification.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use crate::apps::{pour, AnonAt, Token, Wallet};
use crate::denylist::DenyList;
use crate::model::ProofRecord;
use crate::ops::{Call, Ret, TallyEntry};
use crate::sim::{Ctx, ObjectError};
use crate::snapshot::SnapshotArray;
use crate::value::{ProcessId, Value};

/// The reserved value every proposer proves and revokes.
pub fn sentinel() -> Value {
    Value::from("0")
}

/// Processes that produced the given proofs.
pub fn separator(proofs: &[ProofRecord]) -> BTreeSet<ProcessId> {
    proofs.iter().map(|r| r.prover).collect()
}

/// Deterministic choice of one member of a nonempty set: the least id.
pub fn select(processes: &BTreeSet<ProcessId>) -> Option<ProcessId> {
    processes.first().copied()
}

/// k-consensus from a k-deny-list whose managers and verifiers are all k proposers.
pub async fn propose_via_denylist(
    ctx: &Ctx,
    object: &str,
    dl: &DenyList,
    as_list: &SnapshotArray<Option<Value>>,
    v: Value,
) -> Result<Value, ObjectError> {
    ctx.invoke(object, Call::Propose(v.clone()));
    as_list.update(ctx, Some(v)).await?;
    let zero = sentinel();
    dl.prove(ctx, zero.clone()).await?;
    dl.append(ctx, zero.clone()).await?;
    while dl.prove(ctx, zero.clone()).await?.is_some() {}
    let provers = separator(&dl.read(ctx).await?);
    let chosen = select(&provers)
        .ok_or_else(|| ObjectError::Invariant("no valid PROVE of the sentinel was published".into()))?;
    let decided = as_list.snapshot(ctx).await.swap_remove(chosen.slot()).ok_or_else(|| {
        ObjectError::Invariant(format!("{chosen} proved the sentinel without publishing a proposal"))
    })?;
    ctx.respond(object, Ret::Decided(decided.clone()));
    Ok(decided)
}

/// Shared setup of the asset-transfer reduction: one token every proposer
/// can spend, and a recipient wallet no proposer controls.
#[derive(Clone, Debug)]
pub struct SharedToken {
    pub token: Token,
    pub source: Wallet,
    pub recipient: Value,
}

/// Whether `seed` pours `shared.token` into the transaction in `receipt`.
pub fn uncommit(seed: &Value, shared: &SharedToken, receipt_binding: &Value) -> bool {
    pour(&shared.token, &shared.recipient, &shared.source.sk, seed)
        .is_ok_and(|(tx, _)| tx.binding == *receipt_binding)
}

/// k-consensus from an asset transfer object: everyone races to spend the
/// shared token, and the winning transaction identifies whose value to take.
pub struct AnonAtConsensus {
    pub object: String,
    pub anon: AnonAt,
    pub shared: SharedToken,
    /// Oracle seeds, one slot per proposer.
    pub rm_ledger: SnapshotArray<Option<Value>>,
    pub v_ledger: SnapshotArray<Option<Value>>,
    /// Per proposer: how many ledger slots `uncommit` matched.
    pub uncommit_hits: RefCell<BTreeMap<ProcessId, usize>>,
}

impl AnonAtConsensus {
    pub fn seed_for(p: ProcessId) -> Value {
        Value::from(format!("oracle-seed-{}", p.0))
    }

    pub async fn propose(&self, ctx: &Ctx, v: Value) -> Result<Option<Value>, ObjectError> {
        ctx.invoke(&self.object, Call::Propose(v.clone()));
        let seed = Self::seed_for(ctx.pid());
        self.rm_ledger.update(ctx, Some(seed.clone())).await?;
        self.v_ledger.update(ctx, Some(v)).await?;
        let s = &self.shared;
        let (_, receipt) = self
            .anon
            .transfer_with_receipt(ctx, &s.token, &s.source, &s.recipient, &seed)
            .await?;
        let Some(receipt) = receipt else {
            return Err(ObjectError::Invariant("transfer returned no winning transaction".into()));
        };
        let seeds = self.rm_ledger.snapshot(ctx).await;
        let values = self.v_ledger.snapshot(ctx).await;
        let hits: Vec<usize> = seeds
            .iter()
            .enumerate()
            .filter(|(_, seed)| seed.as_ref().is_some_and(|seed| uncommit(seed, s, &receipt.tx.binding)))
            .map(|(i, _)| i)
            .collect();
        self.uncommit_hits.borrow_mut().insert(ctx.pid(), hits.len());
        let decided = match hits.as_slice() {
            [i] => values[*i].clone(),
            _ => None,
        };
        match &decided {
            Some(d) => ctx.respond(&self.object, Ret::Decided(d.clone())),
            None => ctx.respond(&self.object, Ret::Bool(false)),
        }
        Ok(decided)
    }
}

/// An e-vote object taken as an atomic base object: one shared access per
/// operation. The first ballot for a token is counted and any later ballot
/// for the same token is rejected.
#[derive(Default)]
pub struct AtomicEVote {
    counted: RefCell<BTreeMap<Value, Value>>,
}

impl AtomicEVote {
    pub async fn vote(&self, ctx: &Ctx, token: &Value, choice: Value) -> bool {
        ctx.step().await;
        let mut counted = self.counted.borrow_mut();
        match counted.get(token) {
            None => {
                counted.insert(token.clone(), choice);
                true
            }
            Some(_) => false,
        }
    }

    pub async fn vote_count(&self, ctx: &Ctx) -> Vec<TallyEntry> {
        ctx.step().await;
        self.counted
            .borrow()
            .iter()
            .map(|(token, choice)| TallyEntry { token: token.clone(), choice: choice.clone(), voters: BTreeSet::new() })
            .collect()
    }
}

/// k-consensus from one e-vote object: everyone casts the single authorized
/// ballot with its own value, and the count says which value got in.
pub async fn propose_via_evote(ctx: &Ctx, object: &str, evote: &AtomicEVote, v: Value) -> Result<Value, ObjectError> {
    ctx.invoke(object, Call::Propose(v.clone()));
    evote.vote(ctx, &sentinel(), v).await;
    let tally = evote.vote_count(ctx).await;
    let [entry] = tally.as_slice() else {
        return Err(ObjectError::Invariant(format!("expected one counted ballot, found {}", tally.len())));
    };
    ctx.respond(object, Ret::Decided(entry.choice.clone()));
    Ok(entry.choice.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separator_is_a_set() {
        use crate::crypto::{prove_nonmembership, ProofMode};
        let rec = |p: u32| ProofRecord {
            prover: ProcessId(p),
            applied_set: BTreeSet::new(),
            proof: prove_nonmembership(&sentinel(), &BTreeSet::new(), ProofMode::Explicit).unwrap(),
            label: None,
        };
        assert!(separator(&[]).is_empty());
        assert_eq!(separator(&[rec(1), rec(1)]), [ProcessId(1)].into());
        assert_eq!(separator(&[rec(2), rec(1)]), [ProcessId(1), ProcessId(2)].into());
        assert_eq!(select(&[ProcessId(2), ProcessId(1)].into()), Some(ProcessId(1)));
        assert_eq!(select(&BTreeSet::new()), None);
    }
}
