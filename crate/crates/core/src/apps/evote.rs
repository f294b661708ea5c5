//! E-voting over one deny-list of spent ballot tokens and two snapshot arrays.
//!
//! A ballot token is a nonce carrying a blind signature from the issuer, so
//! voting servers can check the right to vote without linking the ballot to
//! its signing request. Every server that casts a ballot first pre-votes
//! (token, choice), then spends the token on the deny-list; all servers that
//! hold a valid proof for the token then agree on who they are, and count the
//! ballot only if every one of them pre-voted the same choice.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::crypto::{verify_signature, IssuerPublic, ProofMode, Signature};
use crate::denylist::DenyList;
use crate::model::SystemConfig;
use crate::ops::{Call, Ret, TallyEntry};
use crate::sim::{Ctx, ObjectError};
use crate::snapshot::{SnapshotArray, SnapshotKind};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub token: Value,
    pub signature: Signature,
    pub choice: Value,
}

pub struct EVote {
    name: String,
    issuer: IssuerPublic,
    dl: DenyList,
    as_prevote: SnapshotArray<BTreeSet<(Value, Value)>>,
    as_vote: SnapshotArray<BTreeSet<TallyEntry>>,
}

impl EVote {
    /// `k` voting servers, all managers and verifiers of the deny-list.
    pub fn new(name: impl Into<String>, k: u32, issuer: IssuerPublic, snapshots: SnapshotKind, mode: ProofMode) -> Self {
        let name = name.into();
        let cfg = SystemConfig::new(k, 1..=k, 1..=k)
            .expect("k is at least 1")
            .with_proof_mode(mode);
        EVote {
            dl: DenyList::new(format!("{name}.dl"), cfg, snapshots),
            as_prevote: SnapshotArray::new(snapshots, k as usize, BTreeSet::new()),
            as_vote: SnapshotArray::new(snapshots, k as usize, BTreeSet::new()),
            issuer,
            name,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn deny_list(&self) -> &DenyList {
        &self.dl
    }

    pub fn issuer(&self) -> IssuerPublic {
        self.issuer
    }

    pub async fn vote(&self, ctx: &Ctx, ballot: &Ballot) -> Result<bool, ObjectError> {
        ctx.invoke(
            &self.name,
            Call::Vote { token: ballot.token.clone(), choice: ballot.choice.clone() },
        );
        let ok = self.cast(ctx, ballot).await?;
        ctx.respond(&self.name, Ret::Bool(ok));
        Ok(ok)
    }

    async fn cast(&self, ctx: &Ctx, ballot: &Ballot) -> Result<bool, ObjectError> {
        let p = ctx.pid();
        if !verify_signature(&ballot.signature, &ballot.token, &self.issuer) {
            return Ok(false);
        }
        let token = &ballot.token;
        let mut prevotes = self.as_prevote.peek().swap_remove(p.slot());
        prevotes.insert((token.clone(), ballot.choice.clone()));
        self.as_prevote.update(ctx, prevotes).await?;

        if self.dl.prove(ctx, token.clone()).await?.is_none() {
            return Ok(false);
        }
        self.dl.append(ctx, token.clone()).await?;
        while self.dl.prove(ctx, token.clone()).await?.is_some() {}

        let records = self.dl.read(ctx).await?;
        let voters: BTreeSet<_> = records
            .iter()
            .filter(|r| r.proof.concerns(token))
            .map(|r| r.prover)
            .collect();
        let prevotes = self.as_prevote.snapshot(ctx).await;
        let choices: BTreeSet<&Value> = voters
            .iter()
            .flat_map(|q| prevotes[q.slot()].iter())
            .filter(|(t, _)| t == token)
            .map(|(_, c)| c)
            .collect();
        if choices.len() != 1 || !choices.contains(&ballot.choice) {
            return Ok(false);
        }
        let mut counted = self.as_vote.peek().swap_remove(p.slot());
        counted.insert(TallyEntry { token: token.clone(), choice: ballot.choice.clone(), voters });
        self.as_vote.update(ctx, counted).await?;
        Ok(true)
    }

    /// Every counted (token, choice, voters) entry, once each.
    pub async fn vote_count(&self, ctx: &Ctx) -> Result<Vec<TallyEntry>, ObjectError> {
        ctx.invoke(&self.name, Call::VoteCount);
        let tally: BTreeSet<TallyEntry> = self.as_vote.snapshot(ctx).await.into_iter().flatten().collect();
        let tally: Vec<TallyEntry> = tally.into_iter().collect();
        ctx.respond(&self.name, Ret::Tally(tally.clone()));
        Ok(tally)
    }

    /// Final tally without a scheduling point.
    pub fn peek_tally(&self) -> Vec<TallyEntry> {
        let tally: BTreeSet<TallyEntry> = self.as_vote.peek().into_iter().flatten().collect();
        tally.into_iter().collect()
    }
}

/// Tokens counted with more than one choice.
pub fn unicity_violations(tally: &[TallyEntry]) -> Vec<Value> {
    let mut by_token: std::collections::BTreeMap<&Value, BTreeSet<&Value>> = Default::default();
    for e in tally {
        by_token.entry(&e.token).or_default().insert(&e.choice);
    }
    by_token.into_iter().filter(|(_, c)| c.len() > 1).map(|(t, _)| t.clone()).collect()
}
