//! Anonymous asset transfer over one allow-list (existing tokens) and one
//! deny-list (spent tokens, identified by nullifiers).
//!
//! A token is a hiding commitment to a secret serial and its owner's key. To
//! spend it, the owner pours it into a fresh token for the recipient and
//! publishes the nullifier of the old serial. The deny-list turns concurrent
//! spends of one token into a single winner: every contender revokes the
//! nullifier, waits for its own PROVE to turn invalid, and then all of them
//! read the same set of valid proofs and pick the same leader.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allowlist::AllowList;
use crate::crypto::{hash_parts, ProofMode};
use crate::denylist::DenyList;
use crate::model::{Label, ProofRecord, SystemConfig};
use crate::ops::{Call, Ret};
use crate::sim::{Ctx, History, ObjectError};
use crate::snapshot::{SnapshotArray, SnapshotKind};
use crate::value::{ProcessId, Value};

fn h(domain: &str, parts: &[&Value]) -> Value {
    let parts: Vec<&[u8]> = parts.iter().map(|v| v.as_bytes()).collect();
    Value::new(hash_parts(domain, &parts).0.to_vec())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wallet {
    pub id: String,
    pub sk: Value,
    pub pk: Value,
}

impl Wallet {
    pub fn from_secret(id: impl Into<String>, sk: Value) -> Self {
        let pk = h("wallet-pk", &[&sk]);
        Wallet { id: id.into(), sk, pk }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Token {
    /// Public commitment; this is what the allow-list lists.
    pub id: Value,
    pub serial: Value,
    pub owner: Value,
}

impl Token {
    pub fn mint(serial: Value, owner: Value) -> Self {
        Token { id: h("token-cm", &[&serial, &owner]), serial, owner }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PourTx {
    pub nullifier: Value,
    pub source: Value,
    pub created: Value,
    pub binding: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PourError {
    #[error("secret key does not own the token")]
    NotOwner,
    #[error("token commitment does not open")]
    Malformed,
}

/// Spends `source` into a new token for `recipient`. Deterministic in its inputs.
pub fn pour(source: &Token, recipient: &Value, sk: &Value, seed: &Value) -> Result<(PourTx, Token), PourError> {
    if h("wallet-pk", &[sk]) != source.owner {
        return Err(PourError::NotOwner);
    }
    if Token::mint(source.serial.clone(), source.owner.clone()).id != source.id {
        return Err(PourError::Malformed);
    }
    let nullifier = h("nullifier", &[&source.serial]);
    let created = Token::mint(h("serial", &[seed, &source.id, recipient]), recipient.clone());
    let binding = h("pour-binding", &[&nullifier, &created.id, &source.id]);
    let tx = PourTx { nullifier, source: source.id.clone(), created: created.id.clone(), binding };
    Ok((tx, created))
}

pub fn verify_pour(tx: &PourTx) -> bool {
    tx.binding == h("pour-binding", &[&tx.nullifier, &tx.created, &tx.source])
}

/// Which processes may spend from which wallet.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalletMap(pub BTreeMap<String, BTreeSet<ProcessId>>);

impl WalletMap {
    pub fn allows(&self, wallet: &str, p: ProcessId) -> bool {
        self.0.get(wallet).is_some_and(|m| m.contains(&p))
    }

    /// Number of wallets `p` can act for: the anonymity set of its transfers.
    pub fn anonymity_set_size(&self, p: ProcessId) -> usize {
        self.0.values().filter(|m| m.contains(&p)).count()
    }
}

/// The leader among valid PROVE records about `nullifier`: least prover id,
/// then least queue timestamp.
pub fn choose_leader(records: &[ProofRecord], nullifier: &Value) -> Option<ProcessId> {
    records
        .iter()
        .filter(|r| r.proof.concerns(nullifier))
        .map(|r| {
            let ts = match r.label {
                Some(Label::Entry(e)) => e.ts.counter,
                Some(Label::Seq(s)) => s,
                None => 0,
            };
            (r.prover, ts)
        })
        .min()
        .map(|(p, _)| p)
}

/// What a contender learns about the race for a token: who led, and the transaction it published.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferReceipt {
    pub leader: ProcessId,
    pub tx: PourTx,
}

/// One new token entering the allow-list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub process: ProcessId,
    pub parent: Value,
    pub child: Value,
    pub existence_proved: bool,
}

pub struct AnonAt {
    name: String,
    wallets: WalletMap,
    al: AllowList,
    dl: DenyList,
    as_tx: SnapshotArray<Vec<PourTx>>,
    audit: RefCell<Vec<AuditEntry>>,
}

impl AnonAt {
    /// `n` processes, all of them managers and verifiers of both lists.
    /// `genesis` holds the ids of the initial tokens.
    pub fn new(
        name: impl Into<String>,
        n: u32,
        wallets: WalletMap,
        genesis: BTreeSet<Value>,
        snapshots: SnapshotKind,
        mode: ProofMode,
    ) -> Self {
        let name = name.into();
        let cfg = SystemConfig::new(n, 1..=n, 1..=n)
            .expect("n is at least 1")
            .with_proof_mode(mode);
        AnonAt {
            al: AllowList::with_genesis(format!("{name}.al"), cfg.clone(), snapshots, genesis),
            dl: DenyList::new(format!("{name}.dl"), cfg, snapshots),
            as_tx: SnapshotArray::new(snapshots, n as usize, Vec::new()),
            audit: RefCell::new(Vec::new()),
            wallets,
            name,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn allow_list(&self) -> &AllowList {
        &self.al
    }

    pub fn deny_list(&self) -> &DenyList {
        &self.dl
    }

    pub fn wallets(&self) -> &WalletMap {
        &self.wallets
    }

    pub fn audit_log(&self) -> Vec<AuditEntry> {
        self.audit.borrow().clone()
    }

    pub async fn transfer(
        &self,
        ctx: &Ctx,
        source: &Token,
        from: &Wallet,
        recipient: &Value,
        seed: &Value,
    ) -> Result<Option<Token>, ObjectError> {
        Ok(self.transfer_with_receipt(ctx, source, from, recipient, seed).await?.0)
    }

    /// Transfers `source` out of wallet `from`. Besides the new token (on
    /// success), returns what the caller learnt about the winning transaction.
    pub async fn transfer_with_receipt(
        &self,
        ctx: &Ctx,
        source: &Token,
        from: &Wallet,
        recipient: &Value,
        seed: &Value,
    ) -> Result<(Option<Token>, Option<TransferReceipt>), ObjectError> {
        ctx.invoke(&self.name, Call::Transfer(source.id.clone()));
        let res = self.run_transfer(ctx, source, from, recipient, seed).await?;
        let ret = match &res.0 {
            Some(t) => Ret::Token(t.id.clone()),
            None => Ret::Bool(false),
        };
        ctx.respond(&self.name, ret);
        Ok(res)
    }

    async fn run_transfer(
        &self,
        ctx: &Ctx,
        source: &Token,
        from: &Wallet,
        recipient: &Value,
        seed: &Value,
    ) -> Result<(Option<Token>, Option<TransferReceipt>), ObjectError> {
        let p = ctx.pid();
        let Ok((tx, created)) = pour(source, recipient, &from.sk, seed) else {
            return Ok((None, None));
        };
        if !verify_pour(&tx) || !self.wallets.allows(&from.id, p) {
            return Ok((None, None));
        }
        let mut mine = self.as_tx.peek().swap_remove(p.slot());
        mine.push(tx.clone());
        self.as_tx.update(ctx, mine).await?;

        if self.al.prove(ctx, source.id.clone()).await?.is_none() {
            return Ok((None, None));
        }
        let nf = &tx.nullifier;
        // An invalid first PROVE means the nullifier is already revoked, so
        // this caller holds no valid record and cannot lead; it only reads.
        let contending = self.dl.prove(ctx, nf.clone()).await?.is_some();
        if contending {
            self.dl.append(ctx, nf.clone()).await?;
            while self.dl.prove(ctx, nf.clone()).await?.is_some() {}
        }
        let records = self.dl.read(ctx).await?;
        let Some(leader) = choose_leader(&records, nf) else {
            return Ok((None, None));
        };
        let published = self.as_tx.snapshot(ctx).await.swap_remove(leader.slot());
        let Some(leader_tx) = published.into_iter().find(|t| t.nullifier == *nf) else {
            return Ok((None, None));
        };
        let receipt = TransferReceipt { leader, tx: leader_tx };
        if !contending || receipt.tx.binding != tx.binding {
            return Ok((None, Some(receipt)));
        }
        self.al.append(ctx, created.id.clone()).await?;
        self.audit.borrow_mut().push(AuditEntry {
            process: p,
            parent: source.id.clone(),
            child: created.id.clone(),
            existence_proved: true,
        });
        Ok((Some(created), Some(receipt)))
    }

    /// Parents from which more than one distinct token was created.
    pub fn double_spends(&self) -> Vec<Value> {
        let mut children: BTreeMap<&Value, BTreeSet<&Value>> = BTreeMap::new();
        let audit = self.audit.borrow();
        for e in audit.iter() {
            children.entry(&e.parent).or_default().insert(&e.child);
        }
        children
            .into_iter()
            .filter(|(_, c)| c.len() > 1)
            .map(|(p, _)| p.clone())
            .collect()
    }

    /// Listed tokens that are neither initial nor traceable to a transfer
    /// whose parent was proven to exist by the appending process beforehand.
    pub fn ex_nihilo(&self, history: &History) -> Vec<Value> {
        let al = self.al.name();
        let ops = history.operations(al);
        let audit = self.audit.borrow();
        let proven_before = |e: &AuditEntry| {
            let Some(append) = ops.iter().find(|o| {
                o.process == e.process && o.call == Call::Append(e.child.clone()) && o.ret == Some(Ret::Bool(true))
            }) else {
                return false;
            };
            ops.iter().any(|o| {
                o.process == e.process
                    && o.call == Call::Prove(e.parent.clone())
                    && matches!(o.ret, Some(Ret::Proved { .. }))
                    && o.responded_at.is_some_and(|r| r < append.invoked_at)
            })
        };
        self.al
            .peek_listed()
            .into_iter()
            .filter(|v| !self.al.genesis().contains(v))
            .filter(|v| {
                !audit
                    .iter()
                    .any(|e| e.child == *v && e.existence_proved && proven_before(e))
            })
            .collect()
    }
}
