//! Allow-list built from two atomic snapshot arrays (consensus number 1).
//!
//! AS-LV holds, per manager, the values it appended; AS-PROOF holds, per
//! verifier, the proofs it produced. A valid PROVE takes effect when its
//! record lands in AS-PROOF.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use crate::crypto::{self, ProofBlob};
use crate::model::{Label, ProofRecord, SystemConfig};
use crate::ops::{Call, Ret};
use crate::sim::{Ctx, ObjectError};
use crate::snapshot::{SnapshotArray, SnapshotKind};
use crate::value::{ProcessId, Value};

/// A successful PROVE: the set the proof applies to, and the proof.
pub type Proved = (BTreeSet<Value>, ProofBlob);

pub struct AllowList {
    name: String,
    cfg: SystemConfig,
    genesis: BTreeSet<Value>,
    as_lv: SnapshotArray<BTreeSet<Value>>,
    as_proof: SnapshotArray<Vec<ProofRecord>>,
    proves_done: RefCell<BTreeMap<ProcessId, u64>>,
}

impl AllowList {
    pub fn new(name: impl Into<String>, cfg: SystemConfig, snapshots: SnapshotKind) -> Self {
        Self::with_genesis(name, cfg, snapshots, BTreeSet::new())
    }

    /// An allow-list whose listed values start out as `genesis`.
    pub fn with_genesis(
        name: impl Into<String>,
        cfg: SystemConfig,
        snapshots: SnapshotKind,
        genesis: BTreeSet<Value>,
    ) -> Self {
        let n = cfg.n as usize;
        AllowList {
            name: name.into(),
            cfg,
            genesis,
            as_lv: SnapshotArray::new(snapshots, n, BTreeSet::new()),
            as_proof: SnapshotArray::new(snapshots, n, Vec::new()),
            proves_done: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn genesis(&self) -> &BTreeSet<Value> {
        &self.genesis
    }

    pub async fn append(&self, ctx: &Ctx, v: Value) -> Result<bool, ObjectError> {
        ctx.invoke(&self.name, Call::Append(v.clone()));
        let p = ctx.pid();
        let ok = self.cfg.universe.contains(&v) && self.cfg.is_manager(p);
        if ok {
            let mut local = self.as_lv.snapshot(ctx).await.swap_remove(p.slot());
            local.insert(v);
            self.as_lv.update(ctx, local).await?;
        }
        ctx.respond(&self.name, Ret::Bool(ok));
        Ok(ok)
    }

    pub async fn prove(&self, ctx: &Ctx, v: Value) -> Result<Option<Proved>, ObjectError> {
        ctx.invoke(&self.name, Call::Prove(v.clone()));
        let p = ctx.pid();
        let mut result = None;
        if self.cfg.is_verifier(p) {
            let mut set = self.genesis.clone();
            set.extend(self.as_lv.snapshot(ctx).await.into_iter().flatten());
            if set.contains(&v) {
                let proof = crypto::prove_membership(&v, &set, self.cfg.proof_mode)
                    .expect("membership was just checked");
                let seq = {
                    let mut done = self.proves_done.borrow_mut();
                    let c = done.entry(p).or_insert(0);
                    *c += 1;
                    *c - 1
                };
                let mut proofs = self.as_proof.snapshot(ctx).await.swap_remove(p.slot());
                proofs.push(ProofRecord {
                    prover: p,
                    applied_set: set.clone(),
                    proof: proof.clone(),
                    label: Some(Label::Seq(seq)),
                });
                self.as_proof.update(ctx, proofs).await?;
                result = Some((set, proof));
            }
        }
        let ret = match &result {
            Some((set, proof)) => Ret::Proved { set: set.clone(), proof: proof.clone() },
            None => Ret::Bool(false),
        };
        ctx.respond(&self.name, ret);
        Ok(result)
    }

    /// All records, ordered by prover and then by insertion.
    pub async fn read(&self, ctx: &Ctx) -> Result<Vec<ProofRecord>, ObjectError> {
        ctx.invoke(&self.name, Call::Read);
        let records: Vec<ProofRecord> = self.as_proof.snapshot(ctx).await.into_iter().flatten().collect();
        ctx.respond(&self.name, Ret::Records(records.clone()));
        Ok(records)
    }

    /// Listed values right now, without a scheduling point.
    pub fn peek_listed(&self) -> BTreeSet<Value> {
        let mut set = self.genesis.clone();
        set.extend(self.as_lv.peek().into_iter().flatten());
        set
    }

    pub fn peek_records(&self) -> Vec<ProofRecord> {
        self.as_proof.peek().into_iter().flatten().collect()
    }
}
