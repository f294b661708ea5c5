//! Deny-list built from k-consensus cells and atomic snapshots.
//!
//! A PROVE publishes a timestamped commitment to its value in AS-Queue, then
//! walks the shared consensus array in order. At each cell the verifiers agree
//! on one queued PROVE (the oldest one someone proposed) and on the set of
//! listed values it is evaluated against. Whoever learns that a decided PROVE
//! carries the same commitment as its own value publishes the proof on the
//! owner's behalf, so a crashed verifier's PROVE still completes.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::allowlist::Proved;
use crate::crypto::{self, HELPING_TAG};
use crate::model::{Label, ProofRecord, QueueEntry, SystemConfig, Timestamp};
use crate::ops::{Call, Ret};
use crate::sim::{ConsensusCell, Ctx, LpMarker, ObjectError};
use crate::snapshot::{SnapshotArray, SnapshotKind};
use crate::value::{ProcessId, Value};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenyListVariant {
    /// The construction as designed.
    #[default]
    Consensus,
    /// Each verifier "decides" its own proposal instead of agreeing through a
    /// consensus cell. Breaks anti-flickering; used as a negative control.
    LocalDecisions,
}

type Decided = (QueueEntry, BTreeSet<Value>);

#[derive(Default)]
struct Local {
    evaluated: BTreeSet<QueueEntry>,
    counter: u64,
}

/// How much work one PROVE did in its consensus loop.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProveStats {
    pub process: ProcessId,
    pub iterations: u64,
    /// Cells already created beyond the caller's counter when the loop started.
    pub lag_at_entry: u64,
    /// Unevaluated queue entries seen when the loop started.
    pub queue_at_entry: u64,
}

pub struct DenyList {
    name: String,
    cfg: SystemConfig,
    variant: DenyListVariant,
    as_lv: SnapshotArray<BTreeSet<Value>>,
    as_queue: SnapshotArray<Option<QueueEntry>>,
    cons_arr: RefCell<Vec<Rc<ConsensusCell<Decided>>>>,
    as_proof: RefCell<Vec<Option<ProofRecord>>>,
    locals: RefCell<BTreeMap<ProcessId, Local>>,
    stats: RefCell<Vec<ProveStats>>,
}

impl DenyList {
    pub fn new(name: impl Into<String>, cfg: SystemConfig, snapshots: SnapshotKind) -> Self {
        Self::with_variant(name, cfg, snapshots, DenyListVariant::Consensus)
    }

    pub fn with_variant(
        name: impl Into<String>,
        cfg: SystemConfig,
        snapshots: SnapshotKind,
        variant: DenyListVariant,
    ) -> Self {
        let n = cfg.n as usize;
        DenyList {
            name: name.into(),
            cfg,
            variant,
            as_lv: SnapshotArray::new(snapshots, n, BTreeSet::new()),
            as_queue: SnapshotArray::new(snapshots, n, None),
            cons_arr: RefCell::new(Vec::new()),
            as_proof: RefCell::new(Vec::new()),
            locals: RefCell::new(BTreeMap::new()),
            stats: RefCell::new(Vec::new()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
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

    fn cell(&self, ctx: &Ctx, index: usize) -> Result<Rc<ConsensusCell<Decided>>, ObjectError> {
        let mut cells = self.cons_arr.borrow_mut();
        while cells.len() <= index {
            cells.push(Rc::new(ConsensusCell::new(ctx, self.cfg.verifiers.clone())?));
        }
        Ok(cells[index].clone())
    }

    /// Writes `record` for the PROVE identified by `winner`; the first write
    /// for that PROVE is its linearization point.
    async fn publish(&self, ctx: &Ctx, index: usize, record: ProofRecord, v: &Value) -> Result<(), ObjectError> {
        ctx.step().await;
        let owner = record.prover;
        let mut slots = self.as_proof.borrow_mut();
        let first = match self.variant {
            DenyListVariant::Consensus => {
                if slots.len() <= index {
                    slots.resize(index + 1, None);
                }
                match &slots[index] {
                    None => {
                        slots[index] = Some(record);
                        true
                    }
                    Some(existing) if *existing == record && existing.label == record.label => false,
                    Some(_) => {
                        return Err(ObjectError::UniquenessViolation {
                            object: self.name.clone(),
                            index,
                        })
                    }
                }
            }
            DenyListVariant::LocalDecisions => {
                let seen = slots.iter().flatten().any(|r| r.label == record.label);
                if !seen {
                    slots.push(Some(record));
                }
                !seen
            }
        };
        drop(slots);
        if first {
            ctx.mark_lp(&self.name, LpMarker { value: v.clone(), valid: true, owner });
        }
        Ok(())
    }

    pub async fn prove(&self, ctx: &Ctx, v: Value) -> Result<Option<Proved>, ObjectError> {
        ctx.invoke(&self.name, Call::Prove(v.clone()));
        let p = ctx.pid();
        if !self.cfg.is_verifier(p) {
            ctx.respond(&self.name, Ret::Bool(false));
            return Ok(None);
        }
        let cv = crypto::commit(&v, HELPING_TAG);
        let cnt = self.locals.borrow_mut().entry(p).or_default().counter;
        let entry = QueueEntry {
            ts: Timestamp { counter: cnt, process: p },
            commitment: cv,
        };
        self.as_queue.update(ctx, Some(entry)).await?;
        let snapshot = self.as_queue.snapshot(ctx).await;
        let mut queue: BTreeSet<QueueEntry> = {
            let locals = self.locals.borrow();
            let evaluated = &locals[&p].evaluated;
            snapshot.into_iter().flatten().filter(|e| !evaluated.contains(e)).collect()
        };
        let mut stats = ProveStats {
            process: p,
            iterations: 0,
            lag_at_entry: (self.cons_arr.borrow().len() as u64).saturating_sub(cnt),
            queue_at_entry: queue.len() as u64,
        };

        let mut own = None;
        while queue.contains(&entry) {
            let oldest = *queue.first().expect("queue holds at least our entry");
            let listed: BTreeSet<Value> = self.as_lv.snapshot(ctx).await.into_iter().flatten().collect();
            let index = self.locals.borrow()[&p].counter as usize;
            let (winner, val) = match self.variant {
                DenyListVariant::Consensus => self.cell(ctx, index)?.propose(ctx, (oldest, listed)).await?,
                DenyListVariant::LocalDecisions => (oldest, listed),
            };
            let mut proof = None;
            if winner.commitment == cv && !val.contains(&v) {
                let pi = crypto::prove_nonmembership(&v, &val, self.cfg.proof_mode)
                    .expect("non-membership was just checked");
                let record = ProofRecord {
                    prover: winner.ts.process,
                    applied_set: val.clone(),
                    proof: pi.clone(),
                    label: Some(Label::Entry(winner)),
                };
                self.publish(ctx, index, record, &v).await?;
                proof = Some(pi);
            }
            if winner == entry {
                own = Some((val, proof));
            }
            let mut locals = self.locals.borrow_mut();
            let local = locals.get_mut(&p).expect("initialized above");
            local.evaluated.insert(winner);
            local.counter += 1;
            queue.remove(&winner);
            stats.iterations += 1;
        }
        self.stats.borrow_mut().push(stats);

        let (val, proof) = own.expect("the loop only ends once our entry is decided");
        let result = proof.map(|pi| (val, pi));
        match &result {
            Some((set, proof)) => ctx.respond(&self.name, Ret::Proved { set: set.clone(), proof: proof.clone() }),
            None => {
                ctx.mark_lp(&self.name, LpMarker { value: v, valid: false, owner: p });
                ctx.respond(&self.name, Ret::Bool(false));
            }
        }
        Ok(result)
    }

    pub async fn read(&self, ctx: &Ctx) -> Result<Vec<ProofRecord>, ObjectError> {
        ctx.invoke(&self.name, Call::Read);
        ctx.step().await;
        let records: Vec<ProofRecord> = self.as_proof.borrow().iter().flatten().cloned().collect();
        ctx.respond(&self.name, Ret::Records(records.clone()));
        Ok(records)
    }

    pub fn peek_listed(&self) -> BTreeSet<Value> {
        self.as_lv.peek().into_iter().flatten().collect()
    }

    pub fn peek_records(&self) -> Vec<ProofRecord> {
        self.as_proof.borrow().iter().flatten().cloned().collect()
    }

    /// Decisions of the consensus array, in index order.
    pub fn decisions(&self) -> Vec<Option<(QueueEntry, BTreeSet<Value>)>> {
        self.cons_arr.borrow().iter().map(|c| c.decision()).collect()
    }

    pub fn prove_stats(&self) -> Vec<ProveStats> {
        self.stats.borrow().clone()
    }
}
