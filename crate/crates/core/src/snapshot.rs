//! Single-writer atomic snapshot arrays.
//!
//! Three flavours share one interface:
//! - `Native`: a linearizable base object (one access per operation), for
//!   campaigns that test the objects built on top;
//! - `Registers`: the classic wait-free construction from SWMR registers with
//!   unbounded sequence numbers. Every update embeds a fresh scan; a scanner
//!   that sees the same writer move twice returns that writer's embedded view;
//! - `Naive`: two collects, second one returned whatever happened. Not
//!   linearizable; kept as a negative control.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::ops::{Call, Ret};
use crate::sim::{Ctx, ObjectError, Register};
use crate::value::{ProcessId, Value};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotKind {
    #[default]
    Native,
    Registers,
    Naive,
}

#[derive(Clone, Debug)]
struct Slot<T> {
    value: T,
    seq: u64,
    view: Vec<(T, u64)>,
}

enum Repr<T> {
    Native(RefCell<Vec<(T, u64)>>),
    Registers { regs: Vec<Register<Slot<T>>>, helping: bool },
}

pub struct SnapshotArray<T> {
    width: usize,
    repr: Repr<T>,
}

/// Most base-register accesses one operation of the register construction
/// can take at `width` slots: at most `width + 2` collects of `width` reads,
/// plus the write of an update.
pub fn register_access_bound(width: usize) -> u64 {
    (width * (width + 2) + 1) as u64
}

impl<T: Clone> SnapshotArray<T> {
    pub fn new(kind: SnapshotKind, width: usize, initial: T) -> Self {
        let repr = match kind {
            SnapshotKind::Native => Repr::Native(RefCell::new(vec![(initial, 0); width])),
            SnapshotKind::Registers | SnapshotKind::Naive => Repr::Registers {
                regs: (0..width)
                    .map(|i| {
                        Register::new(
                            ProcessId::from_slot(i),
                            Slot {
                                value: initial.clone(),
                                seq: 0,
                                view: vec![(initial.clone(), 0); width],
                            },
                        )
                    })
                    .collect(),
                helping: kind == SnapshotKind::Registers,
            },
        };
        SnapshotArray { width, repr }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn own_slot(&self, ctx: &Ctx) -> Result<usize, ObjectError> {
        let slot = ctx.pid().slot();
        if slot >= self.width {
            return Err(ObjectError::Invariant(format!(
                "{} has no slot in a {}-wide snapshot",
                ctx.pid(),
                self.width
            )));
        }
        Ok(slot)
    }

    /// Writes `v` into the caller's slot.
    pub async fn update(&self, ctx: &Ctx, v: T) -> Result<(), ObjectError> {
        let i = self.own_slot(ctx)?;
        match &self.repr {
            Repr::Native(cells) => {
                ctx.step().await;
                let mut cells = cells.borrow_mut();
                cells[i] = (v, cells[i].1 + 1);
                Ok(())
            }
            Repr::Registers { regs, helping } => {
                // Only the owner writes this register, so its last write is local knowledge.
                let seq = regs[i].peek().seq + 1;
                let view = if *helping {
                    self.scan_registers(ctx, regs, true).await
                } else {
                    Vec::new()
                };
                regs[i].write(ctx, Slot { value: v, seq, view }).await
            }
        }
    }

    /// The whole array, with each slot's write count.
    pub async fn snapshot_versioned(&self, ctx: &Ctx) -> Vec<(T, u64)> {
        match &self.repr {
            Repr::Native(cells) => {
                ctx.step().await;
                cells.borrow().clone()
            }
            Repr::Registers { regs, helping } => self.scan_registers(ctx, regs, *helping).await,
        }
    }

    pub async fn snapshot(&self, ctx: &Ctx) -> Vec<T> {
        self.snapshot_versioned(ctx).await.into_iter().map(|(v, _)| v).collect()
    }

    async fn collect(&self, ctx: &Ctx, regs: &[Register<Slot<T>>]) -> Vec<Slot<T>> {
        let mut out = Vec::with_capacity(regs.len());
        for r in regs {
            out.push(r.read(ctx).await);
        }
        out
    }

    async fn scan_registers(&self, ctx: &Ctx, regs: &[Register<Slot<T>>], helping: bool) -> Vec<(T, u64)> {
        let values = |c: Vec<Slot<T>>| c.into_iter().map(|s| (s.value, s.seq)).collect();
        let mut moved = vec![0u32; regs.len()];
        let mut prev = self.collect(ctx, regs).await;
        loop {
            let cur = self.collect(ctx, regs).await;
            if !helping {
                return values(cur);
            }
            let mut clean = true;
            for j in 0..regs.len() {
                if prev[j].seq != cur[j].seq {
                    clean = false;
                    moved[j] += 1;
                    if moved[j] >= 2 {
                        return cur[j].view.clone();
                    }
                }
            }
            if clean {
                return values(cur);
            }
            prev = cur;
        }
    }

    /// Current contents without a scheduling point, for inspection after a run.
    pub fn peek(&self) -> Vec<T> {
        match &self.repr {
            Repr::Native(cells) => cells.borrow().iter().map(|(v, _)| v.clone()).collect(),
            Repr::Registers { regs, .. } => regs.iter().map(|r| r.peek().value).collect(),
        }
    }
}

/// A snapshot array of optional values whose operations are recorded in the history.
pub struct RecordedSnapshot {
    name: String,
    inner: SnapshotArray<Option<Value>>,
}

impl RecordedSnapshot {
    pub fn new(name: impl Into<String>, kind: SnapshotKind, width: usize) -> Self {
        RecordedSnapshot {
            name: name.into(),
            inner: SnapshotArray::new(kind, width, None),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub async fn update(&self, ctx: &Ctx, v: Value) -> Result<(), ObjectError> {
        ctx.invoke(&self.name, Call::Update(v.clone()));
        self.inner.update(ctx, Some(v)).await?;
        ctx.respond(&self.name, Ret::Ack);
        Ok(())
    }

    pub async fn scan(&self, ctx: &Ctx) -> Vec<(Option<Value>, u64)> {
        ctx.invoke(&self.name, Call::Scan);
        let view = self.inner.snapshot_versioned(ctx).await;
        ctx.respond(&self.name, Ret::View(view.iter().map(|(v, _)| v.clone()).collect()));
        view
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{RandomScheduler, Sim, SimOptions};
    use std::rc::Rc;

    fn run_two_updates_then_scan(kind: SnapshotKind) -> Vec<Option<u32>> {
        let arr = Rc::new(SnapshotArray::new(kind, 2, None));
        let out = Rc::new(RefCell::new(Vec::new()));
        let mut sim = Sim::new(SimOptions::default());
        let (a, o) = (arr.clone(), out.clone());
        sim.spawn(ProcessId(1), move |ctx| async move {
            *o.borrow_mut() = a.snapshot(&ctx).await;
            assert_eq!(*o.borrow(), vec![None, None]);
            a.update(&ctx, Some(1)).await?;
            a.update(&ctx, Some(2)).await?;
            *o.borrow_mut() = a.snapshot(&ctx).await;
            Ok(())
        });
        sim.run(&mut RandomScheduler::new(0)).unwrap();
        let v = out.borrow().clone();
        v
    }

    #[test]
    fn sequential_updates_visible_to_owner() {
        for kind in [SnapshotKind::Native, SnapshotKind::Registers, SnapshotKind::Naive] {
            assert_eq!(run_two_updates_then_scan(kind), vec![Some(2), None]);
        }
    }

    #[test]
    fn access_bound_formula() {
        assert_eq!(register_access_bound(1), 4);
        assert_eq!(register_access_bound(3), 16);
    }
}
