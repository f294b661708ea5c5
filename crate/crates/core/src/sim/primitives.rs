//! Atomic base objects: SWMR registers, consensus cells and barriers.
//!
//! Every access awaits [`Ctx::step`] first, so each one is a separate
//! scheduling point and takes effect atomically when the process resumes.

use std::cell::{Cell, RefCell};
use std::collections::BTreeSet;
use std::rc::Rc;

use super::runtime::{Ctx, ObjectError};
use crate::value::ProcessId;

/// Single-writer multi-reader atomic register.
pub struct Register<T> {
    writer: ProcessId,
    value: RefCell<T>,
}

impl<T: Clone> Register<T> {
    pub fn new(writer: ProcessId, initial: T) -> Self {
        Register {
            writer,
            value: RefCell::new(initial),
        }
    }

    pub fn writer(&self) -> ProcessId {
        self.writer
    }

    pub async fn read(&self, ctx: &Ctx) -> T {
        ctx.step().await;
        self.value.borrow().clone()
    }

    pub async fn write(&self, ctx: &Ctx, v: T) -> Result<(), ObjectError> {
        ctx.step().await;
        if ctx.pid() != self.writer {
            return Err(ObjectError::WriterViolation {
                writer: self.writer,
                caller: ctx.pid(),
            });
        }
        *self.value.borrow_mut() = v;
        Ok(())
    }

    /// Current contents without a scheduling point, for post-run inspection.
    pub fn peek(&self) -> T {
        self.value.borrow().clone()
    }
}

/// One-shot consensus among a fixed participant set: the first proposal
/// to take effect is decided, and every proposer gets that decision.
pub struct ConsensusCell<T> {
    id: usize,
    participants: BTreeSet<ProcessId>,
    decided: RefCell<Option<T>>,
    proposed: RefCell<BTreeSet<ProcessId>>,
}

impl<T: Clone> ConsensusCell<T> {
    /// Creates a cell; refused when the participant set is larger than the
    /// simulator's configured consensus power.
    pub fn new(ctx: &Ctx, participants: BTreeSet<ProcessId>) -> Result<Self, ObjectError> {
        let id = ctx.register_consensus_cell(participants.len())?;
        Ok(ConsensusCell {
            id,
            participants,
            decided: RefCell::new(None),
            proposed: RefCell::new(BTreeSet::new()),
        })
    }

    pub async fn propose(&self, ctx: &Ctx, v: T) -> Result<T, ObjectError> {
        ctx.step().await;
        let caller = ctx.pid();
        if !self.participants.contains(&caller) {
            return Err(ObjectError::ParticipantViolation { cell: self.id, caller });
        }
        if !self.proposed.borrow_mut().insert(caller) {
            return Err(ObjectError::RepeatedProposal { cell: self.id, caller });
        }
        ctx.count_proposal();
        Ok(self.decided.borrow_mut().get_or_insert(v).clone())
    }

    pub fn decision(&self) -> Option<T> {
        self.decided.borrow().clone()
    }
}

/// Reusable-once rendezvous for `parties` processes.
#[derive(Clone)]
pub struct Barrier {
    parties: usize,
    arrived: Rc<Cell<usize>>,
}

impl Barrier {
    pub fn new(parties: usize) -> Self {
        Barrier {
            parties,
            arrived: Rc::new(Cell::new(0)),
        }
    }

    /// Announces arrival (one shared access) and blocks until everyone arrived.
    pub async fn wait(&self, ctx: &Ctx) {
        ctx.step().await;
        self.arrived.set(self.arrived.get() + 1);
        let arrived = self.arrived.clone();
        let parties = self.parties;
        ctx.wait_until(move || arrived.get() >= parties).await;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::runtime::{Sim, SimOptions};
    use crate::sim::scheduler::RandomScheduler;

    fn opts(power: usize) -> SimOptions {
        SimOptions {
            consensus_power: power,
            ..Default::default()
        }
    }

    #[test]
    fn register_read_write() {
        let reg = Rc::new(Register::new(ProcessId(1), None::<u32>));
        let seen = Rc::new(RefCell::new(Vec::new()));
        let mut sim = Sim::new(opts(0));
        let (r, s) = (reg.clone(), seen.clone());
        sim.spawn(ProcessId(1), move |ctx| async move {
            let first = r.read(&ctx).await;
            s.borrow_mut().push(first);
            r.write(&ctx, Some(1)).await?;
            r.write(&ctx, Some(2)).await?;
            let last = r.read(&ctx).await;
            s.borrow_mut().push(last);
            Ok(())
        });
        sim.run(&mut RandomScheduler::new(0)).unwrap();
        assert_eq!(*seen.borrow(), vec![None, Some(2)]);
    }

    #[test]
    fn foreign_write_is_rejected() {
        let reg = Rc::new(Register::new(ProcessId(1), 0u32));
        let mut sim = Sim::new(opts(0));
        let r = reg.clone();
        sim.spawn(ProcessId(2), move |ctx| async move { r.write(&ctx, 7).await });
        let err = sim.run(&mut RandomScheduler::new(0)).unwrap_err();
        assert!(matches!(
            err.kind,
            crate::sim::runtime::FailureKind::ProcessError {
                error: ObjectError::WriterViolation { .. },
                ..
            }
        ));
        assert_eq!(reg.peek(), 0);
    }

    #[test]
    fn consensus_first_proposal_wins() {
        let sim = Sim::new(opts(2));
        let ctx = sim.ctx(ProcessId(1));
        let cell = Rc::new(ConsensusCell::new(&ctx, [ProcessId(1), ProcessId(2)].into()).unwrap());
        let got = Rc::new(RefCell::new(Vec::new()));
        let mut sim = sim;
        for (p, v) in [(1, "a"), (2, "b")] {
            let (c, g) = (cell.clone(), got.clone());
            sim.spawn(ProcessId(p), move |ctx| async move {
                let d = c.propose(&ctx, v).await?;
                g.borrow_mut().push(d);
                Ok(())
            });
        }
        sim.run(&mut RandomScheduler::new(3)).unwrap();
        let got = got.borrow();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0], got[1]);
        assert_eq!(Some(got[0]), cell.decision());
    }

    #[test]
    fn cell_larger_than_power_is_refused() {
        let sim = Sim::new(opts(1));
        let res = ConsensusCell::<u8>::new(&sim.ctx(ProcessId(1)), [ProcessId(1), ProcessId(2)].into());
        assert!(matches!(res, Err(ObjectError::PowerExceeded { participants: 2, power: 1 })));
    }

    #[test]
    fn non_participant_is_rejected() {
        let mut sim = Sim::new(opts(1));
        let cell = Rc::new(ConsensusCell::new(&sim.ctx(ProcessId(1)), [ProcessId(1)].into()).unwrap());
        sim.spawn(ProcessId(2), move |ctx| async move { cell.propose(&ctx, 1u8).await.map(|_| ()) });
        assert!(sim.run(&mut RandomScheduler::new(0)).is_err());
    }
}
