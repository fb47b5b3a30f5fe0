//! Glue between subprotocol state machines and the engine.

use std::fmt;

use crate::engine::{Cx, EventKind, Party, Payload};
use crate::types::{PartyId, Round, Tag, Value};

/// A subprotocol instance at one party. It is stepped once per round from its
/// start round on; `cx.round` is the global round.
pub trait Machine: Send {
    type Msg: Payload;
    type Output: Clone + fmt::Debug;

    fn on_round(&mut self, cx: &mut Cx<'_, Self::Msg>, inbox: &[(PartyId, Self::Msg)]);

    fn output(&self) -> Option<Self::Output>;
}

/// A subprotocol that may not have started yet. Messages that arrive early are
/// held and handed over in the start round.
#[derive(Debug, Clone)]
pub struct Slot<M: Machine> {
    machine: Option<M>,
    early: Vec<(PartyId, M::Msg)>,
}

impl<M: Machine> Default for Slot<M> {
    fn default() -> Self {
        Slot { machine: None, early: Vec::new() }
    }
}

impl<M: Machine> Slot<M> {
    pub fn is_started(&self) -> bool {
        self.machine.is_some()
    }

    pub fn get(&self) -> Option<&M> {
        self.machine.as_ref()
    }

    pub fn output(&self) -> Option<M::Output> {
        self.machine.as_ref().and_then(Machine::output)
    }

    /// Installs `machine` and runs its first round on everything held so far
    /// plus `inbox`.
    pub fn start(&mut self, machine: M, cx: &mut Cx<'_, M::Msg>, inbox: &[(PartyId, M::Msg)]) {
        debug_assert!(self.machine.is_none());
        let mut all = std::mem::take(&mut self.early);
        all.extend_from_slice(inbox);
        let m = self.machine.insert(machine);
        m.on_round(cx, &all);
    }

    /// Steps a started machine, or holds `inbox` for later.
    pub fn step(&mut self, cx: &mut Cx<'_, M::Msg>, inbox: &[(PartyId, M::Msg)]) {
        match self.machine.as_mut() {
            Some(m) => m.on_round(cx, inbox),
            None => self.early.extend_from_slice(inbox),
        }
    }

    /// Drops the instance; later messages are ignored.
    pub fn abort(&mut self) -> Option<M> {
        self.early.clear();
        self.machine.take()
    }
}

/// What a standalone run reports when its machine outputs.
/// Machines that already emit their own output event return `None`.
pub trait Report {
    fn report(&self, tag: Tag) -> Option<EventKind>;
}

impl Report for Option<Value> {
    fn report(&self, _tag: Tag) -> Option<EventKind> {
        None
    }
}

/// Runs a single subprotocol as the whole protocol of a party.
///
/// The machine starts at `start` (per-party, to model start skew). The party
/// is done once the machine has output and then stayed quiet for `linger`
/// rounds (default 2), or at `deadline`, whichever comes first.
#[derive(Debug)]
pub struct Standalone<M: Machine> {
    slot: Slot<M>,
    pending: Option<M>,
    start: Round,
    deadline: Round,
    quiet: u8,
    linger: u8,
    round: Round,
    tag: Tag,
    reported: bool,
}

impl<M: Machine> Standalone<M>
where
    M::Output: Report,
{
    pub fn new(machine: M, start: Round, deadline: Round, tag: Tag) -> Self {
        Standalone {
            slot: Slot::default(),
            pending: Some(machine),
            start,
            deadline,
            quiet: 0,
            linger: 2,
            round: 0,
            tag,
            reported: false,
        }
    }

    pub fn with_linger(mut self, rounds: u8) -> Self {
        self.linger = rounds;
        self
    }

    pub fn machine(&self) -> Option<&M> {
        self.slot.get()
    }
}

impl<M: Machine> Party for Standalone<M>
where
    M::Output: Report,
{
    type Msg = M::Msg;

    fn on_round(&mut self, cx: &mut Cx<'_, M::Msg>, inbox: &[(PartyId, M::Msg)]) {
        self.round = cx.round;
        if cx.round == self.start {
            let m = self.pending.take().expect("started once");
            self.slot.start(m, cx, inbox);
        } else {
            self.slot.step(cx, inbox);
        }
        if !self.reported {
            if let Some(out) = self.slot.output() {
                self.reported = true;
                if let Some(ev) = out.report(self.tag) {
                    cx.emit(ev);
                }
            }
        }
        if self.reported && cx.out.is_empty() {
            self.quiet += 1;
        } else {
            self.quiet = 0;
        }
    }

    fn is_done(&self) -> bool {
        self.quiet >= self.linger || self.round >= self.deadline
    }
}
