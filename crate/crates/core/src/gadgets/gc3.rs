use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::mv::{MvBroadcast, MvMsg};
use super::Tok;
use crate::engine::{Cx, EventKind, Payload};
use crate::protocol::{Machine, Report};
use crate::types::{PartyId, Tag, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gc3Msg {
    Init(Value),
    Echo(Value),
    /// Message of broadcast instance 1 or 2.
    Mv(u8, MvMsg),
}

impl Payload for Gc3Msg {
    fn tag(&self) -> Tag {
        Tag::GcSabInner
    }

    fn byte_size(&self, _lambda: usize) -> usize {
        match self {
            Gc3Msg::Init(_) | Gc3Msg::Echo(_) => 1 + 4,
            Gc3Msg::Mv(_, m) => 1 + 1 + m.byte_size(0),
        }
    }
}

/// Three-grade multivalued graded consensus from one party's view.
#[derive(Clone, Debug)]
pub struct Gc3 {
    input: Value,
    started: bool,
    buffer: Vec<(PartyId, Gc3Msg)>,
    init_from: BTreeMap<PartyId, Value>,
    init_support: BTreeMap<Value, BTreeSet<PartyId>>,
    /// `R(v)`: senders of `init(v)` or `echo(v)`.
    support: BTreeMap<Value, BTreeSet<PartyId>>,
    echoed: BTreeSet<Value>,
    proposed: bool,
    val: Tok,
    aux: Tok,
    mv1: MvBroadcast,
    mv2: MvBroadcast,
    result: Option<(Tok, u8)>,
}

impl Gc3 {
    pub fn new(input: Value) -> Self {
        Gc3 {
            input,
            started: false,
            buffer: Vec::new(),
            init_from: BTreeMap::new(),
            init_support: BTreeMap::new(),
            support: BTreeMap::new(),
            echoed: BTreeSet::new(),
            proposed: false,
            val: Tok::Bot,
            aux: Tok::Bot,
            mv1: MvBroadcast::new(Tok::BotMv1),
            mv2: MvBroadcast::new(Tok::BotMv2),
            result: None,
        }
    }

    pub fn started(&self) -> bool {
        self.started
    }

    /// `(value, grade)` with grade in `{0, 1, 2}`.
    pub fn output(&self) -> Option<(Tok, u8)> {
        self.result
    }

    pub fn start(&mut self, cx: &mut Cx<'_, Gc3Msg>) {
        if self.started {
            return;
        }
        self.started = true;
        cx.multicast(Gc3Msg::Init(self.input));
        let buffered = std::mem::take(&mut self.buffer);
        self.handle(&buffered, cx);
    }

    pub fn on_messages(&mut self, msgs: &[(PartyId, Gc3Msg)], cx: &mut Cx<'_, Gc3Msg>) {
        if !self.started {
            self.buffer.extend_from_slice(msgs);
            return;
        }
        self.handle(msgs, cx);
    }

    fn handle(&mut self, msgs: &[(PartyId, Gc3Msg)], cx: &mut Cx<'_, Gc3Msg>) {
        let mut mv1_in = Vec::new();
        let mut mv2_in = Vec::new();
        for &(from, msg) in msgs {
            match msg {
                Gc3Msg::Init(v) => {
                    if self.init_from.contains_key(&from) {
                        cx.note_duplicate();
                        continue;
                    }
                    self.init_from.insert(from, v);
                    self.init_support.entry(v).or_default().insert(from);
                    self.support.entry(v).or_default().insert(from);
                }
                Gc3Msg::Echo(v) => {
                    self.support.entry(v).or_default().insert(from);
                }
                Gc3Msg::Mv(1, m) => mv1_in.push((from, m)),
                Gc3Msg::Mv(2, m) => mv2_in.push((from, m)),
                Gc3Msg::Mv(_, _) => {}
            }
        }

        let n = cx.params.n;
        let t_s = cx.params.t_s;

        let to_echo: Vec<Value> = self
            .init_support
            .iter()
            .filter(|(v, s)| s.len() > t_s && **v != self.input && !self.echoed.contains(v))
            .map(|(v, _)| *v)
            .collect();
        for v in to_echo {
            self.echoed.insert(v);
            cx.multicast(Gc3Msg::Echo(v));
        }

        if !self.proposed {
            // Conditions are applied in order; a later match overwrites `val`.
            let mut fire = false;
            if self.support.iter().any(|(v, s)| *v != self.input && s.len() > t_s) {
                fire = true;
                self.val = Tok::BotRd;
            }
            if let Some((v, _)) = self.support.iter().find(|(_, s)| s.len() >= n - t_s) {
                fire = true;
                self.val = Tok::Val(*v);
            }
            let union: BTreeSet<PartyId> = self.support.values().flatten().copied().collect();
            let max = self.support.values().map(BTreeSet::len).max().unwrap_or(0);
            if union.len() - max > t_s {
                fire = true;
                self.val = Tok::BotRd;
            }
            if fire {
                self.proposed = true;
                let mut sub = cx.child();
                self.mv1.start(self.val, &mut sub);
                cx.absorb(sub, |m| Gc3Msg::Mv(1, m));
            }
        }

        let mut sub = cx.child();
        self.mv1.on_messages(&mv1_in, &mut sub);
        cx.absorb(sub, |m| Gc3Msg::Mv(1, m));

        if !self.mv2.started() {
            if let Some(s1) = self.mv1.output() {
                cx.emit(EventKind::MvOutput { instance: 1, set: s1.iter().copied().collect() });
                if s1.len() == 1 {
                    self.aux = *s1.iter().next().expect("singleton");
                }
                let mut sub = cx.child();
                self.mv2.start(self.aux, &mut sub);
                cx.absorb(sub, |m| Gc3Msg::Mv(2, m));
            }
        }

        let mut sub = cx.child();
        self.mv2.on_messages(&mv2_in, &mut sub);
        cx.absorb(sub, |m| Gc3Msg::Mv(2, m));

        if self.result.is_none() {
            if let Some(s2) = self.mv2.output() {
                cx.emit(EventKind::MvOutput { instance: 2, set: s2.iter().copied().collect() });
                let first_val = s2.iter().copied().find(|t| t.is_val());
                let res = match (s2.len(), first_val) {
                    (1, Some(v)) => (v, 2),
                    (_, Some(v)) => (v, 1),
                    (_, None) => (Tok::Bot, 0),
                };
                self.result = Some(res);
                cx.emit(EventKind::Gc3Output { value: res.0, grade: res.1 });
            }
        }
    }

    /// Broadcast-instance outputs, for the gadget-level oracles.
    pub fn mv_outputs(&self) -> (Option<&BTreeSet<Tok>>, Option<&BTreeSet<Tok>>) {
        (self.mv1.output(), self.mv2.output())
    }
}

impl Machine for Gc3 {
    type Msg = Gc3Msg;
    type Output = (Tok, u8);

    fn on_round(&mut self, cx: &mut Cx<'_, Gc3Msg>, inbox: &[(PartyId, Gc3Msg)]) {
        if !self.started {
            self.start(cx);
        }
        self.handle(inbox, cx);
    }

    fn output(&self) -> Option<(Tok, u8)> {
        self.result
    }
}

impl Report for (Tok, u8) {
    fn report(&self, _tag: Tag) -> Option<EventKind> {
        None
    }
}

/// Collapses a three-grade output to a two-grade one: grade 1 iff the inner
/// grade is 2; the value survives iff the inner grade is at least 1.
pub fn gc3_to_binary(value: Tok, grade: u8) -> (Value, u8) {
    match (value.value(), grade) {
        (Some(v), 2) => (v, 1),
        (Some(v), 1) => (v, 0),
        _ => (Value::BOTTOM, 0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_adapter() {
        let v = Value(3);
        assert_eq!(gc3_to_binary(Tok::Val(v), 2), (v, 1));
        assert_eq!(gc3_to_binary(Tok::Val(v), 1), (v, 0));
        assert_eq!(gc3_to_binary(Tok::Bot, 0), (Value::BOTTOM, 0));
    }
}
