use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Tok;
use crate::engine::{Cx, EventKind, Payload};
use crate::protocol::{Machine, Report};
use crate::types::{PartyId, Tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MvMsg {
    Mv1(Tok),
    Mv2(Tok),
}

impl MvMsg {
    pub fn tok(self) -> Tok {
        match self {
            MvMsg::Mv1(t) | MvMsg::Mv2(t) => t,
        }
    }
}

impl Payload for MvMsg {
    fn tag(&self) -> Tag {
        Tag::GcSabInner
    }

    /// Kind byte plus a token (variant byte and value).
    fn byte_size(&self, _lambda: usize) -> usize {
        1 + 1 + 4
    }
}

/// One multivalued-broadcast instance from a single party's view.
#[derive(Clone, Debug)]
pub struct MvBroadcast {
    default: Tok,
    started: bool,
    buffer: Vec<(PartyId, MvMsg)>,
    /// `M_1(v)`: senders of `mv1(v)`, including the default.
    m1: BTreeMap<Tok, BTreeSet<PartyId>>,
    /// First `mv2` per sender.
    mv2_from: BTreeMap<PartyId, Tok>,
    /// `M_2(v)`.
    m2: BTreeMap<Tok, BTreeSet<PartyId>>,
    sent_mv1: BTreeSet<Tok>,
    ready: bool,
    output: Option<BTreeSet<Tok>>,
}

impl MvBroadcast {
    pub fn new(default: Tok) -> Self {
        MvBroadcast {
            default,
            started: false,
            buffer: Vec::new(),
            m1: BTreeMap::new(),
            mv2_from: BTreeMap::new(),
            m2: BTreeMap::new(),
            sent_mv1: BTreeSet::new(),
            ready: false,
            output: None,
        }
    }

    pub fn started(&self) -> bool {
        self.started
    }

    pub fn output(&self) -> Option<&BTreeSet<Tok>> {
        self.output.as_ref()
    }

    /// Multicasts `mv1(input)` and processes anything buffered so far.
    pub fn start(&mut self, input: Tok, cx: &mut Cx<'_, MvMsg>) {
        if self.started {
            return;
        }
        self.started = true;
        self.sent_mv1.insert(input);
        cx.multicast(MvMsg::Mv1(input));
        let buffered = std::mem::take(&mut self.buffer);
        self.ingest(&buffered, cx);
        self.evaluate(cx);
    }

    /// Handles messages delivered this round. Before `start` they are kept.
    pub fn on_messages(&mut self, msgs: &[(PartyId, MvMsg)], cx: &mut Cx<'_, MvMsg>) {
        if !self.started {
            self.buffer.extend_from_slice(msgs);
            return;
        }
        self.ingest(msgs, cx);
        self.evaluate(cx);
    }

    fn ingest(&mut self, msgs: &[(PartyId, MvMsg)], cx: &mut Cx<'_, MvMsg>) {
        for &(from, msg) in msgs {
            match msg {
                MvMsg::Mv1(t) => {
                    if !self.m1.entry(t).or_default().insert(from) {
                        cx.note_duplicate();
                    }
                }
                MvMsg::Mv2(t) => match self.mv2_from.entry(from) {
                    Entry::Occupied(_) => cx.note_duplicate(),
                    Entry::Vacant(e) => {
                        e.insert(t);
                    }
                },
            }
        }
    }

    fn support(&self, t: Tok) -> usize {
        self.m1.get(&t).map_or(0, BTreeSet::len)
    }

    fn evaluate(&mut self, cx: &mut Cx<'_, MvMsg>) {
        let n = cx.params.n;
        let t_s = cx.params.t_s;

        // Relay values with t_s + 1 supporters.
        let relay: Vec<Tok> = self
            .m1
            .iter()
            .filter(|(t, s)| **t != self.default && s.len() > t_s && !self.sent_mv1.contains(t))
            .map(|(t, _)| *t)
            .collect();
        for t in relay {
            self.sent_mv1.insert(t);
            cx.multicast(MvMsg::Mv1(t));
        }

        // Too much spread: vote for the default.
        if !self.sent_mv1.contains(&self.default) {
            let mut union = BTreeSet::new();
            let mut max = 0;
            for (t, s) in &self.m1 {
                if *t == self.default {
                    continue;
                }
                union.extend(s.iter().copied());
                max = max.max(s.len());
            }
            if union.len() - max > t_s {
                self.sent_mv1.insert(self.default);
                cx.multicast(MvMsg::Mv1(self.default));
            }
        }

        if !self.ready {
            if let Some((t, _)) = self.m1.iter().find(|(_, s)| s.len() >= n - t_s) {
                let t = *t;
                self.ready = true;
                cx.multicast(MvMsg::Mv2(t));
            }
        }

        for (&j, &t) in &self.mv2_from {
            if self.support(t) >= n - t_s {
                self.m2.entry(t).or_default().insert(j);
            }
        }

        if self.output.is_none() {
            let union: BTreeSet<PartyId> = self.m2.values().flatten().copied().collect();
            if union.len() >= n - t_s {
                let set: BTreeSet<Tok> =
                    self.m2.iter().filter(|(_, s)| !s.is_empty()).map(|(t, _)| *t).collect();
                self.output = Some(set);
            }
        }
    }
}

/// A broadcast instance run on its own with a fixed input.
#[derive(Clone, Debug)]
pub struct MvMachine {
    input: Tok,
    mv: MvBroadcast,
    reported: bool,
}

impl MvMachine {
    pub fn new(input: Tok) -> Self {
        MvMachine { input, mv: MvBroadcast::new(Tok::BotMv), reported: false }
    }
}

impl Machine for MvMachine {
    type Msg = MvMsg;
    type Output = BTreeSet<Tok>;

    fn on_round(&mut self, cx: &mut Cx<'_, MvMsg>, inbox: &[(PartyId, MvMsg)]) {
        if !self.mv.started() {
            self.mv.start(self.input, cx);
        }
        self.mv.on_messages(inbox, cx);
        if let (false, Some(set)) = (self.reported, self.mv.output()) {
            self.reported = true;
            cx.emit(EventKind::MvOutput { instance: 0, set: set.iter().copied().collect() });
        }
    }

    fn output(&self) -> Option<BTreeSet<Tok>> {
        self.mv.output().cloned()
    }
}

impl Report for BTreeSet<Tok> {
    fn report(&self, _tag: Tag) -> Option<EventKind> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{Crypto, KeyRegistry};
    use crate::types::{Params, Setting, Value};

    /// Drives `n` honest instances in lockstep with the given inputs.
    fn run_all_honest(params: Params, inputs: &[Tok]) -> Vec<BTreeSet<Tok>> {
        let crypto = Crypto::new(Setting::Sabotaged, KeyRegistry::setup(params.n, 0));
        let mut nodes: Vec<MvBroadcast> = (0..params.n).map(|_| MvBroadcast::new(Tok::BotMv)).collect();
        let mut inflight: Vec<(PartyId, MvMsg)> = Vec::new();
        for round in 0..20 {
            let delivered = std::mem::take(&mut inflight);
            for (i, node) in nodes.iter_mut().enumerate() {
                let mut cx = Cx::new(PartyId(i as u16), round, &params, &crypto);
                if round == 0 {
                    node.start(inputs[i], &mut cx);
                } else {
                    node.on_messages(&delivered, &mut cx);
                }
                inflight.extend(cx.out.into_iter().map(|o| (PartyId(i as u16), o.msg)));
            }
        }
        nodes.into_iter().map(|n| n.output.expect("every honest party outputs")).collect()
    }

    #[test]
    fn unanimous_input_outputs_singleton() {
        let v = Tok::Val(Value(5));
        let outs = run_all_honest(Params::new(4, 1, 1), &[v; 4]);
        for s in outs {
            assert_eq!(s, BTreeSet::from([v]));
        }
    }

    #[test]
    fn split_input_outputs_only_default_or_honest_values() {
        let a = Tok::Val(Value(0));
        let b = Tok::Val(Value(1));
        let outs = run_all_honest(Params::new(5, 2, 1), &[a, a, b, b, a]);
        for s in outs {
            assert!(s.iter().all(|t| [a, b, Tok::BotMv].contains(t)), "{s:?}");
        }
    }
}
