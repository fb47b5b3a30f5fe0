use std::collections::BTreeMap;

use serde::Serialize;

use super::{BaBox, BoxBody};
use crate::engine::Cx;
use crate::types::{PartyId, Round, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KingStep {
    Value,
    Propose,
    King,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KingMsg {
    pub phase: u16,
    pub step: KingStep,
    pub value: Value,
}

/// Phase king for `n > 3t`: `t + 1` phases of three rounds, party `p` is king
/// of phase `p`. Unsigned.
#[derive(Clone, Debug)]
pub struct PhaseKing {
    start: Round,
    v: Value,
    t: usize,
    /// Whether this phase's proposals for `v` reached `n - t`.
    strong: bool,
    output: Option<Value>,
}

impl PhaseKing {
    pub fn rounds(t: usize) -> Round {
        3 * (t as Round + 1)
    }

    pub fn new(start: Round, input: Value, t: usize) -> Self {
        PhaseKing { start, v: input, t, strong: false, output: None }
    }

    /// First message of each sender for `(phase, step)`.
    fn collect(inbox: &[(PartyId, BoxBody)], phase: u16, step: KingStep) -> BTreeMap<PartyId, Value> {
        let mut out = BTreeMap::new();
        for (from, body) in inbox {
            if let BoxBody::King(m) = body {
                if m.phase == phase && m.step == step {
                    out.entry(*from).or_insert(m.value);
                }
            }
        }
        out
    }

    fn counts(msgs: &BTreeMap<PartyId, Value>) -> BTreeMap<Value, usize> {
        let mut c = BTreeMap::new();
        for v in msgs.values() {
            *c.entry(*v).or_default() += 1;
        }
        c
    }
}

impl BaBox for PhaseKing {
    fn on_round(&mut self, cx: &mut Cx<'_, BoxBody>, inbox: &[(PartyId, BoxBody)]) {
        if self.output.is_some() {
            return;
        }
        let local = cx.round.saturating_sub(self.start);
        let n = cx.params.n;
        let t = self.t;
        let phase = (local / 3) as u16;
        let send = |cx: &mut Cx<'_, BoxBody>, phase: u16, step: KingStep, value: Value| {
            cx.multicast(BoxBody::King(KingMsg { phase, step, value }));
        };
        match local % 3 {
            0 => {
                if phase > 0 {
                    let prev = phase - 1;
                    let king = PartyId(prev);
                    let kv = Self::collect(inbox, prev, KingStep::King).get(&king).copied();
                    if let (false, Some(kv)) = (self.strong, kv) {
                        self.v = kv;
                    }
                }
                if phase as usize == t + 1 {
                    self.output = Some(self.v);
                    return;
                }
                send(cx, phase, KingStep::Value, self.v);
            }
            1 => {
                let counts = Self::counts(&Self::collect(inbox, phase, KingStep::Value));
                if let Some((w, _)) = counts.iter().find(|(_, c)| **c >= n - t) {
                    send(cx, phase, KingStep::Propose, *w);
                }
            }
            _ => {
                let counts = Self::counts(&Self::collect(inbox, phase, KingStep::Propose));
                if let Some((w, _)) = counts.iter().find(|(_, c)| **c > t) {
                    self.v = *w;
                }
                self.strong = counts.get(&self.v).copied().unwrap_or(0) >= n - t;
                if cx.me.0 == phase {
                    send(cx, phase, KingStep::King, self.v);
                }
            }
        }
    }

    fn output(&self) -> Option<Value> {
        self.output
    }
}

