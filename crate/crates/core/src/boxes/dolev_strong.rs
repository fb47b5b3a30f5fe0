use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{BaBox, BoxBody};
use crate::crypto::{Domain, SignatureToken, Statement};
use crate::engine::Cx;
use crate::types::{PartyId, Round, Value};

/// A value with its signature chain for one broadcast slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DsMsg {
    pub slot: PartyId,
    pub value: Value,
    pub chain: Vec<SignatureToken>,
}

pub(crate) fn chain_stmt(slot: PartyId, v: Value) -> Statement {
    Statement::with_slot(Domain::DsChain, slot.0, v)
}

/// `n` parallel Dolev-Strong broadcasts, one per party as sender, followed by
/// a plurality vote over the agreed vector. Tolerates `t` corruptions with
/// working signatures; outputs in local round `t + 1`.
#[derive(Clone, Debug)]
pub struct DolevStrong {
    start: Round,
    input: Value,
    t: usize,
    extracted: BTreeMap<PartyId, BTreeSet<Value>>,
    output: Option<Value>,
}

impl DolevStrong {
    pub fn rounds(t: usize) -> Round {
        t as Round + 2
    }

    pub fn new(start: Round, input: Value, t: usize) -> Self {
        DolevStrong { start, input, t, extracted: BTreeMap::new(), output: None }
    }

    fn valid(&self, cx: &Cx<'_, BoxBody>, m: &DsMsg, need: usize) -> bool {
        let stmt = chain_stmt(m.slot, m.value);
        let signers: BTreeSet<PartyId> = m.chain.iter().map(|s| s.signer).collect();
        m.slot.index() < cx.params.n
            && m.chain.first().is_some_and(|s| s.signer == m.slot)
            && signers.len() == m.chain.len()
            && m.chain.len() >= need
            && m.chain.iter().all(|s| cx.crypto.verify(s.signer, &stmt, s))
    }
}

impl BaBox for DolevStrong {
    fn on_round(&mut self, cx: &mut Cx<'_, BoxBody>, inbox: &[(PartyId, BoxBody)]) {
        let local = cx.round.saturating_sub(self.start);
        if local == 0 {
            let sig = cx.crypto.sign(cx.me, &chain_stmt(cx.me, self.input)).expect("registered");
            self.extracted.entry(cx.me).or_default().insert(self.input);
            cx.multicast(BoxBody::Ds(DsMsg { slot: cx.me, value: self.input, chain: vec![sig] }));
            return;
        }
        if local > self.t as Round + 1 || self.output.is_some() {
            return;
        }
        for (_, body) in inbox {
            let BoxBody::Ds(m) = body else { continue };
            let seen = self.extracted.entry(m.slot).or_default();
            if seen.len() >= 2 || seen.contains(&m.value) {
                continue;
            }
            if !self.valid(cx, m, local as usize) {
                continue;
            }
            self.extracted.entry(m.slot).or_default().insert(m.value);
            if local <= self.t as Round && !m.chain.iter().any(|s| s.signer == cx.me) {
                let stmt = chain_stmt(m.slot, m.value);
                let mut chain = m.chain.clone();
                chain.push(cx.crypto.sign(cx.me, &stmt).expect("registered"));
                cx.multicast(BoxBody::Ds(DsMsg { slot: m.slot, value: m.value, chain }));
            }
        }
        if local == self.t as Round + 1 {
            let mut tally: BTreeMap<Value, usize> = BTreeMap::new();
            for set in self.extracted.values() {
                if set.len() == 1 {
                    *tally.entry(*set.iter().next().expect("one")).or_default() += 1;
                }
            }
            // Highest count wins; among equal counts the smallest value.
            let best = tally.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(v, _)| *v);
            self.output = Some(best.unwrap_or(Value::BOTTOM));
        }
    }

    fn output(&self) -> Option<Value> {
        self.output
    }
}
