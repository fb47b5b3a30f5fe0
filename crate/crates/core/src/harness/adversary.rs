//! The strategy library. Every strategy keeps a shadow copy of each corrupt
//! party's honest state machine, fed with what that party receives, and
//! derives the corrupt party's messages from what the shadow would send.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ScenarioConfig, StrategyKind};
use super::malleable::{Forger, Malleable};
use super::script::{Action, Script};
use crate::crypto::{Certificate, Provenance, Statement};
use crate::engine::{Adversary, AdversaryView, Cx, Dest, Injection, Outgoing, Party};
use crate::types::{PartyId, Round, Setting, Value};

pub struct Strategic<P: Party> {
    kind: StrategyKind,
    setting: Setting,
    /// `(round, party)`: when each party gets corrupted.
    schedule: Vec<(Round, PartyId)>,
    shadows: BTreeMap<PartyId, P>,
    seen: BTreeMap<Statement, Certificate>,
    values: (Value, Value),
    crash_round: Round,
    script: Option<Script>,
    rng: ChaCha8Rng,
}

impl<P: Party> Strategic<P>
where
    P::Msg: Malleable,
{
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let corrupt = cfg.corrupt();
        let schedule = match cfg.adversary.strategy {
            StrategyKind::Adaptive => {
                corrupt.iter().enumerate().map(|(k, p)| ((k as Round + 1) * cfg.adversary.every, *p)).collect()
            }
            _ => corrupt.iter().map(|p| (0, *p)).collect(),
        };
        Strategic {
            kind: cfg.adversary.strategy,
            setting: cfg.setting,
            schedule,
            shadows: BTreeMap::new(),
            seen: BTreeMap::new(),
            values: cfg.adversary.values,
            crash_round: cfg.adversary.crash_round,
            script: cfg.adversary.script.clone(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_ad5e),
        }
    }

    fn action(&mut self, party: PartyId, round: Round) -> Action {
        let alternating = if round.is_multiple_of(2) { 0x5555_5555 } else { 0xaaaa_aaaa };
        match self.kind {
            StrategyKind::None => Action::Honest,
            StrategyKind::Silent => Action::Silence,
            StrategyKind::Crash if round < self.crash_round => Action::Honest,
            StrategyKind::Crash => Action::Silence,
            StrategyKind::Equivocate => Action::Send { mask: alternating, forge: false },
            StrategyKind::Forger => Action::Send { mask: alternating, forge: true },
            StrategyKind::Adaptive => Action::Send { mask: alternating, forge: self.setting == Setting::Sabotaged },
            StrategyKind::Random => match self.rng.gen_range(0..6) {
                0 => Action::Honest,
                1 => Action::Silence,
                2 => Action::PUSH_A,
                3 => Action::PUSH_B,
                k => Action::Send { mask: self.rng.gen(), forge: k == 5 },
            },
            StrategyKind::Script => self.script.as_ref().map_or(Action::Honest, |s| s.action(party, round)),
        }
    }

    fn observe(&mut self, view: &AdversaryView<'_, P::Msg>) {
        for e in view.honest_sent.iter().chain(view.delivered_to_corrupt) {
            for c in e.payload.certificates() {
                if c.provenance == Provenance::Genuine && c.contributors.len() >= c.threshold {
                    self.seen.entry(c.statement).or_insert_with(|| c.clone());
                }
            }
        }
    }
}

impl<P: Party> Adversary<P> for Strategic<P>
where
    P::Msg: Malleable,
{
    fn name(&self) -> String {
        match &self.script {
            Some(s) if self.kind == StrategyKind::Script => format!("script {s}"),
            _ => self.kind.name().to_string(),
        }
    }

    fn corrupt_set(&mut self, round: Round) -> BTreeSet<PartyId> {
        self.schedule.iter().filter(|(r, _)| *r <= round).map(|(_, p)| *p).collect()
    }

    fn on_corrupt(&mut self, party: PartyId, state: P, _round: Round) {
        self.shadows.insert(party, state);
    }

    fn act(&mut self, view: &AdversaryView<'_, P::Msg>) -> Vec<Injection<P::Msg>> {
        self.observe(view);

        let mut injections = Vec::new();
        for &p in view.corrupt {
            let outs = match self.shadows.get_mut(&p) {
                Some(shadow) if !shadow.is_done() => {
                    let mut inbox: Vec<(PartyId, P::Msg)> = view
                        .delivered_to_corrupt
                        .iter()
                        .filter(|e| e.recipient == p)
                        .map(|e| (e.sender, e.payload.clone()))
                        .collect();
                    inbox.sort_by_key(|(s, _)| *s);
                    let mut cx = Cx::new(p, view.round, view.params, view.crypto);
                    shadow.on_round(&mut cx, &inbox);
                    cx.out
                }
                _ => Vec::new(),
            };
            let action = self.action(p, view.round);
            let forger = Forger { sender: p, crypto: view.crypto, params: view.params, corrupt: view.corrupt, seen: &self.seen };
            apply(action, &outs, &forger, self.values, &mut injections);
        }
        injections
    }
}

/// Turns the shadow's outgoing messages into injections according to `action`.
pub fn apply<M: Malleable>(
    action: Action,
    outs: &[Outgoing<M>],
    f: &Forger<'_>,
    (a, b): (Value, Value),
    injections: &mut Vec<Injection<M>>,
) {
    let n = f.params.n;
    let sender = f.sender;
    let push = |recipient: PartyId, msg: M, injections: &mut Vec<Injection<M>>| {
        let dup = injections.iter().any(|i| i.sender == sender && i.recipient == recipient && i.msg == msg);
        if !dup {
            injections.push(Injection { sender, recipient, msg });
        }
    };
    for o in outs {
        let recipients: Vec<PartyId> = match o.dest {
            Dest::All => PartyId::all(n).collect(),
            Dest::To(q) => vec![q],
        };
        match action {
            Action::Silence => {}
            Action::Honest => {
                for r in recipients {
                    push(r, o.msg.clone(), injections);
                }
            }
            Action::Send { mask, forge } => {
                let mut extras: [Option<Vec<M>>; 2] = [None, None];
                for r in recipients {
                    if f.corrupt.contains(&r) {
                        push(r, o.msg.clone(), injections);
                        continue;
                    }
                    let idx = if r < sender { r.0 } else { r.0 - 1 } as u32;
                    let side = usize::from(idx < 32 && mask & (1 << idx) != 0);
                    let target = if side == 1 { b } else { a };
                    if let Some(m) = o.msg.rewrite(target, f) {
                        push(r, m, injections);
                    }
                    if forge {
                        let extra = extras[side].get_or_insert_with(|| o.msg.forgeries(target, f));
                        for m in extra.iter() {
                            push(r, m.clone(), injections);
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{Crypto, KeyRegistry};
    use crate::gadgets::{MvMsg, Tok};
    use crate::types::Params;

    #[test]
    fn equivocation_splits_recipients_by_mask() {
        let params = Params::new(4, 1, 1);
        let crypto = Crypto::new(Setting::Sabotaged, KeyRegistry::setup(4, 0));
        let corrupt = BTreeSet::from([PartyId(1)]);
        let seen = BTreeMap::new();
        let f = Forger { sender: PartyId(1), crypto: &crypto, params: &params, corrupt: &corrupt, seen: &seen };
        let outs = vec![Outgoing { dest: Dest::All, msg: MvMsg::Mv1(Tok::Val(Value(9))) }];
        let mut inj = Vec::new();
        // Others in id order are p0, p2, p3; mask 0b010 sends `b` to p2 only.
        apply(Action::Send { mask: 0b010, forge: false }, &outs, &f, (Value(0), Value(1)), &mut inj);
        let got: Vec<(u16, MvMsg)> = inj.iter().map(|i| (i.recipient.0, i.msg)).collect();
        assert_eq!(
            got,
            vec![
                (0, MvMsg::Mv1(Tok::Val(Value(0)))),
                (1, MvMsg::Mv1(Tok::Val(Value(9)))),
                (2, MvMsg::Mv1(Tok::Val(Value(1)))),
                (3, MvMsg::Mv1(Tok::Val(Value(0)))),
            ]
        );
    }
}
