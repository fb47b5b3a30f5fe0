//! Lockstep round scheduler.
//!
//! Every envelope sent in round `r` is delivered at the start of round `r + 1`.
//! Within a round, honest parties run in ascending id order and the adversary
//! runs last with every honest envelope of the round in view (rushing).

mod event;
mod transcript;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::crypto::{Crypto, KeyRegistry};
use crate::error::{Error, Result};
use crate::types::{Params, PartyId, Round, Setting, Tag};

pub use event::{Event, EventKind, Rule, SyncPath};
pub use transcript::{Decision, EnvelopeRecord, RoundRecord, Transcript};

/// A protocol message.
pub trait Payload: Clone + fmt::Debug + Serialize + Send + Sync + 'static {
    fn tag(&self) -> Tag;

    /// Encoded length plus `lambda` for every attached signature or certificate.
    fn byte_size(&self, lambda: usize) -> usize;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dest {
    All,
    To(PartyId),
}

#[derive(Clone, Debug)]
pub struct Outgoing<M> {
    pub dest: Dest,
    pub msg: M,
}

/// Per-round handle a party (or one of its subprotocols) writes into.
pub struct Cx<'a, M> {
    pub me: PartyId,
    pub round: Round,
    pub params: &'a Params,
    pub crypto: &'a Crypto,
    pub out: Vec<Outgoing<M>>,
    pub events: Vec<EventKind>,
    pub duplicates: u64,
}

impl<'a, M> Cx<'a, M> {
    pub fn new(me: PartyId, round: Round, params: &'a Params, crypto: &'a Crypto) -> Self {
        Cx { me, round, params, crypto, out: Vec::new(), events: Vec::new(), duplicates: 0 }
    }

    pub fn multicast(&mut self, msg: M) {
        self.out.push(Outgoing { dest: Dest::All, msg });
    }

    pub fn send(&mut self, to: PartyId, msg: M) {
        self.out.push(Outgoing { dest: Dest::To(to), msg });
    }

    pub fn emit(&mut self, kind: EventKind) {
        self.events.push(kind);
    }

    pub fn note_duplicate(&mut self) {
        self.duplicates += 1;
    }

    /// A fresh handle for a subprotocol with a different message type.
    pub fn child<N>(&self) -> Cx<'a, N> {
        Cx::new(self.me, self.round, self.params, self.crypto)
    }

    /// Folds a subprotocol's output back in, wrapping its messages.
    pub fn absorb<N>(&mut self, child: Cx<'a, N>, wrap: impl Fn(N) -> M) {
        self.out.extend(child.out.into_iter().map(|o| Outgoing { dest: o.dest, msg: wrap(o.msg) }));
        self.events.extend(child.events);
        self.duplicates += child.duplicates;
    }
}

/// An honest party's state machine.
pub trait Party: Send {
    type Msg: Payload;

    /// Runs one round. `inbox` holds every message sent to this party in the
    /// previous round, in sender order.
    fn on_round(&mut self, cx: &mut Cx<'_, Self::Msg>, inbox: &[(PartyId, Self::Msg)]);

    /// True once the party halted; the engine stops scheduling it.
    fn is_done(&self) -> bool;
}

#[derive(Clone, Debug, Serialize)]
pub struct Envelope<M> {
    pub sender: PartyId,
    pub recipient: PartyId,
    pub payload: M,
    pub sent_round: Round,
    pub byte_size: usize,
}

/// An envelope the adversary wants sent from a corrupt party.
#[derive(Clone, Debug)]
pub struct Injection<M> {
    pub sender: PartyId,
    pub recipient: PartyId,
    pub msg: M,
}

/// What the adversary sees when it acts in round `round`.
pub struct AdversaryView<'a, M> {
    pub round: Round,
    pub params: &'a Params,
    pub crypto: &'a Crypto,
    pub corrupt: &'a BTreeSet<PartyId>,
    /// Honest envelopes sent this round (rushing).
    pub honest_sent: &'a [Envelope<M>],
    /// Envelopes delivered to corrupt parties at the start of this round.
    pub delivered_to_corrupt: &'a [Envelope<M>],
}

pub trait Adversary<P: Party> {
    fn name(&self) -> String;

    /// Corrupt set for `round`. Must be monotone and within budget.
    fn corrupt_set(&mut self, round: Round) -> BTreeSet<PartyId>;

    /// Hands over the state of a party corrupted at `round`.
    fn on_corrupt(&mut self, _party: PartyId, _state: P, _round: Round) {}

    fn act(&mut self, view: &AdversaryView<'_, P::Msg>) -> Vec<Injection<P::Msg>>;
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub params: Params,
    pub setting: Setting,
    pub seed: u64,
    pub max_rounds: Round,
    /// Keep a full per-round envelope log and a content digest.
    pub record: bool,
}

/// The full simulation state between rounds.
pub struct World<P: Party> {
    cfg: EngineConfig,
    crypto: Crypto,
    parties: Vec<Option<P>>,
    corrupt: BTreeSet<PartyId>,
    pending: Vec<Envelope<P::Msg>>,
    round: Round,
    transcript: Transcript,
    hasher: Sha256,
}

impl<P: Party> World<P> {
    pub fn new(cfg: EngineConfig, factory: impl Fn(PartyId) -> P) -> Result<Self> {
        cfg.params.validate()?;
        let n = cfg.params.n;
        let crypto = Crypto::new(cfg.setting, KeyRegistry::setup(n, cfg.seed));
        let transcript = Transcript::new(&cfg);
        Ok(World {
            parties: PartyId::all(n).map(|p| Some(factory(p))).collect(),
            crypto,
            corrupt: BTreeSet::new(),
            pending: Vec::new(),
            round: 0,
            transcript,
            hasher: Sha256::new(),
            cfg,
        })
    }

    pub fn round(&self) -> Round {
        self.round
    }

    pub fn crypto(&self) -> &Crypto {
        &self.crypto
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn party(&self, id: PartyId) -> Option<&P> {
        self.parties.get(id.index()).and_then(Option::as_ref)
    }

    pub fn corrupt(&self) -> &BTreeSet<PartyId> {
        &self.corrupt
    }

    /// True when every currently honest party has halted.
    pub fn all_honest_done(&self) -> bool {
        self.parties.iter().flatten().all(Party::is_done)
    }

    /// Runs exactly one round: corruption update, delivery, honest handlers,
    /// adversary, clock advance.
    pub fn step(&mut self, adversary: &mut dyn Adversary<P>) -> Result<()> {
        let r = self.round;
        let params = self.cfg.params;

        let next = adversary.corrupt_set(r);
        if let Some(&p) = self.corrupt.difference(&next).next() {
            return Err(Error::Uncorrupt { party: p, round: r });
        }
        let budget = params.budget(self.cfg.setting);
        if next.len() > budget || next.iter().any(|p| p.index() >= params.n) {
            return Err(Error::Budget { round: r, count: next.len(), budget });
        }
        for &p in next.difference(&self.corrupt) {
            if let Some(state) = self.parties[p.index()].take() {
                self.transcript.corruptions.push((r, p));
                adversary.on_corrupt(p, state, r);
            }
        }
        self.corrupt = next;

        let delivered = std::mem::take(&mut self.pending);
        let mut inboxes: Vec<Vec<(PartyId, P::Msg)>> = vec![Vec::new(); params.n];
        let mut to_corrupt = Vec::new();
        for env in &delivered {
            if self.corrupt.contains(&env.recipient) {
                to_corrupt.push(env.clone());
            } else {
                inboxes[env.recipient.index()].push((env.sender, env.payload.clone()));
            }
        }
        for inbox in &mut inboxes {
            inbox.sort_by_key(|(s, _)| *s);
        }

        let mut honest_sent = Vec::new();
        for (i, slot) in self.parties.iter_mut().enumerate() {
            let Some(party) = slot.as_mut() else { continue };
            if party.is_done() {
                continue;
            }
            let me = PartyId(i as u16);
            let mut cx = Cx::new(me, r, &params, &self.crypto);
            party.on_round(&mut cx, &inboxes[i]);
            for kind in cx.events {
                self.transcript.record_event(Event { round: r, party: me, kind });
            }
            self.transcript.duplicates_dropped += cx.duplicates;
            for o in cx.out {
                let byte_size = o.msg.byte_size(params.lambda);
                let tag = o.msg.tag();
                let mut push = |recipient: PartyId| {
                    honest_sent.push(Envelope {
                        sender: me,
                        recipient,
                        payload: o.msg.clone(),
                        sent_round: r,
                        byte_size,
                    });
                };
                match o.dest {
                    Dest::All => PartyId::all(params.n).for_each(&mut push),
                    Dest::To(p) if p.index() < params.n => push(p),
                    Dest::To(_) => {}
                }
                let copies = match o.dest {
                    Dest::All => params.n,
                    Dest::To(p) if p.index() < params.n => 1,
                    Dest::To(_) => 0,
                };
                self.transcript.count_send(me, tag, byte_size, copies);
            }
        }

        let injections = {
            let view = AdversaryView {
                round: r,
                params: &params,
                crypto: &self.crypto,
                corrupt: &self.corrupt,
                honest_sent: &honest_sent,
                delivered_to_corrupt: &to_corrupt,
            };
            adversary.act(&view)
        };
        let mut sent = honest_sent;
        for inj in injections {
            if !self.corrupt.contains(&inj.sender) || inj.recipient.index() >= params.n {
                self.transcript.rejected_injections += 1;
                continue;
            }
            sent.push(Envelope {
                sender: inj.sender,
                recipient: inj.recipient,
                byte_size: inj.msg.byte_size(params.lambda),
                payload: inj.msg,
                sent_round: r,
            });
        }

        if self.cfg.record {
            let record = RoundRecord {
                round: r,
                envelopes: sent
                    .iter()
                    .map(|e| EnvelopeRecord {
                        sender: e.sender,
                        recipient: e.recipient,
                        tag: e.payload.tag(),
                        byte_size: e.byte_size,
                        honest: !self.corrupt.contains(&e.sender),
                        payload: format!("{:?}", e.payload),
                    })
                    .collect(),
            };
            for e in &record.envelopes {
                self.hasher.update(e.sender.0.to_le_bytes());
                self.hasher.update(e.recipient.0.to_le_bytes());
                self.hasher.update(e.payload.as_bytes());
            }
            self.transcript.rounds.push(record);
        }

        self.pending = sent;
        self.round += 1;
        self.transcript.rounds_run = self.round;
        Ok(())
    }

    /// Runs until every honest party halted or the round cap is hit.
    pub fn run_to_end(mut self, adversary: &mut dyn Adversary<P>) -> Result<Transcript> {
        while !self.all_honest_done() {
            if self.round >= self.cfg.max_rounds {
                self.transcript.hit_cap = true;
                break;
            }
            self.step(adversary)?;
        }
        Ok(self.finish(adversary))
    }

    fn finish(mut self, adversary: &mut dyn Adversary<P>) -> Transcript {
        let stats = self.crypto.stats();
        use std::sync::atomic::Ordering::Relaxed;
        self.transcript.signatures_created = stats.signs.load(Relaxed);
        self.transcript.forged_accepted = stats.forged_accepted.load(Relaxed);
        self.transcript.forged_rejected = stats.forged_rejected.load(Relaxed);
        self.transcript.adversary = adversary.name();
        self.transcript.forever_honest = PartyId::all(self.cfg.params.n)
            .filter(|p| !self.corrupt.contains(p))
            .collect();
        if self.cfg.record {
            let d = self.hasher.finalize();
            self.transcript.digest = Some(format!("{:x}", d));
        }
        self.transcript
    }
}

/// Runs one scenario from scratch.
pub fn run<P: Party>(
    cfg: EngineConfig,
    factory: impl Fn(PartyId) -> P,
    adversary: &mut dyn Adversary<P>,
) -> Result<Transcript> {
    World::new(cfg, factory)?.run_to_end(adversary)
}

/// Corrupts nobody and sends nothing.
pub struct NoAdversary;

impl<P: Party> Adversary<P> for NoAdversary {
    fn name(&self) -> String {
        "none".into()
    }

    fn corrupt_set(&mut self, _round: Round) -> BTreeSet<PartyId> {
        BTreeSet::new()
    }

    fn act(&mut self, _view: &AdversaryView<'_, P::Msg>) -> Vec<Injection<P::Msg>> {
        Vec::new()
    }
}

#[cfg(test)]
mod tests;
