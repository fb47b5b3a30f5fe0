use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::GcOutput;
use crate::crypto::{Certificate, Domain, Provenance, SignatureToken, Statement};
use crate::engine::{Cx, EventKind, Payload};
use crate::gadgets::{gc3_to_binary, Gc3, Gc3Msg};
use crate::protocol::{Machine, Slot};
use crate::types::{PartyId, Round, Tag, Value};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum GcSabMsg {
    Echo { value: Value, sig: SignatureToken },
    /// `(n - t_s)`-certificate on `echo(v)`.
    Cert(Certificate),
    Vote { value: Value, sig: SignatureToken },
    Inner(Gc3Msg),
}

impl Payload for GcSabMsg {
    fn tag(&self) -> Tag {
        match self {
            GcSabMsg::Inner(m) => m.tag(),
            _ => Tag::GcSabStar,
        }
    }

    fn byte_size(&self, lambda: usize) -> usize {
        match self {
            GcSabMsg::Inner(m) => m.byte_size(lambda),
            _ => 1 + 4 + lambda,
        }
    }
}

pub(crate) fn echo_stmt(v: Value) -> Statement {
    Statement::new(Domain::GcSabEcho, v)
}

pub(crate) fn vote_stmt(v: Value) -> Statement {
    Statement::new(Domain::GcSabVote, v)
}

/// Local round (relative to the party's own start) at which wrapper round
/// `x` (1-based) begins. Every wrapper round spans two engine rounds so that
/// parties starting one round apart still overlap in each.
pub const fn wrapper_round_start(x: Round) -> Round {
    2 * (x - 1)
}

/// Graded consensus that is a full two-grade GC against `t_i` corruptions even
/// without working signatures, and valid and terminating against `t_s`
/// corruptions with signatures. Honest start rounds may differ by one.
#[derive(Debug)]
pub struct GcSabStar {
    start: Round,
    /// Local round at which the party gives up on the inner protocol.
    deadline: Round,
    v: Value,
    locked_at: Option<Round>,
    echoes: BTreeMap<Value, Vec<(PartyId, Statement, SignatureToken)>>,
    echo_from: BTreeSet<PartyId>,
    made_cert: Option<Value>,
    certs: BTreeMap<Value, Provenance>,
    votes: BTreeMap<Value, BTreeSet<PartyId>>,
    vote_from: BTreeSet<PartyId>,
    inner: Slot<Gc3>,
    output: Option<GcOutput>,
    missed_deadline: bool,
}

impl GcSabStar {
    /// Local round in which the inner protocol starts.
    pub const INNER_START: Round = wrapper_round_start(4);

    /// Round budget of the inner three-grade graded consensus, from its start
    /// to its output: a 2x margin over the worst case found by exhaustive
    /// search at `n` in `{4, 5}`.
    pub const DEFAULT_INNER_ROUNDS: Round = 18;

    /// `T_2` for a given inner budget.
    pub const fn rounds(inner: Round) -> Round {
        Self::INNER_START + inner
    }

    /// `t2` is the whole round budget; the party outputs no later than local
    /// round `t2 - 1`.
    pub fn new(start: Round, input: Value, t2: Round) -> Self {
        GcSabStar {
            start,
            deadline: t2 - 1,
            v: input,
            locked_at: None,
            echoes: BTreeMap::new(),
            echo_from: BTreeSet::new(),
            made_cert: None,
            certs: BTreeMap::new(),
            votes: BTreeMap::new(),
            vote_from: BTreeSet::new(),
            inner: Slot::default(),
            output: None,
            missed_deadline: false,
        }
    }

    pub fn start_round(&self) -> Round {
        self.start
    }

    pub fn missed_deadline(&self) -> bool {
        self.missed_deadline
    }

    pub fn inner(&self) -> Option<&Gc3> {
        self.inner.get()
    }
}

impl Machine for GcSabStar {
    type Msg = GcSabMsg;
    type Output = GcOutput;

    fn on_round(&mut self, cx: &mut Cx<'_, GcSabMsg>, inbox: &[(PartyId, GcSabMsg)]) {
        let local = cx.round.saturating_sub(self.start);
        let n = cx.params.n;
        let k = n - cx.params.t_s;
        let mut inner_in = Vec::new();
        for (from, msg) in inbox {
            match msg {
                GcSabMsg::Echo { value, sig } => {
                    let stmt = echo_stmt(*value);
                    if !cx.crypto.verify(*from, &stmt, sig) {
                        continue;
                    }
                    if !self.echo_from.insert(*from) {
                        cx.note_duplicate();
                        continue;
                    }
                    self.echoes.entry(*value).or_default().push((*from, stmt, *sig));
                }
                GcSabMsg::Cert(cert) => {
                    let v = cert.statement.value;
                    if !self.certs.contains_key(&v) && cx.crypto.verify_cert(cert, &echo_stmt(v), k) {
                        self.certs.insert(v, cert.provenance);
                    }
                }
                GcSabMsg::Vote { value, sig } => {
                    if !cx.crypto.verify(*from, &vote_stmt(*value), sig) {
                        continue;
                    }
                    if !self.vote_from.insert(*from) {
                        cx.note_duplicate();
                        continue;
                    }
                    self.votes.entry(*value).or_default().insert(*from);
                }
                GcSabMsg::Inner(m) => inner_in.push((*from, *m)),
            }
        }

        let echo_count = |s: &Self, v: Value| s.echoes.get(&v).map_or(0, Vec::len);
        match local {
            0 => {
                let sig = cx.crypto.sign(cx.me, &echo_stmt(self.v)).expect("registered");
                cx.multicast(GcSabMsg::Echo { value: self.v, sig });
            }
            l if l == wrapper_round_start(2) => {
                if let Some((v, signed)) = self.echoes.iter().find(|(_, s)| s.len() >= k) {
                    let cert = cx.crypto.aggregate(signed, k).expect("quorum of verified echoes");
                    self.made_cert = Some(*v);
                    cx.multicast(GcSabMsg::Cert(cert));
                    cx.emit(EventKind::CertFormed { tag: Tag::GcSabStar, value: *v });
                }
            }
            l if l == wrapper_round_start(3) => {
                if let Some(v) = self.made_cert {
                    let conflicting = self.certs.keys().any(|w| *w != v);
                    if !conflicting && echo_count(self, v) >= k {
                        let sig = cx.crypto.sign(cx.me, &vote_stmt(v)).expect("registered");
                        cx.multicast(GcSabMsg::Vote { value: v, sig });
                        cx.emit(EventKind::Voted { value: v });
                    }
                }
            }
            l if l == Self::INNER_START => {
                let weak = n - cx.params.t_s - cx.params.t_i;
                if let Some((v, _)) = self.votes.iter().find(|(_, s)| s.len() >= k) {
                    self.v = *v;
                    self.locked_at = Some(cx.round);
                    cx.emit(EventKind::Locked { tag: Tag::GcSabStar, value: *v });
                } else {
                    let mut qualifying = self.votes.iter().filter(|(_, s)| s.len() >= weak);
                    if let (Some((v, _)), None) = (qualifying.next(), qualifying.next()) {
                        self.v = *v;
                    }
                }
                if self.certs.values().any(|p| *p == Provenance::Forged) {
                    cx.emit(EventKind::ActedOnForgery { tag: Tag::GcSabStar });
                }
            }
            _ => {}
        }

        let mut sub = cx.child();
        if local == Self::INNER_START {
            self.inner.start(Gc3::new(self.v), &mut sub, &inner_in);
        } else {
            self.inner.step(&mut sub, &inner_in);
        }
        cx.absorb(sub, GcSabMsg::Inner);

        if self.output.is_none() {
            let out = match (self.inner.output(), self.locked_at) {
                (Some(_), Some(at)) => Some(GcOutput { value: self.v, grade: 1, locked_at: Some(at) }),
                (Some((tok, g)), None) => {
                    // A grade-0 `⊥` falls back to the current value so outputs stay in V.
                    let (value, grade) = gc3_to_binary(tok, g);
                    let value = if value.is_bottom() { self.v } else { value };
                    Some(GcOutput { value, grade, locked_at: None })
                }
                (None, _) if local >= self.deadline => {
                    self.missed_deadline = true;
                    cx.emit(EventKind::Deadline { tag: Tag::GcSabStar });
                    let grade = u8::from(self.locked_at.is_some());
                    Some(GcOutput { value: self.v, grade, locked_at: self.locked_at })
                }
                (None, _) => None,
            };
            if let Some(out) = out {
                cx.emit(out.event(Tag::GcSabStar));
                self.output = Some(out);
            }
        }
    }

    fn output(&self) -> Option<GcOutput> {
        self.output
    }
}
