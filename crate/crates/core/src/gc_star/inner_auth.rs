use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::crypto::{Certificate, Domain, Provenance, SignatureToken, Statement};
use crate::engine::{Cx, EventKind, Payload};
use crate::protocol::Machine;
use crate::types::{PartyId, Round, Tag, Value};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum InnerMsg {
    Echo { value: Value, sig: SignatureToken },
    /// `E(v)`: an `(n - t_s)`-certificate on `echo(v)`.
    Proof(Certificate),
    Vote { value: Value, sig: SignatureToken, proof: Certificate },
}

impl Payload for InnerMsg {
    fn tag(&self) -> Tag {
        Tag::GcAuthInner
    }

    fn byte_size(&self, lambda: usize) -> usize {
        match self {
            InnerMsg::Echo { .. } | InnerMsg::Proof(_) => 1 + 4 + lambda,
            InnerMsg::Vote { .. } => 1 + 4 + 2 * lambda,
        }
    }
}

pub(crate) fn echo_stmt(v: Value) -> Statement {
    Statement::new(Domain::InnerEcho, v)
}

pub(crate) fn vote_stmt(v: Value) -> Statement {
    Statement::new(Domain::InnerVote, v)
}

/// Four-round certificate-based graded consensus for `t_s < n/2` with
/// signatures. All parties start in the same round.
///
/// 1. multicast a signed `echo(v)`;
/// 2. on `n - t_s` matching echoes, aggregate them into `E(v)` and multicast it;
/// 3. on any valid `E(v)`, multicast `vote(v)` with `E(v)` attached;
/// 4. output `(v, 1)` on `n - t_s` votes for `v`, `(v, 0)` on any valid vote,
///    `(⊥, 0)` otherwise.
#[derive(Clone, Debug)]
pub struct InnerAuthGc {
    start: Round,
    input: Value,
    echoes: BTreeMap<Value, Vec<(PartyId, Statement, SignatureToken)>>,
    echo_from: BTreeSet<PartyId>,
    proofs: BTreeMap<Value, Certificate>,
    votes: BTreeMap<Value, BTreeSet<PartyId>>,
    vote_from: BTreeSet<PartyId>,
    output: Option<(Value, u8)>,
}

impl InnerAuthGc {
    pub const ROUNDS: Round = 4;

    pub fn new(start: Round, input: Value) -> Self {
        InnerAuthGc {
            start,
            input,
            echoes: BTreeMap::new(),
            echo_from: BTreeSet::new(),
            proofs: BTreeMap::new(),
            votes: BTreeMap::new(),
            vote_from: BTreeSet::new(),
            output: None,
        }
    }

    fn ingest(&mut self, cx: &mut Cx<'_, InnerMsg>, inbox: &[(PartyId, InnerMsg)]) {
        let k = cx.params.n - cx.params.t_s;
        for (from, msg) in inbox {
            match msg {
                InnerMsg::Echo { value, sig } => {
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
                InnerMsg::Proof(cert) => {
                    let v = cert.statement.value;
                    if !self.proofs.contains_key(&v) && cx.crypto.verify_cert(cert, &echo_stmt(v), k) {
                        self.proofs.insert(v, cert.clone());
                    }
                }
                InnerMsg::Vote { value, sig, proof } => {
                    if self.vote_from.contains(from) {
                        cx.note_duplicate();
                        continue;
                    }
                    if cx.crypto.verify(*from, &vote_stmt(*value), sig)
                        && cx.crypto.verify_cert(proof, &echo_stmt(*value), k)
                    {
                        self.vote_from.insert(*from);
                        self.votes.entry(*value).or_default().insert(*from);
                        if proof.provenance == Provenance::Forged {
                            cx.emit(EventKind::ActedOnForgery { tag: Tag::GcAuthInner });
                        }
                    }
                }
            }
        }
    }
}

impl Machine for InnerAuthGc {
    type Msg = InnerMsg;
    type Output = (Value, u8);

    fn on_round(&mut self, cx: &mut Cx<'_, InnerMsg>, inbox: &[(PartyId, InnerMsg)]) {
        let local = cx.round.saturating_sub(self.start);
        self.ingest(cx, inbox);
        let n = cx.params.n;
        let k = n - cx.params.t_s;
        match local {
            0 => {
                let sig = cx.crypto.sign(cx.me, &echo_stmt(self.input)).expect("registered");
                cx.multicast(InnerMsg::Echo { value: self.input, sig });
            }
            1 => {
                if let Some((_, signed)) = self.echoes.iter().find(|(_, s)| s.len() >= k) {
                    let cert = cx.crypto.aggregate(signed, k).expect("quorum of verified echoes");
                    cx.multicast(InnerMsg::Proof(cert));
                }
            }
            2 => {
                if let Some((v, proof)) = self.proofs.iter().next() {
                    let sig = cx.crypto.sign(cx.me, &vote_stmt(*v)).expect("registered");
                    cx.multicast(InnerMsg::Vote { value: *v, sig, proof: proof.clone() });
                }
            }
            3 => {
                let strong = self.votes.iter().find(|(_, s)| s.len() >= k).map(|(v, _)| *v);
                let weak = self.votes.keys().next().copied();
                self.output = Some(match (strong, weak) {
                    (Some(v), _) => (v, 1),
                    (None, Some(v)) => (v, 0),
                    (None, None) => (Value::BOTTOM, 0),
                });
            }
            _ => {}
        }
    }

    fn output(&self) -> Option<(Value, u8)> {
        self.output
    }
}
