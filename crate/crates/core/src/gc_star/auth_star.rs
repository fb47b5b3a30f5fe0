use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::inner_auth::{InnerAuthGc, InnerMsg};
use super::GcOutput;
use crate::crypto::{Certificate, Domain, Provenance, SignatureToken, Statement};
use crate::engine::{Cx, EventKind, Payload};
use crate::protocol::{Machine, Slot};
use crate::types::{PartyId, Round, Tag, Value};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum GcAuthMsg {
    Init { value: Value, sig: SignatureToken },
    /// `(n - t_i)`-certificate on `init(v)`.
    Cert(Certificate),
    Inner(InnerMsg),
}

impl Payload for GcAuthMsg {
    fn tag(&self) -> Tag {
        match self {
            GcAuthMsg::Inner(m) => m.tag(),
            _ => Tag::GcAuthStar,
        }
    }

    fn byte_size(&self, lambda: usize) -> usize {
        match self {
            GcAuthMsg::Init { .. } | GcAuthMsg::Cert(_) => 1 + 4 + lambda,
            GcAuthMsg::Inner(m) => m.byte_size(lambda),
        }
    }
}

pub(crate) fn init_stmt(v: Value) -> Statement {
    Statement::new(Domain::GcAuthInit, v)
}

/// Graded consensus that is a full two-grade GC against `t_s` corruptions with
/// signatures, and still valid and terminating against `t_i` corruptions when
/// signatures are broken. Takes exactly [`GcAuthStar::ROUNDS`] rounds.
#[derive(Debug)]
pub struct GcAuthStar {
    start: Round,
    input: Value,
    y: Value,
    locked_at: Option<Round>,
    inits: BTreeMap<Value, Vec<(PartyId, Statement, SignatureToken)>>,
    init_from: BTreeSet<PartyId>,
    certs: BTreeMap<Value, Certificate>,
    inner: Slot<InnerAuthGc>,
    output: Option<GcOutput>,
}

impl GcAuthStar {
    pub const ROUNDS: Round = 3 + InnerAuthGc::ROUNDS;

    pub fn new(start: Round, input: Value) -> Self {
        GcAuthStar {
            start,
            input,
            y: input,
            locked_at: None,
            inits: BTreeMap::new(),
            init_from: BTreeSet::new(),
            certs: BTreeMap::new(),
            inner: Slot::default(),
            output: None,
        }
    }

    pub fn locked(&self) -> bool {
        self.locked_at.is_some()
    }
}

impl Machine for GcAuthStar {
    type Msg = GcAuthMsg;
    type Output = GcOutput;

    fn on_round(&mut self, cx: &mut Cx<'_, GcAuthMsg>, inbox: &[(PartyId, GcAuthMsg)]) {
        let local = cx.round.saturating_sub(self.start);
        let k = cx.params.n - cx.params.t_i;
        let mut inner_in = Vec::new();
        for (from, msg) in inbox {
            match msg {
                GcAuthMsg::Init { value, sig } => {
                    let stmt = init_stmt(*value);
                    if !cx.crypto.verify(*from, &stmt, sig) {
                        continue;
                    }
                    if !self.init_from.insert(*from) {
                        cx.note_duplicate();
                        continue;
                    }
                    self.inits.entry(*value).or_default().push((*from, stmt, *sig));
                }
                GcAuthMsg::Cert(cert) => {
                    let v = cert.statement.value;
                    if !self.certs.contains_key(&v) && cx.crypto.verify_cert(cert, &init_stmt(v), k) {
                        self.certs.insert(v, cert.clone());
                    }
                }
                GcAuthMsg::Inner(m) => inner_in.push((*from, m.clone())),
            }
        }

        match local {
            0 => {
                let sig = cx.crypto.sign(cx.me, &init_stmt(self.input)).expect("registered");
                cx.multicast(GcAuthMsg::Init { value: self.input, sig });
            }
            1 => {
                if let Some((v, signed)) = self.inits.iter().find(|(_, s)| s.len() >= k) {
                    let cert = cx.crypto.aggregate(signed, k).expect("quorum of verified inits");
                    cx.multicast(GcAuthMsg::Cert(cert));
                    self.y = *v;
                    self.locked_at = Some(cx.round);
                    cx.emit(EventKind::CertFormed { tag: Tag::GcAuthStar, value: *v });
                    cx.emit(EventKind::Locked { tag: Tag::GcAuthStar, value: *v });
                }
            }
            2 if self.certs.len() == 1 && !self.locked() => {
                let (v, cert) = self.certs.iter().next().expect("one certificate");
                if cert.provenance == Provenance::Forged && *v != self.y {
                    cx.emit(EventKind::ActedOnForgery { tag: Tag::GcAuthStar });
                }
                self.y = *v;
            }
            _ => {}
        }

        let mut sub = cx.child();
        if local == 3 {
            self.inner.start(InnerAuthGc::new(cx.round, self.y), &mut sub, &inner_in);
        } else {
            self.inner.step(&mut sub, &inner_in);
        }
        cx.absorb(sub, GcAuthMsg::Inner);

        if self.output.is_none() {
            if let Some((v, g)) = self.inner.output() {
                let out = match self.locked_at {
                    Some(at) => GcOutput { value: self.y, grade: 1, locked_at: Some(at) },
                    None if v.is_bottom() => GcOutput { value: self.y, grade: 0, locked_at: None },
                    None => GcOutput { value: v, grade: g, locked_at: None },
                };
                cx.emit(out.event(Tag::GcAuthStar));
                self.output = Some(out);
            }
        }
    }

    fn output(&self) -> Option<GcOutput> {
        self.output
    }
}
