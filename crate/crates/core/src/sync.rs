//! Synchronizer: bounds the spread of honest exit rounds from a preceding
//! subprotocol to one round using `finish` quorums and certificates.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::crypto::{Certificate, Domain, Provenance, SignatureToken, Statement};
use crate::engine::{Cx, EventKind, Payload, SyncPath};
use crate::protocol::{Machine, Report};
use crate::types::{PartyId, Round, Tag, Value};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SyncMsg {
    Finish { value: Value, sig: SignatureToken },
    /// `(n - t_s)`-certificate on `finish(v)`.
    Cert(Certificate),
}

impl Payload for SyncMsg {
    fn tag(&self) -> Tag {
        Tag::Sync
    }

    fn byte_size(&self, lambda: usize) -> usize {
        1 + 4 + lambda
    }
}

pub(crate) fn finish_stmt(v: Value) -> Statement {
    Statement::new(Domain::SyncFinish, v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub value: Value,
    pub path: SyncPath,
    pub round: Round,
}

#[derive(Clone, Debug, Default)]
pub struct Sync {
    started: Option<Value>,
    finishes: BTreeMap<Value, Vec<(PartyId, Statement, SignatureToken)>>,
    finish_from: BTreeSet<PartyId>,
    completed: Option<Completion>,
}

impl Sync {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn started(&self) -> Option<Value> {
        self.started
    }

    pub fn completed(&self) -> Option<Completion> {
        self.completed
    }

    /// Multicasts `finish(v)`. A second call is ignored.
    pub fn start(&mut self, v: Value, cx: &mut Cx<'_, SyncMsg>) {
        if self.started.is_some() {
            return;
        }
        self.started = Some(v);
        let sig = cx.crypto.sign(cx.me, &finish_stmt(v)).expect("registered");
        cx.multicast(SyncMsg::Finish { value: v, sig });
        cx.emit(EventKind::SyncStarted { value: v });
    }

    /// Handles this round's messages; returns the completion if it happened now.
    pub fn on_messages(&mut self, cx: &mut Cx<'_, SyncMsg>, inbox: &[(PartyId, SyncMsg)]) -> Option<Completion> {
        let k = cx.params.n - cx.params.t_s;
        let mut certs: BTreeMap<Value, &Certificate> = BTreeMap::new();
        for (from, msg) in inbox {
            match msg {
                SyncMsg::Finish { value, sig } => {
                    let stmt = finish_stmt(*value);
                    if !cx.crypto.verify(*from, &stmt, sig) {
                        continue;
                    }
                    if !self.finish_from.insert(*from) {
                        cx.note_duplicate();
                        continue;
                    }
                    self.finishes.entry(*value).or_default().push((*from, stmt, *sig));
                }
                SyncMsg::Cert(cert) => {
                    let v = cert.statement.value;
                    if self.completed.is_none()
                        && !certs.contains_key(&v)
                        && cx.crypto.verify_cert(cert, &finish_stmt(v), k)
                    {
                        certs.insert(v, cert);
                    }
                }
            }
        }
        if self.completed.is_some() {
            return None;
        }

        let done = if let Some((v, signed)) = self.finishes.iter().find(|(_, s)| s.len() >= k) {
            let cert = cx.crypto.aggregate(signed, k).expect("quorum of verified finishes");
            cx.multicast(SyncMsg::Cert(cert));
            Completion { value: *v, path: SyncPath::Quorum, round: cx.round }
        } else if let Some((v, cert)) = certs.into_iter().next() {
            if cert.provenance == Provenance::Forged {
                cx.emit(EventKind::ActedOnForgery { tag: Tag::Sync });
            }
            cx.multicast(SyncMsg::Cert(cert.clone()));
            Completion { value: v, path: SyncPath::Certificate, round: cx.round }
        } else {
            return None;
        };
        self.completed = Some(done);
        cx.emit(EventKind::SyncCompleted { value: done.value, path: done.path });
        Some(done)
    }
}

/// A synchronizer run on its own: active from round 0, started by the party at
/// a planned round with a planned value (or never).
#[derive(Clone, Debug)]
pub struct SyncMachine {
    sync: Sync,
    plan: Option<(Round, Value)>,
}

impl SyncMachine {
    pub fn new(plan: Option<(Round, Value)>) -> Self {
        SyncMachine { sync: Sync::new(), plan }
    }

    pub fn sync(&self) -> &Sync {
        &self.sync
    }
}

impl Machine for SyncMachine {
    type Msg = SyncMsg;
    type Output = Completion;

    fn on_round(&mut self, cx: &mut Cx<'_, SyncMsg>, inbox: &[(PartyId, SyncMsg)]) {
        if let Some((at, v)) = self.plan {
            if cx.round == at {
                self.sync.start(v, cx);
            }
        }
        self.sync.on_messages(cx, inbox);
    }

    fn output(&self) -> Option<Completion> {
        self.sync.completed()
    }
}

impl Report for Completion {
    fn report(&self, _tag: Tag) -> Option<EventKind> {
        None
    }
}
