//! How the adversary bends honest messages: retargeting them to another value
//! and fabricating certificates.

use std::collections::{BTreeMap, BTreeSet};

use crate::boxes::{chain_stmt, BoxBody, BoxMsg, DsMsg, KingMsg};
use crate::crypto::{Certificate, Crypto, Provenance, SignatureToken, Statement};
use crate::engine::Payload;
use crate::gadgets::{Gc3Msg, MvMsg, Tok};
use crate::gc_star::{
    init_stmt, inner_echo_stmt, inner_vote_stmt, sab_echo_stmt, sab_vote_stmt, GcAuthMsg, GcSabMsg, InnerMsg,
};
use crate::juggernaut::{decide_stmt, JugMsg};
use crate::sync::{finish_stmt, SyncMsg};
use crate::types::{Params, PartyId, Value};

/// The adversary's signing power for one corrupt sender.
pub struct Forger<'a> {
    pub sender: PartyId,
    pub crypto: &'a Crypto,
    pub params: &'a Params,
    pub corrupt: &'a BTreeSet<PartyId>,
    /// Genuine certificates the adversary has observed.
    pub seen: &'a BTreeMap<Statement, Certificate>,
}

impl Forger<'_> {
    /// The sender's own signature.
    pub fn sign(&self, stmt: &Statement) -> SignatureToken {
        self.crypto.sign(self.sender, stmt).expect("corrupt parties are registered")
    }

    /// A signature in `signer`'s name: genuine for corrupt signers, forged
    /// for honest ones in the sabotaged setting, garbage otherwise.
    pub fn sign_as(&self, signer: PartyId, stmt: &Statement) -> SignatureToken {
        if self.corrupt.contains(&signer) {
            return self.crypto.sign(signer, stmt).expect("corrupt parties are registered");
        }
        self.crypto.forge_signature(signer, stmt).unwrap_or(SignatureToken {
            signer,
            digest: garbage(stmt, signer.0 as u64),
            provenance: Provenance::Forged,
        })
    }

    /// A `k`-certificate on `stmt` without the signatures behind it. Only
    /// verifies in the sabotaged setting.
    pub fn certify(&self, stmt: &Statement, k: usize) -> Certificate {
        self.crypto.forge(stmt, k).unwrap_or_else(|_| Certificate {
            statement: *stmt,
            threshold: k,
            contributors: BTreeSet::new(),
            digest: garbage(stmt, k as u64),
            provenance: Provenance::Forged,
        })
    }

    /// A genuine certificate on `stmt`, if one went by.
    pub fn known(&self, stmt: &Statement) -> Option<Certificate> {
        self.seen.get(stmt).cloned()
    }

    fn quorum_s(&self) -> usize {
        self.params.n - self.params.t_s
    }

    fn quorum_i(&self) -> usize {
        self.params.n - self.params.t_i
    }
}

fn garbage(stmt: &Statement, salt: u64) -> u64 {
    0x9e37_79b9_7f4a_7c15 ^ ((stmt.value.0 as u64) << 16) ^ (stmt.slot as u64) ^ salt.rotate_left(40)
}

/// A message the adversary can retarget and fabricate.
pub trait Malleable: Payload + PartialEq {
    /// The value the message speaks for.
    fn value(&self) -> Option<Value>;

    /// The same kind of message for `target`, using only what a bounded
    /// adversary has: its own keys and certificates it has seen.
    fn rewrite(&self, target: Value, f: &Forger<'_>) -> Option<Self>;

    /// Extra messages for `target` built from forged material.
    fn forgeries(&self, _target: Value, _f: &Forger<'_>) -> Vec<Self> {
        Vec::new()
    }

    /// Certificates carried by the message.
    fn certificates(&self) -> Vec<&Certificate> {
        Vec::new()
    }
}

fn same_or<M: Clone>(m: &M, value: Value, target: Value, other: impl FnOnce() -> Option<M>) -> Option<M> {
    if value == target {
        Some(m.clone())
    } else {
        other()
    }
}

impl Malleable for InnerMsg {
    fn value(&self) -> Option<Value> {
        Some(match self {
            InnerMsg::Echo { value, .. } | InnerMsg::Vote { value, .. } => *value,
            InnerMsg::Proof(c) => c.statement.value,
        })
    }

    fn rewrite(&self, target: Value, f: &Forger<'_>) -> Option<Self> {
        match self {
            InnerMsg::Echo { .. } => Some(InnerMsg::Echo { value: target, sig: f.sign(&inner_echo_stmt(target)) }),
            InnerMsg::Proof(c) => {
                same_or(self, c.statement.value, target, || f.known(&inner_echo_stmt(target)).map(InnerMsg::Proof))
            }
            InnerMsg::Vote { .. } => f.known(&inner_echo_stmt(target)).map(|proof| InnerMsg::Vote {
                value: target,
                sig: f.sign(&inner_vote_stmt(target)),
                proof,
            }),
        }
    }

    fn forgeries(&self, target: Value, f: &Forger<'_>) -> Vec<Self> {
        let proof = f.certify(&inner_echo_stmt(target), f.quorum_s());
        let vote = InnerMsg::Vote { value: target, sig: f.sign(&inner_vote_stmt(target)), proof: proof.clone() };
        vec![InnerMsg::Proof(proof), vote]
    }

    fn certificates(&self) -> Vec<&Certificate> {
        match self {
            InnerMsg::Echo { .. } => Vec::new(),
            InnerMsg::Proof(c) | InnerMsg::Vote { proof: c, .. } => vec![c],
        }
    }
}

impl Malleable for GcAuthMsg {
    fn value(&self) -> Option<Value> {
        match self {
            GcAuthMsg::Init { value, .. } => Some(*value),
            GcAuthMsg::Cert(c) => Some(c.statement.value),
            GcAuthMsg::Inner(m) => m.value(),
        }
    }

    fn rewrite(&self, target: Value, f: &Forger<'_>) -> Option<Self> {
        match self {
            GcAuthMsg::Init { .. } => Some(GcAuthMsg::Init { value: target, sig: f.sign(&init_stmt(target)) }),
            GcAuthMsg::Cert(c) => {
                same_or(self, c.statement.value, target, || f.known(&init_stmt(target)).map(GcAuthMsg::Cert))
            }
            GcAuthMsg::Inner(m) => m.rewrite(target, f).map(GcAuthMsg::Inner),
        }
    }

    fn forgeries(&self, target: Value, f: &Forger<'_>) -> Vec<Self> {
        match self {
            GcAuthMsg::Inner(m) => m.forgeries(target, f).into_iter().map(GcAuthMsg::Inner).collect(),
            _ => vec![GcAuthMsg::Cert(f.certify(&init_stmt(target), f.quorum_i()))],
        }
    }

    fn certificates(&self) -> Vec<&Certificate> {
        match self {
            GcAuthMsg::Init { .. } => Vec::new(),
            GcAuthMsg::Cert(c) => vec![c],
            GcAuthMsg::Inner(m) => m.certificates(),
        }
    }
}

impl Malleable for MvMsg {
    fn value(&self) -> Option<Value> {
        self.tok().value()
    }

    fn rewrite(&self, target: Value, _f: &Forger<'_>) -> Option<Self> {
        Some(match self {
            MvMsg::Mv1(_) => MvMsg::Mv1(Tok::Val(target)),
            MvMsg::Mv2(_) => MvMsg::Mv2(Tok::Val(target)),
        })
    }
}

impl Malleable for Gc3Msg {
    fn value(&self) -> Option<Value> {
        match self {
            Gc3Msg::Init(v) | Gc3Msg::Echo(v) => Some(*v),
            Gc3Msg::Mv(_, m) => m.value(),
        }
    }

    fn rewrite(&self, target: Value, f: &Forger<'_>) -> Option<Self> {
        Some(match self {
            Gc3Msg::Init(_) => Gc3Msg::Init(target),
            Gc3Msg::Echo(_) => Gc3Msg::Echo(target),
            Gc3Msg::Mv(i, m) => Gc3Msg::Mv(*i, m.rewrite(target, f)?),
        })
    }
}

impl Malleable for GcSabMsg {
    fn value(&self) -> Option<Value> {
        match self {
            GcSabMsg::Echo { value, .. } | GcSabMsg::Vote { value, .. } => Some(*value),
            GcSabMsg::Cert(c) => Some(c.statement.value),
            GcSabMsg::Inner(m) => m.value(),
        }
    }

    fn rewrite(&self, target: Value, f: &Forger<'_>) -> Option<Self> {
        match self {
            GcSabMsg::Echo { .. } => Some(GcSabMsg::Echo { value: target, sig: f.sign(&sab_echo_stmt(target)) }),
            GcSabMsg::Cert(c) => {
                same_or(self, c.statement.value, target, || f.known(&sab_echo_stmt(target)).map(GcSabMsg::Cert))
            }
            GcSabMsg::Vote { .. } => Some(GcSabMsg::Vote { value: target, sig: f.sign(&sab_vote_stmt(target)) }),
            GcSabMsg::Inner(m) => m.rewrite(target, f).map(GcSabMsg::Inner),
        }
    }

    fn forgeries(&self, target: Value, f: &Forger<'_>) -> Vec<Self> {
        match self {
            GcSabMsg::Inner(_) => Vec::new(),
            _ => vec![GcSabMsg::Cert(f.certify(&sab_echo_stmt(target), f.quorum_s()))],
        }
    }

    fn certificates(&self) -> Vec<&Certificate> {
        match self {
            GcSabMsg::Cert(c) => vec![c],
            _ => Vec::new(),
        }
    }
}

impl Malleable for SyncMsg {
    fn value(&self) -> Option<Value> {
        Some(match self {
            SyncMsg::Finish { value, .. } => *value,
            SyncMsg::Cert(c) => c.statement.value,
        })
    }

    fn rewrite(&self, target: Value, f: &Forger<'_>) -> Option<Self> {
        match self {
            SyncMsg::Finish { .. } => Some(SyncMsg::Finish { value: target, sig: f.sign(&finish_stmt(target)) }),
            SyncMsg::Cert(c) => {
                same_or(self, c.statement.value, target, || f.known(&finish_stmt(target)).map(SyncMsg::Cert))
            }
        }
    }

    fn forgeries(&self, target: Value, f: &Forger<'_>) -> Vec<Self> {
        vec![SyncMsg::Cert(f.certify(&finish_stmt(target), f.quorum_s()))]
    }

    fn certificates(&self) -> Vec<&Certificate> {
        match self {
            SyncMsg::Cert(c) => vec![c],
            SyncMsg::Finish { .. } => Vec::new(),
        }
    }
}

impl Malleable for BoxMsg {
    fn value(&self) -> Option<Value> {
        Some(match &self.body {
            BoxBody::Ds(m) => m.value,
            BoxBody::King(m) => m.value,
        })
    }

    fn rewrite(&self, target: Value, f: &Forger<'_>) -> Option<Self> {
        let body = match &self.body {
            BoxBody::Ds(m) if m.value == target => return Some(self.clone()),
            // Only the sender's own slot can be re-signed for another value.
            BoxBody::Ds(m) if m.slot == f.sender && m.chain.len() == 1 => BoxBody::Ds(DsMsg {
                slot: m.slot,
                value: target,
                chain: vec![f.sign(&chain_stmt(m.slot, target))],
            }),
            BoxBody::Ds(_) => return None,
            BoxBody::King(m) => BoxBody::King(KingMsg { value: target, ..*m }),
        };
        Some(BoxMsg { tag: self.tag, body })
    }

    /// Full-length signature chains for `target` in every slot.
    fn forgeries(&self, target: Value, f: &Forger<'_>) -> Vec<Self> {
        let BoxBody::Ds(_) = self.body else { return Vec::new() };
        let n = f.params.n;
        PartyId::all(n)
            .map(|slot| {
                let stmt = chain_stmt(slot, target);
                let signers = std::iter::once(slot).chain(PartyId::all(n).filter(|p| *p != slot));
                let chain = signers.map(|s| f.sign_as(s, &stmt)).collect();
                BoxMsg { tag: self.tag, body: BoxBody::Ds(DsMsg { slot, value: target, chain }) }
            })
            .collect()
    }
}

impl Malleable for JugMsg {
    fn value(&self) -> Option<Value> {
        match self {
            JugMsg::GcAuth(m) => m.value(),
            JugMsg::BaAuth(m) | JugMsg::BaSab(m) => m.value(),
            JugMsg::Sync(m) => m.value(),
            JugMsg::GcSab(m) => m.value(),
            JugMsg::Decide { value, .. } => Some(*value),
        }
    }

    fn rewrite(&self, target: Value, f: &Forger<'_>) -> Option<Self> {
        match self {
            JugMsg::GcAuth(m) => m.rewrite(target, f).map(JugMsg::GcAuth),
            JugMsg::BaAuth(m) => m.rewrite(target, f).map(JugMsg::BaAuth),
            JugMsg::Sync(m) => m.rewrite(target, f).map(JugMsg::Sync),
            JugMsg::GcSab(m) => m.rewrite(target, f).map(JugMsg::GcSab),
            JugMsg::Decide { .. } => Some(JugMsg::Decide { value: target, sig: f.sign(&decide_stmt(target)) }),
            JugMsg::BaSab(m) => m.rewrite(target, f).map(JugMsg::BaSab),
        }
    }

    /// Besides the per-message forgeries, the very first message also carries
    /// a forged synchronizer certificate, so forgery reaches the synchronizer
    /// even if the corrupt party never gets there honestly.
    fn forgeries(&self, target: Value, f: &Forger<'_>) -> Vec<Self> {
        match self {
            JugMsg::GcAuth(m) => {
                let mut out: Vec<JugMsg> = m.forgeries(target, f).into_iter().map(JugMsg::GcAuth).collect();
                if let GcAuthMsg::Init { .. } = m {
                    out.push(JugMsg::Sync(SyncMsg::Cert(f.certify(&finish_stmt(target), f.quorum_s()))));
                }
                out
            }
            JugMsg::BaAuth(m) => m.forgeries(target, f).into_iter().map(JugMsg::BaAuth).collect(),
            JugMsg::Sync(m) => m.forgeries(target, f).into_iter().map(JugMsg::Sync).collect(),
            JugMsg::GcSab(m) => m.forgeries(target, f).into_iter().map(JugMsg::GcSab).collect(),
            JugMsg::Decide { .. } => Vec::new(),
            JugMsg::BaSab(m) => m.forgeries(target, f).into_iter().map(JugMsg::BaSab).collect(),
        }
    }

    fn certificates(&self) -> Vec<&Certificate> {
        match self {
            JugMsg::GcAuth(m) => m.certificates(),
            JugMsg::Sync(m) => m.certificates(),
            JugMsg::GcSab(m) => m.certificates(),
            _ => Vec::new(),
        }
    }
}
