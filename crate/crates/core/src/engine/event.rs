use serde::{Deserialize, Serialize};

use crate::gadgets::Tok;
use crate::types::{PartyId, Round, Tag, Value};

/// Juggernaut decision rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    C1,
    C2,
    C3,
    /// Standalone agreement boxes decide without a rule.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncPath {
    Quorum,
    Certificate,
}

/// Something a party did that the oracles care about.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// A subprotocol instance started locally.
    Started { tag: Tag, input: Value },
    /// Two-grade graded consensus output.
    Graded { tag: Tag, value: Value, grade: u8, locked_at: Option<Round> },
    /// Round-2 lock of the authenticated wrapper or round-4 lock of the
    /// sabotaged wrapper.
    Locked { tag: Tag, value: Value },
    /// GC_Sab* hit its deadline without an inner output.
    Deadline { tag: Tag },
    /// A certificate was formed by this party.
    CertFormed { tag: Tag, value: Value },
    /// A `vote` was sent by the sabotaged wrapper.
    Voted { value: Value },
    MvOutput { instance: u8, set: Vec<Tok> },
    Gc3Output { value: Tok, grade: u8 },
    SyncStarted { value: Value },
    SyncCompleted { value: Value, path: SyncPath },
    /// An agreement box produced `Some(v)` or timed out with `None`.
    BoxOutput { tag: Tag, value: Option<Value> },
    Decided { value: Value, rule: Rule },
    /// Consumer-visible marker that a verifying certificate was forged.
    ActedOnForgery { tag: Tag },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub round: Round,
    pub party: PartyId,
    pub kind: EventKind,
}
