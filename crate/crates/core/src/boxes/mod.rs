//! Agreement black boxes behind one interface, each with a round bound
//! `T_Π`: if every honest party proposes in the same round `r` and the box is
//! used within its contract, every honest party outputs by `r + T_Π`.

mod dolev_strong;
mod oracle;
mod phase_king;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{Cx, EventKind, Payload};
use crate::error::Error;
use crate::protocol::Machine;
use crate::types::{PartyId, Round, Tag, Value};

pub use dolev_strong::{DolevStrong, DsMsg};
pub use oracle::{new_board, Board, OracleBox};
pub use phase_king::{KingMsg, KingStep, PhaseKing};

pub(crate) use dolev_strong::chain_stmt;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum BoxBody {
    Ds(DsMsg),
    King(KingMsg),
}

/// A box message with the accounting tag of the slot the box fills.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoxMsg {
    pub tag: Tag,
    pub body: BoxBody,
}

impl Payload for BoxMsg {
    fn tag(&self) -> Tag {
        self.tag
    }

    fn byte_size(&self, lambda: usize) -> usize {
        match &self.body {
            BoxBody::Ds(m) => 1 + 2 + 4 + lambda * m.chain.len(),
            BoxBody::King(_) => 1 + 2 + 1 + 4,
        }
    }
}

pub trait BaBox: Send + fmt::Debug {
    fn on_round(&mut self, cx: &mut Cx<'_, BoxBody>, inbox: &[(PartyId, BoxBody)]);

    fn output(&self) -> Option<Value>;
}

/// Wraps a box and never lets it output; models a box missing its deadline.
#[derive(Debug)]
pub struct Stalling(pub Box<dyn BaBox>);

impl BaBox for Stalling {
    fn on_round(&mut self, cx: &mut Cx<'_, BoxBody>, inbox: &[(PartyId, BoxBody)]) {
        self.0.on_round(cx, inbox);
    }

    fn output(&self) -> Option<Value> {
        None
    }
}

/// Box implementations selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxKind {
    DolevStrong,
    PhaseKing,
    Oracle,
    /// Dolev-Strong that never outputs.
    StallingDolevStrong,
    /// Phase king that never outputs.
    StallingPhaseKing,
}

impl BoxKind {
    pub const ALL: [BoxKind; 5] = [
        BoxKind::DolevStrong,
        BoxKind::PhaseKing,
        BoxKind::Oracle,
        BoxKind::StallingDolevStrong,
        BoxKind::StallingPhaseKing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoxKind::DolevStrong => "dolev_strong",
            BoxKind::PhaseKing => "phase_king",
            BoxKind::Oracle => "oracle",
            BoxKind::StallingDolevStrong => "stalling_dolev_strong",
            BoxKind::StallingPhaseKing => "stalling_phase_king",
        }
    }

    /// `T_Π` for a box tolerating `t` corruptions.
    pub fn rounds(self, t: usize) -> Round {
        match self {
            BoxKind::DolevStrong | BoxKind::StallingDolevStrong => DolevStrong::rounds(t),
            BoxKind::PhaseKing | BoxKind::StallingPhaseKing => PhaseKing::rounds(t),
            BoxKind::Oracle => OracleBox::ROUNDS,
        }
    }

    /// Whether the box signs anything.
    pub fn uses_signatures(self) -> bool {
        matches!(self, BoxKind::DolevStrong | BoxKind::StallingDolevStrong)
    }

    pub fn build(self, start: Round, input: Value, t: usize, board: &Board) -> Box<dyn BaBox> {
        match self {
            BoxKind::DolevStrong => Box::new(DolevStrong::new(start, input, t)),
            BoxKind::PhaseKing => Box::new(PhaseKing::new(start, input, t)),
            BoxKind::Oracle => Box::new(OracleBox::new(start, input, board.clone())),
            BoxKind::StallingDolevStrong => Box::new(Stalling(Box::new(DolevStrong::new(start, input, t)))),
            BoxKind::StallingPhaseKing => Box::new(Stalling(Box::new(PhaseKing::new(start, input, t)))),
        }
    }
}

impl fmt::Display for BoxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoxKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        BoxKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown box `{s}`")))
    }
}

/// A box instance filling one slot of a larger protocol, or run on its own.
/// Its output is `Some(v)`, or `None` once the deadline `start + T_Π` passed
/// without one.
#[derive(Debug)]
pub struct BoxMachine {
    tag: Tag,
    inner: Box<dyn BaBox>,
    deadline: Round,
    result: Option<Option<Value>>,
}

impl BoxMachine {
    pub fn new(tag: Tag, kind: BoxKind, start: Round, input: Value, t: usize, board: &Board) -> Self {
        BoxMachine {
            tag,
            inner: kind.build(start, input, t, board),
            deadline: start + kind.rounds(t),
            result: None,
        }
    }

    pub fn deadline(&self) -> Round {
        self.deadline
    }
}

impl Machine for BoxMachine {
    type Msg = BoxMsg;
    type Output = Option<Value>;

    fn on_round(&mut self, cx: &mut Cx<'_, BoxMsg>, inbox: &[(PartyId, BoxMsg)]) {
        if self.result.is_some() {
            return;
        }
        let bodies: Vec<(PartyId, BoxBody)> = inbox.iter().map(|(p, m)| (*p, m.body.clone())).collect();
        let mut sub = cx.child();
        self.inner.on_round(&mut sub, &bodies);
        let tag = self.tag;
        cx.absorb(sub, |body| BoxMsg { tag, body });
        if let Some(v) = self.inner.output() {
            self.result = Some(Some(v));
        } else if cx.round >= self.deadline {
            self.result = Some(None);
        }
        if let Some(value) = self.result {
            cx.emit(EventKind::BoxOutput { tag, value });
        }
    }

    fn output(&self) -> Option<Option<Value>> {
        self.result
    }
}
