//! The two crypto-agnostic graded consensus wrappers and the inner
//! authenticated graded consensus used by the first one.

mod auth_star;
mod inner_auth;
mod sab_star;

use serde::{Deserialize, Serialize};

use crate::engine::EventKind;
use crate::protocol::Report;
use crate::types::{Round, Tag, Value};

pub use auth_star::{GcAuthMsg, GcAuthStar};
pub use inner_auth::{InnerAuthGc, InnerMsg};
pub use sab_star::{wrapper_round_start, GcSabMsg, GcSabStar};

pub(crate) use auth_star::init_stmt;
pub(crate) use inner_auth::{echo_stmt as inner_echo_stmt, vote_stmt as inner_vote_stmt};
pub(crate) use sab_star::{echo_stmt as sab_echo_stmt, vote_stmt as sab_vote_stmt};

/// Two-grade output. `locked_at` is the round of the pre-inner lock, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcOutput {
    pub value: Value,
    pub grade: u8,
    pub locked_at: Option<Round>,
}

impl GcOutput {
    pub fn event(&self, tag: Tag) -> EventKind {
        EventKind::Graded { tag, value: self.value, grade: self.grade, locked_at: self.locked_at }
    }
}

impl Report for GcOutput {
    fn report(&self, _tag: Tag) -> Option<EventKind> {
        None
    }
}

impl Report for (Value, u8) {
    fn report(&self, tag: Tag) -> Option<EventKind> {
        Some(EventKind::Graded { tag, value: self.0, grade: self.1, locked_at: None })
    }
}
