//! Information-theoretic gadgets: multivalued broadcast and the three-grade
//! graded consensus built from two broadcast instances.
//!
//! Both are message-driven: every handler runs on whatever arrived this round,
//! so parties that start up to one round apart interoperate without padding.

mod gc3;
mod mv;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::types::Value;

pub use gc3::{gc3_to_binary, Gc3, Gc3Msg};
pub use mv::{MvBroadcast, MvMachine, MvMsg};

/// A value inside the gadgets: either a proposal value or one of the
/// distinguished defaults, none of which is in the value universe.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tok {
    Val(Value),
    /// `⊥_rd`: the graded-consensus "disagreement seen" marker.
    BotRd,
    /// Default of the first broadcast instance.
    BotMv1,
    /// Default of the second broadcast instance.
    BotMv2,
    /// Default of a standalone broadcast instance.
    BotMv,
    /// Plain `⊥`.
    Bot,
}

impl Tok {
    pub fn value(self) -> Option<Value> {
        match self {
            Tok::Val(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_val(self) -> bool {
        matches!(self, Tok::Val(_))
    }
}

impl fmt::Debug for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Val(v) => write!(f, "{v:?}"),
            Tok::BotRd => f.write_str("⊥rd"),
            Tok::BotMv1 => f.write_str("⊥mv1"),
            Tok::BotMv2 => f.write_str("⊥mv2"),
            Tok::BotMv => f.write_str("⊥mv"),
            Tok::Bot => f.write_str("⊥"),
        }
    }
}
