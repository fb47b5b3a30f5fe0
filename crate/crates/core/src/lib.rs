//! Deterministic synchronous-round simulator and the crypto-agnostic
//! Byzantine agreement compiler with all of its building blocks.
//!
//! A run is a pure function of its [`harness::ScenarioConfig`]: the engine
//! steps parties in lockstep rounds, the adversary acts last in each round,
//! and every observable is recorded in a [`Transcript`].

pub mod boxes;
pub mod crypto;
pub mod engine;
pub mod error;
pub mod gadgets;
pub mod gc_star;
pub mod harness;
pub mod juggernaut;
pub mod protocol;
pub mod sync;
pub mod types;

pub use engine::{Decision, Event, EventKind, Rule, SyncPath, Transcript};
pub use error::{CryptoError, Error, Result};
pub use types::{Params, PartyId, Round, Setting, Tag, Value};
