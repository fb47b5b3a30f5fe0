use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EngineConfig, Event, EventKind, Rule};
use crate::types::{Params, PartyId, Round, Setting, Tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub value: crate::types::Value,
    pub rule: Rule,
    pub round: Round,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRecord {
    pub sender: PartyId,
    pub recipient: PartyId,
    pub tag: Tag,
    pub byte_size: usize,
    pub honest: bool,
    pub payload: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: Round,
    pub envelopes: Vec<EnvelopeRecord>,
}

/// Everything observable about one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub params: Params,
    pub setting: Setting,
    pub seed: u64,
    pub adversary: String,
    pub rounds_run: Round,
    pub hit_cap: bool,
    /// `(round, party)` for each corruption, in order.
    pub corruptions: Vec<(Round, PartyId)>,
    pub forever_honest: Vec<PartyId>,
    pub events: Vec<Event>,
    pub decisions: BTreeMap<PartyId, Decision>,
    pub bytes_total_honest: u64,
    pub bytes_by_tag: BTreeMap<Tag, u64>,
    /// Honest point-to-point message count per tag.
    pub msgs_by_tag: BTreeMap<Tag, u64>,
    /// Honest multicast/send operations per party and tag.
    pub sends_by_party: BTreeMap<PartyId, BTreeMap<Tag, u64>>,
    pub rejected_injections: u64,
    pub duplicates_dropped: u64,
    pub signatures_created: u64,
    pub forged_accepted: u64,
    pub forged_rejected: u64,
    pub rounds: Vec<RoundRecord>,
    pub digest: Option<String>,
}

impl Transcript {
    pub(super) fn new(cfg: &EngineConfig) -> Self {
        Transcript {
            params: cfg.params,
            setting: cfg.setting,
            seed: cfg.seed,
            adversary: String::new(),
            rounds_run: 0,
            hit_cap: false,
            corruptions: Vec::new(),
            forever_honest: Vec::new(),
            events: Vec::new(),
            decisions: BTreeMap::new(),
            bytes_total_honest: 0,
            bytes_by_tag: BTreeMap::new(),
            msgs_by_tag: BTreeMap::new(),
            sends_by_party: BTreeMap::new(),
            rejected_injections: 0,
            duplicates_dropped: 0,
            signatures_created: 0,
            forged_accepted: 0,
            forged_rejected: 0,
            rounds: Vec::new(),
            digest: None,
        }
    }

    pub(super) fn record_event(&mut self, ev: Event) {
        if let EventKind::Decided { value, rule } = ev.kind {
            self.decisions.entry(ev.party).or_insert(Decision { value, rule, round: ev.round });
        }
        self.events.push(ev);
    }

    pub(super) fn count_send(&mut self, sender: PartyId, tag: Tag, bytes: usize, copies: usize) {
        let total = (bytes * copies) as u64;
        self.bytes_total_honest += total;
        *self.bytes_by_tag.entry(tag).or_default() += total;
        *self.msgs_by_tag.entry(tag).or_default() += copies as u64;
        *self.sends_by_party.entry(sender).or_default().entry(tag).or_default() += 1;
    }

    pub fn bytes(&self, tag: Tag) -> u64 {
        self.bytes_by_tag.get(&tag).copied().unwrap_or(0)
    }

    pub fn messages(&self, tag: Tag) -> u64 {
        self.msgs_by_tag.get(&tag).copied().unwrap_or(0)
    }

    /// Bytes the compiler itself adds on top of its agreement boxes and
    /// inner graded consensus protocols.
    pub fn overhead_bytes(&self) -> u64 {
        self.bytes_by_tag.iter().filter(|(t, _)| t.is_overhead()).map(|(_, b)| b).sum()
    }

    pub fn is_forever_honest(&self, p: PartyId) -> bool {
        self.forever_honest.contains(&p)
    }

    /// Events of forever-honest parties.
    pub fn honest_events(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| self.is_forever_honest(e.party))
    }

    pub fn max_corrupt(&self) -> usize {
        self.params.n - self.forever_honest.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("transcript serializes")
    }
}
