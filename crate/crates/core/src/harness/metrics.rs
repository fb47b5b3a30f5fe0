//! Per-run metrics rows in CSV or JSON-lines form.
//!
//! Both formats start with a version line. CSV columns, in order:
//!
//! ```text
//! protocol,n,t_s,t_i,setting,adversary,seed,
//! bytes_gc_auth_star,bytes_gc_auth_inner,bytes_ba_auth,bytes_sync,
//! bytes_gc_sab_star,bytes_gc_sab_inner,bytes_decide,bytes_ba_sab,
//! rounds_to_decide,decision_rules
//! ```
//!
//! The last two columns hold one space-separated entry per party, `-` for a
//! party that was corrupted or never output. JSON rows carry the same fields
//! under the same names, with `bytes` as an object keyed by tag.

use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use super::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::types::{PartyId, Round, Tag};
use crate::{EventKind, Rule, Transcript};

pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown metrics format `{s}` (csv | json)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MetricsRow {
    pub protocol: String,
    pub n: usize,
    pub t_s: usize,
    pub t_i: usize,
    pub setting: String,
    pub adversary: String,
    pub seed: u64,
    /// Honest bytes per tag, in `Tag::ALL` order.
    pub bytes: Vec<(Tag, u64)>,
    /// Round of each party's decision or output.
    pub rounds_to_decide: Vec<Option<Round>>,
    pub decision_rules: Vec<Option<Rule>>,
}

impl MetricsRow {
    pub fn new(cfg: &ScenarioConfig, t: &Transcript) -> Self {
        let honest = |p: PartyId| t.is_forever_honest(p);
        let mut rounds = Vec::new();
        let mut rules = Vec::new();
        for p in PartyId::all(cfg.n) {
            let d = t.decisions.get(&p).filter(|_| honest(p));
            let out = d.map(|d| d.round).or_else(|| {
                t.honest_events()
                    .find(|e| e.party == p && is_output(&e.kind))
                    .map(|e| e.round)
            });
            rounds.push(out);
            rules.push(d.map(|d| d.rule));
        }
        MetricsRow {
            protocol: cfg.protocol.name().to_string(),
            n: cfg.n,
            t_s: cfg.t_s,
            t_i: cfg.t_i,
            setting: cfg.setting.name().to_string(),
            adversary: cfg.adversary.strategy.name().to_string(),
            seed: cfg.seed,
            bytes: Tag::ALL.iter().map(|tag| (*tag, t.bytes(*tag))).collect(),
            rounds_to_decide: rounds,
            decision_rules: rules,
        }
    }

    pub fn bytes(&self, tag: Tag) -> u64 {
        self.bytes.iter().find(|(t, _)| *t == tag).map_or(0, |(_, b)| *b)
    }

    fn csv(&self) -> String {
        let bytes: Vec<String> = self.bytes.iter().map(|(_, b)| b.to_string()).collect();
        let rounds: Vec<String> = self.rounds_to_decide.iter().map(|r| r.map_or("-".into(), |r| r.to_string())).collect();
        let rules: Vec<String> = self.decision_rules.iter().map(|r| r.map_or("-".into(), |r| format!("{r:?}"))).collect();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.protocol,
            self.n,
            self.t_s,
            self.t_i,
            self.setting,
            self.adversary,
            self.seed,
            bytes.join(","),
            rounds.join(" "),
            rules.join(" "),
        )
    }

    fn json(&self) -> String {
        let bytes: serde_json::Map<String, serde_json::Value> =
            self.bytes.iter().map(|(t, b)| (t.name().to_string(), (*b).into())).collect();
        let v = serde_json::json!({
            "protocol": self.protocol,
            "n": self.n,
            "t_s": self.t_s,
            "t_i": self.t_i,
            "setting": self.setting,
            "adversary": self.adversary,
            "seed": self.seed,
            "bytes": bytes,
            "rounds_to_decide": self.rounds_to_decide,
            "decision_rules": self.decision_rules.iter().map(|r| r.map(|r| format!("{r:?}"))).collect::<Vec<_>>(),
        });
        v.to_string()
    }
}

fn is_output(k: &EventKind) -> bool {
    matches!(
        k,
        EventKind::Graded { .. }
            | EventKind::SyncCompleted { .. }
            | EventKind::MvOutput { instance: 0, .. }
            | EventKind::Gc3Output { .. }
            | EventKind::BoxOutput { .. }
    )
}

pub fn header(format: Format) -> String {
    match format {
        Format::Csv => {
            let bytes: Vec<String> = Tag::ALL.iter().map(|t| format!("bytes_{}", t.name())).collect();
            format!(
                "# juggernaut-metrics v{VERSION}\nprotocol,n,t_s,t_i,setting,adversary,seed,{},rounds_to_decide,decision_rules",
                bytes.join(",")
            )
        }
        Format::Json => format!("{{\"format\":\"juggernaut-metrics\",\"version\":{VERSION}}}"),
    }
}

/// Writes the version header followed by one line per row.
pub fn emit(rows: &[MetricsRow], format: Format, out: &mut impl Write) -> Result<()> {
    writeln!(out, "{}", header(format))?;
    for r in rows {
        let line = match format {
            Format::Csv => r.csv(),
            Format::Json => r.json(),
        };
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{InputSpec, ProtocolKind, StrategyKind};
    use crate::harness::scenario::execute;
    use crate::types::{Setting, Value};

    fn row(protocol: ProtocolKind, setting: Setting) -> MetricsRow {
        let mut cfg = ScenarioConfig::new(protocol, 5, 2, 1, setting);
        cfg.inputs = InputSpec::Unanimous(Value(3));
        cfg.adversary.strategy = StrategyKind::Crash;
        MetricsRow::new(&cfg, &execute(&cfg).unwrap())
    }

    #[test]
    fn authenticated_run_spends_nothing_on_ba_sab() {
        let r = row(ProtocolKind::Juggernaut, Setting::Authenticated);
        assert_eq!(r.bytes(Tag::BaSab), 0);
        assert!(r.bytes(Tag::BaAuth) > 0);
        assert_eq!(r.decision_rules.iter().flatten().count(), 3);
        assert!(r.decision_rules.iter().flatten().all(|x| *x == Rule::C1));
        assert_eq!(r.rounds_to_decide[4], None);
    }

    #[test]
    fn formats_share_header_and_field_order() {
        let r = row(ProtocolKind::Juggernaut, Setting::Sabotaged);
        let mut csv = Vec::new();
        emit(std::slice::from_ref(&r), Format::Csv, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# juggernaut-metrics v1");
        assert_eq!(lines[1].split(',').count(), lines[2].split(',').count());
        assert!(lines[2].starts_with("juggernaut,5,2,1,sabotaged,crash,0,"));

        let mut json = Vec::new();
        emit(&[r], Format::Json, &mut json).unwrap();
        let json = String::from_utf8(json).unwrap();
        let body: serde_json::Value = serde_json::from_str(json.lines().nth(1).unwrap()).unwrap();
        assert_eq!(body["n"], 5);
        assert_eq!(body["bytes"].as_object().unwrap().len(), Tag::ALL.len());
    }

    #[test]
    fn sync_parties_send_at_most_one_finish_and_one_certificate() {
        let mut cfg = ScenarioConfig::new(ProtocolKind::Sync, 5, 2, 1, Setting::Authenticated);
        cfg.inputs = InputSpec::Unanimous(Value(1));
        let t = execute(&cfg).unwrap();
        for (p, sends) in &t.sends_by_party {
            assert!(sends.get(&Tag::Sync).copied().unwrap_or(0) <= 2, "{p}: {sends:?}");
        }
    }
}
