//! Exhaustive enumeration of adversary scripts over small configurations.
//!
//! A run is identified by its index: the input/start pattern it uses and, in
//! mixed radix, the action each corrupt party takes in each phase. Every run
//! is evaluated by the same oracles as a single scenario.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{InputSpec, ProtocolKind, ScenarioConfig, StartSpec, StrategyKind};
use super::oracles::{self, Verdict};
use super::scenario::execute;
use super::script::{Action, Script};
use crate::boxes::BoxKind;
use crate::error::{Error, Result};
use crate::gc_star::GcSabStar;
use crate::types::{PartyId, Round};
use crate::{EventKind, Transcript};

/// Largest space `enumerate` will walk.
pub const MAX_RUNS: u128 = 10_000_000;
/// Largest system `enumerate` accepts.
pub const MAX_N: usize = 5;

/// Inputs and start times shared by a block of runs.
#[derive(Clone, Debug, Serialize)]
pub struct Pattern {
    pub label: String,
    pub inputs: InputSpec,
    pub start: StartSpec,
}

impl Pattern {
    pub fn new(label: &str, inputs: InputSpec, start: StartSpec) -> Self {
        Pattern { label: label.to_string(), inputs, start }
    }
}

#[derive(Clone, Debug)]
pub struct EnumSpec {
    pub name: String,
    /// Protocol, sizes, setting and the corrupt set; inputs and start times
    /// are overwritten per pattern.
    pub base: ScenarioConfig,
    /// Start round of every phase; the first is 0.
    pub phases: Vec<Round>,
    /// Actions available in each phase.
    pub spaces: Vec<Vec<Action>>,
    pub patterns: Vec<Pattern>,
}

impl EnumSpec {
    /// Same action space in every phase.
    pub fn uniform(name: &str, base: ScenarioConfig, phases: Vec<Round>, forge: bool, patterns: Vec<Pattern>) -> Self {
        let space = Action::space(base.n, forge);
        let spaces = vec![space; phases.len()];
        EnumSpec { name: name.to_string(), base, phases, spaces, patterns }
    }

    fn corrupt(&self) -> Vec<PartyId> {
        let mut cfg = self.base.clone();
        cfg.adversary.strategy = StrategyKind::Script;
        cfg.corrupt()
    }

    /// `(party, phase)` slots, in index order.
    fn slots(&self) -> Vec<(PartyId, usize)> {
        let mut slots = Vec::new();
        for p in self.corrupt() {
            for i in 0..self.phases.len() {
                slots.push((p, i));
            }
        }
        slots
    }

    fn scripts_per_pattern(&self) -> u128 {
        let per_party: u128 = self.spaces.iter().map(|s| s.len() as u128).product();
        per_party.pow(self.corrupt().len() as u32)
    }

    pub fn runs(&self) -> u128 {
        self.scripts_per_pattern() * self.patterns.len() as u128
    }

    fn decode(&self, index: u64) -> (usize, Script) {
        let per = self.scripts_per_pattern() as u64;
        let pattern = (index / per) as usize;
        let mut rest = index % per;
        let mut script = Script::new(self.phases.clone());
        for (p, phase) in self.slots() {
            let space = &self.spaces[phase];
            let a = space[(rest % space.len() as u64) as usize];
            rest /= space.len() as u64;
            script.actions.entry(p).or_default().push(a);
        }
        (pattern, script)
    }

    /// Scenario of run `index`.
    pub fn scenario(&self, index: u64) -> ScenarioConfig {
        let (pattern, script) = self.decode(index);
        self.with_script(pattern, script)
    }

    fn with_script(&self, pattern: usize, script: Script) -> ScenarioConfig {
        let mut cfg = self.base.clone();
        let pat = &self.patterns[pattern];
        cfg.inputs = pat.inputs.clone();
        cfg.start = pat.start.clone();
        cfg.record = false;
        cfg.adversary.strategy = StrategyKind::Script;
        cfg.adversary.corrupt = Some(self.corrupt());
        cfg.adversary.script = Some(script);
        cfg
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PropertySummary {
    pub name: String,
    pub pass: u64,
    pub fail: u64,
    pub out_of_contract: u64,
    /// First failing run, minimised.
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnumReport {
    pub name: String,
    pub runs: u64,
    pub properties: Vec<PropertySummary>,
    /// Longest inner three-grade run observed, in rounds from its start.
    pub max_inner_rounds: Option<Round>,
    /// Row-major verdicts: `runs` rows of `properties.len()` entries.
    #[serde(skip)]
    pub matrix: Vec<Verdict>,
}

impl EnumReport {
    pub fn failures(&self) -> u64 {
        self.properties.iter().map(|p| p.fail).sum()
    }

    pub fn property(&self, name: &str) -> Option<&PropertySummary> {
        self.properties.iter().find(|p| p.name == name)
    }

    /// Writes the pass/fail matrix as CSV: run index, pattern, script, then
    /// one verdict letter per property (`P`, `F` or `O`).
    pub fn write_matrix(&self, spec: &EnumSpec, out: &mut impl Write) -> Result<()> {
        let names: Vec<&str> = self.properties.iter().map(|p| p.name.as_str()).collect();
        writeln!(out, "index,pattern,script,{}", names.join(","))?;
        for (i, row) in self.matrix.chunks(names.len().max(1)).enumerate() {
            let (pattern, script) = spec.decode(i as u64);
            let letters: Vec<String> = row.iter().map(|v| v.letter().to_string()).collect();
            writeln!(out, "{i},{},{script},{}", spec.patterns[pattern].label, letters.join(","))?;
        }
        Ok(())
    }
}

/// Rounds the inner three-grade consensus took at the slowest honest party.
pub fn inner_rounds(cfg: &ScenarioConfig, t: &Transcript) -> Option<Round> {
    let offset = match cfg.protocol {
        ProtocolKind::GcSabStar | ProtocolKind::Juggernaut => GcSabStar::INNER_START,
        ProtocolKind::Gc3 => 0,
        _ => return None,
    };
    let starts: BTreeMap<PartyId, Round> = t
        .honest_events()
        .filter_map(|e| match e.kind {
            EventKind::Started { tag: crate::Tag::GcSabStar, .. } => Some((e.party, e.round)),
            _ => None,
        })
        .collect();
    t.honest_events()
        .filter_map(|e| match e.kind {
            EventKind::Gc3Output { .. } => {
                let s = match cfg.protocol {
                    ProtocolKind::Juggernaut => *starts.get(&e.party)?,
                    _ => cfg.start_of(e.party),
                };
                Some(e.round + 1 - (s + offset))
            }
            _ => None,
        })
        .max()
}

/// Walks the whole space of `spec` and summarises every oracle.
pub fn enumerate(spec: &EnumSpec) -> Result<EnumReport> {
    if spec.base.n > MAX_N {
        return Err(Error::Config(format!("enumeration needs n <= {MAX_N}, got n = {}", spec.base.n)));
    }
    let runs = spec.runs();
    if runs > MAX_RUNS {
        return Err(Error::SpaceTooLarge(runs, MAX_RUNS));
    }
    for p in 0..spec.patterns.len() {
        spec.with_script(p, Script::new(spec.phases.clone())).validate()?;
    }
    let names = oracles::properties(spec.base.protocol);
    let rows: Vec<(Vec<Verdict>, Option<Round>)> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = spec.scenario(i);
            let t = execute(&cfg)?;
            let verdicts = oracles::evaluate(&cfg, &t).into_iter().map(|r| r.verdict).collect();
            Ok((verdicts, inner_rounds(&cfg, &t)))
        })
        .collect::<Result<_>>()?;

    let mut properties: Vec<PropertySummary> =
        names.iter().map(|n| PropertySummary { name: n.to_string(), ..Default::default() }).collect();
    let mut matrix = Vec::with_capacity(rows.len() * names.len());
    let mut max_inner = None;
    for (i, (verdicts, inner)) in rows.into_iter().enumerate() {
        max_inner = max_inner.max(inner);
        for (k, v) in verdicts.iter().enumerate() {
            let s = &mut properties[k];
            match v {
                Verdict::Pass => s.pass += 1,
                Verdict::OutOfContract => s.out_of_contract += 1,
                Verdict::Fail => {
                    s.fail += 1;
                    if s.witness.is_none() {
                        s.witness = Some(minimise(spec, i as u64, &s.name)?.to_text());
                    }
                }
            }
        }
        matrix.extend(verdicts);
    }
    Ok(EnumReport { name: spec.name.clone(), runs: runs as u64, properties, max_inner_rounds: max_inner, matrix })
}

fn fails(cfg: &ScenarioConfig, property: &str) -> Result<bool> {
    let t = execute(cfg)?;
    Ok(oracles::evaluate(cfg, &t).iter().any(|r| r.name == property && r.verdict == Verdict::Fail))
}

/// Greedily replaces scripted actions by honest behaviour while `property`
/// still fails.
pub fn minimise(spec: &EnumSpec, index: u64, property: &str) -> Result<ScenarioConfig> {
    let (pattern, mut script) = spec.decode(index);
    for (p, phase) in spec.slots() {
        let acts = script.actions.get_mut(&p).expect("slot party");
        if acts[phase] == Action::Honest {
            continue;
        }
        let old = std::mem::replace(&mut acts[phase], Action::Honest);
        if !fails(&spec.with_script(pattern, script.clone()), property)? {
            script.actions.get_mut(&p).expect("slot party")[phase] = old;
        }
    }
    Ok(spec.with_script(pattern, script))
}

/// Exhaustive gadget verification at n = 4 with party 3 corrupt, plus the
/// compiler's wrapper rounds over ideal agreement boxes. Honest
/// parties 0..3 get the inputs named by each pattern (`a` = 0, `b` = 1).
pub fn gadget_suite() -> Vec<EnumSpec> {
    use crate::types::{Setting, Value};
    let (a, b) = (Value(0), Value(1));
    let list = |v: [Value; 4]| InputSpec::List(v.to_vec());
    let pat = |label: &str, inputs: [Value; 4], start: StartSpec| Pattern::new(label, list(inputs), start);
    let skew1 = StartSpec { skew: 1, ..StartSpec::default() };
    let late1 = StartSpec { skew: 1, late: Some(vec![PartyId(1)]), ..StartSpec::default() };
    let never2 = StartSpec { never: vec![PartyId(2)], ..StartSpec::default() };
    let aaa = [a, a, a, b];
    let aab = [a, a, b, b];
    let abb = [a, b, b, a];
    let base = |protocol, setting| ScenarioConfig::new(protocol, 4, 1, 1, setting);
    let forging = |setting| setting == Setting::Sabotaged;
    let mut suite = Vec::new();

    for setting in [Setting::Authenticated, Setting::Sabotaged] {
        let patterns = match setting {
            Setting::Authenticated => vec![pat("aaa", aaa, StartSpec::default()), pat("aab", aab, StartSpec::default())],
            Setting::Sabotaged => vec![pat("aaa", aaa, StartSpec::default())],
        };
        // Forged splits make the sabotaged space larger; merge the last two
        // inner rounds there.
        let phases = match setting {
            Setting::Authenticated => vec![0, 1, 3, 4, 5],
            Setting::Sabotaged => vec![0, 1, 3, 5],
        };
        suite.push(EnumSpec::uniform(
            &format!("gc_auth_star/{}", setting.name()),
            base(ProtocolKind::GcAuthStar, setting),
            phases,
            forging(setting),
            patterns,
        ));
    }

    for setting in [Setting::Sabotaged, Setting::Authenticated] {
        let patterns = match setting {
            Setting::Sabotaged => vec![
                pat("aaa", aaa, StartSpec::default()),
                pat("aab", aab, StartSpec::default()),
                pat("aaa+skew", aaa, skew1.clone()),
                pat("aab+skew", aab, skew1.clone()),
            ],
            Setting::Authenticated => vec![pat("aaa", aaa, StartSpec::default())],
        };
        let mut spec = EnumSpec::uniform(
            &format!("gc_sab_star/{}", setting.name()),
            base(ProtocolKind::GcSabStar, setting),
            vec![0, 2, 4, GcSabStar::INNER_START],
            forging(setting),
            patterns,
        );
        // The inner gadget carries no certificates; forging there is moot.
        spec.spaces[3] = Action::space(4, false);
        suite.push(spec);
    }

    for setting in [Setting::Authenticated, Setting::Sabotaged] {
        let mut patterns = vec![
            pat("aaa", aaa, StartSpec::default()),
            pat("aaa+late1", aaa, late1.clone()),
            pat("aaa+never2", aaa, never2.clone()),
        ];
        if setting == Setting::Authenticated {
            patterns.push(pat("aab", aab, StartSpec::default()));
        }
        suite.push(EnumSpec::uniform(
            &format!("sync/{}", setting.name()),
            base(ProtocolKind::Sync, setting),
            vec![0, 1, 2, 3],
            forging(setting),
            patterns,
        ));
    }

    suite.push(EnumSpec::uniform(
        "mv",
        base(ProtocolKind::Mv, Setting::Sabotaged),
        vec![0, 1, 2, 3],
        false,
        vec![
            pat("aaa", aaa, StartSpec::default()),
            pat("aab", aab, StartSpec::default()),
            pat("abb", abb, StartSpec::default()),
            pat("aaa+skew", aaa, skew1.clone()),
            pat("aab+skew", aab, skew1.clone()),
        ],
    ));

    // The compiler's own wrapper rounds, with both agreement boxes replaced
    // by the ideal stub.
    for setting in [Setting::Authenticated, Setting::Sabotaged] {
        let mut base = base(ProtocolKind::Juggernaut, setting);
        base.constants.ba_auth = BoxKind::Oracle;
        base.constants.ba_sab = BoxKind::Oracle;
        let d = super::scenario::timing(&base).step4_deadline;
        suite.push(EnumSpec::uniform(
            &format!("juggernaut_wrappers/{}", setting.name()),
            base,
            vec![0, 2, 7, d],
            forging(setting),
            match setting {
                Setting::Authenticated => vec![pat("aaa", aaa, StartSpec::default()), pat("aab", aab, StartSpec::default())],
                Setting::Sabotaged => vec![pat("aab", aab, StartSpec::default())],
            },
        ));
    }

    suite.push(EnumSpec::uniform(
        "gc3",
        base(ProtocolKind::Gc3, Setting::Sabotaged),
        vec![0, 1, 2, 3, 4],
        false,
        vec![pat("aaa", aaa, StartSpec::default()), pat("abb", abb, StartSpec::default()), pat("aab+skew", aab, skew1)],
    ));
    suite
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Setting, Value};

    fn spec(phases: Vec<Round>) -> EnumSpec {
        let base = ScenarioConfig::new(ProtocolKind::Sync, 4, 1, 1, Setting::Authenticated);
        let patterns = vec![
            Pattern::new("aaa", InputSpec::Unanimous(Value(0)), StartSpec::default()),
            Pattern::new("aab", InputSpec::List(vec![Value(0), Value(0), Value(1), Value(1)]), StartSpec::default()),
        ];
        EnumSpec::uniform("sync", base, phases, false, patterns)
    }

    #[test]
    fn index_decoding_is_a_bijection() {
        let s = spec(vec![0, 2]);
        assert_eq!(s.runs(), 2 * 9 * 9);
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..s.runs() as u64 {
            let cfg = s.scenario(i);
            assert!(seen.insert(cfg.to_text()));
        }
    }

    #[test]
    fn small_space_passes_and_fills_matrix() {
        let s = spec(vec![0, 1]);
        let r = enumerate(&s).unwrap();
        assert_eq!(r.runs, 162);
        assert_eq!(r.failures(), 0, "{:#?}", r.properties);
        assert_eq!(r.matrix.len(), 162 * 4);
        let mut csv = Vec::new();
        r.write_matrix(&s, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 163);
    }

    #[test]
    fn oversized_space_is_refused() {
        let s = spec(vec![0, 1, 2, 3, 4, 5, 6, 7]);
        assert!(matches!(enumerate(&s), Err(Error::SpaceTooLarge(..))));
    }

    #[test]
    fn large_systems_are_refused() {
        let mut s = spec(vec![0]);
        s.base = ScenarioConfig::new(ProtocolKind::Sync, 7, 3, 1, crate::Setting::Authenticated);
        assert!(matches!(enumerate(&s), Err(Error::Config(m)) if m.contains("n <= 5")));
    }
}
