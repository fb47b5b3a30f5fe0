//! Running one configured scenario end to end.

use rayon::prelude::*;
use serde::Serialize;

use super::adversary::Strategic;
use super::config::{ProtocolKind, ScenarioConfig, StrategyKind};
use super::malleable::Malleable;
use super::oracles::{self, PropertyReport, Verdict};
use crate::boxes::{new_board, BoxMachine};
use crate::engine::{run, EngineConfig, NoAdversary, Party};
use crate::error::Result;
use crate::gadgets::{Gc3, MvMachine, Tok};
use crate::gc_star::{GcAuthStar, GcSabStar};
use crate::juggernaut::{JugConfig, Juggernaut, Timing};
use crate::protocol::Standalone;
use crate::sync::SyncMachine;
use crate::types::{PartyId, Round, Tag};
use crate::Transcript;

/// Standalone synchronizer runs stop after this many rounds.
pub const SYNC_HORIZON: Round = 10;
/// Rounds a standalone broadcast instance may take from its start.
pub const MV_HORIZON: Round = 16;
/// Rounds a standalone three-grade graded consensus may take from its start.
pub const GC3_HORIZON: Round = 40;

pub fn jug_config(cfg: &ScenarioConfig) -> JugConfig {
    JugConfig { ba_auth: cfg.constants.ba_auth, ba_sab: cfg.constants.ba_sab, t_inner_sab: cfg.constants.t_inner_sab }
}

pub fn timing(cfg: &ScenarioConfig) -> Timing {
    Timing::new(&cfg.params(), &jug_config(cfg))
}

/// `T_2` of the sabotaged wrapper under `cfg`.
pub fn t_2(cfg: &ScenarioConfig) -> Round {
    GcSabStar::rounds(cfg.constants.t_inner_sab)
}

/// Last round a standalone party of `cfg` may run, relative to its start.
pub fn horizon(cfg: &ScenarioConfig) -> Round {
    match cfg.protocol {
        ProtocolKind::Juggernaut => timing(cfg).last_decision() + 1,
        ProtocolKind::GcAuthStar => GcAuthStar::ROUNDS,
        ProtocolKind::GcSabStar => t_2(cfg) + 1,
        ProtocolKind::Sync => SYNC_HORIZON,
        ProtocolKind::Mv => MV_HORIZON,
        ProtocolKind::Gc3 => GC3_HORIZON,
        ProtocolKind::BaAuth => cfg.constants.ba_auth.rounds(cfg.t_s) + 1,
        ProtocolKind::BaSab => cfg.constants.ba_sab.rounds(cfg.t_i) + 1,
    }
}

/// Hard round cap: configured, or ten times `T_max` for the full protocol.
pub fn round_cap(cfg: &ScenarioConfig) -> Round {
    cfg.constants.max_rounds.unwrap_or(match cfg.protocol {
        ProtocolKind::Juggernaut => 10 * timing(cfg).t_max,
        _ => horizon(cfg) + cfg.start.skew + 8,
    })
}

/// Runs `cfg` and returns its transcript.
pub fn execute(cfg: &ScenarioConfig) -> Result<Transcript> {
    cfg.validate()?;
    let params = cfg.params();
    let inputs = cfg.inputs()?;
    let ecfg = EngineConfig {
        params,
        setting: cfg.setting,
        seed: cfg.seed,
        max_rounds: round_cap(cfg),
        record: cfg.record,
    };
    let input = |p: PartyId| inputs[p.index()];
    let start = |p: PartyId| cfg.start_of(p);
    let h = horizon(cfg);
    match cfg.protocol {
        ProtocolKind::Juggernaut => {
            let jcfg = jug_config(cfg);
            let boards = (new_board(), new_board());
            drive(cfg, ecfg, |p| Juggernaut::new(&params, input(p), jcfg, boards.clone()))
        }
        ProtocolKind::GcAuthStar => {
            drive(cfg, ecfg, |p| Standalone::new(GcAuthStar::new(0, input(p)), 0, h, Tag::GcAuthStar))
        }
        ProtocolKind::GcSabStar => {
            let t2 = t_2(cfg);
            drive(cfg, ecfg, |p| {
                let s = start(p);
                Standalone::new(GcSabStar::new(s, input(p), t2), s, s + h, Tag::GcSabStar)
            })
        }
        ProtocolKind::Sync => drive(cfg, ecfg, |p| {
            let plan = (!cfg.start.never.contains(&p)).then(|| (start(p), input(p)));
            Standalone::new(SyncMachine::new(plan), 0, h, Tag::Sync)
        }),
        ProtocolKind::Mv => drive(cfg, ecfg, |p| {
            let s = start(p);
            Standalone::new(MvMachine::new(Tok::Val(input(p))), s, s + h, Tag::GcSabInner)
        }),
        ProtocolKind::Gc3 => drive(cfg, ecfg, |p| {
            let s = start(p);
            Standalone::new(Gc3::new(input(p)), s, s + h, Tag::GcSabInner)
        }),
        ProtocolKind::BaAuth | ProtocolKind::BaSab => {
            let (tag, kind, t) = match cfg.protocol {
                ProtocolKind::BaAuth => (Tag::BaAuth, cfg.constants.ba_auth, cfg.t_s),
                _ => (Tag::BaSab, cfg.constants.ba_sab, cfg.t_i),
            };
            let board = new_board();
            drive(cfg, ecfg, |p| Standalone::new(BoxMachine::new(tag, kind, 0, input(p), t, &board), 0, h, tag))
        }
    }
}

fn drive<P: Party>(cfg: &ScenarioConfig, ecfg: EngineConfig, factory: impl Fn(PartyId) -> P) -> Result<Transcript>
where
    P::Msg: Malleable,
{
    if cfg.adversary.strategy == StrategyKind::None {
        run(ecfg, factory, &mut NoAdversary)
    } else {
        run(ecfg, factory, &mut Strategic::<P>::new(cfg))
    }
}

/// A finished run with its oracle verdicts.
#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub config: ScenarioConfig,
    pub transcript: Transcript,
    pub reports: Vec<PropertyReport>,
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn failures(&self) -> impl Iterator<Item = &PropertyReport> {
        self.reports.iter().filter(|r| r.verdict == Verdict::Fail)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn report(&self, name: &str) -> Option<&PropertyReport> {
        self.reports.iter().find(|r| r.name == name)
    }
}

/// Runs `cfg` and evaluates every oracle registered for its protocol. Failed
/// reports carry the full scenario text as their replayable witness.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Outcome> {
    let transcript = execute(cfg)?;
    let mut reports = oracles::evaluate(cfg, &transcript);
    for r in &mut reports {
        if r.verdict == Verdict::Fail {
            r.witness = Some(cfg.to_text());
        }
    }
    Ok(Outcome { config: cfg.clone(), transcript, reports, notes: notes(cfg) })
}

/// Runs every scenario on the worker pool. Results come back in input order
/// whatever the scheduling.
pub fn run_many(cfgs: &[ScenarioConfig]) -> Result<Vec<Outcome>> {
    cfgs.par_iter().map(run_scenario).collect()
}

/// Caveats about the configuration itself.
pub fn notes(cfg: &ScenarioConfig) -> Vec<String> {
    let mut out = Vec::new();
    let uses_gadgets = matches!(
        cfg.protocol,
        ProtocolKind::Juggernaut | ProtocolKind::GcSabStar | ProtocolKind::Mv | ProtocolKind::Gc3
    );
    if uses_gadgets && cfg.t_i + 2 * cfg.t_s >= cfg.n {
        out.push(format!(
            "t_i + 2t_s = {} is not below n = {}: information-theoretic gadget guarantees are not claimed",
            cfg.t_i + 2 * cfg.t_s,
            cfg.n
        ));
    }
    out
}

/// Re-runs the scenario described by `text` and checks that it reproduces
/// `expected` exactly.
pub fn replay(text: &str, expected: &Transcript) -> Result<bool> {
    let cfg = ScenarioConfig::parse(text)?;
    Ok(execute(&cfg)?.to_json() == expected.to_json())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::InputSpec;
    use crate::types::{Setting, Value};

    #[test]
    fn library_strategies_respect_every_oracle() {
        let mut failures = Vec::new();
        for protocol in ProtocolKind::ALL {
            for (n, t_s, t_i) in [(4, 1, 1), (5, 1, 1), (5, 2, 1)] {
                for setting in [Setting::Authenticated, Setting::Sabotaged] {
                    for strategy in StrategyKind::LIBRARY {
                        for seed in 0..4 {
                            let mut cfg = ScenarioConfig::new(protocol, n, t_s, t_i, setting);
                            cfg.seed = seed;
                            cfg.inputs = if seed % 2 == 0 { InputSpec::Random(2) } else { InputSpec::Unanimous(Value(1)) };
                            cfg.adversary.strategy = strategy;
                            let out = run_scenario(&cfg).unwrap();
                            for f in out.failures() {
                                failures.push(format!("{} | {}: {}", cfg.label(), f.name, f.detail));
                            }
                        }
                    }
                }
            }
        }
        assert!(failures.is_empty(), "{} failures:\n{}", failures.len(), failures.join("\n"));
    }

    #[test]
    fn replay_reproduces_transcript() {
        let mut cfg = ScenarioConfig::new(ProtocolKind::Juggernaut, 4, 1, 1, Setting::Sabotaged);
        cfg.adversary.strategy = StrategyKind::Random;
        cfg.inputs = InputSpec::Random(3);
        let t = execute(&cfg).unwrap();
        assert!(replay(&cfg.to_text(), &t).unwrap());
        cfg.seed += 1;
        assert!(!replay(&cfg.to_text(), &t).unwrap());
    }

    #[test]
    fn forged_split_breaks_gc_auth_consistency_only_out_of_contract() {
        let text = "[scenario]\nprotocol = gc_auth_star\nn = 4\nt_s = 1\nt_i = 1\nsetting = sabotaged\n\
                    inputs = 0,0,1,1\n[adversary]\nstrategy = script\ncorrupt = 3\nscript = 0/1;3:fe4/-\n";
        let cfg = ScenarioConfig::parse(text).unwrap();
        let out = run_scenario(&cfg).unwrap();
        assert!(out.passed());
        assert_eq!(out.report("gc.consistency").unwrap().verdict, Verdict::OutOfContract);
        assert!(out.transcript.forged_accepted > 0);
        // The same transcript judged as if signatures were unforgeable.
        let mut judged = cfg.clone();
        judged.setting = Setting::Authenticated;
        let r = oracles::evaluate(&judged, &out.transcript);
        assert_eq!(r.iter().find(|r| r.name == "gc.consistency").unwrap().verdict, Verdict::Fail);
    }
}
