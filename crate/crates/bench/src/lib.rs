//! Fixed workloads shared by the benchmarks in `benches/`.

use juggernaut_core::harness::{gadget_suite, EnumSpec, InputSpec, ProtocolKind, ScenarioConfig, StrategyKind};
use juggernaut_core::{Setting, Value};

/// One end-to-end run; transcripts are not recorded, as in sweeps.
pub fn juggernaut(n: usize, t_s: usize, t_i: usize, setting: Setting) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(ProtocolKind::Juggernaut, n, t_s, t_i, setting);
    cfg.inputs = InputSpec::Random(2);
    cfg.adversary.strategy = StrategyKind::Equivocate;
    cfg.record = false;
    cfg
}

pub fn gc3(n: usize, t_s: usize, t_i: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(ProtocolKind::Gc3, n, t_s, t_i, Setting::Sabotaged);
    cfg.inputs = InputSpec::Unanimous(Value(1));
    cfg.adversary.strategy = StrategyKind::Equivocate;
    cfg.record = false;
    cfg
}

/// The smallest entry of the gadget suite.
pub fn enumeration_slice() -> EnumSpec {
    gadget_suite().into_iter().min_by_key(EnumSpec::runs).expect("suite is not empty")
}
