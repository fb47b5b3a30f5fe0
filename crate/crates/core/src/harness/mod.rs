//! Scenario configuration, adversaries, property oracles and exhaustive
//! enumeration over small configurations.

pub mod acceptance;
pub mod adversary;
pub mod config;
pub mod enumerate;
pub mod malleable;
pub mod metrics;
pub mod oracles;
pub mod scenario;
pub mod script;

pub use config::{AdversarySpec, Constants, InputSpec, ProtocolKind, ScenarioConfig, StartSpec, StrategyKind};
pub use oracles::{evaluate, PropertyReport, Verdict};
pub use scenario::{execute, replay, run_many, run_scenario, Outcome};
pub use script::{Action, Script};
pub use enumerate::{enumerate, gadget_suite, EnumReport, EnumSpec, Pattern, PropertySummary};
pub use metrics::{Format, MetricsRow};
